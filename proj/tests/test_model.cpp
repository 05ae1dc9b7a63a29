#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsensor/model.hpp"
#include "qsensor/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace qsensor;

namespace {

SystemParams default_system()
{
    return SystemParams{1.0, 1.0, 0.5};
}

// independent oracle: diagonalize the product-basis matrix numerically
struct NumericEigensystem {
    Eigen::Vector4d eigenvalues;
    Matrix4d eigenvectors;
};

NumericEigensystem diagonalize(const SystemParams& p)
{
    Eigen::SelfAdjointEigenSolver<Matrix4d> es(h_static_product(p));
    return {es.eigenvalues(), es.eigenvectors()};
}

} // namespace

TEST_CASE("eigensystem: uncoupled limit g = 0")
{
    const Spectrum spec = eigensystem({1.0, 1.0, 0.0});
    CHECK(spec.eps_e == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spec.eps_o == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(spec.theta_e == doctest::Approx(0.0).epsilon(1e-14));
    // |0> and |1> reduce to the product states
    CHECK(std::abs(spec.eigvecs(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(spec.eigvecs(3, 1)) == doctest::Approx(1.0));
}

TEST_CASE("eigensystem: default parameters against frozen values")
{
    const Spectrum spec = eigensystem(default_system());
    CHECK(spec.eps_e == doctest::Approx(1.0307764064044151).epsilon(1e-14));
    CHECK(spec.eps_o == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(spec.theta_e == doctest::Approx(std::atan(0.25)).epsilon(1e-14));
    CHECK(spec.theta_e == doctest::Approx(0.24497866312686414).epsilon(1e-13));
    CHECK(spec.theta_o == doctest::Approx(M_PI / 2.0).epsilon(1e-14));
    // Bell pair in the odd subspace: |2> = (|ge>+|eg>)/sqrt2, |3> = (|ge>-|eg>)/sqrt2
    CHECK(spec.eigvecs(1, 2) == doctest::Approx(M_SQRT1_2).epsilon(1e-15));
    CHECK(spec.eigvecs(2, 2) == doctest::Approx(M_SQRT1_2).epsilon(1e-15));
    CHECK(spec.eigvecs(1, 3) == doctest::Approx(M_SQRT1_2).epsilon(1e-15));
    CHECK(spec.eigvecs(2, 3) == doctest::Approx(-M_SQRT1_2).epsilon(1e-15));
}

TEST_CASE("eigensystem: drive coefficients and exact alpha^2 + beta^2 = 4")
{
    const Spectrum spec = eigensystem(default_system());
    CHECK(spec.alpha == doctest::Approx(-1.2308244188052714).epsilon(1e-14));
    CHECK(spec.beta == doctest::Approx(1.5764108760322183).epsilon(1e-14));
    CHECK(spec.alpha * spec.alpha + spec.beta * spec.beta ==
          doctest::Approx(4.0).epsilon(1e-13));

    // identity holds for any mixing angle
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Spectrum s = eigensystem(
            {rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.05, 2.0)});
        CHECK(std::abs(s.alpha * s.alpha + s.beta * s.beta - 4.0) < 1e-12);
    }
}

TEST_CASE("eigensystem matches brute-force diagonalization over 1000 draws")
{
    Rng rng(12345);
    double max_eival_err = 0.0, min_overlap = 1.0, max_ortho_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const SystemParams p{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
                             rng.uniform(0.05, 2.0)};
        const Spectrum spec = eigensystem(p);
        const NumericEigensystem num = diagonalize(p);
        const Vector4d energies = spec.energies();

        max_ortho_err = std::max(max_ortho_err,
                                 (spec.eigvecs.transpose() * spec.eigvecs -
                                  Matrix4d::Identity())
                                     .cwiseAbs()
                                     .maxCoeff());

        for (int k = 0; k < 4; ++k) {
            int best = 0;
            double best_err = 1e300;
            for (int m = 0; m < 4; ++m) {
                const double err = std::abs(num.eigenvalues(m) - energies(k));
                if (err < best_err) {
                    best_err = err;
                    best = m;
                }
            }
            max_eival_err = std::max(max_eival_err, best_err);
            const double overlap =
                std::abs(num.eigenvectors.col(best).dot(spec.eigvecs.col(k)));
            min_overlap = std::min(min_overlap, overlap);
        }
    }
    CHECK(max_eival_err < 1e-10);
    CHECK(min_overlap > 1.0 - 1e-10);
    CHECK(max_ortho_err < 1e-12);
}

TEST_CASE("resolve_drive_condition: frozen examples and exact power constraint")
{
    const auto eq = resolve_drive_condition({DriveTag::Equal, 0.005});
    CHECK(eq.omega_p_max == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(eq.omega_s_max == doctest::Approx(0.05).epsilon(1e-15));

    const auto pd = resolve_drive_condition({DriveTag::PumpDouble, 0.005});
    CHECK(pd.omega_p_max == doctest::Approx(0.063245553203367587).epsilon(1e-14));
    CHECK(pd.omega_s_max == doctest::Approx(0.031622776601683793).epsilon(1e-14));
    CHECK(pd.omega_p_max == doctest::Approx(2.0 * pd.omega_s_max).epsilon(1e-15));

    const auto sd = resolve_drive_condition({DriveTag::StokesDouble, 0.005});
    CHECK(sd.omega_s_max == doctest::Approx(2.0 * sd.omega_p_max).epsilon(1e-15));
    CHECK(sd.omega_p_max == doctest::Approx(pd.omega_s_max).epsilon(1e-15));

    Rng rng(99);
    for (int i = 0; i < 300; ++i) {
        const double power = rng.uniform(1e-4, 1.0);
        for (auto tag : {DriveTag::Equal, DriveTag::PumpDouble, DriveTag::StokesDouble}) {
            const auto amp = resolve_drive_condition({tag, power});
            const double total =
                amp.omega_p_max * amp.omega_p_max + amp.omega_s_max * amp.omega_s_max;
            CHECK(std::abs(total - power) < 1e-14);
        }
    }
    CHECK_THROWS_AS(resolve_drive_condition({DriveTag::Equal, 0.0}), std::invalid_argument);
}

TEST_CASE("pulse_envelopes: peaks, counterintuitive order and frozen midpoint")
{
    const PulseParams p = default_pulses();
    CHECK(pulse_envelopes(p.tau, p).omega_p == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(pulse_envelopes(-p.tau, p).omega_s == doctest::Approx(0.05).epsilon(1e-15));
    // Stokes leads: well before the overlap Stokes dominates
    const auto early = pulse_envelopes(-2.0 * p.tau, p);
    CHECK(early.omega_s > early.omega_p);
    const auto mid = pulse_envelopes(0.0, p);
    CHECK(mid.omega_p == doctest::Approx(0.030631319709220803).epsilon(1e-14));
    CHECK(mid.omega_s == doctest::Approx(0.030631319709220803).epsilon(1e-14));
}

TEST_CASE("drive_waveform: frozen carrier frequencies and t = 0 value")
{
    const SystemParams sys = default_system();
    const Spectrum spec = eigensystem(sys);
    const PulseParams p = default_pulses();
    const auto freq = carrier_frequencies(sys, spec, p);
    CHECK(freq.omega_p == doctest::Approx(1.2807764064044151).epsilon(1e-14));
    CHECK(freq.omega_s == doctest::Approx(0.78077640640441514).epsilon(1e-14));

    const double w0 = drive_waveform(0.0, p, sys, spec);
    CHECK(w0 == doctest::Approx(-0.0054557805976491979).epsilon(1e-12));
    const double env = 0.030631319709220803;
    CHECK(w0 == doctest::Approx(env * (1.0 / spec.beta + 1.0 / spec.alpha)).epsilon(1e-13));

    // pulse tails: envelopes underflow far outside the window
    CHECK(drive_waveform(1e7, p, sys, spec) == 0.0);

    PulseParams detuned = p;
    detuned.delta_p = 0.01;
    detuned.delta_s = -0.02;
    const auto freq2 = carrier_frequencies(sys, spec, detuned);
    CHECK(freq2.omega_p == doctest::Approx(freq.omega_p - 0.01).epsilon(1e-14));
    CHECK(freq2.omega_s == doctest::Approx(freq.omega_s + 0.02).epsilon(1e-14));
}

TEST_CASE("h_total_lab: noiseless undriven limit is the static diagonal")
{
    const SystemParams sys = default_system();
    const Spectrum spec = eigensystem(sys);
    const PulseParams p = default_pulses();
    // far outside the pulse window the envelopes underflow to zero
    const Matrix4cd h = h_total_lab(-50.0 * p.T, sys, p, spec, 0.0, 0.0);
    Matrix4cd expected = Matrix4cd::Zero();
    expected(0, 0) = -spec.eps_e;
    expected(1, 1) = spec.eps_e;
    expected(2, 2) = sys.g / 2.0;
    expected(3, 3) = -sys.g / 2.0;
    CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("h_total_lab: correlated noise never mixes |2> and |3>")
{
    const SystemParams sys = default_system();
    const Spectrum spec = eigensystem(sys);
    const PulseParams p = default_pulses();
    const Matrix4cd h = h_total_lab(0.0, sys, p, spec, 0.004, 0.004);
    CHECK(std::abs(h(3, 2)) == 0.0);
    CHECK(std::abs(h(2, 3)) == 0.0);
    // pure dephasing of the even pair: diagonal shifted by (d1+d2)/2 cos(theta_e)
    const double shift = 0.004 * std::cos(spec.theta_e);
    CHECK(h(1, 1).real() - spec.eps_e == doctest::Approx(shift).epsilon(1e-12));
    CHECK(h(0, 0).real() + spec.eps_e == doctest::Approx(-shift).epsilon(1e-12));
}

TEST_CASE("h_total_lab: antisymmetric noise shifts nothing and opens the |3><2| channel")
{
    const SystemParams sys = default_system();
    const Spectrum spec = eigensystem(sys);
    const PulseParams p = default_pulses();
    const Matrix4cd h = h_total_lab(0.0, sys, p, spec, 0.002, -0.002);
    // delta1 + delta2 = 0: no dephasing, no 0-1 coupling
    CHECK(h(0, 0).real() == doctest::Approx(-spec.eps_e).epsilon(1e-15));
    CHECK(h(1, 1).real() == doctest::Approx(spec.eps_e).epsilon(1e-15));
    CHECK(std::abs(h(0, 1)) < 1e-18);
    // |3><2| element has magnitude (delta1 - delta2)/2 = 0.002
    CHECK(std::abs(h(3, 2)) == doctest::Approx(0.002).epsilon(1e-13));
}

TEST_CASE("noise_hamiltonian: coefficients match the eigenbasis form")
{
    const Spectrum spec = eigensystem(default_system());
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double d1 = rng.uniform(-0.05, 0.05);
        const double d2 = rng.uniform(-0.05, 0.05);
        const Matrix4d n = noise_hamiltonian(d1, d2, spec);
        CHECK((n - n.transpose()).cwiseAbs().maxCoeff() < 1e-16);
        const double u = 0.5 * (d1 + d2);
        // dephasing +-u cos(theta_e), 0-1 coupling of magnitude u sin(theta_e)
        // with sin(theta_e) = g/(2 eps_e), 2-3 coupling (d1-d2)/2
        CHECK(n(1, 1) == doctest::Approx(u * std::cos(spec.theta_e)).epsilon(1e-12));
        CHECK(n(0, 0) == doctest::Approx(-u * std::cos(spec.theta_e)).epsilon(1e-12));
        CHECK(std::abs(n(0, 1)) ==
              doctest::Approx(std::abs(u) * 0.5 / spec.eps_e * 0.5).epsilon(1e-10));
        CHECK(std::abs(n(2, 3)) == doctest::Approx(std::abs(d1 - d2) / 2.0).epsilon(1e-12));
        CHECK(n(2, 2) == doctest::Approx(0.0).epsilon(1e-16));
        CHECK(n(3, 3) == doctest::Approx(0.0).epsilon(1e-16));
        // linearity underpinning the piecewise-noise propagation
        const Matrix4d lin = d1 * noise_hamiltonian(1.0, 0.0, spec) +
                             d2 * noise_hamiltonian(0.0, 1.0, spec);
        CHECK((n - lin).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("assembled Hamiltonians are Hermitian for 1000 random draws")
{
    Rng rng(2024);
    double max_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const SystemParams sys{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
                               rng.uniform(0.05, 2.0)};
        const Spectrum spec = eigensystem(sys);
        PulseParams p = default_pulses(rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1),
                                       rng.uniform(100.0, 3000.0));
        const Matrix4cd h = h_total_lab(rng.uniform(-5000.0, 5000.0), sys, p, spec,
                                        rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
        max_err = std::max(max_err, (h - h.adjoint()).cwiseAbs().maxCoeff());
    }
    CHECK(max_err < 1e-13);
}

TEST_CASE("parity block structure with zero drive")
{
    const SystemParams sys = default_system();
    const Spectrum spec = eigensystem(sys);
    PulseParams p = default_pulses(0.0, 0.0); // drive off
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const double d = rng.uniform(-0.05, 0.05);
        const Matrix4cd h = h_total_lab(rng.uniform(-100.0, 100.0), sys, p, spec, d, d);
        for (int a : {0, 1})
            for (int b : {2, 3}) CHECK(std::abs(h(a, b)) == 0.0);
        CHECK(std::abs(h(3, 2)) == 0.0); // correlated: intra-odd coupling closed too
    }
}

TEST_CASE("h_control_asymmetric: selection rules for identical qubits")
{
    const Spectrum spec = eigensystem(default_system());

    const Matrix4d sym = h_control_asymmetric(1.0, 1.0, spec);
    CHECK(std::abs(sym(3, 0)) == 0.0);
    CHECK(std::abs(sym(3, 1)) == 0.0);
    // surviving elements are the alpha/beta couplings
    CHECK(sym(0, 2) == doctest::Approx(spec.alpha).epsilon(1e-14));
    CHECK(sym(1, 2) == doctest::Approx(spec.beta).epsilon(1e-14));

    const Matrix4d anti = h_control_asymmetric(1.0, -1.0, spec);
    CHECK(std::abs(anti(2, 0)) == 0.0);
    CHECK(std::abs(anti(2, 1)) == 0.0);
    CHECK(std::abs(anti(3, 0)) > 0.1); // the complementary channel opens

    CHECK(h_control_asymmetric(0.0, 0.0, spec).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("h_control_asymmetric: symmetric reduction reproduces the closed form")
{
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const SystemParams sys{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
                               rng.uniform(0.05, 2.0)};
        const Spectrum spec = eigensystem(sys);
        const double w = rng.uniform(-1.0, 1.0);
        const Matrix4d h = w * h_control_asymmetric(1.0, 1.0, spec);

        const double so = std::sin(spec.theta_o / 2.0), co = std::cos(spec.theta_o / 2.0);
        const double se = std::sin(spec.theta_e / 2.0), ce = std::cos(spec.theta_e / 2.0);
        CHECK(h(0, 2) == doctest::Approx(w * (se - ce) * (so + co)).epsilon(1e-12));
        CHECK(h(1, 2) == doctest::Approx(w * (se + ce) * (so + co)).epsilon(1e-12));
        CHECK(std::abs(h(0, 3)) ==
              doctest::Approx(std::abs(w * (se - ce) * (so - co))).epsilon(1e-10));
        CHECK(std::abs(h(1, 3)) ==
              doctest::Approx(std::abs(w * (se + ce) * (so - co))).epsilon(1e-10));
        // drives change parity: even-even and odd-odd blocks vanish
        CHECK(std::abs(h(0, 0)) == 0.0);
        CHECK(std::abs(h(0, 1)) == 0.0);
        CHECK(std::abs(h(2, 3)) == 0.0);
    }
}

TEST_CASE("ee_state_eigenbasis: frozen overlap with the upper dressed state")
{
    const Spectrum spec = eigensystem(default_system());
    const Vector4cd ee = ee_state_eigenbasis(spec);
    // P_ee of eigenstate |1> equals cos^2(theta_e/2)
    CHECK(std::norm(ee(1)) == doctest::Approx(0.98507125007266595).epsilon(1e-13));
    CHECK(std::abs(ee.squaredNorm() - 1.0) < 1e-15);
    // consistent with the eigenvector matrix: <k|ee> is the |ee> row of V
    for (int k = 0; k < 4; ++k)
        CHECK(ee(k).real() == doctest::Approx(spec.eigvecs(3, k)).epsilon(1e-15));
}

TEST_CASE("invalid parameters are rejected")
{
    CHECK_THROWS_AS(eigensystem({-1.0, 1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(eigensystem({1.0, 1.0, -0.1}), std::invalid_argument);
    const Spectrum degenerate = [] {
        Spectrum s;
        s.alpha = 0.0;
        s.beta = 1.0;
        return s;
    }();
    CHECK_THROWS_AS(drive_waveform(0.0, default_pulses(), default_system(), degenerate),
                    std::invalid_argument);
}

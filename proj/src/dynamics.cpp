#include "qsensor/dynamics.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qsensor {

namespace {

using cplx = std::complex<double>;

constexpr double kNormTolerance = 1e-6;
constexpr double kTraceTolerance = 1e-6;
constexpr double kNegativityTolerance = 1e-6;
constexpr int kPhaseRefreshInterval = 256;

// Phase factors e^{i E_k (t - t0)} for the factored static diagonal plus the
// two carrier phasors e^{i w t}, advanced in half steps with an exact
// recompute every kPhaseRefreshInterval steps to stop roundoff drift.
struct CoeffLadder {
    Vector4d energies = Vector4d::Zero();
    double omega_p = 0.0, omega_s = 0.0;
    double t0 = 0.0;

    std::array<cplx, 4> phi{};
    cplx zp{1.0, 0.0}, zs{1.0, 0.0};
    std::array<cplx, 4> phi_half{};
    cplx zp_half{1.0, 0.0}, zs_half{1.0, 0.0};

    void init(const Vector4d& e, double wp, double ws, double t_origin, double dt)
    {
        energies = e;
        omega_p = wp;
        omega_s = ws;
        t0 = t_origin;
        for (int k = 0; k < 4; ++k) phi_half[k] = std::polar(1.0, e(k) * dt / 2.0);
        zp_half = std::polar(1.0, wp * dt / 2.0);
        zs_half = std::polar(1.0, ws * dt / 2.0);
        reset(t_origin);
    }

    void reset(double t)
    {
        for (int k = 0; k < 4; ++k) phi[k] = std::polar(1.0, energies(k) * (t - t0));
        zp = std::polar(1.0, omega_p * t);
        zs = std::polar(1.0, omega_s * t);
    }

    void half_step()
    {
        for (int k = 0; k < 4; ++k) phi[k] *= phi_half[k];
        zp *= zp_half;
        zs *= zs_half;
    }
};

struct StageCoeffs {
    std::array<cplx, 4> phi{};
    double waveform = 0.0;
};

StageCoeffs eval_stage(const CoeffLadder& ladder, const LabHamiltonian& lab, double t)
{
    StageCoeffs s;
    s.phi = ladder.phi;
    const auto env = pulse_envelopes(t, lab.pulses);
    s.waveform = env.omega_s * lab.inv_beta * ladder.zs.real() +
                 env.omega_p * lab.inv_alpha * ladder.zp.real();
    return s;
}

// k = -i * (phi o (A (conj(phi) o c))) for real A; the Hadamard phases
// implement the exact rotation to the factored frame.
inline void apply_stage(const StageCoeffs& s, const Matrix4d& a,
                        const std::array<cplx, 4>& c, std::array<cplx, 4>& out)
{
    std::array<cplx, 4> u;
    for (int k = 0; k < 4; ++k) u[k] = std::conj(s.phi[k]) * c[k];
    for (int i = 0; i < 4; ++i) {
        cplx acc = a(i, 0) * u[0] + a(i, 1) * u[1] + a(i, 2) * u[2] + a(i, 3) * u[3];
        const cplx w = s.phi[i] * acc;
        out[i] = cplx(w.imag(), -w.real());
    }
}

inline void build_coupling(const StageCoeffs& s, const Matrix4d& drive,
                           const Matrix4d& resid, Matrix4d& a)
{
    a = s.waveform * drive + resid;
}

double norm2(const std::array<cplx, 4>& c)
{
    double n = 0.0;
    for (const auto& x : c) n += std::norm(x);
    return n;
}

void check_initial_state(const Vector4cd& initial)
{
    if (std::abs(initial.squaredNorm() - 1.0) > 1e-8)
        throw std::invalid_argument("propagate_schrodinger: initial state is not normalized");
}

struct Recorder {
    int stride = 0;
    const Vector4cd* ee = nullptr;
    std::vector<TrajectoryPoint>* out = nullptr;

    void record(double t, const std::array<cplx, 4>& c, const std::array<cplx, 4>& phi) const
    {
        if (!out) return;
        TrajectoryPoint pt;
        pt.t = t;
        pt.p0 = std::norm(c[0]);
        pt.p1 = std::norm(c[1]);
        pt.p2 = std::norm(c[2]);
        pt.p3 = std::norm(c[3]);
        cplx amp = 0.0;
        if (ee) {
            for (int k = 0; k < 4; ++k) amp += std::conj((*ee)(k)) * std::conj(phi[k]) * c[k];
        }
        pt.p_ee = std::norm(amp);
        out->push_back(pt);
    }
};

// Shared Schrodinger loop. resid_for_step returns the constant (within one
// stage) real coupling matrix without the drive term; for quasistatic noise it
// never changes, for piecewise noise it switches at segment boundaries.
template <class ResidForStep>
SchrodingerResult schrodinger_loop(const LabHamiltonian& lab, const Vector4d& dref,
                                   ResidForStep&& resid_for_step, const Vector4cd& initial,
                                   const IntegratorConfig& cfg, int record_stride,
                                   const Vector4cd* ee_target)
{
    cfg.validate();
    check_initial_state(initial);
    const double t0 = lab.pulses.t_start;
    const double t1 = lab.pulses.t_end;
    const std::int64_t nsteps = cfg.step_count(t0, t1);
    const double dt = (t1 - t0) / static_cast<double>(nsteps);

    const Vector4d diag_resid = lab.energies - dref;

    CoeffLadder ladder;
    ladder.init(dref, lab.omega_p, lab.omega_s, t0, dt);

    std::array<cplx, 4> c;
    for (int k = 0; k < 4; ++k) c[k] = initial(k);

    SchrodingerResult result;
    Recorder rec{record_stride, ee_target,
                 record_stride > 0 ? &result.trajectory : nullptr};
    rec.record(t0, c, ladder.phi);

    StageCoeffs cur = eval_stage(ladder, lab, t0);
    const Matrix4d diag_resid_m = diag_resid.asDiagonal();
    Matrix4d resid, a;
    std::array<cplx, 4> k1, k2, k3, k4, tmp;

    result.max_p2 = std::norm(c[2]);
    for (std::int64_t n = 0; n < nsteps; ++n) {
        const double t = t0 + static_cast<double>(n) * dt;
        if (n > 0 && n % kPhaseRefreshInterval == 0) {
            ladder.reset(t);
            cur = eval_stage(ladder, lab, t);
        }
        resid = resid_for_step(n) + diag_resid_m;

        build_coupling(cur, lab.drive, resid, a);
        apply_stage(cur, a, c, k1);

        ladder.half_step();
        const StageCoeffs mid = eval_stage(ladder, lab, t + dt / 2.0);
        build_coupling(mid, lab.drive, resid, a);
        for (int k = 0; k < 4; ++k) tmp[k] = c[k] + 0.5 * dt * k1[k];
        apply_stage(mid, a, tmp, k2);
        for (int k = 0; k < 4; ++k) tmp[k] = c[k] + 0.5 * dt * k2[k];
        apply_stage(mid, a, tmp, k3);

        ladder.half_step();
        const StageCoeffs end = eval_stage(ladder, lab, t + dt);
        build_coupling(end, lab.drive, resid, a);
        for (int k = 0; k < 4; ++k) tmp[k] = c[k] + dt * k3[k];
        apply_stage(end, a, tmp, k4);

        for (int k = 0; k < 4; ++k)
            c[k] += dt / 6.0 * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k]);
        cur = end;

        const double p2 = std::norm(c[2]);
        if (p2 > result.max_p2) result.max_p2 = p2;
        if (record_stride > 0 && ((n + 1) % record_stride == 0 || n + 1 == nsteps))
            rec.record(t + dt, c, ladder.phi);
    }

    result.norm_error = std::abs(norm2(c) - 1.0);
    if (result.norm_error > kNormTolerance)
        throw std::runtime_error(
            "propagate_schrodinger: norm drift " + std::to_string(result.norm_error) +
            " exceeds 1e-6; increase resolution_factor");

    for (int k = 0; k < 4; ++k) result.state(k) = std::conj(ladder.phi[k]) * c[k];
    return result;
}

} // namespace

double IntegratorConfig::dt() const
{
    return 2.0 * M_PI / (omega_fast * resolution_factor);
}

std::int64_t IntegratorConfig::step_count(double t_start, double t_end) const
{
    return static_cast<std::int64_t>(std::ceil((t_end - t_start) / dt()));
}

void IntegratorConfig::validate() const
{
    if (resolution_factor < 1)
        throw std::invalid_argument("IntegratorConfig: resolution_factor must be >= 1");
    if (!(omega_fast > 0.0))
        throw std::invalid_argument("IntegratorConfig: omega_fast must be positive");
}

IntegratorConfig integrator_for(const LabHamiltonian& lab, int resolution_factor,
                                double delta_slack)
{
    IntegratorConfig cfg;
    cfg.resolution_factor = resolution_factor;
    cfg.omega_fast = 2.0 * std::abs(lab.omega_p) + std::abs(delta_slack);
    return cfg;
}

SchrodingerResult propagate_schrodinger(const LabHamiltonian& lab, const Vector4cd& initial,
                                        const IntegratorConfig& cfg, int record_stride,
                                        const Vector4cd* ee_target)
{
    // The factored reference absorbs the constant noise diagonal as well.
    const Vector4d dref = lab.energies + lab.noise.diagonal();
    return schrodinger_loop(
        lab, dref, [&lab](std::int64_t) -> const Matrix4d& { return lab.noise; }, initial,
        cfg, record_stride, ee_target);
}

SchrodingerResult propagate_schrodinger_piecewise(
    const LabHamiltonian& lab_base, const Spectrum& spec,
    const std::function<std::pair<double, double>(std::int64_t)>& deltas_for_segment,
    std::int64_t steps_per_segment, const Vector4cd& initial, const IntegratorConfig& cfg)
{
    if (steps_per_segment < 1)
        throw std::invalid_argument("propagate_schrodinger_piecewise: bad segment length");
    const Matrix4d n1 = noise_hamiltonian(1.0, 0.0, spec);
    const Matrix4d n2 = noise_hamiltonian(0.0, 1.0, spec);
    const Vector4d dref = lab_base.energies;

    std::int64_t current_segment = -1;
    Matrix4d resid = Matrix4d::Zero();
    auto resid_for_step = [&](std::int64_t step) -> const Matrix4d& {
        const std::int64_t seg = step / steps_per_segment;
        if (seg != current_segment) {
            current_segment = seg;
            const auto [d1, d2] = deltas_for_segment(seg);
            resid = d1 * n1 + d2 * n2;
        }
        return resid;
    };
    return schrodinger_loop(lab_base, dref, resid_for_step, initial, cfg, 0, nullptr);
}

SchrodingerResult propagate_schrodinger(const HamiltonianFn& hamiltonian_at,
                                        const Vector4cd& initial, double t_start,
                                        double t_end, const IntegratorConfig& cfg,
                                        int record_stride, const Vector4cd* ee_target)
{
    cfg.validate();
    check_initial_state(initial);
    const std::int64_t nsteps = cfg.step_count(t_start, t_end);
    const double dt = (t_end - t_start) / static_cast<double>(nsteps);
    const Vector4d dref = hamiltonian_at(t_start).diagonal().real();

    auto phases_at = [&](double t) {
        std::array<cplx, 4> phi;
        for (int k = 0; k < 4; ++k) phi[k] = std::polar(1.0, dref(k) * (t - t_start));
        return phi;
    };
    auto stage = [&](double t, const std::array<cplx, 4>& c, std::array<cplx, 4>& out) {
        const auto phi = phases_at(t);
        Matrix4cd m = hamiltonian_at(t);
        m -= Matrix4cd(dref.cast<cplx>().asDiagonal());
        std::array<cplx, 4> u;
        for (int k = 0; k < 4; ++k) u[k] = std::conj(phi[k]) * c[k];
        for (int i = 0; i < 4; ++i) {
            cplx acc = 0.0;
            for (int j = 0; j < 4; ++j) acc += m(i, j) * u[j];
            const cplx w = phi[i] * acc;
            out[i] = cplx(w.imag(), -w.real());
        }
    };

    std::array<cplx, 4> c;
    for (int k = 0; k < 4; ++k) c[k] = initial(k);

    SchrodingerResult result;
    Recorder rec{record_stride, ee_target,
                 record_stride > 0 ? &result.trajectory : nullptr};
    rec.record(t_start, c, phases_at(t_start));
    result.max_p2 = std::norm(c[2]);

    std::array<cplx, 4> k1, k2, k3, k4, tmp;
    for (std::int64_t n = 0; n < nsteps; ++n) {
        const double t = t_start + static_cast<double>(n) * dt;
        stage(t, c, k1);
        for (int k = 0; k < 4; ++k) tmp[k] = c[k] + 0.5 * dt * k1[k];
        stage(t + dt / 2.0, tmp, k2);
        for (int k = 0; k < 4; ++k) tmp[k] = c[k] + 0.5 * dt * k2[k];
        stage(t + dt / 2.0, tmp, k3);
        for (int k = 0; k < 4; ++k) tmp[k] = c[k] + dt * k3[k];
        stage(t + dt, tmp, k4);
        for (int k = 0; k < 4; ++k)
            c[k] += dt / 6.0 * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k]);

        const double p2 = std::norm(c[2]);
        if (p2 > result.max_p2) result.max_p2 = p2;
        if (record_stride > 0 && ((n + 1) % record_stride == 0 || n + 1 == nsteps))
            rec.record(t + dt, c, phases_at(t + dt));
    }

    result.norm_error = std::abs(norm2(c) - 1.0);
    if (result.norm_error > kNormTolerance)
        throw std::runtime_error(
            "propagate_schrodinger: norm drift " + std::to_string(result.norm_error) +
            " exceeds 1e-6; increase resolution_factor");
    const auto phi = phases_at(t_end);
    for (int k = 0; k < 4; ++k) result.state(k) = std::conj(phi[k]) * c[k];
    return result;
}

namespace {

struct LindbladTerms {
    std::vector<Matrix4cd> ops;
    std::vector<Matrix4cd> op_sq; // O^dagger O
    std::vector<double> rates;
};

LindbladTerms prepare_jumps(const std::vector<JumpOperator>& jumps)
{
    LindbladTerms t;
    for (const auto& j : jumps) {
        if (j.rate < 0.0)
            throw std::invalid_argument("propagate_lindblad: negative jump rate");
        if (j.rate == 0.0) continue;
        t.ops.push_back(j.op);
        t.op_sq.push_back(j.op.adjoint() * j.op);
        t.rates.push_back(j.rate);
    }
    return t;
}

void check_initial_rho(const Matrix4cd& rho)
{
    if (std::abs(rho.trace().real() - 1.0) > 1e-8 || std::abs(rho.trace().imag()) > 1e-12)
        throw std::invalid_argument("propagate_lindblad: initial state must have unit trace");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("propagate_lindblad: initial state must be Hermitian");
}

// Dissipator plus commutator in the lab frame, conjugated by the phase matrix
// P so the integrated variable stays slow.
template <class LabCoupling>
LindbladResult lindblad_loop(const Vector4d& dref, double omega_p, double omega_s,
                             LabCoupling&& coupling_at, const LindbladTerms& terms,
                             const Matrix4cd& initial, double t_start, double t_end,
                             const IntegratorConfig& cfg)
{
    cfg.validate();
    check_initial_rho(initial);
    const std::int64_t nsteps = cfg.step_count(t_start, t_end);
    const double dt = (t_end - t_start) / static_cast<double>(nsteps);

    CoeffLadder ladder;
    ladder.init(dref, omega_p, omega_s, t_start, dt);

    auto phase_matrix = [](const std::array<cplx, 4>& phi) {
        Matrix4cd p;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) p(i, j) = phi[i] * std::conj(phi[j]);
        return p;
    };

    auto rhs = [&](double t, const Matrix4cd& p, const Matrix4cd& rho_t) {
        const Matrix4cd rho = p.conjugate().cwiseProduct(rho_t);
        const Matrix4cd a = coupling_at(t);
        Matrix4cd l = a * rho - rho * a;
        l *= cplx(0.0, -1.0);
        for (std::size_t k = 0; k < terms.ops.size(); ++k) {
            const Matrix4cd orho = terms.ops[k] * rho;
            l += terms.rates[k] *
                 (orho * terms.ops[k].adjoint() -
                  0.5 * (terms.op_sq[k] * rho + rho * terms.op_sq[k]));
        }
        return Matrix4cd(p.cwiseProduct(l));
    };

    Matrix4cd rho_t = initial;
    for (std::int64_t n = 0; n < nsteps; ++n) {
        const double t = t_start + static_cast<double>(n) * dt;
        if (n > 0 && n % kPhaseRefreshInterval == 0) ladder.reset(t);

        const Matrix4cd p0 = phase_matrix(ladder.phi);
        const Matrix4cd k1 = rhs(t, p0, rho_t);
        ladder.half_step();
        const Matrix4cd pm = phase_matrix(ladder.phi);
        const Matrix4cd k2 = rhs(t + dt / 2.0, pm, rho_t + 0.5 * dt * k1);
        const Matrix4cd k3 = rhs(t + dt / 2.0, pm, rho_t + 0.5 * dt * k2);
        ladder.half_step();
        const Matrix4cd pe = phase_matrix(ladder.phi);
        const Matrix4cd k4 = rhs(t + dt, pe, rho_t + dt * k3);
        rho_t += dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
    }

    const Matrix4cd p_end = phase_matrix(ladder.phi);
    LindbladResult result;
    result.rho = p_end.conjugate().cwiseProduct(rho_t);
    result.trace_error = std::abs(result.rho.trace() - cplx(1.0, 0.0));
    result.hermiticity_error = (result.rho - result.rho.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix4cd> es(
        0.5 * (result.rho + result.rho.adjoint()));
    result.min_eigenvalue = es.eigenvalues().minCoeff();

    if (result.trace_error > kTraceTolerance)
        throw std::runtime_error("propagate_lindblad: trace drift " +
                                 std::to_string(result.trace_error) + " exceeds 1e-6");
    if (result.min_eigenvalue < -kNegativityTolerance)
        throw std::runtime_error("propagate_lindblad: negativity " +
                                 std::to_string(result.min_eigenvalue) +
                                 " beyond tolerance; increase resolution_factor");
    return result;
}

} // namespace

LindbladResult propagate_lindblad(const LabHamiltonian& lab,
                                  const std::vector<JumpOperator>& jumps,
                                  const Matrix4cd& initial, const IntegratorConfig& cfg)
{
    const LindbladTerms terms = prepare_jumps(jumps);
    const Vector4d dref = lab.energies + lab.noise.diagonal();
    Matrix4d resid_base = lab.noise + Matrix4d((lab.energies - dref).asDiagonal());
    auto coupling_at = [&lab, resid_base](double t) {
        return Matrix4cd((lab.waveform(t) * lab.drive + resid_base).cast<cplx>());
    };
    return lindblad_loop(dref, lab.omega_p, lab.omega_s, coupling_at, terms, initial,
                         lab.pulses.t_start, lab.pulses.t_end, cfg);
}

LindbladResult propagate_lindblad(const HamiltonianFn& hamiltonian_at,
                                  const std::vector<JumpOperator>& jumps,
                                  const Matrix4cd& initial, double t_start, double t_end,
                                  const IntegratorConfig& cfg)
{
    const LindbladTerms terms = prepare_jumps(jumps);
    const Vector4d dref = hamiltonian_at(t_start).diagonal().real();
    auto coupling_at = [&](double t) {
        Matrix4cd m = hamiltonian_at(t);
        m -= Matrix4cd(dref.cast<cplx>().asDiagonal());
        return m;
    };
    return lindblad_loop(dref, 0.0, 0.0, coupling_at, terms, initial, t_start, t_end, cfg);
}

Eigen::Vector3d ideal_stirap_propagate(const IdealStirapParams& p)
{
    if (!(p.pulses.tau > 0.0))
        throw std::invalid_argument("ideal_stirap_propagate: counterintuitive ordering needs tau > 0");
    const double t0 = p.pulses.t_start;
    const double t1 = p.pulses.t_end;
    const std::int64_t nsteps =
        static_cast<std::int64_t>(std::ceil((t1 - t0) / (p.pulses.T / p.steps_per_width)));
    const double dt = (t1 - t0) / static_cast<double>(nsteps);

    using Vec3 = Eigen::Vector3cd;
    auto rhs = [&](double t, const Vec3& c) {
        const auto env = pulse_envelopes(t, p.pulses);
        Vec3 out;
        // states ordered {|0>, |1>, |2=intermediate>}
        out(0) = 0.5 * env.omega_p * c(2);
        out(1) = p.delta * c(1) + 0.5 * env.omega_s * c(2);
        out(2) = 0.5 * env.omega_p * c(0) + 0.5 * env.omega_s * c(1) + p.delta_p * c(2);
        return Vec3(cplx(0.0, -1.0) * out);
    };

    Vec3 c = Vec3::Zero();
    c(0) = 1.0;
    for (std::int64_t n = 0; n < nsteps; ++n) {
        const double t = t0 + static_cast<double>(n) * dt;
        const Vec3 k1 = rhs(t, c);
        const Vec3 k2 = rhs(t + dt / 2.0, c + 0.5 * dt * k1);
        const Vec3 k3 = rhs(t + dt / 2.0, c + 0.5 * dt * k2);
        const Vec3 k4 = rhs(t + dt, c + dt * k3);
        c += dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
    }
    return Eigen::Vector3d(std::norm(c(0)), std::norm(c(1)), std::norm(c(2)));
}

double population(const Vector4cd& state, const Vector4cd& target)
{
    return std::norm(target.dot(state)); // Eigen dot conjugates the first argument
}

double population(const Matrix4cd& rho, const Vector4cd& target)
{
    return (target.dot(rho * target)).real();
}

void write_trajectory(const std::string& path, const std::vector<TrajectoryPoint>& traj)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trajectory: cannot open " + path);
    out << "# t P0 P1 P2 P3 P_ee\n";
    char line[256];
    for (const auto& pt : traj) {
        std::snprintf(line, sizeof(line), "%.10g %.10g %.10g %.10g %.10g %.10g\n", pt.t,
                      pt.p0, pt.p1, pt.p2, pt.p3, pt.p_ee);
        out << line;
    }
}

} // namespace qsensor

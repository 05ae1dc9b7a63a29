#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>

namespace qsensor {

using Matrix4cd = Eigen::Matrix4cd;
using Matrix4d = Eigen::Matrix4d;
using Vector4cd = Eigen::Vector4cd;
using Vector4d = Eigen::Vector4d;

// Static two-qubit Hamiltonian: splittings eps1, eps2 and Ising-xx coupling g.
// Energies are in units of the reference splitting, time in its inverse.
struct SystemParams {
    double eps1 = 1.0;
    double eps2 = 1.0;
    double g = 0.5;

    void validate() const;
};

// Closed-form eigensystem of the static Hamiltonian. Eigenvector columns are
// the dressed states |0>,|1>,|2>,|3> expressed in the product basis
// {|gg>,|ge>,|eg>,|ee>}, ordered so the energies are {-eps_e,+eps_e,+eps_o,-eps_o}.
struct Spectrum {
    double theta_e = 0.0; // even-subspace mixing angle, tan = g/(eps1+eps2)
    double theta_o = 0.0; // odd-subspace mixing angle, pi/2 for identical qubits
    double eps_e = 0.0;   // even half-splitting
    double eps_o = 0.0;   // odd half-splitting
    double alpha = 0.0;   // drive coefficient on |0><2|, 2*sin(theta_e/2 - pi/4)
    double beta = 0.0;    // drive coefficient on |2><1|, 2*sin(theta_e/2 + pi/4)
    Matrix4d eigvecs = Matrix4d::Zero(); // columns |0>..|3> in the product basis

    Vector4d energies() const { return Vector4d(-eps_e, eps_e, eps_o, -eps_o); }
};

Spectrum eigensystem(const SystemParams& params);

// Static Hamiltonian in the product basis {|gg>,|ge>,|eg>,|ee>} (for oracles).
Matrix4d h_static_product(const SystemParams& params);

// Gaussian pump/Stokes envelopes and carrier frequencies. The Stokes pulse
// peaks first (counterintuitive ordering): pump is centered at +tau, Stokes
// at -tau.
struct PulseParams {
    double omega_p_max = 0.05;
    double omega_s_max = 0.05;
    double T = 2000.0;     // Gaussian width
    double tau = 1400.0;   // half pulse delay (0.7 T by default)
    double delta_p = 0.0;  // pump detuning
    double delta_s = 0.0;  // Stokes detuning
    double t_start = -10000.0;
    double t_end = 10000.0;

    void validate() const;
};

PulseParams default_pulses(double omega_p_max = 0.05, double omega_s_max = 0.05,
                           double T = 2000.0, double tau_factor = 0.7,
                           double window_factor = 5.0);

struct Envelopes {
    double omega_p;
    double omega_s;
};

Envelopes pulse_envelopes(double t, const PulseParams& p);

// The three peak-amplitude ratios measured at fixed total power
// omega_p_max^2 + omega_s_max^2.
enum class DriveTag { Equal = 0, PumpDouble = 1, StokesDouble = 2 };

const char* drive_tag_name(DriveTag tag);

struct DriveCondition {
    DriveTag tag = DriveTag::Equal;
    double power = 0.005;
};

struct DriveAmplitudes {
    double omega_p_max;
    double omega_s_max;
};

DriveAmplitudes resolve_drive_condition(const DriveCondition& cond);

// Carrier frequencies: omega_p = eps_e + g/2 - delta_p, omega_s = eps_e - g/2 - delta_s.
struct CarrierFrequencies {
    double omega_p;
    double omega_s;
};

CarrierFrequencies carrier_frequencies(const SystemParams& params, const Spectrum& spec,
                                       const PulseParams& p);

// Two-tone waveform W(t) = Omega_s(t) cos(w_s t)/beta + Omega_p(t) cos(w_p t)/alpha.
double drive_waveform(double t, const PulseParams& p, const SystemParams& params,
                      const Spectrum& spec);

// Symmetric-drive coupling matrix: H_c(t) = W(t) * control_matrix_symmetric(spec).
// Exact transform of W*(sx1+sx2) into the eigenbasis; for identical qubits only
// the alpha|0><2| and beta|2><1| elements survive.
Matrix4d control_matrix_symmetric(const Spectrum& spec);

// General local drives W1*sx1 + W2*sx2 in the eigenbasis.
Matrix4d h_control_asymmetric(double w1, double w2, const Spectrum& spec);

// Level-shift noise -[d1*sz1 + d2*sz2]/2 in the eigenbasis. Hermitian; couples
// |0>-|1| and |2>-|3> and shifts the even-subspace splitting.
Matrix4d noise_hamiltonian(double delta1, double delta2, const Spectrum& spec);

// Full lab-frame Hamiltonian in the eigenbasis, split into the pieces the
// propagator consumes: H(t) = diag(energies) + W(t)*drive + noise.
struct LabHamiltonian {
    Vector4d energies;  // static diagonal {-eps_e,+eps_e,+eps_o,-eps_o}
    Matrix4d drive;     // multiplied by the scalar waveform W(t)
    Matrix4d noise;     // constant quasistatic noise matrix (may be zero)
    PulseParams pulses;
    double inv_alpha = 0.0;
    double inv_beta = 0.0;
    double omega_p = 0.0;
    double omega_s = 0.0;

    double waveform(double t) const;
    Matrix4cd at(double t) const;
};

LabHamiltonian assemble_lab_hamiltonian(const SystemParams& params, const PulseParams& p,
                                        const Spectrum& spec, double delta1, double delta2);

// One-call assembly of H_S + H_c(t) + H_n in the eigenbasis.
Matrix4cd h_total_lab(double t, const SystemParams& params, const PulseParams& p,
                      const Spectrum& spec, double delta1, double delta2);

// Projector coefficients of |ee> on the even dressed pair: |ee> = sin(te/2)|0> + cos(te/2)|1>.
Vector4cd ee_state_eigenbasis(const Spectrum& spec);

// Everything that defines one protocol run except the noise draw: the static
// system, the pulse shape, the shared drive power and the integrator
// resolution. Amplitudes are resolved per drive condition.
struct ProtocolParams {
    SystemParams system;
    double drive_power = 0.005;
    double pulse_width = 2000.0; // Gaussian width T
    double tau_factor = 0.7;     // tau = tau_factor * T
    double window_factor = 5.0;  // integrate over [-window_factor*T, +window_factor*T]
    double delta_p = 0.0;
    double delta_s = 0.0;
    int resolution_factor = 80;

    PulseParams pulses_for(DriveTag tag) const;
};

} // namespace qsensor

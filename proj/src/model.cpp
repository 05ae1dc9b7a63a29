#include "qsensor/model.hpp"

#include <cmath>
#include <stdexcept>

namespace qsensor {

void SystemParams::validate() const
{
    if (!(eps1 > 0.0) || !(eps2 > 0.0))
        throw std::invalid_argument("SystemParams: qubit splittings must be positive");
    if (g < 0.0)
        throw std::invalid_argument("SystemParams: coupling g must be non-negative");
}

void PulseParams::validate() const
{
    if (!(T > 0.0)) throw std::invalid_argument("PulseParams: width T must be positive");
    if (!(t_end > t_start)) throw std::invalid_argument("PulseParams: empty time window");
}

Spectrum eigensystem(const SystemParams& params)
{
    params.validate();
    Spectrum spec;
    const double sum = params.eps1 + params.eps2;
    const double diff = params.eps1 - params.eps2;
    spec.eps_e = 0.5 * std::hypot(params.g, sum);
    spec.eps_o = 0.5 * std::hypot(params.g, diff);
    spec.theta_e = std::atan2(params.g, sum);
    // atan2 keeps theta_o = pi/2 at eps1 == eps2 (branch used throughout).
    spec.theta_o = std::atan2(params.g, diff);
    spec.alpha = 2.0 * std::sin(0.5 * spec.theta_e - M_PI / 4.0);
    spec.beta = 2.0 * std::sin(0.5 * spec.theta_e + M_PI / 4.0);

    const double ce = std::cos(0.5 * spec.theta_e);
    const double se = std::sin(0.5 * spec.theta_e);
    // identical qubits sit exactly on the theta_o = pi/2 branch; pin the Bell
    // coefficients so the selection-rule zeros are exact
    const bool bell = diff == 0.0;
    const double co = bell ? M_SQRT1_2 : std::cos(0.5 * spec.theta_o);
    const double so = bell ? M_SQRT1_2 : std::sin(0.5 * spec.theta_o);

    // Columns are |0>,|1>,|2>,|3>; rows are the product basis {gg, ge, eg, ee}.
    Matrix4d v = Matrix4d::Zero();
    v(0, 0) = -ce; v(3, 0) = se;
    v(0, 1) = se;  v(3, 1) = ce;
    v(1, 2) = so;  v(2, 2) = co;
    v(1, 3) = co;  v(2, 3) = -so;
    spec.eigvecs = v;
    return spec;
}

Matrix4d h_static_product(const SystemParams& params)
{
    Matrix4d h = Matrix4d::Zero();
    const double e1 = params.eps1, e2 = params.eps2, g = params.g;
    // sz|g> = +|g>: diagonal of -(e1 sz1 + e2 sz2)/2 over {gg, ge, eg, ee}
    h(0, 0) = -(e1 + e2) / 2.0;
    h(1, 1) = -(e1 - e2) / 2.0;
    h(2, 2) = (e1 - e2) / 2.0;
    h(3, 3) = (e1 + e2) / 2.0;
    // (g/2) sx1 sx2 couples gg<->ee and ge<->eg
    h(0, 3) = h(3, 0) = g / 2.0;
    h(1, 2) = h(2, 1) = g / 2.0;
    return h;
}

PulseParams default_pulses(double omega_p_max, double omega_s_max, double T,
                           double tau_factor, double window_factor)
{
    PulseParams p;
    p.omega_p_max = omega_p_max;
    p.omega_s_max = omega_s_max;
    p.T = T;
    p.tau = tau_factor * T;
    p.t_start = -window_factor * T;
    p.t_end = window_factor * T;
    return p;
}

Envelopes pulse_envelopes(double t, const PulseParams& p)
{
    const double xp = (t - p.tau) / p.T;
    const double xs = (t + p.tau) / p.T;
    return {p.omega_p_max * std::exp(-xp * xp), p.omega_s_max * std::exp(-xs * xs)};
}

const char* drive_tag_name(DriveTag tag)
{
    switch (tag) {
        case DriveTag::Equal: return "equal";
        case DriveTag::PumpDouble: return "pump_double";
        case DriveTag::StokesDouble: return "stokes_double";
    }
    return "unknown";
}

DriveAmplitudes resolve_drive_condition(const DriveCondition& cond)
{
    if (!(cond.power > 0.0))
        throw std::invalid_argument("DriveCondition: power must be positive");
    switch (cond.tag) {
        case DriveTag::Equal: {
            const double w = std::sqrt(cond.power / 2.0);
            return {w, w};
        }
        case DriveTag::PumpDouble: {
            const double ws = std::sqrt(cond.power / 5.0);
            return {2.0 * ws, ws};
        }
        case DriveTag::StokesDouble: {
            const double wp = std::sqrt(cond.power / 5.0);
            return {wp, 2.0 * wp};
        }
    }
    throw std::invalid_argument("DriveCondition: unknown tag");
}

CarrierFrequencies carrier_frequencies(const SystemParams& params, const Spectrum& spec,
                                       const PulseParams& p)
{
    return {spec.eps_e + params.g / 2.0 - p.delta_p,
            spec.eps_e - params.g / 2.0 - p.delta_s};
}

double drive_waveform(double t, const PulseParams& p, const SystemParams& params,
                      const Spectrum& spec)
{
    if (spec.alpha == 0.0 || spec.beta == 0.0)
        throw std::invalid_argument("drive_waveform: alpha or beta vanishes (theta_e = +-pi/2)");
    const auto [wp, ws] = carrier_frequencies(params, spec, p);
    const auto env = pulse_envelopes(t, p);
    return env.omega_s / spec.beta * std::cos(ws * t) +
           env.omega_p / spec.alpha * std::cos(wp * t);
}

Matrix4d h_control_asymmetric(double w1, double w2, const Spectrum& spec)
{
    // sx1 flips the first qubit (gg<->eg, ge<->ee); sx2 flips the second.
    Matrix4d sx1 = Matrix4d::Zero(), sx2 = Matrix4d::Zero();
    sx1(0, 2) = sx1(2, 0) = 1.0;
    sx1(1, 3) = sx1(3, 1) = 1.0;
    sx2(0, 1) = sx2(1, 0) = 1.0;
    sx2(2, 3) = sx2(3, 2) = 1.0;
    const Matrix4d h = w1 * sx1 + w2 * sx2;
    return spec.eigvecs.transpose() * h * spec.eigvecs;
}

Matrix4d control_matrix_symmetric(const Spectrum& spec)
{
    return h_control_asymmetric(1.0, 1.0, spec);
}

Matrix4d noise_hamiltonian(double delta1, double delta2, const Spectrum& spec)
{
    Vector4d diag;
    diag << -(delta1 + delta2) / 2.0, -(delta1 - delta2) / 2.0,
        (delta1 - delta2) / 2.0, (delta1 + delta2) / 2.0;
    return spec.eigvecs.transpose() * diag.asDiagonal() * spec.eigvecs;
}

double LabHamiltonian::waveform(double t) const
{
    const auto env = pulse_envelopes(t, pulses);
    return env.omega_s * inv_beta * std::cos(omega_s * t) +
           env.omega_p * inv_alpha * std::cos(omega_p * t);
}

Matrix4cd LabHamiltonian::at(double t) const
{
    Matrix4d h = waveform(t) * drive + noise;
    h += Matrix4d(energies.asDiagonal());
    return h.cast<std::complex<double>>();
}

LabHamiltonian assemble_lab_hamiltonian(const SystemParams& params, const PulseParams& p,
                                        const Spectrum& spec, double delta1, double delta2)
{
    if (spec.alpha == 0.0 || spec.beta == 0.0)
        throw std::invalid_argument("assemble_lab_hamiltonian: alpha or beta vanishes");
    LabHamiltonian lab;
    lab.energies = spec.energies();
    lab.drive = control_matrix_symmetric(spec);
    lab.noise = noise_hamiltonian(delta1, delta2, spec);
    lab.pulses = p;
    lab.inv_alpha = 1.0 / spec.alpha;
    lab.inv_beta = 1.0 / spec.beta;
    const auto freq = carrier_frequencies(params, spec, p);
    lab.omega_p = freq.omega_p;
    lab.omega_s = freq.omega_s;
    return lab;
}

Matrix4cd h_total_lab(double t, const SystemParams& params, const PulseParams& p,
                      const Spectrum& spec, double delta1, double delta2)
{
    return assemble_lab_hamiltonian(params, p, spec, delta1, delta2).at(t);
}

Vector4cd ee_state_eigenbasis(const Spectrum& spec)
{
    Vector4cd v = Vector4cd::Zero();
    v(0) = std::sin(0.5 * spec.theta_e);
    v(1) = std::cos(0.5 * spec.theta_e);
    return v;
}

PulseParams ProtocolParams::pulses_for(DriveTag tag) const
{
    const DriveAmplitudes amp = resolve_drive_condition({tag, drive_power});
    PulseParams p = default_pulses(amp.omega_p_max, amp.omega_s_max, pulse_width,
                                   tau_factor, window_factor);
    p.delta_p = delta_p;
    p.delta_s = delta_s;
    return p;
}

} // namespace qsensor

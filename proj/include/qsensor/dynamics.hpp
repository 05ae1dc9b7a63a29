#pragma once

#include "qsensor/model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace qsensor {

// Fixed-step classical RK4. The step is tied to the fastest retained
// oscillation, 2*omega_p plus a slack for noise-induced level shifts:
// dt = 2*pi / (omega_fast * resolution_factor).
struct IntegratorConfig {
    int resolution_factor = 80;
    double omega_fast = 0.0;

    double dt() const;
    std::int64_t step_count(double t_start, double t_end) const;
    void validate() const;
};

IntegratorConfig integrator_for(const LabHamiltonian& lab, int resolution_factor,
                                double delta_slack = 0.0);

struct TrajectoryPoint {
    double t;
    double p0, p1, p2, p3;
    double p_ee;
};

struct SchrodingerResult {
    Vector4cd state = Vector4cd::Zero(); // lab-frame amplitudes at t_end
    double norm_error = 0.0;             // | ||psi||^2 - 1 |
    double max_p2 = 0.0;                 // running max of the |2> population
    std::vector<TrajectoryPoint> trajectory;
};

using HamiltonianFn = std::function<Matrix4cd(double)>;

// Generic propagation of i da/dt = H(t) a. Internally the static phases of
// diag(H(t_start)) are factored out (an exact change of variables), which is
// what lets a fixed-step scheme hold the norm to 1e-8 over ~1e5 steps; the
// returned state is in the original frame. No renormalization is applied and
// a final norm drift above 1e-6 raises an error suggesting a smaller step.
SchrodingerResult propagate_schrodinger(const HamiltonianFn& hamiltonian_at,
                                        const Vector4cd& initial, double t_start,
                                        double t_end, const IntegratorConfig& cfg,
                                        int record_stride = 0,
                                        const Vector4cd* ee_target = nullptr);

// Fast path for the assembled lab-frame Hamiltonian (constant quasistatic noise).
SchrodingerResult propagate_schrodinger(const LabHamiltonian& lab, const Vector4cd& initial,
                                        const IntegratorConfig& cfg, int record_stride = 0,
                                        const Vector4cd* ee_target = nullptr);

// Piecewise-constant stochastic noise: deltas_for_segment(k) supplies the
// (delta1, delta2) pair held fixed for segment k of steps_per_segment steps.
SchrodingerResult propagate_schrodinger_piecewise(
    const LabHamiltonian& lab_base, const Spectrum& spec,
    const std::function<std::pair<double, double>(std::int64_t)>& deltas_for_segment,
    std::int64_t steps_per_segment, const Vector4cd& initial, const IntegratorConfig& cfg);

struct JumpOperator {
    Matrix4cd op;
    double rate;
};

struct LindbladResult {
    Matrix4cd rho = Matrix4cd::Zero();
    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
};

// Lindblad master equation with time-dependent Hamiltonian and constant jump
// operators, integrated with the same phase-factored fixed-step RK4. Trace is
// a linear invariant of the generator and is preserved to roundoff.
LindbladResult propagate_lindblad(const HamiltonianFn& hamiltonian_at,
                                  const std::vector<JumpOperator>& jumps,
                                  const Matrix4cd& initial, double t_start, double t_end,
                                  const IntegratorConfig& cfg);

LindbladResult propagate_lindblad(const LabHamiltonian& lab,
                                  const std::vector<JumpOperator>& jumps,
                                  const Matrix4cd& initial, const IntegratorConfig& cfg);

// Ideal three-level ladder reference: H = Delta|1><1| + Delta_p|2><2|
// + (Omega_p(t)|0><2| + Omega_s(t)|2><1| + h.c.)/2, states ordered
// {initial, target, intermediate}.
struct IdealStirapParams {
    double delta = 0.0;   // two-photon detuning
    double delta_p = 0.0; // single-photon detuning
    PulseParams pulses;
    int steps_per_width = 1000; // RK4 steps per pulse width T
};

Eigen::Vector3d ideal_stirap_propagate(const IdealStirapParams& p);

double population(const Vector4cd& state, const Vector4cd& target);
double population(const Matrix4cd& rho, const Vector4cd& target);

void write_trajectory(const std::string& path, const std::vector<TrajectoryPoint>& traj);

} // namespace qsensor

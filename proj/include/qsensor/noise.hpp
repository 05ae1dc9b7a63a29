#pragma once

#include "qsensor/dynamics.hpp"
#include "qsensor/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qsensor {

// The six noise classes; integer codes double as classifier labels.
enum class NoiseClass : int {
    NmCorrelated = 0,
    NmAnticorrelated = 1,
    NmUncorrelated = 2,
    MCorrelated = 3,
    MAnticorrelated = 4,
    MUncorrelated = 5,
};

constexpr int kNumNoiseClasses = 6;

// Base quasistatic spread sigma = 1e-2 in units of the qubit splitting.
constexpr double kBaseSigma = 1e-2;

const char* noise_class_name(NoiseClass c);
NoiseClass noise_class_from_int(int code);
bool is_markovian(NoiseClass c);

// One draw of a noise-class instance. Unused fields stay zero.
struct NoiseSampleParams {
    NoiseClass noise_class = NoiseClass::NmCorrelated;
    double eta = 0.0;    // spatial correlation, classes 0,1,3,4
    double sigma = 0.0;  // quasistatic spread of delta1, classes 0,1
    double sigma1 = 0.0; // classes 2
    double sigma2 = 0.0;
    double gamma = 0.0;  // white-noise rate, classes 3,4
    double gamma1 = 0.0; // class 5
    double gamma2 = 0.0;
    std::uint64_t seed = 0;
};

// Uniform draws within the documented per-class ranges; deterministic per seed.
NoiseSampleParams draw_sample_params(NoiseClass c, std::uint64_t seed);

// Nodes and normalized weights for expectations against N(0, sigma^2):
// integral f(d) dN ~= sum_i w_i f(node_i), exact for polynomials up to
// degree 2*order - 1. Weights sum to one.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

QuadratureRule gauss_hermite_rule(int n, double sigma);

// Lindblad jump operators for the Markovian classes. Correlated and
// anticorrelated noise collapse to a single Hermitian operator
// (O1 + eta*O2)/sqrt(|eta|) with rate gamma; uncorrelated noise keeps the two
// local operators with their own rates.
std::vector<JumpOperator> jump_operators(const NoiseSampleParams& p, const Spectrum& spec);

// Local noise coupling operators O1 = -sz1/2, O2 = -sz2/2 in the eigenbasis.
Matrix4d local_noise_operator(int qubit, const Spectrum& spec);

struct WhiteNoiseEstimate {
    double xi = 0.0;
    double std_error = 0.0;
};

// Brute-force check of the Markovian limit: pure-state trajectories with
// piecewise-constant Gaussian noise of variance rate/dt_noise per segment,
// averaged over n_traj runs. dt_noise must be an integer multiple of the
// integrator step derived from proto (slack-free rule).
WhiteNoiseEstimate white_noise_oracle(const NoiseSampleParams& p, const ProtocolParams& proto,
                                      DriveTag drive, int n_traj, double dt_noise,
                                      int workers = 1);

} // namespace qsensor

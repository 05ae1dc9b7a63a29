#pragma once

#include "qsensor/model.hpp"
#include "qsensor/noise.hpp"

#include <string>
#include <vector>

namespace qsensor {

// The classifier input: transfer efficiencies under the three drive
// conditions, in the fixed order (Equal, PumpDouble, StokesDouble).
struct FeatureVector {
    double xi_equal = 0.0;
    double xi_pump_double = 0.0;
    double xi_stokes_double = 0.0;

    Eigen::Vector3d vec() const
    {
        return Eigen::Vector3d(xi_equal, xi_pump_double, xi_stokes_double);
    }
    double operator[](int i) const { return vec()(i); }
};

struct EfficiencyConfig {
    int quad_nodes_1d = 15; // classes 0,1
    int quad_nodes_2d = 9;  // classes 2, per axis
};

struct SimContext {
    ProtocolParams proto;
    EfficiencyConfig quadrature;
    int workers = 1; // bounds parallelism of maps and oracles; results identical
};

// Single-realization efficiency xi(delta1, delta2): one Schrodinger
// propagation from |0> with the quasistatic shifts held fixed, read out as
// the |ee> population at the final time.
double efficiency_point(const SimContext& ctx, double delta1, double delta2, DriveTag drive);

// Gauss-Hermite average of xi(d, eta*d) over d ~ N(0, sigma^2).
double efficiency_quasistatic_correlated(const SimContext& ctx, double eta, double sigma,
                                         DriveTag drive);

// Tensor Gauss-Hermite average over independent N(0,sigma1^2) x N(0,sigma2^2).
double efficiency_quasistatic_uncorrelated(const SimContext& ctx, double sigma1,
                                           double sigma2, DriveTag drive);

// Lindblad propagation with the class's jump operators.
double efficiency_markovian(const SimContext& ctx, const NoiseSampleParams& p, DriveTag drive);

// Dispatch on the noise class for each of the three drive conditions.
FeatureVector feature_vector(const SimContext& ctx, const NoiseSampleParams& p);

struct EfficiencyMap {
    std::vector<double> delta1_axis;
    std::vector<double> delta2_axis;
    Eigen::MatrixXd values; // values(i, j) = xi(delta1_axis[i], delta2_axis[j])
    DriveTag drive = DriveTag::Equal;
};

struct MapGrid {
    int n = 41;
    double range = 0.025; // grid spans [-range, range] on both axes
};

EfficiencyMap efficiency_map(const SimContext& ctx, const MapGrid& grid, DriveTag drive);

// Tabular export: columns delta1 delta2 xi, one blank-line-separated block
// per delta1 value (gnuplot/pgf contour layout).
void write_map(const std::string& path, const EfficiencyMap& map);

} // namespace qsensor

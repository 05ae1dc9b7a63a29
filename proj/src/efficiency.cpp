#include "qsensor/efficiency.hpp"

#include "qsensor/dynamics.hpp"
#include "qsensor/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qsensor {

double efficiency_point(const SimContext& ctx, double delta1, double delta2, DriveTag drive)
{
    const Spectrum spec = eigensystem(ctx.proto.system);
    const PulseParams pulses = ctx.proto.pulses_for(drive);
    const LabHamiltonian lab =
        assemble_lab_hamiltonian(ctx.proto.system, pulses, spec, delta1, delta2);
    const IntegratorConfig cfg = integrator_for(lab, ctx.proto.resolution_factor,
                                                std::abs(delta1) + std::abs(delta2));
    Vector4cd initial = Vector4cd::Zero();
    initial(0) = 1.0;
    const SchrodingerResult res = propagate_schrodinger(lab, initial, cfg);
    return population(res.state, ee_state_eigenbasis(spec));
}

double efficiency_quasistatic_correlated(const SimContext& ctx, double eta, double sigma,
                                         DriveTag drive)
{
    if (eta == 0.0)
        throw std::invalid_argument("efficiency_quasistatic_correlated: eta must be nonzero");
    if (!(sigma > 0.0))
        throw std::invalid_argument("efficiency_quasistatic_correlated: sigma must be positive");
    const QuadratureRule rule = gauss_hermite_rule(ctx.quadrature.quad_nodes_1d, sigma);
    double xi = 0.0;
    for (int i = 0; i < rule.order; ++i)
        xi += rule.weights[i] * efficiency_point(ctx, rule.nodes[i], eta * rule.nodes[i], drive);
    return xi;
}

double efficiency_quasistatic_uncorrelated(const SimContext& ctx, double sigma1,
                                           double sigma2, DriveTag drive)
{
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw std::invalid_argument(
            "efficiency_quasistatic_uncorrelated: sigmas must be positive");
    const QuadratureRule r1 = gauss_hermite_rule(ctx.quadrature.quad_nodes_2d, sigma1);
    const QuadratureRule r2 = gauss_hermite_rule(ctx.quadrature.quad_nodes_2d, sigma2);
    double xi = 0.0;
    for (int i = 0; i < r1.order; ++i) {
        double inner = 0.0;
        for (int j = 0; j < r2.order; ++j)
            inner += r2.weights[j] * efficiency_point(ctx, r1.nodes[i], r2.nodes[j], drive);
        xi += r1.weights[i] * inner;
    }
    return xi;
}

double efficiency_markovian(const SimContext& ctx, const NoiseSampleParams& p, DriveTag drive)
{
    if (!is_markovian(p.noise_class))
        throw std::invalid_argument("efficiency_markovian: non-Markovian sample");
    const Spectrum spec = eigensystem(ctx.proto.system);
    const PulseParams pulses = ctx.proto.pulses_for(drive);
    const LabHamiltonian lab =
        assemble_lab_hamiltonian(ctx.proto.system, pulses, spec, 0.0, 0.0);
    const IntegratorConfig cfg = integrator_for(lab, ctx.proto.resolution_factor);

    Matrix4cd rho0 = Matrix4cd::Zero();
    rho0(0, 0) = 1.0;
    const LindbladResult res =
        propagate_lindblad(lab, jump_operators(p, spec), rho0, cfg);
    return population(res.rho, ee_state_eigenbasis(spec));
}

FeatureVector feature_vector(const SimContext& ctx, const NoiseSampleParams& p)
{
    const DriveTag order[3] = {DriveTag::Equal, DriveTag::PumpDouble, DriveTag::StokesDouble};
    double xi[3];
    for (int k = 0; k < 3; ++k) {
        switch (p.noise_class) {
            case NoiseClass::NmCorrelated:
            case NoiseClass::NmAnticorrelated:
                xi[k] = efficiency_quasistatic_correlated(ctx, p.eta, p.sigma, order[k]);
                break;
            case NoiseClass::NmUncorrelated:
                xi[k] = efficiency_quasistatic_uncorrelated(ctx, p.sigma1, p.sigma2, order[k]);
                break;
            default:
                xi[k] = efficiency_markovian(ctx, p, order[k]);
                break;
        }
    }
    return {xi[0], xi[1], xi[2]};
}

EfficiencyMap efficiency_map(const SimContext& ctx, const MapGrid& grid, DriveTag drive)
{
    if (grid.n < 1) throw std::invalid_argument("efficiency_map: need at least one grid point");
    EfficiencyMap map;
    map.drive = drive;
    map.delta1_axis.resize(grid.n);
    map.delta2_axis.resize(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.n == 1
                             ? 0.0
                             : -grid.range + 2.0 * grid.range * i / (grid.n - 1);
        map.delta1_axis[i] = x;
        map.delta2_axis[i] = x;
    }
    map.values.resize(grid.n, grid.n);
    const std::size_t total = static_cast<std::size_t>(grid.n) * grid.n;
    parallel_for(total, ctx.workers, [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / grid.n;
        const int j = static_cast<int>(idx) % grid.n;
        map.values(i, j) =
            efficiency_point(ctx, map.delta1_axis[i], map.delta2_axis[j], drive);
    });
    return map;
}

void write_map(const std::string& path, const EfficiencyMap& map)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_map: cannot open " + path);
    out << "# delta1 delta2 xi  (drive=" << drive_tag_name(map.drive) << ")\n";
    char line[128];
    for (std::size_t i = 0; i < map.delta1_axis.size(); ++i) {
        for (std::size_t j = 0; j < map.delta2_axis.size(); ++j) {
            std::snprintf(line, sizeof(line), "%.10g %.10g %.10g\n", map.delta1_axis[i],
                          map.delta2_axis[j], map.values(i, j));
            out << line;
        }
        if (i + 1 < map.delta1_axis.size()) out << "\n";
    }
}

} // namespace qsensor

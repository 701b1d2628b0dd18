#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sinkflow/kernels.hpp"
#include "sinkflow/measures.hpp"
#include "sinkflow/pma.hpp"
#include "sinkflow/sinkhorn.hpp"
#include "sinkflow/transport.hpp"

namespace sinkflow {

struct ParticleEnsemble {
    std::vector<double> positions;
    std::vector<double> partner;  // Y coordinate carried by the Markov chain
    double t = 0.0;
    std::uint64_t seed = 0;
    std::size_t step_count = 0;
};

ParticleEnsemble make_ensemble(std::vector<double> positions, std::uint64_t seed, double t = 0.0);

struct SdeCoefficients {
    std::function<double(double t, double x)> drift;
    std::function<double(double t, double x)> diffusion;
};

// drift -f'/u'' - g'(u') + h'/u'', diffusion sqrt(2/u'')
SdeCoefficients sinkhorn_sde_coefficients(const PmaState& pma);
// drift -h'(w'(y)), diffusion sqrt(2/w'')
SdeCoefficients dual_sde_coefficients(const PmaState& pma);

struct MirrorMap {
    std::function<double(double)> grad;
    std::function<double(double)> hess;

    static MirrorMap from_potential(const ConvexPotential& u);
    static MirrorMap quadratic();
};

struct StepOptions {
    Backend backend = Backend::OpenMP;
    bool noise = true;
};

ParticleEnsemble sinkhorn_sde_step(const ParticleEnsemble& e, const PmaState& pma, double dt,
                                   StepOptions opt = {});
ParticleEnsemble dual_sde_step(const ParticleEnsemble& e, const PmaState& pma, double dt,
                               StepOptions opt = {});
// frozen mirror: drift -g'(u'(x)), diffusion sqrt(2/u''(x)); `window` bounds the escape check
ParticleEnsemble mirror_langevin_step(const ParticleEnsemble& e, const MirrorMap& u,
                                      const DensitySpec& target, double dt, const Grid& window,
                                      StepOptions opt = {});

// (X_0, Y_0) drawn independently from the node masses of rho0 and nu
ParticleEnsemble markov_chain_init(const GridDensity& rho0, const GridDensity& nu,
                                   std::size_t count, std::uint64_t seed);
// X' ~ gamma_{k+1}(. | Y), then Y' ~ gamma_{k+1}(. | X'), with gamma_{k+1} = coupling(sk)
ParticleEnsemble markov_chain_step(const ParticleEnsemble& e, const SinkhornState& sk,
                                   Backend be = Backend::OpenMP);

GridDensity empirical_density(const ParticleEnsemble& e, const Grid& grid, double bandwidth);

// KS distance between node-valued samples and the node masses w_i d_i
double ks_distance_nodes(std::span<const double> positions, const GridDensity& d);

// |int L phi exp(-g) dy| for L phi = phi''/w'' - (g' + w'''/w'') phi'/w''
double generator_stationarity_residual(const ConvexPotential& w, const DensitySpec& target,
                                       const std::function<double(double)>& dphi,
                                       const std::function<double(double)>& d2phi);

void write_csv(std::ostream& os, const ParticleEnsemble& e);
void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, double t, std::span<const double> x, double ks);

}  // namespace sinkflow

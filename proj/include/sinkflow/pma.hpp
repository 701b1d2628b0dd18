#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "sinkflow/measures.hpp"
#include "sinkflow/transport.hpp"

namespace sinkflow {

// First variation dF/drho evaluated pointwise from (x, log rho(x)).
struct MirrorFunctional {
    std::function<double(double x, double log_rho)> first_variation;
};

// KL(. | exp(-f)) without the additive constant 1; its flow is the PMA
MirrorFunctional kl_functional(const DensitySpec& f);
MirrorFunctional entropy_functional();
MirrorFunctional potential_energy_functional(std::function<double(double)> V);

struct PmaConfig {
    double a_floor = 1e-3;
    double b_cap = 1e3;
    double projection_tol = 1e-6;
    double cfl = 0.25;            // substep dt <= cfl * h^2 * min u''
    bool check_pushforward = true;
    double pushforward_tol = 5e-3;
};

struct PmaProblem {
    DensitySpec f;  // mu = exp(-f)
    DensitySpec g;  // nu = exp(-g)
    Grid grid;
    GridDensity mu;
    GridDensity nu;
    MirrorFunctional functional;
    PmaConfig config;

    double F(double x) const { return f.f(x) + f.log_normalizer; }
    double G(double x) const { return g.f(x) + g.log_normalizer; }
};

std::shared_ptr<const PmaProblem> make_pma_problem(const DensitySpec& f, const DensitySpec& g,
                                                   const Grid& grid, PmaConfig config = {});
std::shared_ptr<const PmaProblem> make_mirror_flow_problem(const DensitySpec& g, const Grid& grid,
                                                           MirrorFunctional functional,
                                                           const DensitySpec& f,
                                                           PmaConfig config = {});

struct PmaState {
    double t;
    ConvexPotential u;
    std::vector<double> h;  // g(u') - log u'' = -log rho before renormalization
    GridDensity rho;
    HessianBoundsReport bounds;
    std::shared_ptr<const PmaProblem> problem;
    double projection = 0.0;       // largest convexity projection in the last step
    double renorm_drift = 0.0;     // log of the renormalization factor of rho
    double pushforward_error = 0.0;
    std::size_t substeps = 0;

    const GridDensity& mu() const { return problem->mu; }
    const GridDensity& nu() const { return problem->nu; }
};

struct VelocityField {
    Grid grid;
    std::vector<double> values;
    double operator()(double x) const { return numerics::interp_linear(grid, values, x); }
};

PmaState init_pma(std::shared_ptr<const PmaProblem> problem, ConvexPotential u0);
std::vector<double> pma_rhs(const PmaState& s);
PmaState step(const PmaState& s, double dt);
std::vector<PmaState> run_pma(const PmaState& s0, double dt, double t_end);

VelocityField velocity(const PmaState& s);
// -(1/u'') d/dx of the observed time derivative of u between two states
VelocityField velocity_alt(const PmaState& prev, const PmaState& next);
VelocityField fokker_planck_velocity(const GridDensity& rho, const GridDensity& mu);
GridDensity fokker_planck_step(const GridDensity& rho, const GridDensity& mu, double dt);

double dual_pma_residual(const PmaState& prev, const PmaState& next);
double continuity_residual(const PmaState& prev, const PmaState& next);
double fokker_planck_continuity_residual(const GridDensity& prev, const GridDensity& next,
                                         const GridDensity& mu, double dt);

struct MetricDerivativeRow {
    double delta;
    double lot_rate;  // LOT(rho_{t+delta}, rho_t) / delta
    double speed;     // ||v_t|| in L2(rho_t)
    double ratio;     // lot_rate / speed, 0 when the flow is at rest
};
std::vector<MetricDerivativeRow> metric_derivative_lot(const std::vector<PmaState>& run, double t,
                                                       std::span<const double> deltas);

struct LinearizationCheck {
    double second_order;  // LOT(rho_{t+delta}, (w' + delta v(w'))_# nu)
    double first_order;   // LOT(rho_{t+delta}, rho_t)
};
LinearizationCheck linearized_pushforward_check(const std::vector<PmaState>& run, double t,
                                                double delta);

struct KlDecayRow {
    double t;
    double kl;
    double bound;
    double h;  // inf 1/u'' over the central 80% of the grid
    bool within;
};
std::vector<KlDecayRow> kl_decay_series(const std::vector<PmaState>& run, double c_lsi);

const PmaState& state_at(const std::vector<PmaState>& run, double t);

void write_trajectory_csv(std::ostream& os, const std::vector<PmaState>& run,
                          std::size_t stride = 1);

}  // namespace sinkflow

#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "sinkflow/kernels.hpp"
#include "sinkflow/measures.hpp"
#include "sinkflow/transport.hpp"

namespace sinkflow {

using kernels::Backend;

struct SinkhornState {
    double eps;
    std::size_t k;
    std::vector<double> u;  // u_k on the X grid
    std::vector<double> v;  // V[u_k] on the Y grid
    GridDensity rho;        // X-marginal after k steps
    GridDensity mu;         // exp(-f)
    GridDensity nu;         // exp(-g)
};

struct EntropicCoupling {
    Grid x_grid;
    Grid y_grid;
    std::vector<double> log_gamma;  // row-major, index i * ny + j

    double log_at(std::size_t i, std::size_t j) const { return log_gamma[i * y_grid.size() + j]; }
    double mass() const;
    std::vector<double> x_marginal() const;
    std::vector<double> y_marginal() const;
};

struct MaxIterExceeded : Error {
    MaxIterExceeded(const std::string& what, SinkhornState last)
        : Error(what), state(std::make_shared<SinkhornState>(std::move(last))) {}
    std::shared_ptr<SinkhornState> state;
};

struct SinkhornRun {
    SinkhornState state;
    std::size_t iterations;
};

// V[u](y_j) = eps log sum_i w_i exp((x_i y_j - u_i)/eps - f_i), f = -log mu
std::vector<double> v_operator(std::span<const double> u, const GridDensity& mu, double eps,
                               const Grid& y_grid, Backend be = Backend::OpenMP);
std::vector<double> v_operator(std::span<const double> u, const GridDensity& mu, double eps,
                               Backend be = Backend::OpenMP);
// U[v](x_i) = eps log sum_j w_j exp((x_i y_j - v_j)/eps - g_j), g = -log nu
std::vector<double> u_operator(std::span<const double> v, const GridDensity& nu, double eps,
                               const Grid& x_grid, Backend be = Backend::OpenMP);
std::vector<double> u_operator(std::span<const double> v, const GridDensity& nu, double eps,
                               Backend be = Backend::OpenMP);

// exp((S[u] - u)/eps - f), the normalized density produced by one step from u
GridDensity increment_density(std::span<const double> u, const GridDensity& mu,
                              const GridDensity& nu, double eps, Backend be = Backend::OpenMP);

SinkhornState make_sinkhorn_state(const GridDensity& mu, const GridDensity& nu, double eps,
                                  std::vector<double> u0, const GridDensity& rho0,
                                  Backend be = Backend::OpenMP);
SinkhornState s_step(const SinkhornState& s, Backend be = Backend::OpenMP);
EntropicCoupling coupling(const SinkhornState& s);
double eot_cost(const EntropicCoupling& pi, const GridDensity& mu, const GridDensity& nu,
                double eps);
EntropicCoupling product_coupling(const GridDensity& mu, const GridDensity& nu);
SinkhornRun run_to_tolerance(const SinkhornState& s, double tol, std::size_t max_iter,
                             Backend be = Backend::OpenMP);

// one round of marginal fitting on the joint: rescale to X-marginal mu, then Y-marginal nu
EntropicCoupling ipfp_round(const EntropicCoupling& gamma, const GridDensity& mu,
                            const GridDensity& nu);

// sup over the central 80% of the Y grid of
// |V[u](y) - w(y) - (eps/2) log(2 pi eps) + eps f(w'(y)) - (eps/2) log w''(y)|
// with w the Legendre transform of u; `with_log_term = false` drops (eps/2) log(2 pi eps)
double laplace_residual(const ConvexPotential& u, const DensitySpec& f, const GridDensity& mu,
                        double eps, bool with_log_term = true);

void write_csv(std::ostream& xs, std::ostream& ys, const SinkhornState& s);
void write_csv(std::ostream& os, const EntropicCoupling& pi);

}  // namespace sinkflow

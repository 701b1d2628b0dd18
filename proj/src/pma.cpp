#include "sinkflow/pma.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sinkflow/io.hpp"

namespace sinkflow {

MirrorFunctional kl_functional(const DensitySpec& f) {
    return {[f](double x, double lr) { return f.f(x) + f.log_normalizer + lr; }};
}

MirrorFunctional entropy_functional() {
    return {[](double, double lr) { return lr + 1.0; }};
}

MirrorFunctional potential_energy_functional(std::function<double(double)> V) {
    return {[V = std::move(V)](double x, double) { return V(x); }};
}

std::shared_ptr<const PmaProblem> make_mirror_flow_problem(const DensitySpec& g, const Grid& grid,
                                                           MirrorFunctional functional,
                                                           const DensitySpec& f,
                                                           PmaConfig config) {
    return std::make_shared<const PmaProblem>(PmaProblem{
        f, g, grid, discretize(f, grid), discretize(g, grid), std::move(functional), config});
}

std::shared_ptr<const PmaProblem> make_pma_problem(const DensitySpec& f, const DensitySpec& g,
                                                   const Grid& grid, PmaConfig config) {
    return make_mirror_flow_problem(g, grid, kl_functional(f), f, config);
}

namespace {

std::vector<double> rhs_arrays(const PmaProblem& P, std::span<const double> D,
                               std::span<const double> H) {
    std::vector<double> r(D.size());
    for (std::size_t i = 0; i < D.size(); ++i) {
        if (!(H[i] >= P.config.a_floor))
            throw ConvexityLost("u'' = " + io::real(H[i]) + " below floor at x = " +
                                io::real(P.grid.node(i)));
        r[i] = P.functional.first_variation(P.grid.node(i), -P.G(D[i]) + std::log(H[i]));
    }
    return r;
}

double sup_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// clamp u'' at the floor and rebuild u', u from the midpoint; returns the change in u
double project_convex(const PmaConfig& cfg, const Grid& g, std::vector<double>& U,
                      std::vector<double>& D, std::vector<double>& H) {
    for (std::size_t i = 0; i < H.size(); ++i)
        if (H[i] > cfg.b_cap)
            throw ConvexityLost("u'' = " + io::real(H[i]) + " above cap at x = " +
                                io::real(g.node(i)));
    if (*std::min_element(H.begin(), H.end()) >= cfg.a_floor) return 0.0;
    for (double& x : H) x = std::max(x, cfg.a_floor);
    const std::size_t n = H.size(), mid = n / 2;
    const double h = g.spacing();
    std::vector<double> D2(n), U2(n);
    D2[mid] = D[mid];
    U2[mid] = U[mid];
    for (std::size_t i = mid + 1; i < n; ++i) D2[i] = D2[i - 1] + 0.5 * h * (H[i - 1] + H[i]);
    for (std::size_t i = mid; i-- > 0;) D2[i] = D2[i + 1] - 0.5 * h * (H[i] + H[i + 1]);
    for (std::size_t i = mid + 1; i < n; ++i) U2[i] = U2[i - 1] + 0.5 * h * (D2[i - 1] + D2[i]);
    for (std::size_t i = mid; i-- > 0;) U2[i] = U2[i + 1] - 0.5 * h * (D2[i] + D2[i + 1]);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(U2[i] - U[i]));
    if (change > cfg.projection_tol)
        throw ConvexityLost("convexity projection of size " + io::real(change) + " exceeds tolerance");
    U = std::move(U2);
    D = std::move(D2);
    return change;
}

PmaState finish(std::shared_ptr<const PmaProblem> P, double t, ConvexPotential u,
                HessianBoundsReport bounds) {
    const std::size_t n = P->grid.size();
    std::vector<double> h(n), lr(n);
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = P->G(u.du()[i]) - std::log(u.d2u()[i]);
        lr[i] = -h[i];
    }
    GridDensity rho = GridDensity::from_log(P->grid, lr);
    bounds.absorb(u, t);
    PmaState s{t, std::move(u), std::move(h), std::move(rho), bounds, P};
    s.renorm_drift = s.rho.renormalization();
    if (P->config.check_pushforward) {
        const auto push = pushforward_monotone(s.rho, s.u.du(), P->nu.grid());
        s.pushforward_error = sup_distance(push, P->nu);
        if (s.pushforward_error > P->config.pushforward_tol)
            throw StabilityError("pushforward constraint violated by " +
                                 io::real(s.pushforward_error) + " at t = " + io::real(t));
    }
    return s;
}

}  // namespace

PmaState init_pma(std::shared_ptr<const PmaProblem> problem, ConvexPotential u0) {
    require_same_grid(problem->grid, u0.grid(), "init_pma");
    auto b = hessian_bounds(u0, 0.0);
    return finish(std::move(problem), 0.0, std::move(u0), b);
}

std::vector<double> pma_rhs(const PmaState& s) {
    return rhs_arrays(*s.problem, s.u.du(), s.u.d2u());
}

PmaState step(const PmaState& s, double dt) {
    if (dt < 0.0 || !std::isfinite(dt)) throw DomainError("step needs dt >= 0");
    if (dt == 0.0) return s;
    const PmaProblem& P = *s.problem;
    const Grid& g = P.grid;
    const std::size_t n = g.size();
    const double h = g.spacing();

    std::vector<double> U(s.u.u().begin(), s.u.u().end());
    std::vector<double> D(s.u.du().begin(), s.u.du().end());
    std::vector<double> H(s.u.d2u().begin(), s.u.d2u().end());

    const double sup0 = sup_abs(rhs_arrays(P, D, H));
    const double limit = P.config.cfl * h * h * *std::min_element(H.begin(), H.end());
    const auto m = static_cast<std::size_t>(std::ceil(dt / limit - 1e-9));
    const double dts = dt / static_cast<double>(std::max<std::size_t>(m, 1));
    double projection = 0.0;

    for (std::size_t k = 0; k < std::max<std::size_t>(m, 1); ++k) {
        const auto r = rhs_arrays(P, D, H);
        for (std::size_t i = 1; i + 1 < n; ++i) U[i] += dts * r[i];
        // cubic extrapolation at the ends, exact for quadratic potentials
        U[0] = 3.0 * U[1] - 3.0 * U[2] + U[3];
        U[n - 1] = 3.0 * U[n - 2] - 3.0 * U[n - 3] + U[n - 4];
        D = numerics::derivative(U, h);
        H = numerics::second_derivative(U, h);
        projection = std::max(projection, project_convex(P.config, g, U, D, H));
    }

    const double sup1 = sup_abs(rhs_arrays(P, D, H));
    if (sup1 > 10.0 * std::max(sup0, 1e-6))
        throw StabilityError("pma right-hand side grew from " + io::real(sup0) + " to " +
                             io::real(sup1));

    auto u = ConvexPotential::from_arrays(g, std::move(U), std::move(D), std::move(H),
                                          P.config.a_floor);
    PmaState next = finish(s.problem, s.t + dt, std::move(u), s.bounds);
    next.projection = projection;
    next.substeps = std::max<std::size_t>(m, 1);
    return next;
}

std::vector<PmaState> run_pma(const PmaState& s0, double dt, double t_end) {
    const auto steps = static_cast<std::size_t>(std::llround((t_end - s0.t) / dt));
    std::vector<PmaState> run;
    run.reserve(steps + 1);
    run.push_back(s0);
    for (std::size_t k = 0; k < steps; ++k) run.push_back(step(run.back(), dt));
    return run;
}

VelocityField fokker_planck_velocity(const GridDensity& rho, const GridDensity& mu) {
    require_same_grid(rho.grid(), mu.grid(), "fokker_planck_velocity");
    std::vector<double> l(rho.size());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = std::log(rho[i]) - std::log(mu[i]);
    auto d = numerics::derivative(l, rho.grid().spacing());
    for (double& x : d) x = -x;
    return {rho.grid(), std::move(d)};
}

VelocityField velocity(const PmaState& s) {
    auto v = fokker_planck_velocity(s.rho, s.mu());
    const auto H = s.u.d2u();
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        if (!(H[i] > 0.0)) throw ConvexityLost("velocity: u'' not positive");
        v.values[i] /= H[i];
    }
    return v;
}

VelocityField velocity_alt(const PmaState& prev, const PmaState& next) {
    const double dt = next.t - prev.t;
    if (!(dt > 0.0)) throw DomainError("velocity_alt needs increasing times");
    const auto a = prev.u.u(), b = next.u.u();
    std::vector<double> ut(a.size());
    for (std::size_t i = 0; i < ut.size(); ++i) ut[i] = (b[i] - a[i]) / dt;
    auto d = numerics::derivative(ut, prev.u.grid().spacing());
    const auto H = prev.u.d2u();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = -d[i] / H[i];
    return {prev.u.grid(), std::move(d)};
}

GridDensity fokker_planck_step(const GridDensity& rho, const GridDensity& mu, double dt) {
    require_same_grid(rho.grid(), mu.grid(), "fokker_planck_step");
    if (dt < 0.0) throw DomainError("fokker_planck_step needs dt >= 0");
    if (dt == 0.0) return rho;
    const std::size_t n = rho.size();
    const double h = rho.grid().spacing();
    const auto m = static_cast<std::size_t>(std::ceil(dt / (0.25 * h * h) - 1e-9));
    const double dts = dt / static_cast<double>(std::max<std::size_t>(m, 1));

    std::vector<double> p(rho.values().begin(), rho.values().end());
    std::vector<double> face(n - 1), flux(n + 1, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) face[i] = std::sqrt(mu[i] * mu[i + 1]);
    for (std::size_t k = 0; k < std::max<std::size_t>(m, 1); ++k) {
        // J = -mu d/dx(rho/mu); zero flux through the outer faces
        for (std::size_t i = 0; i + 1 < n; ++i)
            flux[i + 1] = -face[i] * (p[i + 1] / mu[i + 1] - p[i] / mu[i]) / h;
        // end cells carry half width, matching trapezoid mass
        for (std::size_t i = 0; i < n; ++i) {
            const double width = (i == 0 || i + 1 == n) ? 0.5 * h : h;
            p[i] -= dts * (flux[i + 1] - flux[i]) / width;
            if (!(p[i] > 0.0)) throw StabilityError("fokker_planck_step produced a non-positive value");
        }
    }
    return GridDensity::normalized(rho.grid(), std::move(p));
}

double continuity_residual(const PmaState& prev, const PmaState& next) {
    const double dt = next.t - prev.t;
    if (!(dt > 0.0)) throw DomainError("continuity_residual needs increasing times");
    const auto v = velocity(prev);
    const Grid& g = prev.rho.grid();
    std::vector<double> flux(g.size());
    for (std::size_t i = 0; i < flux.size(); ++i) flux[i] = prev.rho[i] * v.values[i];
    const auto div = numerics::derivative(flux, g.spacing());
    double r = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
        r = std::max(r, std::abs((next.rho[i] - prev.rho[i]) / dt + div[i]));
    return r;
}

double fokker_planck_continuity_residual(const GridDensity& prev, const GridDensity& next,
                                         const GridDensity& mu, double dt) {
    const auto v = fokker_planck_velocity(prev, mu);
    const Grid& g = prev.grid();
    std::vector<double> flux(g.size());
    for (std::size_t i = 0; i < flux.size(); ++i) flux[i] = prev[i] * v.values[i];
    const auto div = numerics::derivative(flux, g.spacing());
    double r = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
        r = std::max(r, std::abs((next[i] - prev[i]) / dt + div[i]));
    return r;
}

double dual_pma_residual(const PmaState& prev, const PmaState& next) {
    const double dt = next.t - prev.t;
    if (!(dt > 0.0)) throw DomainError("dual_pma_residual needs increasing times");
    const PmaProblem& P = *prev.problem;
    const Grid& gy = P.nu.grid();
    const double h = gy.spacing();
    const double lo = std::max({gy.node(gy.interior_begin()), prev.u.du().front(), next.u.du().front()});
    const double hi = std::min({gy.node(gy.interior_end() - 1), prev.u.du().back(), next.u.du().back()});
    const auto m = static_cast<std::size_t>(std::floor((hi - lo) / h)) + 1;
    const Grid yg(lo, lo + static_cast<double>(m - 1) * h, m);
    const auto wp = legendre_transform(prev.u, yg);
    const auto wn = legendre_transform(next.u, yg);
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double y = yg.node(j);
        const double rhs = P.G(y) - P.F(wp.du()[j]) + std::log(wp.d2u()[j]);
        r = std::max(r, std::abs((wn.u()[j] - wp.u()[j]) / dt - rhs));
    }
    return r;
}

const PmaState& state_at(const std::vector<PmaState>& run, double t) {
    if (run.empty()) throw DomainError("empty run");
    std::size_t best = 0;
    for (std::size_t i = 1; i < run.size(); ++i)
        if (std::abs(run[i].t - t) < std::abs(run[best].t - t)) best = i;
    const double tol = run.size() > 1 ? 0.5 * std::abs(run[1].t - run[0].t) : 1e-12;
    if (std::abs(run[best].t - t) > tol + 1e-12) throw DomainError("no state at t = " + io::real(t));
    return run[best];
}

namespace {

double l2_speed(const PmaState& s) {
    const auto v = velocity(s);
    std::vector<double> e(v.values.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = v.values[i] * v.values[i] * s.rho[i];
    return std::sqrt(numerics::trapezoid(e, s.rho.grid().spacing()));
}

}  // namespace

std::vector<MetricDerivativeRow> metric_derivative_lot(const std::vector<PmaState>& run, double t,
                                                       std::span<const double> deltas) {
    const PmaState& s = state_at(run, t);
    const double speed = l2_speed(s);
    std::vector<MetricDerivativeRow> rows;
    for (double d : deltas) {
        const PmaState& sd = state_at(run, t + d);
        const double rate = lot_distance(s.nu(), sd.rho, s.rho) / d;
        const bool rest = speed < 1e-12 && rate < 1e-12;
        rows.push_back({d, rest ? 0.0 : rate, rest ? 0.0 : speed, rest ? 0.0 : rate / speed});
    }
    return rows;
}

LinearizationCheck linearized_pushforward_check(const std::vector<PmaState>& run, double t,
                                                double delta) {
    const PmaState& s = state_at(run, t);
    const PmaState& sd = state_at(run, t + delta);
    const auto v = velocity(s);
    const Grid& gy = s.nu().grid();
    std::vector<double> M(gy.size());
    for (std::size_t j = 0; j < M.size(); ++j) {
        const double x = s.u.inverse_grad(gy.node(j));
        M[j] = x + delta * v(x);
    }
    const MonotoneMap map(gy, std::move(M));
    return {lot_distance_to_map(s.nu(), sd.rho, map), lot_distance(s.nu(), sd.rho, s.rho)};
}

std::vector<KlDecayRow> kl_decay_series(const std::vector<PmaState>& run, double c_lsi) {
    std::vector<KlDecayRow> rows;
    if (run.empty()) return rows;
    double H = 0.0, prev_h = 0.0;
    double kl0 = 0.0;
    for (std::size_t k = 0; k < run.size(); ++k) {
        const PmaState& s = run[k];
        const Grid& g = s.u.grid();
        double bmax = 0.0;
        for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
            bmax = std::max(bmax, s.u.d2u()[i]);
        const double h = 1.0 / bmax;
        if (k > 0) H += 0.5 * (h + prev_h) * (s.t - run[k - 1].t);
        prev_h = h;
        const double kl = kl_divergence(s.rho, s.mu());
        if (k == 0) kl0 = kl;
        const double bound = kl0 * std::exp(-2.0 * c_lsi * H);
        rows.push_back({s.t, kl, bound, h, kl <= 1.05 * bound + 1e-12});
    }
    return rows;
}

void write_trajectory_csv(std::ostream& os, const std::vector<PmaState>& run, std::size_t stride) {
    io::write_header(os, {"t", "mean", "variance", "kl", "a_min", "b_max", "continuity_residual"});
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t k = 0; k < run.size(); k += stride) {
        const PmaState& s = run[k];
        double cr = 0.0;
        if (run.size() > 1)
            cr = k + 1 < run.size() ? continuity_residual(s, run[k + 1])
                                    : continuity_residual(run[k - 1], s);
        io::write_row(os, {s.t, s.rho.mean(), s.rho.variance(), kl_divergence(s.rho, s.mu()),
                           s.u.min_hessian(), s.u.max_hessian(), cr});
    }
}

}  // namespace sinkflow

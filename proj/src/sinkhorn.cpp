#include "sinkflow/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "sinkflow/io.hpp"

namespace sinkflow {

namespace {

std::vector<double> log_weighted(std::span<const double> pot, const GridDensity& d, double eps) {
    const auto w = d.grid().weights();
    std::vector<double> c(pot.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = -pot[i] / eps + std::log(d[i]) + std::log(w[i]);
    return c;
}

}  // namespace

std::vector<double> v_operator(std::span<const double> u, const GridDensity& mu, double eps,
                               const Grid& y_grid, Backend be) {
    if (u.size() != mu.size()) throw GridMismatch("v_operator: potential size");
    const auto x = mu.grid().nodes();
    const auto y = y_grid.nodes();
    const auto c = log_weighted(u, mu, eps);
    std::vector<double> out(y.size());
    kernels::log_transform(be, x, c, y, eps, out);
    return out;
}

std::vector<double> v_operator(std::span<const double> u, const GridDensity& mu, double eps,
                               Backend be) {
    return v_operator(u, mu, eps, mu.grid(), be);
}

std::vector<double> u_operator(std::span<const double> v, const GridDensity& nu, double eps,
                               const Grid& x_grid, Backend be) {
    if (v.size() != nu.size()) throw GridMismatch("u_operator: potential size");
    const auto y = nu.grid().nodes();
    const auto x = x_grid.nodes();
    const auto c = log_weighted(v, nu, eps);
    std::vector<double> out(x.size());
    kernels::log_transform(be, y, c, x, eps, out);
    return out;
}

std::vector<double> u_operator(std::span<const double> v, const GridDensity& nu, double eps,
                               Backend be) {
    return u_operator(v, nu, eps, nu.grid(), be);
}

GridDensity increment_density(std::span<const double> u, const GridDensity& mu,
                              const GridDensity& nu, double eps, Backend be) {
    const auto v = v_operator(u, mu, eps, nu.grid(), be);
    const auto s = u_operator(v, nu, eps, mu.grid(), be);
    std::vector<double> lr(u.size());
    for (std::size_t i = 0; i < lr.size(); ++i) lr[i] = (s[i] - u[i]) / eps + std::log(mu[i]);
    return GridDensity::from_log(mu.grid(), lr);
}

SinkhornState make_sinkhorn_state(const GridDensity& mu, const GridDensity& nu, double eps,
                                  std::vector<double> u0, const GridDensity& rho0, Backend be) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    require_same_grid(mu.grid(), rho0.grid(), "make_sinkhorn_state");
    auto v0 = v_operator(u0, mu, eps, nu.grid(), be);
    return SinkhornState{eps, 0, std::move(u0), std::move(v0), rho0, mu, nu};
}

SinkhornState s_step(const SinkhornState& s, Backend be) {
    auto next = u_operator(s.v, s.nu, s.eps, s.mu.grid(), be);
    std::vector<double> lr(next.size());
    for (std::size_t i = 0; i < lr.size(); ++i)
        lr[i] = (next[i] - s.u[i]) / s.eps + std::log(s.mu[i]);
    auto rho = GridDensity::from_log(s.mu.grid(), lr);
    const double gauge = next[next.size() / 2];
    for (double& x : next) x -= gauge;
    auto v = v_operator(next, s.mu, s.eps, s.nu.grid(), be);
    return SinkhornState{s.eps, s.k + 1, std::move(next), std::move(v), std::move(rho), s.mu, s.nu};
}

EntropicCoupling coupling(const SinkhornState& s) {
    const Grid& gx = s.mu.grid();
    const Grid& gy = s.nu.grid();
    const std::size_t nx = gx.size(), ny = gy.size();
    EntropicCoupling pi{gx, gy, std::vector<double>(nx * ny)};
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = gx.node(i);
        const double a = -s.u[i] / s.eps + std::log(s.mu[i]);
        for (std::size_t j = 0; j < ny; ++j)
            pi.log_gamma[i * ny + j] = (x * gy.node(j) - s.v[j]) / s.eps + a + std::log(s.nu[j]);
    }
    return pi;
}

EntropicCoupling product_coupling(const GridDensity& mu, const GridDensity& nu) {
    const std::size_t nx = mu.size(), ny = nu.size();
    EntropicCoupling pi{mu.grid(), nu.grid(), std::vector<double>(nx * ny)};
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            pi.log_gamma[i * ny + j] = std::log(mu[i]) + std::log(nu[j]);
    return pi;
}

double EntropicCoupling::mass() const {
    const auto wx = x_grid.weights();
    const auto wy = y_grid.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < wx.size(); ++i)
        for (std::size_t j = 0; j < wy.size(); ++j) s += wx[i] * wy[j] * std::exp(log_at(i, j));
    return s;
}

std::vector<double> EntropicCoupling::x_marginal() const {
    const auto wy = y_grid.weights();
    const std::size_t nx = x_grid.size(), ny = y_grid.size();
    std::vector<double> p(nx), row(ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) row[j] = log_at(i, j) + std::log(wy[j]);
        p[i] = std::exp(numerics::logsumexp(row));
    }
    return p;
}

std::vector<double> EntropicCoupling::y_marginal() const {
    const auto wx = x_grid.weights();
    const std::size_t nx = x_grid.size(), ny = y_grid.size();
    std::vector<double> p(ny), col(nx);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) col[i] = log_at(i, j) + std::log(wx[i]);
        p[j] = std::exp(numerics::logsumexp(col));
    }
    return p;
}

double eot_cost(const EntropicCoupling& pi, const GridDensity& mu, const GridDensity& nu,
                double eps) {
    require_same_grid(pi.x_grid, mu.grid(), "eot_cost");
    require_same_grid(pi.y_grid, nu.grid(), "eot_cost");
    const auto wx = pi.x_grid.weights();
    const auto wy = pi.y_grid.weights();
    double transport = 0.0, kl = 0.0;
    for (std::size_t i = 0; i < wx.size(); ++i) {
        const double x = pi.x_grid.node(i);
        for (std::size_t j = 0; j < wy.size(); ++j) {
            const double lg = pi.log_at(i, j);
            const double m = wx[i] * wy[j] * std::exp(lg);
            const double d = x - pi.y_grid.node(j);
            transport += 0.5 * d * d * m;
            kl += m * (lg - std::log(mu[i]) - std::log(nu[j]));
        }
    }
    return transport + eps * kl;
}

SinkhornRun run_to_tolerance(const SinkhornState& s, double tol, std::size_t max_iter,
                             Backend be) {
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    SinkhornState cur = s;
    for (std::size_t it = 0; it < max_iter; ++it) {
        SinkhornState next = s_step(cur, be);
        // increment before gauge fixing: eps (log rho_{k+1} - log mu)
        std::vector<double> inc(next.u.size());
        for (std::size_t i = 0; i < inc.size(); ++i)
            inc[i] = cur.eps * (std::log(next.rho[i]) - std::log(cur.mu[i]));
        const double m = numerics::mean(inc);
        double sup = 0.0;
        for (double d : inc) sup = std::max(sup, std::abs(d - m));
        if (sup < tol * cur.eps) return SinkhornRun{std::move(cur), it};
        cur = std::move(next);
    }
    throw MaxIterExceeded("sinkhorn did not reach tolerance in " + std::to_string(max_iter) +
                              " iterations",
                          std::move(cur));
}

EntropicCoupling ipfp_round(const EntropicCoupling& gamma, const GridDensity& mu,
                            const GridDensity& nu) {
    EntropicCoupling g = gamma;
    const std::size_t nx = g.x_grid.size(), ny = g.y_grid.size();
    const auto px = g.x_marginal();
    for (std::size_t i = 0; i < nx; ++i) {
        const double a = std::log(mu[i]) - std::log(px[i]);
        for (std::size_t j = 0; j < ny; ++j) g.log_gamma[i * ny + j] += a;
    }
    const auto py = g.y_marginal();
    for (std::size_t j = 0; j < ny; ++j) {
        const double b = std::log(nu[j]) - std::log(py[j]);
        for (std::size_t i = 0; i < nx; ++i) g.log_gamma[i * ny + j] += b;
    }
    return g;
}

double laplace_residual(const ConvexPotential& u, const DensitySpec& f, const GridDensity& mu,
                        double eps, bool with_log_term) {
    require_same_grid(u.grid(), mu.grid(), "laplace_residual");
    const Grid& g = mu.grid();
    const std::size_t b = g.interior_begin(), e = g.interior_end();
    const Grid inner(g.node(b), g.node(e - 1), e - b);
    const auto V = v_operator(u.u(), mu, eps, inner);
    const auto w = legendre_transform(u, inner);
    const double log_term = with_log_term ? 0.5 * eps * std::log(2.0 * std::numbers::pi * eps) : 0.0;
    double r = 0.0;
    for (std::size_t j = 0; j < inner.size(); ++j) {
        const double fw = f.f(w.du()[j]) + f.log_normalizer;
        const double res = V[j] - w.u()[j] - log_term + eps * fw - 0.5 * eps * std::log(w.d2u()[j]);
        r = std::max(r, std::abs(res));
    }
    return r;
}

void write_csv(std::ostream& xs, std::ostream& ys, const SinkhornState& s) {
    io::write_header(xs, {"x", "u", "rho"});
    for (std::size_t i = 0; i < s.u.size(); ++i)
        io::write_row(xs, {s.mu.grid().node(i), s.u[i], s.rho[i]});
    io::write_header(ys, {"y", "v"});
    for (std::size_t j = 0; j < s.v.size(); ++j) io::write_row(ys, {s.nu.grid().node(j), s.v[j]});
}

void write_csv(std::ostream& os, const EntropicCoupling& pi) {
    const std::size_t nx = pi.x_grid.size(), ny = pi.y_grid.size();
    for (std::size_t i = 0; i < nx; ++i) {
        std::vector<double> row(ny);
        for (std::size_t j = 0; j < ny; ++j) row[j] = std::exp(pi.log_at(i, j));
        io::write_row(os, row);
    }
}

}  // namespace sinkflow

#include <doctest.h>

#include <random>

#include "sinkflow/sinkhorn.hpp"
#include "support.hpp"

using namespace sinkflow;
using testing::gauss;

namespace {

const Grid kGrid(-8.0, 8.0, 512);

std::vector<double> quadratic(const Grid& g, double a) {
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.5 * a * g.node(i) * g.node(i);
    return u;
}

std::vector<double> random_potential(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> c(0.5, 1.5), amp(-0.3, 0.3), freq(0.2, 2.0);
    const double a = c(rng), b1 = amp(rng), k1 = freq(rng), b2 = amp(rng), k2 = freq(rng);
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = g.node(i);
        u[i] = 0.5 * a * x * x + b1 * std::sin(k1 * x) + b2 * std::cos(k2 * x);
    }
    return u;
}

// a with a (a + eps) = 1: u = a x^2/2 is the self potential of N(0,1)
double self_curvature(double eps) { return 0.5 * (-eps + std::sqrt(eps * eps + 4.0)); }

double interior_sup_diff(const Grid& g, std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("V of a quadratic against its closed form") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    for (double eps : {0.5, 0.1}) {
        const auto V = v_operator(quadratic(kGrid, 1.0), mu, eps);
        double err = 0.0;
        for (std::size_t j = kGrid.interior_begin(); j < kGrid.interior_end(); ++j) {
            const double y = kGrid.node(j);
            const double exact = y * y / (2.0 * (1.0 + eps)) + 0.5 * eps * std::log(eps / (1.0 + eps));
            err = std::max(err, std::abs(V[j] - exact));
        }
        CHECK(err <= 1e-8);
    }
}

TEST_CASE("operators are shift equivariant") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    std::mt19937_64 rng(3);
    const auto u = random_potential(kGrid, rng);
    auto shifted = u;
    for (double& x : shifted) x += 2.5;
    const auto a = v_operator(u, mu, 0.1);
    const auto b = v_operator(shifted, mu, 0.1);
    double err = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) err = std::max(err, std::abs(b[j] - (a[j] - 2.5)));
    CHECK(err <= 1e-10);

    const auto c = u_operator(a, mu, 0.1);
    auto a2 = a;
    for (double& x : a2) x -= 1.0;
    const auto d = u_operator(a2, mu, 0.1);
    err = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, std::abs(d[i] - (c[i] + 1.0)));
    CHECK(err <= 1e-10);
}

TEST_CASE("operators are sup-norm contractions") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    const auto nu = gauss(kGrid, 0.5, 1.0);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto u1 = random_potential(kGrid, rng);
        const auto u2 = random_potential(kGrid, rng);
        const double du = testing::sup_abs_diff(u1, u2);
        const auto v1 = v_operator(u1, mu, 0.1);
        const auto v2 = v_operator(u2, mu, 0.1);
        CHECK(testing::sup_abs_diff(v1, v2) <= du + 1e-9);
        CHECK(testing::sup_abs_diff(u_operator(v1, nu, 0.1), u_operator(v2, nu, 0.1)) <=
              testing::sup_abs_diff(v1, v2) + 1e-9);
    }
}

TEST_CASE("self potential is a fixed point") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    for (double eps : {0.5, 0.1}) {
        const auto s = make_sinkhorn_state(mu, mu, eps, quadratic(kGrid, self_curvature(eps)), mu);
        const auto next = s_step(s);
        CHECK(next.k == 1);
        CHECK(interior_sup_diff(kGrid, next.rho.values(), mu.values()) <= 1e-8);
        auto anchored = s.u;
        for (double& x : anchored) x -= s.u[kGrid.size() / 2];
        // grid truncation of the Y integral limits agreement near the edges
        CHECK(interior_sup_diff(kGrid, next.u, anchored) <= 1e-6);
        const auto run = run_to_tolerance(s, 1e-8, 100);
        CHECK(run.iterations <= 10);
        CHECK(run_to_tolerance(run.state, 1e-8, 100).iterations == 0);
    }
}

TEST_CASE("step densities are normalized and shift invariant") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    const auto nu = gauss(kGrid, 0.5, 1.0);
    std::mt19937_64 rng(8);
    const auto u = random_potential(kGrid, rng);
    const auto s = s_step(make_sinkhorn_state(mu, nu, 0.1, u, mu));
    CHECK(std::abs(numerics::trapezoid(s.rho.values(), kGrid.spacing()) - 1.0) <= 1e-12);
    CHECK(s.u[kGrid.size() / 2] == 0.0);

    auto shifted = u;
    for (double& x : shifted) x -= 4.0;
    const auto t = s_step(make_sinkhorn_state(mu, nu, 0.1, shifted, mu));
    CHECK(sup_distance(s.rho, t.rho) <= 1e-10);
    CHECK(testing::sup_abs_diff(s.u, t.u) <= 1e-9);

    const auto inc = increment_density(u, mu, nu, 0.1);
    CHECK(sup_distance(inc, s.rho) <= 1e-12);
}

TEST_CASE("kl to mu decreases along iterations") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    const auto nu = gauss(kGrid, 0.5, 1.0);
    auto s = s_step(make_sinkhorn_state(mu, nu, 0.1, quadratic(kGrid, 1.0), mu));
    double prev = kl_divergence(mu, s.rho);
    for (int k = 2; k <= 50; ++k) {
        s = s_step(s);
        const double cur = kl_divergence(mu, s.rho);
        CHECK(cur <= prev + 1e-14);
        prev = cur;
    }
    CHECK(prev <= 1e-5);
}

TEST_CASE("coupling marginals") {
    const Grid g(-8.0, 8.0, 256);
    const auto mu = gauss(g, 0.0, 1.0);
    const auto nu = gauss(g, 0.5, 1.0);
    std::mt19937_64 rng(9);
    const auto s = make_sinkhorn_state(mu, nu, 0.2, random_potential(g, rng), mu);
    const auto pi = coupling(s);
    CHECK(std::abs(pi.mass() - 1.0) <= 1e-10);
    const auto py = pi.y_marginal();
    double ey = 0.0;
    for (std::size_t j = 0; j < py.size(); ++j) ey = std::max(ey, std::abs(py[j] - nu[j]));
    CHECK(ey <= 1e-10);
    const auto px = pi.x_marginal();
    const auto next = s_step(s);
    double ex = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) ex = std::max(ex, std::abs(px[i] - next.rho[i]));
    CHECK(ex <= 1e-10);
}

TEST_CASE("a step matches one round of marginal fitting") {
    const Grid g(-8.0, 8.0, 256);
    const auto mu = gauss(g, 0.0, 1.0);
    const auto nu = gauss(g, 0.5, 1.0);
    std::mt19937_64 rng(10);
    const auto s = make_sinkhorn_state(mu, nu, 0.2, random_potential(g, rng), mu);
    const auto a = ipfp_round(coupling(s), mu, nu);
    const auto b = coupling(s_step(s));
    double err = 0.0;
    for (std::size_t k = 0; k < a.log_gamma.size(); ++k) {
        const double m = std::exp(b.log_gamma[k]);
        err = std::max(err, std::abs(std::exp(a.log_gamma[k]) - m));
    }
    CHECK(err <= 1e-8);
}

TEST_CASE("entropic cost") {
    const Grid g(-8.0, 8.0, 256);
    const auto mu = gauss(g, 0.0, 1.0);
    const auto nu = gauss(g, 0.5, 1.0);
    // E|X - Y|^2 / 2 for independent X, Y: (1 + 1 + 0.25) / 2
    const double prod = eot_cost(product_coupling(mu, nu), mu, nu, 0.1);
    CHECK(std::abs(prod - 1.125) <= 1e-6);

    double prev = 1e300;
    for (double eps : {0.5, 0.2, 0.1}) {
        const auto run = run_to_tolerance(make_sinkhorn_state(mu, nu, eps, quadratic(g, 1.0), mu), 1e-10, 2000);
        const double c = eot_cost(coupling(run.state), mu, nu, eps);
        CHECK(c <= eot_cost(product_coupling(mu, nu), mu, nu, eps) + 1e-12);
        CHECK(c < prev);
        prev = c;
    }
}

TEST_CASE("run to tolerance") {
    const auto mu = gauss(kGrid, 0.0, 1.0);
    const auto nu = gauss(kGrid, 0.5, 1.0);
    const auto s = make_sinkhorn_state(mu, nu, 0.1, quadratic(kGrid, 1.0), mu);
    const auto run = run_to_tolerance(s, 1e-8, 500);
    CHECK(run.iterations > 0);
    CHECK(run.iterations < 500);
    CHECK(kl_divergence(mu, s_step(run.state).rho) <= 1e-10);
    CHECK_THROWS_AS(run_to_tolerance(s, 1e-8, 0), MaxIterExceeded);
    try {
        run_to_tolerance(s, 1e-8, 3);
    } catch (const MaxIterExceeded& e) {
        CHECK(e.state->k == 3);
    }
    CHECK_THROWS_AS(run_to_tolerance(s, 0.0, 10), DomainError);
}

TEST_CASE("laplace residual for a quadratic potential") {
    const auto spec = GaussianMeasure(0.0, 1.0).spec();
    const auto mu = discretize(spec, kGrid);
    const auto u = ConvexPotential::quadratic(kGrid, 1.0);
    const double ymax = kGrid.node(kGrid.interior_end() - 1);
    for (double eps : {0.2, 0.1}) {
        const double exact = eps * eps * ymax * ymax / (2.0 * (1.0 + eps)) - 0.5 * eps * std::log1p(eps);
        CHECK(std::abs(laplace_residual(u, spec, mu, eps) - exact) <= 1e-8);
    }
}

TEST_CASE("laplace residual decays at second order") {
    const Grid g(-12.0, 12.0, 512);
    const auto spec = GaussianMeasure(0.0, 4.0).spec();
    const auto mu = discretize(spec, g);
    const auto u = ConvexPotential::quadratic(g, 1.0);
    const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> with, without;
    for (double e : eps) {
        with.push_back(laplace_residual(u, spec, mu, e));
        without.push_back(laplace_residual(u, spec, mu, e, false));
    }
    CHECK(numerics::loglog_slope(eps, with) >= 1.7);
    CHECK(numerics::loglog_slope(eps, without) <= 1.0);
}

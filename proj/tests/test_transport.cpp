#include <doctest.h>

#include <random>

#include "sinkflow/transport.hpp"
#include "support.hpp"

using namespace sinkflow;
using testing::gauss;

namespace {

double gaussian_w2(double m1, double v1, double m2, double v2) {
    const double ds = std::sqrt(v1) - std::sqrt(v2);
    return std::sqrt((m1 - m2) * (m1 - m2) + ds * ds);
}

ConvexPotential quartic(const Grid& g) {
    return ConvexPotential::from_functions(
        g, [](double x) { return x * x * x * x / 4.0; }, [](double x) { return x * x * x; },
        [](double x) { return 3.0 * x * x; });
}

double interior_sup(const Grid& g, const std::function<double(std::size_t)>& err) {
    double m = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i) m = std::max(m, err(i));
    return m;
}

}  // namespace

TEST_CASE("brenier map between gaussians") {
    const Grid g(-8.0, 8.0, 512);
    const auto mu = gauss(g, 0.0, 1.0);
    const auto shift = brenier_map_1d(mu, gauss(g, 0.5, 1.0));
    CHECK(interior_sup(g, [&](std::size_t i) { return std::abs(shift.values()[i] - (g.node(i) + 0.5)); }) <= 1e-3);
    const auto scale = brenier_map_1d(mu, gauss(g, 0.0, 0.25));
    CHECK(interior_sup(g, [&](std::size_t i) { return std::abs(scale.values()[i] - 0.5 * g.node(i)); }) <= 5e-3);
    const auto self = brenier_map_1d(mu, mu);
    CHECK(interior_sup(g, [&](std::size_t i) { return std::abs(self.values()[i] - g.node(i)); }) <= 1e-3);

    const auto u = brenier_potential(mu, gauss(g, 0.5, 1.0));
    CHECK(u.u()[g.size() / 2] == 0.0);
    CHECK(u.min_hessian() >= u.a_min());
    // u(x) = x^2/2 + x/2 up to a constant
    const double c = u.u()[g.size() / 2] - (0.5 * g.node(256) * g.node(256) + 0.5 * g.node(256));
    CHECK(interior_sup(g, [&](std::size_t i) {
              const double x = g.node(i);
              return std::abs(u.u()[i] - (0.5 * x * x + 0.5 * x + c));
          }) <= 5e-3);
}

TEST_CASE("w2 distance between gaussians") {
    const Grid g(-8.0, 8.0, 512);
    const auto p = gauss(g, 0.0, 1.0);
    CHECK(w2_distance(p, p) <= 1e-12);
    CHECK(std::abs(w2_distance(p, gauss(g, 0.5, 1.0)) - 0.5) <= 1e-3);
    CHECK(std::abs(w2_distance(p, gauss(g, 0.0, 0.25)) - 0.5) <= 1e-3);
    CHECK(std::abs(w2_distance(gauss(g, 0.3, 0.5), gauss(g, -0.2, 1.5)) - gaussian_w2(0.3, 0.5, -0.2, 1.5)) <= 2e-3);
    CHECK_THROWS_AS(w2_distance(p, gauss(Grid(-8.0, 8.0, 256), 0.0, 1.0)), GridMismatch);
}

TEST_CASE("w2 behaves as a metric") {
    const Grid g(-8.0, 8.0, 512);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> m(-1.0, 1.0), v(0.3, 1.5);
    for (int k = 0; k < 20; ++k) {
        const auto a = gauss(g, m(rng), v(rng));
        const auto b = gauss(g, m(rng), v(rng));
        const auto c = gauss(g, m(rng), v(rng));
        CHECK(w2_distance(a, b) == doctest::Approx(w2_distance(b, a)).epsilon(1e-12));
        CHECK(w2_distance(a, c) <= w2_distance(a, b) + w2_distance(b, c) + 1e-12);
        CHECK(w2_distance(a, b) >= 0.0);
    }
}

TEST_CASE("linearized distance") {
    const Grid g(-8.0, 8.0, 512);
    const auto ref = gauss(g, 0.0, 1.0);
    // maps from a gaussian to gaussians are affine, so LOT and W2 coincide
    CHECK(std::abs(lot_distance(ref, gauss(g, 0.5, 1.0), gauss(g, -0.5, 1.0)) - 1.0) <= 2e-3);
    CHECK(std::abs(lot_distance(ref, gauss(g, 0.0, 0.25), gauss(g, 0.0, 1.0)) - 0.5) <= 2e-3);
    CHECK(lot_distance(ref, ref, ref) <= 1e-12);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> m(-1.0, 1.0), v(0.3, 1.5);
    for (int k = 0; k < 20; ++k) {
        const auto a = gauss(g, m(rng), v(rng));
        const auto b = gauss(g, m(rng), v(rng));
        CHECK(lot_distance(ref, a, b) >= w2_distance(a, b) - 2e-3);
    }
}

TEST_CASE("legendre transform of quadratics") {
    const Grid g(-8.0, 8.0, 512);
    const auto w = legendre_transform(ConvexPotential::quadratic(g, 1.0), Grid(-7.0, 7.0, 400));
    CHECK(interior_sup(w.grid(), [&](std::size_t j) {
              const double y = w.grid().node(j);
              return std::abs(w.u()[j] - 0.5 * y * y);
          }) <= 1e-10);

    const auto w2 = legendre_transform(ConvexPotential::quadratic(g, 2.0), Grid(-14.0, 14.0, 400));
    CHECK(interior_sup(w2.grid(), [&](std::size_t j) {
              const double y = w2.grid().node(j);
              return std::abs(w2.u()[j] - y * y / 4.0) + std::abs(w2.d2u()[j] - 0.5);
          }) <= 1e-10);

    CHECK_THROWS_AS(legendre_transform(ConvexPotential::quadratic(g, 1.0), Grid(-9.0, 9.0, 64)), RangeError);
}

TEST_CASE("legendre transform of a quartic against a brute-force maximum") {
    const Grid g(0.1, 2.0, 512);
    const auto u = quartic(g);
    const Grid t(0.01, 7.9, 200);
    const auto w = legendre_transform(u, t);
    double err = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double y = t.node(j);
        double best = -1e300;
        for (int k = 0; k <= 200000; ++k) {
            const double x = 0.1 + 1.9 * k / 200000.0;
            best = std::max(best, x * y - x * x * x * x / 4.0);
        }
        err = std::max(err, std::abs(w.u()[j] - best));
        // exact: w(y) = (3/4) y^{4/3}
        CHECK(std::abs(w.u()[j] - 0.75 * std::pow(y, 4.0 / 3.0)) <= 1e-6);
    }
    CHECK(err <= 1e-6);
}

TEST_CASE("double legendre returns the potential") {
    const Grid g(-3.0, 3.0, 512);
    const auto u = ConvexPotential::from_functions(
        g, [](double x) { return std::cosh(x); }, [](double x) { return std::sinh(x); },
        [](double x) { return std::cosh(x); });
    const auto w = legendre_transform(u, Grid(std::sinh(-3.0), std::sinh(3.0), 1024));
    const auto uu = legendre_transform(w, Grid(-2.9, 2.9, 300));
    CHECK(interior_sup(uu.grid(), [&](std::size_t i) {
              return std::abs(uu.u()[i] - std::cosh(uu.grid().node(i)));
          }) <= 1e-5);

    // w' inverts u'
    double inv = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
        inv = std::max(inv, std::abs(w.grad(u.du()[i]) - g.node(i)));
    CHECK(inv <= 1e-4);
}

TEST_CASE("mirror coordinate and bregman divergence") {
    const Grid g(0.5, 2.0, 151);
    const auto u = quartic(g);
    CHECK(mirror_coordinate(u, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mirror_coordinate(u, 2.0) == doctest::Approx(8.0).epsilon(1e-10));
    CHECK_THROWS_AS(mirror_coordinate(u, 3.0), DomainError);

    const Grid gq(-8.0, 8.0, 512);
    const auto q = ConvexPotential::quadratic(gq, 1.0);
    const auto qs = legendre_transform(q, Grid(-7.0, 7.0, 512));
    // x^2/2 + y^2/2 - xy = (x - y)^2 / 2
    CHECK(std::abs(bregman_divergence(q, qs, 1.0, 3.0) - 2.0) <= 1e-8);
    CHECK(std::abs(bregman_divergence(q, qs, 2.0, 2.0)) <= 1e-8);

    const auto wq = legendre_transform(quartic(Grid(0.1, 3.0, 512)), Grid(1.0, 27.0, 301));
    CHECK(std::abs(bregman_divergence(quartic(Grid(0.1, 3.0, 512)), wq, 1.0, 1.0)) <= 1e-8);
    CHECK(bregman_divergence(quartic(Grid(0.1, 3.0, 512)), wq, 1.0, 4.0) > 0.0);
    CHECK_THROWS_AS(bregman_divergence(q, qs, 9.0, 0.0), DomainError);
}

TEST_CASE("log-det hessian gradient identity") {
    CHECK(log_det_hessian_gradient_residual(ConvexPotential::quadratic(Grid(-8.0, 8.0, 512), 1.0)) <= 1e-12);

    auto poly = [](std::size_t n) {
        return ConvexPotential::from_functions(
            Grid(0.5, 2.0, n), [](double x) { return std::pow(x, 4) + x * x / 2.0; },
            [](double x) { return 4.0 * x * x * x + x; }, [](double x) { return 12.0 * x * x + 1.0; });
    };
    const double r512 = log_det_hessian_gradient_residual(poly(512));
    const double r1024 = log_det_hessian_gradient_residual(poly(1024));
    CHECK(r512 <= 1e-4);
    CHECK(r512 / r1024 >= 3.5);
    CHECK(r512 / r1024 <= 4.5);

    auto ch = [](std::size_t n) {
        return ConvexPotential::from_functions(
            Grid(-2.0, 2.0, n), [](double x) { return std::cosh(x); }, [](double x) { return std::sinh(x); },
            [](double x) { return std::cosh(x); });
    };
    const double ratio = log_det_hessian_gradient_residual(ch(256)) / log_det_hessian_gradient_residual(ch(512));
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("change of measure") {
    const Grid g(-8.0, 8.0, 512);
    const auto a = gauss(g, 0.0, 1.0);
    const auto phi = ConvexPotential::from_functions(
        g, [](double x) { return 0.5 * x * x + 0.2 * std::log(std::cosh(x)); },
        [](double x) { return x + 0.2 * std::tanh(x); },
        [](double x) { return 1.0 + 0.2 / (std::cosh(x) * std::cosh(x)); });
    CHECK(change_of_measure_residual(a, phi, Grid(-9.0, 9.0, 512)) <= 1e-4);
    CHECK(change_of_measure_residual(a, ConvexPotential::quadratic(g, 1.0, 0.0), g) <= 1e-6);
}

TEST_CASE("potentials reject lost convexity") {
    const Grid g(-1.0, 1.0, 65);  // node at 0 where u'' vanishes
    CHECK_THROWS_AS(ConvexPotential::from_functions(
                        g, [](double x) { return std::pow(x, 4); },
                        [](double x) { return 4.0 * x * x * x; }, [](double x) { return 12.0 * x * x; }),
                    ConvexityLost);
    CHECK_THROWS_AS(ConvexPotential::quadratic(g, -1.0), ConvexityLost);
    CHECK_NOTHROW(ConvexPotential::quadratic(g, 1e-2));
}

TEST_CASE("inverse gradient") {
    const Grid g(-3.0, 3.0, 512);
    const auto u = ConvexPotential::from_functions(
        g, [](double x) { return std::cosh(x); }, [](double x) { return std::sinh(x); },
        [](double x) { return std::cosh(x); });
    for (double y : {-5.0, -1.0, 0.0, 0.3, 4.0}) CHECK(std::abs(u.inverse_grad(y) - std::asinh(y)) <= 1e-4);
}

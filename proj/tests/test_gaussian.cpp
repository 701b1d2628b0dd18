#include <doctest.h>

#include "sinkflow/gaussian.hpp"
#include "sinkflow/pma.hpp"
#include "support.hpp"

using namespace sinkflow;
using namespace sinkflow::gaussian;

namespace {

double tanh_sd(double eta, double t) { return std::tanh(t / eta + std::atanh(eta)); }

double ou_var(double eta, double t) { return 1.0 - (1.0 - eta * eta) * std::exp(-2.0 * t); }

double var_of(const ClosedFormFlow& f, double t) { return std::get<GaussianMeasure>(evaluate(f, t)).variance; }

}  // namespace

TEST_CASE("closed-form marginals") {
    const ClosedFormFlow loc(FlowKind::SinkhornLocation, 0.5);
    const auto g = std::get<GaussianMeasure>(evaluate(loc, 1.0));
    CHECK(g.mean == doctest::Approx(0.5 * std::exp(-1.0)));
    CHECK(g.variance == 1.0);

    const ClosedFormFlow sc(FlowKind::SinkhornScale, 0.5);
    CHECK(var_of(sc, 0.0) == doctest::Approx(0.25));
    CHECK(std::abs(var_of(sc, 1.0) - 0.97587) <= 1e-5);
    for (double t : {0.1, 0.5, 2.0}) CHECK(std::abs(sigma_s2(0.5, t) - std::pow(tanh_sd(0.5, t), 2)) <= 1e-12);

    const ClosedFormFlow fp(FlowKind::FokkerPlanckScale, 0.5);
    CHECK(var_of(fp, 0.0) == doctest::Approx(0.25));
    CHECK(std::abs(var_of(fp, 1.0) - 0.89850) <= 1e-5);

    CHECK(var_of(ClosedFormFlow(FlowKind::MirrorEntropy), 1.0) == doctest::Approx(4.0));
    CHECK(var_of(ClosedFormFlow(FlowKind::MirrorPotentialEnergy), 1.0) == doctest::Approx(0.25));

    CHECK(evaluate_scalar(ClosedFormFlow(FlowKind::EuclidQuadratic), 1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(evaluate_scalar(ClosedFormFlow(FlowKind::EuclidQuartic), 3.0) == doctest::Approx(std::sqrt(0.5)));
    CHECK(evaluate_scalar(ClosedFormFlow(FlowKind::EuclidInverse), 2.0) == doctest::Approx(std::pow(4.0, -1.0 / 3.0)));
    CHECK_THROWS_AS(evaluate(ClosedFormFlow(FlowKind::EuclidQuartic), 7.0), DomainError);
    CHECK_THROWS_AS(evaluate(loc, -1.0), DomainError);

    CHECK_THROWS_AS(ClosedFormFlow(FlowKind::SinkhornScale, 1.5), DomainError);
    CHECK_THROWS_AS(ClosedFormFlow(FlowKind::SinkhornLocation, 0.0), DomainError);
    CHECK(ClosedFormFlow(FlowKind::MirrorEntropy).is_measure());
    CHECK_FALSE(ClosedFormFlow(FlowKind::EuclidInverse).is_measure());
}

TEST_CASE("kind names round trip") {
    for (auto k : {FlowKind::SinkhornLocation, FlowKind::SinkhornScale, FlowKind::FokkerPlanckLocation,
                   FlowKind::FokkerPlanckScale, FlowKind::MirrorEntropy, FlowKind::MirrorPotentialEnergy,
                   FlowKind::EuclidQuadratic, FlowKind::EuclidQuartic, FlowKind::EuclidInverse})
        CHECK(parse_kind(kind_name(k)) == k);
    CHECK_THROWS_AS(parse_kind("heat"), DomainError);
}

TEST_CASE("closed forms solve their ODEs") {
    // d sigma/dt = (1 - sigma^2) / eta and d s2/dt = 2 (1 - s2), by central differences
    const double eta = 0.5, d = 1e-5;
    for (double t : {0.2, 0.7, 1.5}) {
        const double s = std::sqrt(sigma_s2(eta, t));
        const double ds = (std::sqrt(sigma_s2(eta, t + d)) - std::sqrt(sigma_s2(eta, t - d))) / (2.0 * d);
        CHECK(std::abs(ds - (1.0 - s * s) / eta) <= 1e-6);
        const double df = (sigma_f2(eta, t + d) - sigma_f2(eta, t - d)) / (2.0 * d);
        CHECK(std::abs(df - 2.0 * (1.0 - sigma_f2(eta, t))) <= 1e-6);
    }
}

TEST_CASE("sinkhorn flow approaches the target faster than the heat flow") {
    for (double eta : {0.3, 0.5, 0.8}) {
        double prev = 0.0;
        for (double t = 0.1; t <= 3.0; t += 0.1) {
            CHECK(sigma_s2(eta, t) >= sigma_f2(eta, t));
            CHECK(sigma_s2(eta, t) > prev);
            prev = sigma_s2(eta, t);
        }
    }
}

TEST_CASE("deficit ratio") {
    for (double t : {0.5, 1.0, 2.0}) {
        const auto r = deficit_ratio(0.5, t);
        CHECK(r.lhs >= r.rhs);
        const double lhs = (1.0 - ou_var(0.5, t)) / (1.0 - std::pow(tanh_sd(0.5, t), 2));
        CHECK(r.lhs == doctest::Approx(lhs).epsilon(1e-10));
    }
    CHECK(deficit_ratio(0.5, 2.0).lhs / deficit_ratio(0.5, 2.0).rhs >= 1.0);
    CHECK(deficit_ratio(0.5, 2.0).lhs / deficit_ratio(0.5, 2.0).rhs <= 1.001);
    CHECK_THROWS_AS(deficit_ratio(1.5, 1.0), DomainError);
    CHECK_THROWS_AS(deficit_ratio(0.5, 0.0), DomainError);
}

TEST_CASE("euclidean mirror ODEs") {
    CHECK(std::abs(integrate_euclid(FlowKind::EuclidQuadratic, 1.0, 1.0, 1e-4) - std::exp(-1.0)) <= 1e-3);
    CHECK(std::abs(integrate_euclid(FlowKind::EuclidQuartic, 1.0, 3.0, 1e-4) - std::sqrt(0.5)) <= 1e-3);
    CHECK(std::abs(integrate_euclid(FlowKind::EuclidInverse, 1.0, 2.0, 1e-4) - std::pow(4.0, -1.0 / 3.0)) <= 1e-3);
    CHECK(euclid_mirror_ode_step(FlowKind::EuclidQuadratic, 2.0, 0.1) == doctest::Approx(1.8));
    CHECK(euclid_mirror_ode_step(FlowKind::EuclidQuartic, 1.0, 0.12) == doctest::Approx(0.99));
    CHECK_THROWS_AS(euclid_mirror_ode_step(FlowKind::EuclidQuartic, 0.0, 0.1), DomainError);
    CHECK_THROWS_AS(euclid_mirror_ode_step(FlowKind::SinkhornScale, 1.0, 0.1), DomainError);

    // first-order convergence in dt
    const double e1 = std::abs(integrate_euclid(FlowKind::EuclidQuadratic, 1.0, 1.0, 1e-2) - std::exp(-1.0));
    const double e2 = std::abs(integrate_euclid(FlowKind::EuclidQuadratic, 1.0, 1.0, 5e-3) - std::exp(-1.0));
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("gaussian functionals") {
    const GaussianMeasure p(0.5, 1.0), q(0.0, 1.0), r(0.0, 0.25);
    CHECK(kl(p, q) == doctest::Approx(0.125));
    CHECK(kl(q, q) == 0.0);
    CHECK(w2_squared(p, q) == doctest::Approx(0.25));
    CHECK(w2_squared(r, q) == doctest::Approx(0.25));
    CHECK(lsi_constant_quadratic(2.0) == 2.0);
    CHECK_THROWS_AS(lsi_constant_quadratic(0.0), DomainError);

    // HWI: KL(p|q) <= W2(p,q) sqrt(I(p|q)) - W2^2/2 for q = N(0,1); I = E|x + (log p)'|^2
    for (double v : {0.3, 0.7, 1.5}) {
        for (double m : {0.0, 0.4}) {
            const GaussianMeasure a(m, v);
            const double fisher = m * m + v * (1.0 - 1.0 / v) * (1.0 - 1.0 / v);
            const double w = std::sqrt(w2_squared(a, q));
            CHECK(kl(a, q) <= w * std::sqrt(fisher) - 0.5 * w * w + 1e-12);
            // LSI with constant 1: KL <= I / 2
            CHECK(kl(a, q) <= 0.5 * fisher + 1e-12);
        }
    }
}

TEST_CASE("entropy mirror flow keeps a linear mirror map") {
    // with u0 = x^2/2 and g = N(0,1), rho_t = N(0, (1+t)^2) and u_t' = x/(1+t)
    const Grid g(-12.0, 12.0, 512);
    const auto p = make_mirror_flow_problem(GaussianMeasure(0.0, 1.0).spec(), g, entropy_functional(),
                                            GaussianMeasure(0.0, 1.0).spec());
    const auto run = run_pma(init_pma(p, ConvexPotential::quadratic(g, 1.0)), 1e-3, 0.5);
    const auto& s = run.back();
    CHECK(std::abs(s.rho.variance() / 2.25 - 1.0) <= 0.02);
    double err = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
        err = std::max(err, std::abs(s.u.du()[i] - g.node(i) / 1.5));
    CHECK(err <= 1e-2);
}

#include <doctest.h>

#include <omp.h>
#include <random>

#include "sinkflow/diffusion.hpp"
#include "sinkflow/kernels.hpp"
#include "support.hpp"

using namespace sinkflow;
using kernels::Backend;

namespace {

struct Threads {
    int saved = omp_get_max_threads();
    explicit Threads(int n) { omp_set_num_threads(n); }
    ~Threads() { omp_set_num_threads(saved); }
};

std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("log transform backends agree bit for bit") {
    const Threads t(3);
    for (std::size_t n : {17u, 256u, 513u}) {
        const auto a = uniform(n, -8.0, 8.0, 1), c = uniform(n, -30.0, 0.0, 2), b = uniform(n + 3, -8.0, 8.0, 3);
        std::vector<double> s(n + 3), p(n + 3);
        kernels::log_transform_serial(a, c, b, 0.05, s);
        kernels::log_transform_omp(a, c, b, 0.05, p);
        CHECK(s == p);
    }
}

TEST_CASE("V operator backends agree bit for bit") {
    const Threads t(3);
    const Grid g(-8.0, 8.0, 512);
    const auto mu = testing::gauss(g, 0.0, 1.0);
    const auto u = uniform(512, -1.0, 1.0, 4);
    CHECK(v_operator(u, mu, 0.1, Backend::Serial) == v_operator(u, mu, 0.1, Backend::OpenMP));
    CHECK(u_operator(u, mu, 0.1, Backend::Serial) == u_operator(u, mu, 0.1, Backend::OpenMP));
}

TEST_CASE("particle steps agree across backends and thread counts") {
    const Grid g(-8.0, 8.0, 256);
    const auto p = make_pma_problem(GaussianMeasure(0.0, 1.0).spec(), GaussianMeasure(0.5, 1.0).spec(), g);
    const auto s = init_pma(p, ConvexPotential::quadratic(g, 1.0));
    const auto e = make_ensemble(sample(p->nu, 10000, 5), 6);
    StepOptions serial;
    serial.backend = Backend::Serial;
    const auto ref = sinkhorn_sde_step(e, s, 1e-3, serial);
    for (int n : {1, 3, 4}) {
        const Threads t(n);
        CHECK(sinkhorn_sde_step(e, s, 1e-3).positions == ref.positions);
    }
    CHECK(dual_sde_step(e, s, 1e-3, serial).positions == dual_sde_step(e, s, 1e-3).positions);
}

TEST_CASE("chain steps agree across backends") {
    const Threads t(3);
    const Grid g(-8.0, 8.0, 128);
    const auto mu = testing::gauss(g, 0.0, 1.0), nu = testing::gauss(g, 0.5, 1.0);
    std::vector<double> u0(g.size());
    for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = 0.5 * g.node(i) * g.node(i);
    const auto sk = make_sinkhorn_state(mu, nu, 0.1, u0, nu);
    const auto chain = markov_chain_init(nu, nu, 5000, 7);
    const auto a = markov_chain_step(chain, sk, Backend::Serial);
    const auto b = markov_chain_step(chain, sk, Backend::OpenMP);
    CHECK(a.positions == b.positions);
    CHECK(a.partner == b.partner);
}

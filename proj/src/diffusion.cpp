#include "sinkflow/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "sinkflow/io.hpp"
#include "sinkflow/rng.hpp"

namespace sinkflow {

ParticleEnsemble make_ensemble(std::vector<double> positions, std::uint64_t seed, double t) {
    for (double x : positions)
        if (!std::isfinite(x)) throw ParticleEscape("non-finite initial position");
    ParticleEnsemble e;
    e.positions = std::move(positions);
    e.seed = seed;
    e.t = t;
    return e;
}

namespace {

struct PrimalField {
    Grid g;
    std::vector<double> du, d2u, dh;
    std::function<double(double)> fp, gp;

    explicit PrimalField(const PmaState& s)
        : g(s.u.grid()),
          du(s.u.du().begin(), s.u.du().end()),
          d2u(s.u.d2u().begin(), s.u.d2u().end()),
          dh(numerics::derivative(s.h, s.u.grid().spacing())),
          fp(s.problem->f.grad),
          gp(s.problem->g.grad) {}

    double drift(double x) const {
        const double H = numerics::interp_linear(g, d2u, x);
        return -fp(x) / H - gp(numerics::interp_linear(g, du, x)) +
               numerics::interp_linear(g, dh, x) / H;
    }
    double sigma(double x) const { return std::sqrt(2.0 / numerics::interp_linear(g, d2u, x)); }
};

struct DualField {
    ConvexPotential u;
    Grid g;
    std::vector<double> dh;

    explicit DualField(const PmaState& s)
        : u(s.u), g(s.u.grid()), dh(numerics::derivative(s.h, s.u.grid().spacing())) {}

    double drift(double y) const { return -numerics::interp_linear(g, dh, u.inverse_grad(y)); }
    // sqrt(2 / w''(y)) with w'' = 1/u''(w'(y))
    double sigma(double y) const { return std::sqrt(2.0 * u.hess(u.inverse_grad(y))); }
};

void check_time(const ParticleEnsemble& e, const PmaState& s) {
    if (std::abs(e.t - s.t) > 1e-9 * (1.0 + std::abs(s.t)))
        throw DomainError("ensemble time " + io::real(e.t) + " differs from flow time " + io::real(s.t));
}

template <class Update>
ParticleEnsemble advance(const ParticleEnsemble& e, double dt, const Grid& window, Backend be,
                         Update update) {
    if (!(dt > 0.0)) throw DomainError("particle step needs dt > 0");
    ParticleEnsemble out = e;
    const auto P = static_cast<std::ptrdiff_t>(e.positions.size());
    const double lo = window.lower() - 1.0, hi = window.upper() + 1.0;
    std::atomic<bool> escaped{false};
#pragma omp parallel for schedule(static) if (be == Backend::OpenMP)
    for (std::ptrdiff_t p = 0; p < P; ++p) {
        const double x = update(static_cast<std::uint64_t>(p), e.positions[static_cast<std::size_t>(p)]);
        out.positions[static_cast<std::size_t>(p)] = x;
        if (!(x >= lo && x <= hi)) escaped.store(true, std::memory_order_relaxed);
    }
    if (escaped) throw ParticleEscape("particle left the window at step " + std::to_string(e.step_count));
    out.t = e.t + dt;
    out.step_count = e.step_count + 1;
    return out;
}

}  // namespace

SdeCoefficients sinkhorn_sde_coefficients(const PmaState& pma) {
    auto f = std::make_shared<PrimalField>(pma);
    return {[f](double, double x) { return f->drift(x); },
            [f](double, double x) { return f->sigma(x); }};
}

SdeCoefficients dual_sde_coefficients(const PmaState& pma) {
    auto f = std::make_shared<DualField>(pma);
    return {[f](double, double y) { return f->drift(y); },
            [f](double, double y) { return f->sigma(y); }};
}

MirrorMap MirrorMap::from_potential(const ConvexPotential& u) {
    auto p = std::make_shared<ConvexPotential>(u);
    return {[p](double x) { return p->grad(x); }, [p](double x) { return p->hess(x); }};
}

MirrorMap MirrorMap::quadratic() {
    return {[](double x) { return x; }, [](double) { return 1.0; }};
}

ParticleEnsemble sinkhorn_sde_step(const ParticleEnsemble& e, const PmaState& pma, double dt,
                                   StepOptions opt) {
    check_time(e, pma);
    const PrimalField F(pma);
    const double sdt = std::sqrt(dt);
    const std::uint64_t seed = e.seed, k = e.step_count;
    return advance(e, dt, F.g, opt.backend, [&](std::uint64_t p, double x) {
        const double noise = opt.noise ? F.sigma(x) * sdt * rng::normal(seed, k, p) : 0.0;
        return x + F.drift(x) * dt + noise;
    });
}

ParticleEnsemble dual_sde_step(const ParticleEnsemble& e, const PmaState& pma, double dt,
                               StepOptions opt) {
    check_time(e, pma);
    const DualField F(pma);
    const double sdt = std::sqrt(dt);
    const std::uint64_t seed = e.seed, k = e.step_count;
    return advance(e, dt, pma.nu().grid(), opt.backend, [&](std::uint64_t p, double y) {
        const double noise = opt.noise ? F.sigma(y) * sdt * rng::normal(seed, k, p) : 0.0;
        return y + F.drift(y) * dt + noise;
    });
}

ParticleEnsemble mirror_langevin_step(const ParticleEnsemble& e, const MirrorMap& u,
                                      const DensitySpec& target, double dt, const Grid& window,
                                      StepOptions opt) {
    const double sdt = std::sqrt(dt);
    const std::uint64_t seed = e.seed, k = e.step_count;
    return advance(e, dt, window, opt.backend, [&](std::uint64_t p, double x) {
        const double drift = -target.grad(u.grad(x));
        const double noise = opt.noise ? std::sqrt(2.0 / u.hess(x)) * sdt * rng::normal(seed, k, p) : 0.0;
        return x + drift * dt + noise;
    });
}

namespace {

std::vector<double> node_cdf(const GridDensity& d) {
    const auto w = d.grid().weights();
    std::vector<double> c(d.size());
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        s += w[i] * d[i];
        c[i] = s;
    }
    for (double& x : c) x /= s;
    c.back() = 1.0;
    return c;
}

std::size_t draw(const std::vector<double>& cdf, double u, std::size_t offset = 0, std::size_t n = 0) {
    if (n == 0) n = cdf.size();
    auto first = cdf.begin() + static_cast<std::ptrdiff_t>(offset);
    auto it = std::lower_bound(first, first + static_cast<std::ptrdiff_t>(n), u);
    return std::min(static_cast<std::size_t>(it - first), n - 1);
}

std::size_t node_index(const Grid& g, double x) {
    const double s = std::round((x - g.lower()) / g.spacing());
    if (s < 0.0 || s > static_cast<double>(g.size() - 1)) throw ParticleEscape("chain state off grid");
    return static_cast<std::size_t>(s);
}

constexpr std::uint64_t kInitStep = std::numeric_limits<std::uint64_t>::max();

}  // namespace

ParticleEnsemble markov_chain_init(const GridDensity& rho0, const GridDensity& nu,
                                   std::size_t count, std::uint64_t seed) {
    const auto cx = node_cdf(rho0), cy = node_cdf(nu);
    ParticleEnsemble e;
    e.seed = seed;
    e.positions.resize(count);
    e.partner.resize(count);
    for (std::size_t p = 0; p < count; ++p) {
        e.positions[p] = rho0.grid().node(draw(cx, rng::uniform(seed, kInitStep, p, 5)));
        e.partner[p] = nu.grid().node(draw(cy, rng::uniform(seed, kInitStep, p, 6)));
    }
    return e;
}

ParticleEnsemble markov_chain_step(const ParticleEnsemble& e, const SinkhornState& sk, Backend be) {
    if (sk.k != e.step_count) throw DomainError("markov chain step does not match sinkhorn iteration");
    if (e.partner.size() != e.positions.size()) throw DomainError("markov chain needs Y partners");
    const auto pi = coupling(sk);
    const Grid& gx = pi.x_grid;
    const Grid& gy = pi.y_grid;
    const std::size_t nx = gx.size(), ny = gy.size();
    const auto wx = gx.weights(), wy = gy.weights();

    // column j: X | Y = y_j ; row i: Y | X = x_i
    std::vector<double> colcdf(nx * ny), rowcdf(nx * ny), buf(std::max(nx, ny));
    for (std::size_t j = 0; j < ny; ++j) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nx; ++i) m = std::max(m, buf[i] = pi.log_at(i, j) + std::log(wx[i]));
        double s = 0.0;
        for (std::size_t i = 0; i < nx; ++i) colcdf[j * nx + i] = (s += std::exp(buf[i] - m));
        for (std::size_t i = 0; i < nx; ++i) colcdf[j * nx + i] /= s;
    }
    for (std::size_t i = 0; i < nx; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ny; ++j) m = std::max(m, buf[j] = pi.log_at(i, j) + std::log(wy[j]));
        double s = 0.0;
        for (std::size_t j = 0; j < ny; ++j) rowcdf[i * ny + j] = (s += std::exp(buf[j] - m));
        for (std::size_t j = 0; j < ny; ++j) rowcdf[i * ny + j] /= s;
    }

    ParticleEnsemble out = e;
    const auto P = static_cast<std::ptrdiff_t>(e.positions.size());
    std::atomic<bool> bad{false};
#pragma omp parallel for schedule(static) if (be == Backend::OpenMP)
    for (std::ptrdiff_t q = 0; q < P; ++q) {
        const auto p = static_cast<std::size_t>(q);
        const double y = e.partner[p];
        const double sy = std::round((y - gy.lower()) / gy.spacing());
        if (sy < 0.0 || sy > static_cast<double>(ny - 1)) {
            bad.store(true);
            continue;
        }
        const auto j = static_cast<std::size_t>(sy);
        const std::size_t i = draw(colcdf, rng::uniform(e.seed, e.step_count, p, 3), j * nx, nx);
        const std::size_t j2 = draw(rowcdf, rng::uniform(e.seed, e.step_count, p, 4), i * ny, ny);
        out.positions[p] = gx.node(i);
        out.partner[p] = gy.node(j2);
    }
    if (bad) throw ParticleEscape("chain partner off grid");
    out.step_count = e.step_count + 1;
    out.t = e.t + sk.eps;
    return out;
}

GridDensity empirical_density(const ParticleEnsemble& e, const Grid& g, double bw) {
    if (!(bw > 0.0)) throw DomainError("bandwidth must be positive");
    const std::size_t n = g.size();
    const double h = g.spacing();
    // linear binning, then a Gaussian convolution on the grid
    std::vector<double> bins(n, 0.0);
    for (double x : e.positions) {
        const double s = std::clamp((x - g.lower()) / h, 0.0, static_cast<double>(n - 1));
        auto i = static_cast<std::size_t>(s);
        if (i == n - 1) i = n - 2;
        const double t = s - static_cast<double>(i);
        bins[i] += 1.0 - t;
        bins[i + 1] += t;
    }
    const double norm = 1.0 / (static_cast<double>(e.positions.size()) * std::sqrt(2.0 * std::numbers::pi) * bw);
    std::vector<double> v(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (bins[i] == 0.0) continue;
            const double d = (g.node(j) - g.node(i)) / bw;
            s += bins[i] * std::exp(-0.5 * d * d);
        }
        // smallest normal double keeps the estimate strictly positive
        v[j] = std::max(s * norm, DBL_MIN);
    }
    return GridDensity::normalized(g, std::move(v));
}

double ks_distance_nodes(std::span<const double> positions, const GridDensity& d) {
    const Grid& g = d.grid();
    std::vector<double> counts(g.size(), 0.0);
    for (double x : positions) counts[node_index(g, x)] += 1.0;
    const auto c = node_cdf(d);
    const double N = static_cast<double>(positions.size());
    double acc = 0.0, D = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        acc += counts[i];
        D = std::max(D, std::abs(acc / N - c[i]));
    }
    return D;
}

double generator_stationarity_residual(const ConvexPotential& w, const DensitySpec& target,
                                       const std::function<double(double)>& dphi,
                                       const std::function<double(double)>& d2phi) {
    const Grid& g = w.grid();
    const auto H = w.d2u();
    const auto H3 = numerics::derivative(H, g.spacing());
    std::vector<double> e(g.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double y = g.node(i);
        const double b = -(target.grad(y) + H3[i] / H[i]) / H[i];
        e[i] = (b * dphi(y) + d2phi(y) / H[i]) * std::exp(target.log_density(y));
    }
    return std::abs(numerics::trapezoid(e, g.spacing()));
}

void write_csv(std::ostream& os, const ParticleEnsemble& e) {
    os << "particle_id,x\n";
    for (std::size_t p = 0; p < e.positions.size(); ++p) os << p << ',' << io::real(e.positions[p]) << '\n';
}

void write_summary_header(std::ostream& os) { io::write_header(os, {"t", "mean", "variance", "ks_distance"}); }

void write_summary_row(std::ostream& os, double t, std::span<const double> x, double ks) {
    io::write_row(os, {t, numerics::mean(x), numerics::variance(x), ks});
}

}  // namespace sinkflow

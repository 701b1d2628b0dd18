#include "sinkflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "sinkflow/io.hpp"

namespace sinkflow {

GaussianMeasure::GaussianMeasure(double m, double v) : mean(m), variance(v) {
    if (!(v > 0.0)) throw DomainError("gaussian variance must be positive");
}

double GaussianMeasure::sd() const { return std::sqrt(variance); }

DensitySpec GaussianMeasure::spec() const {
    const double m = mean, v = variance;
    DensitySpec s;
    s.f = [m, v](double x) { return (x - m) * (x - m) / (2.0 * v); };
    s.grad = [m, v](double x) { return (x - m) / v; };
    s.hess = [v](double) { return 1.0 / v; };
    s.log_normalizer = 0.5 * std::log(2.0 * std::numbers::pi * v);
    return s;
}

DensitySpec uniform_spec(double lower, double upper) {
    DensitySpec s;
    s.f = [](double) { return 0.0; };
    s.grad = [](double) { return 0.0; };
    s.hess = [](double) { return 0.0; };
    s.log_normalizer = std::log(upper - lower);
    return s;
}

GridDensity GridDensity::normalized(const Grid& grid, std::vector<double> values) {
    if (values.size() != grid.size()) throw GridMismatch("density size differs from grid");
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw NonPositiveError("density values must be positive and finite");
    const double mass = numerics::trapezoid(values, grid.spacing());
    for (double& v : values) v /= mass;
    return GridDensity(grid, std::move(values), std::log(mass));
}

GridDensity GridDensity::from_log(const Grid& grid, std::span<const double> lv) {
    const double m = *std::max_element(lv.begin(), lv.end());
    std::vector<double> v(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i) v[i] = std::exp(lv[i] - m);
    GridDensity d = normalized(grid, std::move(v));
    d.renorm_ += m;
    return d;
}

double GridDensity::mean() const {
    std::vector<double> w(size());
    for (std::size_t i = 0; i < size(); ++i) w[i] = grid_.node(i) * values_[i];
    return numerics::trapezoid(w, grid_.spacing());
}

double GridDensity::variance() const {
    const double m = mean();
    std::vector<double> w(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const double d = grid_.node(i) - m;
        w[i] = d * d * values_[i];
    }
    return numerics::trapezoid(w, grid_.spacing());
}

GridDensity discretize(const DensitySpec& spec, const Grid& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = std::exp(spec.log_density(grid.node(i)));
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x))
            throw NonPositiveError("discretized density not positive on the grid");
    const double mass = numerics::trapezoid(v, grid.spacing());
    if (1.0 - mass > 1e-8)
        throw TruncationError("mass " + io::real(1.0 - mass) + " lies outside the grid");
    return GridDensity::normalized(grid, std::move(v));
}

std::vector<double> cdf_values(const GridDensity& d) {
    auto c = numerics::cumulative_trapezoid(d.values(), d.grid().spacing());
    for (double& x : c) x = std::min(x, 1.0);
    c.back() = 1.0;
    return c;
}

std::vector<double> survival_values(const GridDensity& d) {
    const std::size_t n = d.size();
    const double h = d.grid().spacing();
    std::vector<double> s(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) s[i] = s[i + 1] + 0.5 * h * (d[i] + d[i + 1]);
    for (double& x : s) x = std::min(x, 1.0);
    s.front() = 1.0;
    return s;
}

namespace {

double quantile_from_cdf(const Grid& g, const std::vector<double>& c, double p) {
    auto it = std::lower_bound(c.begin(), c.end(), p);
    const auto i = static_cast<std::size_t>(it - c.begin());
    if (i == 0) return g.lower();
    if (i >= c.size()) return g.upper();
    const double span = c[i] - c[i - 1];
    const double t = span > 0.0 ? (p - c[i - 1]) / span : 1.0;
    return g.node(i - 1) + t * g.spacing();
}

}  // namespace

double quantile(const GridDensity& d, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile probability outside [0,1]");
    return quantile_from_cdf(d.grid(), cdf_values(d), p);
}

double kl_divergence(const GridDensity& p, const GridDensity& q) {
    require_same_grid(p.grid(), q.grid(), "kl_divergence");
    std::vector<double> w(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) w[i] = p[i] * std::log(p[i] / q[i]);
    return numerics::trapezoid(w, p.grid().spacing());
}

double second_moment(const GridDensity& d) {
    std::vector<double> w(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.grid().node(i);
        w[i] = x * x * d[i];
    }
    return numerics::trapezoid(w, d.grid().spacing());
}

GridDensity pushforward_monotone(const GridDensity& d, std::span<const double> T) {
    return pushforward_monotone(d, T, d.grid());
}

GridDensity pushforward_monotone(const GridDensity& d, std::span<const double> T,
                                 const Grid& target) {
    const Grid& g = d.grid();
    const std::size_t n = g.size();
    if (T.size() != n) throw GridMismatch("map size differs from grid");
    for (std::size_t i = 1; i < n; ++i)
        if (!(T[i] > T[i - 1])) throw NonMonotoneMap("map is not strictly increasing");

    // source mass carried outside the target window
    auto cdf = cdf_values(d);
    auto surv = survival_values(d);
    double lost = 0.0;
    if (T.front() < target.lower()) {
        std::size_t i = 0;
        while (i + 1 < n && T[i + 1] < target.lower()) ++i;
        const double t = (target.lower() - T[i]) / (T[i + 1] - T[i]);
        lost += cdf[i] + t * (cdf[i + 1] - cdf[i]);
    }
    if (T.back() > target.upper()) {
        std::size_t i = n - 1;
        while (i > 0 && T[i - 1] > target.upper()) --i;
        const double t = (T[i] - target.upper()) / (T[i] - T[i - 1]);
        lost += surv[i] + t * (surv[i - 1] - surv[i]);
    }
    if (lost > 1e-8) throw TruncationError("pushforward loses mass " + io::real(lost));

    const auto dT = numerics::derivative(T, g.spacing());
    std::vector<double> logb(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(dT[i] > 0.0)) throw NonMonotoneMap("map derivative not positive");
        logb[i] = std::log(d[i]) - std::log(dT[i]);
    }

    std::vector<double> out(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) {
        const double y = target.node(j);
        if (y < T.front()) {
            const double s = (logb[1] - logb[0]) / (T[1] - T[0]);
            out[j] = logb[0] + s * (y - T[0]);
        } else if (y > T.back()) {
            const double s = (logb[n - 1] - logb[n - 2]) / (T[n - 1] - T[n - 2]);
            out[j] = logb[n - 1] + s * (y - T[n - 1]);
        } else {
            out[j] = numerics::interp_cubic_sorted(T, logb, y);
        }
    }
    return GridDensity::from_log(target, out);
}

std::vector<double> sample(const GridDensity& d, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto c = cdf_values(d);
    std::vector<double> out(count);
    for (double& x : out) x = quantile_from_cdf(d.grid(), c, unif(rng));
    return out;
}

double sup_distance(const GridDensity& a, const GridDensity& b) {
    require_same_grid(a.grid(), b.grid(), "sup_distance");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double ks_distance(std::span<const double> xs, const GridDensity& d) {
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    const auto c = cdf_values(d);
    const double N = static_cast<double>(s.size());
    double D = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double F = numerics::interp_linear(d.grid(), c, s[i]);
        D = std::max({D, (static_cast<double>(i) + 1.0) / N - F, F - static_cast<double>(i) / N});
    }
    return D;
}

void write_csv(std::ostream& os, const GridDensity& d) {
    io::write_header(os, {"x", "density"});
    for (std::size_t i = 0; i < d.size(); ++i) io::write_row(os, {d.grid().node(i), d[i]});
}

}  // namespace sinkflow

#include "sinkflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sinkflow/errors.hpp"

namespace sinkflow {

Grid::Grid(double lower, double upper, std::size_t n) : lower_(lower), upper_(upper), n_(n) {
    if (n < 16) throw DomainError("grid needs at least 16 nodes");
    if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
        throw DomainError("grid requires finite lower < upper");
    h_ = (upper - lower) / static_cast<double>(n - 1);
}

std::vector<double> Grid::nodes() const {
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = node(i);
    return x;
}

std::vector<double> Grid::weights() const {
    std::vector<double> w(n_, h_);
    w.front() = w.back() = 0.5 * h_;
    return w;
}

std::size_t Grid::interior_begin(double fraction) const {
    return static_cast<std::size_t>(std::floor(0.5 * (1.0 - fraction) * static_cast<double>(n_)));
}

std::size_t Grid::interior_end(double fraction) const { return n_ - interior_begin(fraction); }

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b)) throw GridMismatch(std::string(where) + ": grids differ");
}

namespace numerics {

double trapezoid(std::span<const double> v, double h) {
    if (v.size() < 2) return 0.0;
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * h;
}

std::vector<double> cumulative_trapezoid(std::span<const double> v, double h) {
    std::vector<double> c(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) c[i] = c[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
    return c;
}

std::vector<double> derivative(std::span<const double> v, double h) {
    const std::size_t n = v.size();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    return d;
}

std::vector<double> second_derivative(std::span<const double> v, double h) {
    const std::size_t n = v.size();
    std::vector<double> d(n);
    const double h2 = h * h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
    d[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
    return d;
}

namespace {

// cell index and local coordinate in [0,1], clamped to the grid
std::pair<std::size_t, double> locate(const Grid& g, double x) {
    const double s = (x - g.lower()) / g.spacing();
    if (s <= 0.0) return {0, 0.0};
    const double last = static_cast<double>(g.size() - 1);
    if (s >= last) return {g.size() - 2, 1.0};
    const auto i = static_cast<std::size_t>(s);
    return {i, s - static_cast<double>(i)};
}

}  // namespace

double interp_linear(const Grid& g, std::span<const double> v, double x) {
    auto [i, t] = locate(g, x);
    return v[i] + t * (v[i + 1] - v[i]);
}

double interp_hermite(const Grid& g, std::span<const double> v, std::span<const double> dv,
                      double x) {
    auto [i, t] = locate(g, x);
    const double h = g.spacing();
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * v[i] + (t3 - 2 * t2 + t) * h * dv[i] +
           (-2 * t3 + 3 * t2) * v[i + 1] + (t3 - t2) * h * dv[i + 1];
}

double interp_cubic_sorted(std::span<const double> xs, std::span<const double> ys, double x) {
    const std::size_t n = xs.size();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t j = static_cast<std::size_t>(it - xs.begin());
    // stencil j-2..j+1 around the cell [j-1, j]
    std::size_t lo = j >= 2 ? j - 2 : 0;
    if (lo + 4 > n) lo = n - 4;
    double r = 0.0;
    for (std::size_t a = lo; a < lo + 4; ++a) {
        double l = 1.0;
        for (std::size_t b = lo; b < lo + 4; ++b)
            if (b != a) l *= (x - xs[b]) / (xs[a] - xs[b]);
        r += l * ys[a];
    }
    return r;
}

double logsumexp(std::span<const double> a) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : a) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : a) s += std::exp(v - m);
    return m + std::log(s);
}

double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace numerics

}  // namespace sinkflow

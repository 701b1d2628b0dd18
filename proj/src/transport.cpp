#include "sinkflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sinkflow/io.hpp"

namespace sinkflow {

MonotoneMap::MonotoneMap(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw GridMismatch("map size differs from grid");
    for (std::size_t i = 1; i < values_.size(); ++i)
        if (!(values_[i] > values_[i - 1])) throw NonMonotoneMap("map is not strictly increasing");
}

ConvexPotential::ConvexPotential(Grid grid, std::vector<double> u, std::vector<double> du,
                                 std::vector<double> d2u, double a_min)
    : grid_(grid), u_(std::move(u)), du_(std::move(du)), d2u_(std::move(d2u)), a_min_(a_min) {
    const std::size_t n = grid_.size();
    if (u_.size() != n || du_.size() != n || d2u_.size() != n)
        throw GridMismatch("potential arrays differ from grid");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(u_[i]) || !std::isfinite(du_[i]) || !(d2u_[i] >= a_min_))
            throw ConvexityLost("u'' below a_min at x = " + io::real(grid_.node(i)));
        if (i > 0 && !(du_[i] > du_[i - 1]))
            throw ConvexityLost("u' not strictly increasing at x = " + io::real(grid_.node(i)));
    }
}

ConvexPotential ConvexPotential::from_functions(const Grid& g,
                                                const std::function<double(double)>& u,
                                                const std::function<double(double)>& du,
                                                const std::function<double(double)>& d2u,
                                                double a_min) {
    const std::size_t n = g.size();
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.node(i);
        a[i] = u(x);
        b[i] = du(x);
        c[i] = d2u(x);
    }
    return ConvexPotential(g, std::move(a), std::move(b), std::move(c), a_min);
}

ConvexPotential ConvexPotential::from_values(const Grid& g, std::vector<double> u, double a_min) {
    auto du = numerics::derivative(u, g.spacing());
    auto d2u = numerics::second_derivative(u, g.spacing());
    return ConvexPotential(g, std::move(u), std::move(du), std::move(d2u), a_min);
}

ConvexPotential ConvexPotential::from_arrays(const Grid& g, std::vector<double> u,
                                             std::vector<double> du, std::vector<double> d2u,
                                             double a_min) {
    return ConvexPotential(g, std::move(u), std::move(du), std::move(d2u), a_min);
}

ConvexPotential ConvexPotential::quadratic(const Grid& g, double c, double shift) {
    return from_functions(
        g, [=](double x) { return 0.5 * c * (x - shift) * (x - shift); },
        [=](double x) { return c * (x - shift); }, [=](double) { return c; },
        std::min(kDefaultAmin, c));
}

double ConvexPotential::inverse_grad(double y) const {
    auto it = std::upper_bound(du_.begin(), du_.end(), y);
    std::size_t j = static_cast<std::size_t>(it - du_.begin());
    // linear extrapolation beyond the range of u'
    j = std::clamp<std::size_t>(j, 1, du_.size() - 1);
    const double t = (y - du_[j - 1]) / (du_[j] - du_[j - 1]);
    return grid_.node(j - 1) + t * grid_.spacing();
}

double ConvexPotential::min_hessian() const { return *std::min_element(d2u_.begin(), d2u_.end()); }
double ConvexPotential::max_hessian() const { return *std::max_element(d2u_.begin(), d2u_.end()); }

HessianBoundsReport hessian_bounds(const ConvexPotential& u, double t) {
    return {u.min_hessian(), u.max_hessian(), t, t};
}

void HessianBoundsReport::absorb(const ConvexPotential& u, double t) {
    a_min_observed = std::min(a_min_observed, u.min_hessian());
    b_max_observed = std::max(b_max_observed, u.max_hessian());
    t_begin = std::min(t_begin, t);
    t_end = std::max(t_end, t);
}

QuantileFunction::QuantileFunction(const GridDensity& d)
    : grid_(d.grid()), cdf_(cdf_values(d)), surv_(survival_values(d)) {}

double QuantileFunction::lower(double p) const {
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
    const auto i = static_cast<std::size_t>(it - cdf_.begin());
    if (i == 0) return grid_.lower();
    if (i >= cdf_.size()) return grid_.upper();
    const double span = cdf_[i] - cdf_[i - 1];
    const double t = span > 0.0 ? (p - cdf_[i - 1]) / span : 1.0;
    return grid_.node(i - 1) + t * grid_.spacing();
}

double QuantileFunction::upper(double s) const {
    // surv_ is nonincreasing; find the cell with surv_[j] >= s > surv_[j+1]
    auto it = std::lower_bound(surv_.begin(), surv_.end(), s, [](double a, double b) { return a > b; });
    auto j = static_cast<std::size_t>(it - surv_.begin());
    if (j >= surv_.size()) return grid_.upper();
    if (surv_[j] == s || j == 0) return grid_.node(j);
    const double span = surv_[j - 1] - surv_[j];
    const double t = span > 0.0 ? (surv_[j - 1] - s) / span : 1.0;
    return grid_.node(j - 1) + t * grid_.spacing();
}

double QuantileFunction::operator()(double p) const { return p <= 0.5 ? lower(p) : upper(1.0 - p); }

MonotoneMap brenier_map_1d(const GridDensity& src, const GridDensity& dst) {
    const auto F = cdf_values(src);
    const auto S = survival_values(src);
    const QuantileFunction Q(dst);
    std::vector<double> T(src.size());
    for (std::size_t i = 0; i < T.size(); ++i) T[i] = F[i] <= 0.5 ? Q.lower(F[i]) : Q.upper(S[i]);
    return MonotoneMap(src.grid(), std::move(T));
}

ConvexPotential brenier_potential(const GridDensity& src, const GridDensity& dst, double a_min) {
    const auto T = brenier_map_1d(src, dst);
    const Grid& g = src.grid();
    std::vector<double> du(T.values().begin(), T.values().end());
    auto u = numerics::cumulative_trapezoid(du, g.spacing());
    const double anchor = u[g.size() / 2];
    for (double& x : u) x -= anchor;
    auto d2u = numerics::derivative(du, g.spacing());
    return ConvexPotential::from_arrays(g, std::move(u), std::move(du), std::move(d2u), a_min);
}

namespace {

double prob_node(std::size_t k) {
    return (static_cast<double>(k) + 0.5) / static_cast<double>(kQuantileNodes);
}

}  // namespace

double w2_distance(const GridDensity& a, const GridDensity& b) {
    require_same_grid(a.grid(), b.grid(), "w2_distance");
    const QuantileFunction Qa(a), Qb(b);
    double s = 0.0;
    for (std::size_t k = 0; k < kQuantileNodes; ++k) {
        const double p = prob_node(k);
        const double d = Qa(p) - Qb(p);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(kQuantileNodes));
}

double lot_distance_to_map(const GridDensity& ref, const GridDensity& a, const MonotoneMap& map) {
    require_same_grid(ref.grid(), a.grid(), "lot_distance");
    require_same_grid(ref.grid(), map.grid(), "lot_distance");
    const auto Ta = brenier_map_1d(ref, a);
    const QuantileFunction Qr(ref);
    double s = 0.0;
    for (std::size_t k = 0; k < kQuantileNodes; ++k) {
        const double y = Qr(prob_node(k));
        const double d = Ta(y) - map(y);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(kQuantileNodes));
}

double lot_distance(const GridDensity& ref, const GridDensity& a, const GridDensity& b) {
    return lot_distance_to_map(ref, a, brenier_map_1d(ref, b));
}

ConvexPotential legendre_transform(const ConvexPotential& u, const Grid& target) {
    const Grid& g = u.grid();
    const auto U = u.u();
    const auto D = u.du();
    const auto H = u.d2u();
    const double h = g.spacing();
    const std::size_t n = g.size(), m = target.size();
    std::vector<double> w(m), dw(m), d2w(m);

    std::size_t i = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const double y = target.node(j);
        const double tol = 1e-12 * (1.0 + std::abs(y));
        if (y < D[0] - tol || y > D[n - 1] + tol)
            throw RangeError("legendre target " + io::real(y) + " outside range of u'");
        while (i + 2 < n && D[i + 1] < y) ++i;

        // root of the Hermite derivative on [x_i, x_{i+1}]
        const double d0 = D[i], d1 = D[i + 1];
        const double slope = (U[i + 1] - U[i]) / h;
        const double A = -6.0 * slope + 3.0 * d0 + 3.0 * d1;
        const double B = 6.0 * slope - 4.0 * d0 - 2.0 * d1;
        const double C = d0 - y;
        double t = d1 > d0 ? (y - d0) / (d1 - d0) : 0.0;
        if (std::abs(A) > 1e-14 * (std::abs(B) + std::abs(C))) {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
                const double r1 = q / A;
                const double r2 = q != 0.0 ? C / q : r1;
                const double lin = t;
                double best = std::abs(r1 - lin) < std::abs(r2 - lin) ? r1 : r2;
                if (best >= -1e-9 && best <= 1.0 + 1e-9) t = best;
            }
        } else if (std::abs(B) > 0.0) {
            const double r = -C / B;
            if (r >= -1e-9 && r <= 1.0 + 1e-9) t = r;
        }
        t = std::clamp(t, 0.0, 1.0);
        const double x = g.node(i) + t * h;
        const double t2 = t * t, t3 = t2 * t;
        const double ux = (2 * t3 - 3 * t2 + 1) * U[i] + (t3 - 2 * t2 + t) * h * d0 +
                          (-2 * t3 + 3 * t2) * U[i + 1] + (t3 - t2) * h * d1;
        w[j] = x * y - ux;
        dw[j] = x;
        d2w[j] = 1.0 / (H[i] + t * (H[i + 1] - H[i]));
    }
    const double floor = std::min(u.a_min(), *std::min_element(d2w.begin(), d2w.end()));
    return ConvexPotential::from_arrays(target, std::move(w), std::move(dw), std::move(d2w), floor);
}

double mirror_coordinate(const ConvexPotential& u, double x) {
    if (!u.grid().contains(x)) throw DomainError("mirror coordinate outside grid");
    return u.grad(x);
}

double bregman_divergence(const ConvexPotential& u, const ConvexPotential& w, double x, double y) {
    if (!u.grid().contains(x) || !w.grid().contains(y))
        throw DomainError("bregman divergence argument outside grid");
    return u.value(x) + w.value(y) - x * y;
}

double log_det_hessian_gradient_residual(const ConvexPotential& u) {
    const auto H = u.d2u();
    const std::size_t n = H.size();
    const double h = u.grid().spacing();
    double r = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double dlog = (std::log(H[i + 1]) - std::log(H[i - 1])) / (2.0 * h);
        const double dinv = (1.0 / H[i + 1] - 1.0 / H[i - 1]) / (2.0 * h);
        r = std::max(r, std::abs(dlog / H[i] + dinv));
    }
    return r;
}

double change_of_measure_residual(const GridDensity& a, const ConvexPotential& phi,
                                  const Grid& target) {
    require_same_grid(a.grid(), phi.grid(), "change_of_measure_residual");
    const auto push = pushforward_monotone(a, phi.du(), target);
    std::vector<double> b(target.size());
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = -std::log(push[j]);
    const auto ynodes = target.nodes();
    const Grid& g = a.grid();
    double r = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i) {
        const double y = phi.du()[i];
        if (!target.contains(y)) continue;
        const double lhs = numerics::interp_cubic_sorted(ynodes, b, y);
        r = std::max(r, std::abs(lhs + std::log(a[i]) - std::log(phi.d2u()[i])));
    }
    return r;
}

void write_csv(std::ostream& os, const ConvexPotential& u) {
    io::write_header(os, {"x", "u", "du", "d2u"});
    for (std::size_t i = 0; i < u.grid().size(); ++i)
        io::write_row(os, {u.grid().node(i), u.u()[i], u.du()[i], u.d2u()[i]});
}

}  // namespace sinkflow

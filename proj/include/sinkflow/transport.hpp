#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sinkflow/grid.hpp"
#include "sinkflow/measures.hpp"

namespace sinkflow {

class MonotoneMap {
public:
    MonotoneMap(Grid grid, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator()(double x) const { return numerics::interp_linear(grid_, values_, x); }

private:
    Grid grid_;
    std::vector<double> values_;
};

inline constexpr double kDefaultAmin = 1e-3;

class ConvexPotential {
public:
    static ConvexPotential from_functions(const Grid& grid, const std::function<double(double)>& u,
                                          const std::function<double(double)>& du,
                                          const std::function<double(double)>& d2u,
                                          double a_min = kDefaultAmin);
    // derivatives by finite differences
    static ConvexPotential from_values(const Grid& grid, std::vector<double> u,
                                       double a_min = kDefaultAmin);
    static ConvexPotential from_arrays(const Grid& grid, std::vector<double> u,
                                       std::vector<double> du, std::vector<double> d2u,
                                       double a_min = kDefaultAmin);
    // c/2 (x - shift)^2
    static ConvexPotential quadratic(const Grid& grid, double curvature, double shift = 0.0);

    const Grid& grid() const { return grid_; }
    std::span<const double> u() const { return u_; }
    std::span<const double> du() const { return du_; }
    std::span<const double> d2u() const { return d2u_; }
    double a_min() const { return a_min_; }

    double value(double x) const { return numerics::interp_hermite(grid_, u_, du_, x); }
    double grad(double x) const { return numerics::interp_linear(grid_, du_, x); }
    double hess(double x) const { return numerics::interp_linear(grid_, d2u_, x); }
    // x with u'(x) = y by monotone search and linear interpolation of du,
    // extrapolated linearly outside the range of u'
    double inverse_grad(double y) const;

    double min_hessian() const;
    double max_hessian() const;

private:
    ConvexPotential(Grid grid, std::vector<double> u, std::vector<double> du,
                    std::vector<double> d2u, double a_min);

    Grid grid_;
    std::vector<double> u_, du_, d2u_;
    double a_min_;
};

struct HessianBoundsReport {
    double a_min_observed;
    double b_max_observed;
    double t_begin;
    double t_end;

    void absorb(const ConvexPotential& u, double t);
};

HessianBoundsReport hessian_bounds(const ConvexPotential& u, double t);

MonotoneMap brenier_map_1d(const GridDensity& src, const GridDensity& dst);
// convex u with u' the Brenier map, u anchored to 0 at the grid midpoint
ConvexPotential brenier_potential(const GridDensity& src, const GridDensity& dst,
                                  double a_min = kDefaultAmin);

// quantile function using the CDF below the median and the survival function above it
class QuantileFunction {
public:
    explicit QuantileFunction(const GridDensity& d);
    double operator()(double p) const;
    // inverse of the survival function: x with 1 - F(x) = s
    double upper(double s) const;
    double lower(double p) const;

private:
    Grid grid_;
    std::vector<double> cdf_, surv_;
};

inline constexpr std::size_t kQuantileNodes = 1024;

double w2_distance(const GridDensity& a, const GridDensity& b);
double lot_distance(const GridDensity& ref, const GridDensity& a, const GridDensity& b);
// LOT distance between a and the measure map_# ref, given the candidate map on ref's grid
double lot_distance_to_map(const GridDensity& ref, const GridDensity& a, const MonotoneMap& map);

ConvexPotential legendre_transform(const ConvexPotential& u, const Grid& target);
double mirror_coordinate(const ConvexPotential& u, double x);
double bregman_divergence(const ConvexPotential& u, const ConvexPotential& w, double x, double y);
double log_det_hessian_gradient_residual(const ConvexPotential& u);
// sup over the central 80% of source nodes of |b(phi'(x)) - a(x) - log phi''(x)|,
// where exp(-b) is the pushforward of exp(-a) by phi' onto `target`
double change_of_measure_residual(const GridDensity& a, const ConvexPotential& phi,
                                  const Grid& target);

void write_csv(std::ostream& os, const ConvexPotential& u);

}  // namespace sinkflow

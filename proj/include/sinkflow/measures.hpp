#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sinkflow/errors.hpp"
#include "sinkflow/grid.hpp"

namespace sinkflow {

// Density proportional to exp(-f); log_normalizer = log of the integral of exp(-f).
struct DensitySpec {
    std::function<double(double)> f;
    std::function<double(double)> grad;
    std::function<double(double)> hess;
    double log_normalizer = 0.0;

    double log_density(double x) const { return -f(x) - log_normalizer; }
};

struct GaussianMeasure {
    double mean;
    double variance;

    GaussianMeasure(double m, double v);
    DensitySpec spec() const;
    double sd() const;
};

DensitySpec uniform_spec(double lower, double upper);

class GridDensity {
public:
    // rescales `values` to unit trapezoid mass; throws NonPositiveError on values <= 0
    static GridDensity normalized(const Grid& grid, std::vector<double> values);
    // from log-density values, shifted before exponentiation
    static GridDensity from_log(const Grid& grid, std::span<const double> log_values);

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double mean() const;
    double variance() const;
    // log of the normalization factor applied at construction
    double renormalization() const { return renorm_; }

private:
    GridDensity(Grid grid, std::vector<double> values, double renorm)
        : grid_(grid), values_(std::move(values)), renorm_(renorm) {}

    Grid grid_;
    std::vector<double> values_;
    double renorm_;
};

GridDensity discretize(const DensitySpec& spec, const Grid& grid);
std::vector<double> cdf_values(const GridDensity& d);
// survival function 1 - F accumulated from the right, accurate in the upper tail
std::vector<double> survival_values(const GridDensity& d);
double quantile(const GridDensity& d, double p);
double kl_divergence(const GridDensity& p, const GridDensity& q);
double second_moment(const GridDensity& d);
// density of T_# d on `target`; `map_values` must be strictly increasing
GridDensity pushforward_monotone(const GridDensity& d, std::span<const double> map_values,
                                 const Grid& target);
GridDensity pushforward_monotone(const GridDensity& d, std::span<const double> map_values);
std::vector<double> sample(const GridDensity& d, std::size_t count, std::uint64_t seed);

// sup-norm distance between densities on one grid
double sup_distance(const GridDensity& a, const GridDensity& b);
// Kolmogorov distance between a sample and a grid density's piecewise-linear CDF
double ks_distance(std::span<const double> sample, const GridDensity& d);

void write_csv(std::ostream& os, const GridDensity& d);

}  // namespace sinkflow

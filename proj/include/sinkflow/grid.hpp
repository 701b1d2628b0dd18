#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sinkflow {

class Grid {
public:
    Grid(double lower, double upper, std::size_t n);

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    std::size_t size() const { return n_; }
    double spacing() const { return h_; }
    double node(std::size_t i) const { return lower_ + static_cast<double>(i) * h_; }
    std::vector<double> nodes() const;
    // trapezoid weights: h/2 at the ends, h inside
    std::vector<double> weights() const;
    bool contains(double x) const { return x >= lower_ && x <= upper_; }

    // first and one-past-last index of the central `fraction` of nodes
    std::size_t interior_begin(double fraction = 0.8) const;
    std::size_t interior_end(double fraction = 0.8) const;

    bool operator==(const Grid& o) const {
        return lower_ == o.lower_ && upper_ == o.upper_ && n_ == o.n_;
    }

private:
    double lower_;
    double upper_;
    std::size_t n_;
    double h_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* where);

namespace numerics {

double trapezoid(std::span<const double> values, double h);
std::vector<double> cumulative_trapezoid(std::span<const double> values, double h);

// second-order differences: central inside, one-sided at the ends
std::vector<double> derivative(std::span<const double> values, double h);
std::vector<double> second_derivative(std::span<const double> values, double h);

// piecewise-linear interpolation of node values; clamps outside the grid
double interp_linear(const Grid& g, std::span<const double> values, double x);
// cubic Hermite interpolation from values and slopes
double interp_hermite(const Grid& g, std::span<const double> values, std::span<const double> slopes,
                      double x);

// four-point Lagrange interpolation on sorted, possibly nonuniform abscissae
double interp_cubic_sorted(std::span<const double> xs, std::span<const double> ys, double x);

double logsumexp(std::span<const double> a);

double mean(std::span<const double> x);
double variance(std::span<const double> x);

// least-squares slope of log(y) on log(x)
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace numerics

}  // namespace sinkflow

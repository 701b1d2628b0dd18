#pragma once

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "sinkflow/measures.hpp"

namespace testing {

inline sinkflow::GridDensity gauss(const sinkflow::Grid& g, double m, double v) {
    return sinkflow::discretize(sinkflow::GaussianMeasure(m, v).spec(), g);
}

inline double normal_pdf(double x, double m, double v) {
    return boost::math::pdf(boost::math::normal(m, std::sqrt(v)), x);
}

inline double normal_quantile(double p, double m = 0.0, double sd = 1.0) {
    return boost::math::quantile(boost::math::normal(m, sd), p);
}

inline double normal_cdf(double x, double m = 0.0, double sd = 1.0) {
    return boost::math::cdf(boost::math::normal(m, sd), x);
}

inline double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testing

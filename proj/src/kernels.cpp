#include "sinkflow/kernels.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

#include <omp.h>

#include "sinkflow/errors.hpp"

namespace sinkflow::kernels {

namespace {

[[gnu::noinline]] double row(std::span<const double> a, std::span<const double> c, double bj,
                             double eps) {
    const std::size_t n = a.size();
    const double s = bj / eps;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = a[i] * s + c[i];
        if (t > m) m = t;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(a[i] * s + c[i] - m);
    return eps * (m + std::log(acc));
}

void check(std::span<const double> a, std::span<const double> c, std::span<const double> b,
           std::span<double> out, double eps) {
    if (a.size() != c.size() || b.size() != out.size())
        throw DomainError("log_transform: size mismatch");
    if (!(eps > 0.0)) throw DomainError("log_transform: eps must be positive");
    for (double x : c)
        if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
            throw NumericOverflow("log_transform: non-finite input");
}

}  // namespace

void log_transform_serial(std::span<const double> a, std::span<const double> c,
                          std::span<const double> b, double eps, std::span<double> out) {
    check(a, c, b, out, eps);
    for (std::size_t j = 0; j < b.size(); ++j) out[j] = row(a, c, b[j], eps);
}

void log_transform_omp(std::span<const double> a, std::span<const double> c,
                       std::span<const double> b, double eps, std::span<double> out) {
    check(a, c, b, out, eps);
    const auto m = static_cast<std::ptrdiff_t>(b.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < m; ++j) out[j] = row(a, c, b[j], eps);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace sinkflow::kernels

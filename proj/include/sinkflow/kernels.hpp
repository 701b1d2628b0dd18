#pragma once

#include <span>

namespace sinkflow::kernels {

enum class Backend { Serial, OpenMP };

// out[j] = eps * log sum_i exp(a[i] * b[j] / eps + c[i])
// Every output row is reduced in index order, so both backends agree bit for bit.
void log_transform_serial(std::span<const double> a, std::span<const double> c,
                          std::span<const double> b, double eps, std::span<double> out);
void log_transform_omp(std::span<const double> a, std::span<const double> c,
                       std::span<const double> b, double eps, std::span<double> out);

inline void log_transform(Backend be, std::span<const double> a, std::span<const double> c,
                          std::span<const double> b, double eps, std::span<double> out) {
    if (be == Backend::OpenMP)
        log_transform_omp(a, c, b, eps, out);
    else
        log_transform_serial(a, c, b, eps, out);
}

int max_threads();

}  // namespace sinkflow::kernels

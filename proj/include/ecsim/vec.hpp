#pragma once

// Helpers for small d-vectors stored flat in larger buffers.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ecsim {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

inline void add_to(std::span<double> acc, std::span<const double> v, double scale = 1.0) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

// view into row i of a flat row-major [n x d] buffer
inline std::span<double> row(std::vector<double>& buf, int i, int d) {
    return std::span<double>(buf.data() + std::size_t(i) * d, std::size_t(d));
}

inline std::span<const double> row(const std::vector<double>& buf, int i, int d) {
    return std::span<const double>(buf.data() + std::size_t(i) * d, std::size_t(d));
}

} // namespace ecsim

#pragma once

// Uniform cell-centered grids over configuration space (d <= 3) plus the
// finite-difference helpers shared by the coarse-graining and evolution
// code. Midpoint sums are the quadrature everywhere; for smooth fields
// that decay (or wrap) at the boundary they are effectively spectral.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ecsim/error.hpp"

namespace ecsim {

enum class BoundaryMode { Periodic, Walls };

struct Grid {
    int d = 1;
    std::array<int, 3> shape{1, 1, 1};
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};

    static Grid line(int n, double lo_, double hi_) {
        Grid g;
        g.d = 1;
        g.shape = {n, 1, 1};
        g.lo = {lo_, 0.0, 0.0};
        g.hi = {hi_, 0.0, 0.0};
        g.validate();
        return g;
    }

    void validate() const {
        if (d < 1 || d > 3) throw Error(ErrorKind::InvalidConfig, "grid dimension must be 1..3");
        for (int a = 0; a < d; ++a) {
            if (shape[a] < 2) throw Error(ErrorKind::InvalidConfig, "grid axis too small");
            if (!(hi[a] > lo[a])) throw Error(ErrorKind::InvalidConfig, "grid extent empty");
        }
    }

    double h(int axis) const { return (hi[axis] - lo[axis]) / shape[axis]; }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= h(a);
        return v;
    }

    int size() const {
        int n = 1;
        for (int a = 0; a < d; ++a) n *= shape[a];
        return n;
    }

    // cell centers
    double coord(int axis, int idx) const { return lo[axis] + (idx + 0.5) * h(axis); }

    bool contains(std::span<const double> pt) const {
        for (int a = 0; a < d; ++a)
            if (pt[a] < lo[a] || pt[a] >= hi[a]) return false;
        return true;
    }

    int cell_of(int axis, double x) const {
        int i = int(std::floor((x - lo[axis]) / h(axis)));
        if (i < 0) i = 0;
        if (i >= shape[axis]) i = shape[axis] - 1;
        return i;
    }

    int stride(int axis) const {
        int s = 1;
        for (int a = 0; a < axis; ++a) s *= shape[a];
        return s;
    }
};

inline double integrate(const Grid& g, std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s * g.cell_volume();
}

// --- 1-D stencils ------------------------------------------------------

namespace fd {

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

// reflect across the cell-centered wall: -1 -> 0, n -> n-1
inline int clampi(int i, int n) { return i < 0 ? -i - 1 : (i >= n ? 2 * n - 1 - i : i); }

inline double at(std::span<const double> f, int i, BoundaryMode bc) {
    const int n = int(f.size());
    return f[bc == BoundaryMode::Periodic ? wrap(i, n) : clampi(i, n)];
}

// second-order centered first derivative
inline void deriv1_c2(std::span<const double> f, double h, BoundaryMode bc,
                      std::span<double> out) {
    const int n = int(f.size());
    for (int i = 0; i < n; ++i)
        out[i] = (at(f, i + 1, bc) - at(f, i - 1, bc)) / (2.0 * h);
}

// fourth-order centered first derivative
inline void deriv1_c4(std::span<const double> f, double h, BoundaryMode bc,
                      std::span<double> out) {
    const int n = int(f.size());
    for (int i = 0; i < n; ++i)
        out[i] = (-at(f, i + 2, bc) + 8.0 * at(f, i + 1, bc) - 8.0 * at(f, i - 1, bc) +
                  at(f, i - 2, bc)) /
                 (12.0 * h);
}

inline void deriv2_c2(std::span<const double> f, double h, BoundaryMode bc,
                      std::span<double> out) {
    const int n = int(f.size());
    for (int i = 0; i < n; ++i)
        out[i] = (at(f, i + 1, bc) - 2.0 * f[i] + at(f, i - 1, bc)) / (h * h);
}

inline void deriv2_c4(std::span<const double> f, double h, BoundaryMode bc,
                      std::span<double> out) {
    const int n = int(f.size());
    for (int i = 0; i < n; ++i)
        out[i] = (-at(f, i + 2, bc) + 16.0 * at(f, i + 1, bc) - 30.0 * f[i] +
                  16.0 * at(f, i - 1, bc) - at(f, i - 2, bc)) /
                 (12.0 * h * h);
}

} // namespace fd

// --- general-d per-axis stencils on flat fields -------------------------

// gradient magnitude squared, 4th order per axis
std::vector<double> grad_norm2(const Grid& g, std::span<const double> f, BoundaryMode bc);

// Laplacian (sum of per-axis second derivatives), 4th order per axis
std::vector<double> laplacian(const Grid& g, std::span<const double> f, BoundaryMode bc);

// 2nd-order variants for stencil-error estimation
std::vector<double> grad_norm2_c2(const Grid& g, std::span<const double> f, BoundaryMode bc);

} // namespace ecsim

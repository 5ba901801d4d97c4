#include "ecsim/grid.hpp"

namespace ecsim {

namespace {

template <typename Stencil>
void apply_axis(const Grid& g, std::span<const double> f, int axis, Stencil stencil,
                std::vector<double>& out) {
    const int n = g.shape[axis];
    const int stride = g.stride(axis);
    const int total = g.size();
    std::vector<double> line(n), dline(n);
    for (int base = 0; base < total; ++base) {
        if ((base / stride) % n != 0) continue; // not the start of a line
        for (int i = 0; i < n; ++i) line[i] = f[base + i * stride];
        stencil(line, dline);
        for (int i = 0; i < n; ++i) out[base + i * stride] += dline[i];
    }
}

} // namespace

std::vector<double> grad_norm2(const Grid& g, std::span<const double> f, BoundaryMode bc) {
    std::vector<double> out(g.size(), 0.0);
    std::vector<double> comp(g.size(), 0.0);
    for (int a = 0; a < g.d; ++a) {
        std::fill(comp.begin(), comp.end(), 0.0);
        double h = g.h(a);
        apply_axis(g, f, a,
                   [&](std::span<const double> line, std::span<double> dline) {
                       fd::deriv1_c4(line, h, bc, dline);
                   },
                   comp);
        for (int i = 0; i < g.size(); ++i) out[i] += comp[i] * comp[i];
    }
    return out;
}

std::vector<double> grad_norm2_c2(const Grid& g, std::span<const double> f, BoundaryMode bc) {
    std::vector<double> out(g.size(), 0.0);
    std::vector<double> comp(g.size(), 0.0);
    for (int a = 0; a < g.d; ++a) {
        std::fill(comp.begin(), comp.end(), 0.0);
        double h = g.h(a);
        apply_axis(g, f, a,
                   [&](std::span<const double> line, std::span<double> dline) {
                       fd::deriv1_c2(line, h, bc, dline);
                   },
                   comp);
        for (int i = 0; i < g.size(); ++i) out[i] += comp[i] * comp[i];
    }
    return out;
}

std::vector<double> laplacian(const Grid& g, std::span<const double> f, BoundaryMode bc) {
    std::vector<double> out(g.size(), 0.0);
    for (int a = 0; a < g.d; ++a) {
        double h = g.h(a);
        apply_axis(g, f, a,
                   [&](std::span<const double> line, std::span<double> dline) {
                       fd::deriv2_c4(line, h, bc, dline);
                   },
                   out);
    }
    return out;
}

} // namespace ecsim

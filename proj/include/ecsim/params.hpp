#pragma once

#include <cmath>

#include "ecsim/error.hpp"

namespace ecsim {

// Couplings of H = g*T + g'*U plus the constants tying them to quantum
// mechanics. [g] = time/mass; g'/g^2 = hbar^2 Z_V / (8 m) in matched mode.
struct HamiltonianParams {
    double g = 1.0;
    double g_prime = 0.0;
    double m = 1.0;
    double hbar = 1.0;
    int n_pre = 1;
    double Z_V = 1.0;

    static HamiltonianParams quantum_matched(double g, double m, double hbar,
                                             double Z_V, int n_pre) {
        if (g <= 0.0 || m <= 0.0 || hbar < 0.0)
            throw Error(ErrorKind::InvalidConfig, "need g > 0, m > 0, hbar >= 0");
        HamiltonianParams p;
        p.g = g;
        p.m = m;
        p.hbar = hbar;
        p.Z_V = Z_V;
        p.n_pre = n_pre;
        p.g_prime = g * g * hbar * hbar * Z_V / (8.0 * m);
        return p;
    }

    bool quantum_matched_consistent(double rel_tol = 1e-12) const {
        double want = g * g * hbar * hbar * Z_V / (8.0 * m);
        double scale = std::max(std::abs(want), std::abs(g_prime));
        return scale == 0.0 ? true : std::abs(g_prime - want) <= rel_tol * scale;
    }

    // g = 0 is allowed for plain energy evaluation; operations that divide
    // by g (the stationary relations) check positivity themselves
    void validate() const {
        if (g < 0.0) throw Error(ErrorKind::InvalidConfig, "g must be non-negative");
        if (m <= 0.0) throw Error(ErrorKind::InvalidConfig, "m must be positive");
        if (hbar < 0.0) throw Error(ErrorKind::InvalidConfig, "hbar must be non-negative");
        if (n_pre < 1) throw Error(ErrorKind::InvalidConfig, "n_pre must be >= 1");
    }

    void require_positive_g() const {
        validate();
        if (g <= 0.0)
            throw Error(ErrorKind::InvalidConfig, "this operation requires g > 0");
    }
};

} // namespace ecsim

#pragma once

// Emergent positions: transverse/longitudinal splits of link momenta,
// the stationary-phase relation p = (z_J - z_K)/(g n_pre^2) - (g'/(g n_pre^2)) T (W_J - W_K),
// and its least-squares inverse recovering z from momenta.

#include <span>
#include <vector>

#include "ecsim/causal_set.hpp"
#include "ecsim/params.hpp"

namespace ecsim {

struct EmbeddingConfig {
    int d = 0;
    std::vector<double> z; // flat [num_events x d]

    EmbeddingConfig() = default;
    EmbeddingConfig(int d_, int num_events) : d(d_), z(std::size_t(d_) * num_events, 0.0) {}

    int num_events() const { return d == 0 ? 0 : int(z.size()) / d; }
    std::span<double> at(EventId e) { return row(z, e, d); }
    std::span<const double> at(EventId e) const { return row(z, e, d); }
};

struct Projectors {
    std::vector<double> longitudinal; // d x d row-major: p p^T / |p|^2
    std::vector<double> transverse;   // identity - longitudinal
    int d = 0;
};

// Throws DegenerateDirection when |p| <= kMomentumFloor.
Projectors projectors(std::span<const double> p);

struct MomentumSplit {
    std::vector<double> longitudinal;
    std::vector<double> transverse;
};

// Split a fluctuation dp about base momentum p into parallel/orthogonal parts.
MomentumSplit split_momentum(std::span<const double> p, std::span<const double> dp);

struct StationaryOptions {
    int order = 0;          // 0: drop the g' term; 1: one transverse correction sweep
    double sp_factor = 1.0; // 2.0 selects the stationary-phase variant with the extra 1/2
    int n_pre_power = 2;    // 1 selects the single-power denominator variant
};

struct StationaryResult {
    std::vector<double> momenta;       // flat [num_links x d]
    double fixed_point_residual = 0.0; // max |p - rhs(p)| after the sweep
};

StationaryResult stationary_momenta(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                                    const HamiltonianParams& params,
                                    const StationaryOptions& opts = {});

// Max over links of |p - m (z_J - z_K)/dt| for order-0 stationary momenta;
// zero when g = dt/(m n_pre^2).
double classical_velocity_check(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                                const HamiltonianParams& params, double dt);

struct ReconstructionOptions {
    EventId gauge_event = 0;       // pinned to z = 0 (per connected component the
                                   // lowest-index event is pinned; this one first)
    double consistency_tol = 1e-8; // max per-link residual accepted
    double cg_tol = 1e-13;
    int max_iterations = 0; // 0: auto (10 * num_events + 100)
};

struct ReconstructionResult {
    EmbeddingConfig z;
    double max_link_residual = 0.0;
    int worst_link = -1;
    std::vector<int> component; // undirected component id per event
};

// Least-squares solve of z_J - z_K = g n_pre^2 p_{K->J} over all links.
// Throws IncompatibleMomenta when loop sums conflict beyond tolerance.
ReconstructionResult reconstruct_embedding(const EnergeticCausalSet& ecs,
                                           std::span<const double> momenta,
                                           const HamiltonianParams& params,
                                           const ReconstructionOptions& opts = {});

} // namespace ecsim

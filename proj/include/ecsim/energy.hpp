#pragma once

// Kinetic energy (view change along links), acausal potential energy
// (view diversity across spacelike pairs), the Hamiltonian H = gT + g'U,
// and the effective action -sum z.P + gT + g'U.

#include <optional>
#include <utility>
#include <vector>

#include "ecsim/causal_set.hpp"
#include "ecsim/embedding.hpp"
#include "ecsim/params.hpp"

namespace ecsim {

struct EnergyReport {
    double T = 0.0;
    double U = 0.0;
    double H = 0.0;
    std::vector<std::pair<EventId, double>> per_event_surprise;
};

struct SurpriseResult {
    double value = 0.0;
    bool boundary = false; // no parents: surprise defined as 0
};

// |sum_{K in IPast(I)} D(I,K)|^2 with D at w = 0.
SurpriseResult surprise(const EnergeticCausalSet& ecs, EventId e);

// T = sum over immediate-causal pairs I|>J of |W_I - W_J|^2 at w = 0.
double kinetic_energy(const EnergeticCausalSet& ecs);

// The quadratic cross-check form sum_{I|>J} (D_I/2) |p|^2, with D_I the
// parent count of the later event (or a uniform override, typically n_pre).
double kinetic_energy_quadratic_form(const EnergeticCausalSet& ecs,
                                     std::optional<int> uniform_d = std::nullopt);

// U = sum over unordered acausal pairs of |W_I - W_J|^2 at w = 2.
// Deterministic parallel block reduction; equals the serial sum bit for bit.
double potential_energy(const EnergeticCausalSet& ecs);
double potential_energy(const EnergeticCausalSet& ecs, const CausalRelationTable& table);

EnergyReport hamiltonian(const EnergeticCausalSet& ecs, const HamiltonianParams& params);

// S_eff = -sum_I z_I . P_I + g T + g' U, with P_I the conservation residual.
// Boundary events carry no conservation constraint and are excluded from
// the first sum, so a conservation-solved history gives exactly gT + g'U.
double effective_action(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                        const HamiltonianParams& params);

} // namespace ecsim

#include "ecsim/energy.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace ecsim {

SurpriseResult surprise(const EnergeticCausalSet& ecs, EventId e) {
    ecs.check_event(e);
    SurpriseResult r;
    if (ecs.in_links(e).empty()) {
        r.boundary = true;
        return r;
    }
    View ve = view(ecs, e, 0.0);
    double sum = 0.0;
    for (int l : ecs.in_links(e)) {
        View vk = view(ecs, ecs.link(l).source, 0.0);
        sum += dist2(ve.vector, vk.vector);
    }
    r.value = sum * sum;
    return r;
}

double kinetic_energy(const EnergeticCausalSet& ecs) {
    const int d = ecs.dim();
    std::vector<double> views = all_views(ecs, 0.0);
    double t = 0.0;
    for (int l = 0; l < ecs.num_links(); ++l) {
        const auto& lk = ecs.link(l);
        t += dist2(row(views, lk.target, d), row(views, lk.source, d));
    }
    return t;
}

double kinetic_energy_quadratic_form(const EnergeticCausalSet& ecs,
                                     std::optional<int> uniform_d) {
    double t = 0.0;
    for (int l = 0; l < ecs.num_links(); ++l) {
        const auto& lk = ecs.link(l);
        double d_i = uniform_d ? double(*uniform_d) : double(ecs.in_links(lk.target).size());
        t += 0.5 * d_i * norm2(ecs.momentum(l));
    }
    return t;
}

namespace {

// Fixed block count and a fixed pairwise reduction tree keep the result
// bit-identical for any thread count.
constexpr int kPairBlocks = 64;

double acausal_block_sum(const CausalRelationTable& table, const std::vector<double>& views,
                         int d, int n, int begin, int end) {
    double s = 0.0;
    for (int i = begin; i < end; ++i) {
        auto wi = row(views, i, d);
        for (int j = i + 1; j < n; ++j)
            if (table.acausal(i, j)) s += dist2(wi, row(views, j, d));
    }
    return s;
}

double tree_reduce(std::vector<double> parts) {
    // pairwise tree: (p0+p1), (p2+p3), ... until one value remains
    while (parts.size() > 1) {
        std::vector<double> next;
        next.reserve((parts.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(parts[i] + parts[i + 1]);
        if (parts.size() % 2) next.push_back(parts.back());
        parts = std::move(next);
    }
    return parts.empty() ? 0.0 : parts[0];
}

} // namespace

double potential_energy(const EnergeticCausalSet& ecs, const CausalRelationTable& table) {
    const int n = ecs.num_events();
    const int d = ecs.dim();
    std::vector<double> views = all_views(ecs, 2.0);

    std::vector<double> parts(kPairBlocks, 0.0);
    const int block = (n + kPairBlocks - 1) / kPairBlocks;
    auto run_blocks = [&](int first, int stride) {
        for (int b = first; b < kPairBlocks; b += stride) {
            int begin = std::min(n, b * block);
            int end = std::min(n, (b + 1) * block);
            parts[b] = acausal_block_sum(table, views, d, n, begin, end);
        }
    };
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    int workers = int(std::min<unsigned>(hw, kPairBlocks));
    if (workers > 1 && n > 256) {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(run_blocks, t, workers);
        for (auto& th : pool) th.join();
    } else {
        run_blocks(0, 1);
    }
    return tree_reduce(std::move(parts));
}

double potential_energy(const EnergeticCausalSet& ecs) {
    return potential_energy(ecs, causal_relations(ecs));
}

EnergyReport hamiltonian(const EnergeticCausalSet& ecs, const HamiltonianParams& params) {
    params.validate();
    EnergyReport r;
    r.T = kinetic_energy(ecs);
    r.U = potential_energy(ecs);
    r.H = params.g * r.T + params.g_prime * r.U;
    r.per_event_surprise.reserve(ecs.num_events());
    for (EventId e = 0; e < ecs.num_events(); ++e)
        r.per_event_surprise.emplace_back(e, surprise(ecs, e).value);
    return r;
}

double effective_action(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                        const HamiltonianParams& params) {
    if (z.d != ecs.dim() || z.num_events() != ecs.num_events())
        throw Error(ErrorKind::ShapeMismatch, "embedding does not match causal set");
    double constraint = 0.0;
    for (EventId e = 0; e < ecs.num_events(); ++e) {
        if (!ecs.is_interior(e)) continue;
        ConservationResidual r = conservation_residual(ecs, e);
        constraint += dot(z.at(e), r.value);
    }
    return -constraint + params.g * kinetic_energy(ecs) + params.g_prime * potential_energy(ecs);
}

} // namespace ecsim

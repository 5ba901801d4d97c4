#include "ecsim/causal_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ecsim {

std::optional<int> EnergeticCausalSet::find_link(EventId source, EventId target) const {
    check_event(source);
    check_event(target);
    for (int l : out_links_[source])
        if (links_[l].target == target) return l;
    return std::nullopt;
}

void EnergeticCausalSet::add_link(EventId source, EventId target, std::span<const double> p) {
    if (int(p.size()) != d_)
        throw Error(ErrorKind::ShapeMismatch, "link momentum dimension mismatch");
    check_event(source);
    check_event(target);
    links_.push_back({source, target});
    momenta_.insert(momenta_.end(), p.begin(), p.end());
}

void EnergeticCausalSet::finalize(int n_pre_bound) {
    n_pre_ = n_pre_bound;
    in_links_.assign(num_events_, {});
    out_links_.assign(num_events_, {});
    for (int l = 0; l < int(links_.size()); ++l) {
        const auto& lk = links_[l];
        out_links_[lk.source].push_back(l);
        in_links_[lk.target].push_back(l);
    }
    for (EventId e = 0; e < num_events_; ++e) {
        if (int(in_links_[e].size()) > n_pre_)
            throw Error(ErrorKind::InvalidConfig,
                        "event " + std::to_string(e) + " exceeds n_pre parents");
        // parallel links would double-count pair terms
        for (std::size_t a = 0; a + 1 < out_links_[e].size(); ++a)
            for (std::size_t b = a + 1; b < out_links_[e].size(); ++b)
                if (links_[out_links_[e][a]].target == links_[out_links_[e][b]].target)
                    throw Error(ErrorKind::MalformedHistory, "parallel causal links");
    }
    n_c_ = 0;
    for (EventId e = 0; e < num_events_; ++e)
        n_c_ = std::max(n_c_, int(out_links_[e].size()));

    // Kahn's algorithm: topological order, cycle check.
    topo_.clear();
    topo_.reserve(num_events_);
    std::vector<int> indeg(num_events_);
    for (EventId e = 0; e < num_events_; ++e) indeg[e] = int(in_links_[e].size());
    std::vector<EventId> queue;
    for (EventId e = 0; e < num_events_; ++e)
        if (indeg[e] == 0) queue.push_back(e);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        EventId e = queue[head];
        topo_.push_back(e);
        for (int l : out_links_[e])
            if (--indeg[links_[l].target] == 0) queue.push_back(links_[l].target);
    }
    if (int(topo_.size()) != num_events_)
        throw Error(ErrorKind::MalformedHistory, "causal links contain a cycle");
}

EnergeticCausalSet generate_layered(const LayeredConfig& cfg) {
    if (cfg.layers < 2)
        throw Error(ErrorKind::InvalidConfig, "need at least 2 layers");
    if (cfg.events_per_layer < 1)
        throw Error(ErrorKind::InvalidConfig, "need at least 1 event per layer");
    if (cfg.n_pre < 1)
        throw Error(ErrorKind::InvalidConfig, "n_pre must be >= 1");
    if (cfg.n_pre > cfg.events_per_layer)
        throw Error(ErrorKind::InvalidConfig,
                    "n_pre exceeds events available in the previous layer");
    if (cfg.d < 1) throw Error(ErrorKind::InvalidConfig, "dimension must be >= 1");

    const int n = cfg.layers * cfg.events_per_layer;
    EnergeticCausalSet ecs(cfg.d, n);

    Rng rng(cfg.seed);
    Rng parent_rng = rng.derive("layered/parents");
    Rng momentum_rng = rng.derive("layered/momenta");

    std::vector<double> p(cfg.d);
    std::vector<int> pool(cfg.events_per_layer);
    for (int layer = 1; layer < cfg.layers; ++layer) {
        const int prev_base = (layer - 1) * cfg.events_per_layer;
        for (int k = 0; k < cfg.events_per_layer; ++k) {
            const EventId child = EventId(layer * cfg.events_per_layer + k);
            // draw n_pre distinct parents from the previous layer
            std::iota(pool.begin(), pool.end(), 0);
            for (int pick = 0; pick < cfg.n_pre; ++pick) {
                int j = pick + int(parent_rng.uniform_int(std::uint64_t(cfg.events_per_layer - pick)));
                std::swap(pool[pick], pool[j]);
                const EventId parent = EventId(prev_base + pool[pick]);
                cfg.sampler.sample(momentum_rng, p);
                ecs.add_link(parent, child, p);
            }
        }
    }
    ecs.finalize(cfg.n_pre);
    return solve_conservation(std::move(ecs));
}

EnergeticCausalSet solve_conservation(EnergeticCausalSet ecs) {
    const int d = ecs.dim();
    std::vector<double> total(d);
    for (EventId e : ecs.topological_order()) {
        const auto& in = ecs.in_links(e);
        const auto& out = ecs.out_links(e);
        if (in.empty() || out.empty()) continue; // boundary: unconstrained
        std::fill(total.begin(), total.end(), 0.0);
        for (int l : in) add_to(total, ecs.momentum(l));
        if (norm(total) < kMomentumFloor)
            throw Error(ErrorKind::DegenerateEvent,
                        "event " + std::to_string(e) +
                            " has children but (near) zero incoming momentum");
        const double inv = 1.0 / double(out.size());
        for (int l : out) {
            auto p = ecs.momentum(l);
            for (int c = 0; c < d; ++c) p[c] = total[c] * inv;
        }
    }
    return ecs;
}

ConservationResidual conservation_residual(const EnergeticCausalSet& ecs, EventId e) {
    ecs.check_event(e);
    ConservationResidual r;
    r.value.assign(ecs.dim(), 0.0);
    r.boundary = ecs.is_boundary(e);
    for (int l : ecs.in_links(e)) add_to(r.value, ecs.momentum(l), 1.0);
    for (int l : ecs.out_links(e)) add_to(r.value, ecs.momentum(l), -1.0);
    return r;
}

double max_interior_residual(const EnergeticCausalSet& ecs) {
    double worst = 0.0;
    for (EventId e = 0; e < ecs.num_events(); ++e) {
        if (!ecs.is_interior(e)) continue;
        worst = std::max(worst, norm(conservation_residual(ecs, e).value));
    }
    return worst;
}

View view(const EnergeticCausalSet& ecs, EventId e, double w) {
    ecs.check_event(e);
    View v;
    v.event = e;
    v.weight = w;
    v.vector.assign(ecs.dim(), 0.0);
    for (int l : ecs.in_links(e)) {
        auto p = ecs.momentum(l);
        if (w == 0.0) {
            add_to(v.vector, p);
        } else {
            double np = norm(p);
            if (np < kMomentumFloor) continue; // regularized: skip degenerate links
            add_to(v.vector, p, std::pow(np, -w));
        }
    }
    return v;
}

std::vector<double> all_views(const EnergeticCausalSet& ecs, double w) {
    const int d = ecs.dim();
    std::vector<double> views(std::size_t(ecs.num_events()) * d, 0.0);
    for (int l = 0; l < ecs.num_links(); ++l) {
        auto p = ecs.momentum(l);
        auto dst = row(views, ecs.link(l).target, d);
        if (w == 0.0) {
            add_to(dst, p);
        } else {
            double np = norm(p);
            if (np < kMomentumFloor) continue;
            add_to(dst, p, std::pow(np, -w));
        }
    }
    return views;
}

double difference(const EnergeticCausalSet& ecs, EventId i, EventId j, double w) {
    View vi = view(ecs, i, w);
    View vj = view(ecs, j, w);
    return dist2(vi.vector, vj.vector);
}

double total_variety(const EnergeticCausalSet& ecs, double w) {
    const int n = ecs.num_events();
    if (n < 2)
        throw Error(ErrorKind::UndefinedVariety, "variety needs at least two events");
    const int d = ecs.dim();
    std::vector<double> views = all_views(ecs, w);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        auto wi = row(views, i, d);
        for (int j = i + 1; j < n; ++j) sum += dist2(wi, row(views, j, d));
    }
    return 2.0 * sum / (double(n) * double(n - 1));
}

CausalRelationTable causal_relations(const EnergeticCausalSet& ecs) {
    const int n = ecs.num_events();
    CausalRelationTable table(n);
    // reverse topological order: reach(e) = union over children of {child} + reach(child)
    const auto& topo = ecs.topological_order(); // throws earlier if cyclic
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        EventId e = *it;
        for (int l : ecs.out_links(e)) {
            EventId c = ecs.link(l).target;
            table.set(e, c);
            table.merge_row(e, c);
        }
    }
    return table;
}

std::vector<std::pair<EventId, EventId>> acausal_pairs(const CausalRelationTable& table) {
    std::vector<std::pair<EventId, EventId>> out;
    const int n = table.size();
    for (EventId i = 0; i < n; ++i)
        for (EventId j = i + 1; j < n; ++j)
            if (table.acausal(i, j)) out.emplace_back(i, j);
    return out;
}

double path_additivity_check(const EnergeticCausalSet& ecs, EventId l, EventId j, EventId i) {
    auto li = ecs.find_link(l, i);
    auto lj = ecs.find_link(l, j);
    auto ji = ecs.find_link(j, i);
    if (!li || !lj || !ji)
        throw Error(ErrorKind::Lookup, "path additivity needs links L->I, L->J, J->I");
    auto p_li = ecs.momentum(*li);
    auto p_lj = ecs.momentum(*lj);
    auto p_ji = ecs.momentum(*ji);
    double s = 0.0;
    for (int c = 0; c < ecs.dim(); ++c) {
        double t = p_li[c] - (p_lj[c] + p_ji[c]);
        s += t * t;
    }
    return std::sqrt(s);
}

} // namespace ecsim

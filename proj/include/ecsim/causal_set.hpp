#pragma once

// Energetic causal sets: a DAG of events whose links carry momentum
// vectors, with momentum conserved at every interior event. Views,
// differences and variety are the derived quantities everything else
// in the pipeline is built from.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecsim/error.hpp"
#include "ecsim/rng.hpp"
#include "ecsim/vec.hpp"

namespace ecsim {

using EventId = std::int32_t;

// Links with |p| below this are excluded from density-weighted (w>0) views.
inline constexpr double kMomentumFloor = 1e-9;

struct CausalLink {
    EventId source = -1; // parent
    EventId target = -1; // child
};

struct MomentumSampler {
    enum class Kind { Gaussian, Uniform };
    Kind kind = Kind::Gaussian;
    double mean = 0.0;  // per-component mean (Gaussian)
    double sigma = 1.0; // per-component std dev (Gaussian)
    double lo = -1.0;   // per-component bounds (Uniform)
    double hi = 1.0;

    void sample(Rng& rng, std::span<double> out) const {
        for (double& x : out)
            x = (kind == Kind::Gaussian) ? rng.normal(mean, sigma) : rng.uniform(lo, hi);
    }
};

struct LayeredConfig {
    int d = 1;
    int layers = 2;
    int events_per_layer = 1;
    int n_pre = 1;
    MomentumSampler sampler;
    std::uint64_t seed = 0;
};

class EnergeticCausalSet {
  public:
    EnergeticCausalSet() = default;
    EnergeticCausalSet(int d, int num_events) : d_(d), num_events_(num_events) {}

    int dim() const { return d_; }
    int num_events() const { return num_events_; }
    int num_links() const { return int(links_.size()); }
    int n_pre() const { return n_pre_; }
    int n_c() const { return n_c_; }

    const CausalLink& link(int l) const { return links_[l]; }
    std::span<const double> momentum(int l) const { return row(momenta_, l, d_); }
    std::span<double> momentum(int l) { return row(momenta_, l, d_); }

    const std::vector<int>& in_links(EventId e) const { return in_links_[e]; }
    const std::vector<int>& out_links(EventId e) const { return out_links_[e]; }

    bool is_boundary(EventId e) const {
        return in_links_[e].empty() || out_links_[e].empty();
    }
    bool is_interior(EventId e) const { return !is_boundary(e); }

    // Link index for source->target, if present.
    std::optional<int> find_link(EventId source, EventId target) const;

    void add_link(EventId source, EventId target, std::span<const double> p);

    // Rebuilds adjacency, checks acyclicity / parallel links / degree
    // bounds, records n_c. Throws MalformedHistory or InvalidConfig.
    void finalize(int n_pre_bound);

    // Topological order (valid after finalize).
    const std::vector<EventId>& topological_order() const { return topo_; }

    void check_event(EventId e) const {
        if (e < 0 || e >= num_events_)
            throw Error(ErrorKind::Lookup, "unknown event id " + std::to_string(e));
    }

  private:
    int d_ = 0;
    int num_events_ = 0;
    int n_pre_ = 0;
    int n_c_ = 0;
    std::vector<CausalLink> links_;
    std::vector<double> momenta_; // flat [num_links x d]
    std::vector<std::vector<int>> in_links_, out_links_;
    std::vector<EventId> topo_;
};

struct ConservationResidual {
    std::vector<double> value; // sum(incoming) - sum(outgoing)
    bool boundary = false;     // event lacks parents or children; not a violation
};

// Layered generator: layer 0 events are sources; every later event draws
// exactly n_pre distinct parents from the previous layer. Momenta are
// sampled per link, then conservation is solved (equal split).
EnergeticCausalSet generate_layered(const LayeredConfig& cfg);

// Equal-split conservation: in topological order, every event with both
// parents and children redistributes its incoming total uniformly over
// its outgoing links. Afterwards all interior residuals vanish.
EnergeticCausalSet solve_conservation(EnergeticCausalSet ecs);

ConservationResidual conservation_residual(const EnergeticCausalSet& ecs, EventId e);

double max_interior_residual(const EnergeticCausalSet& ecs);

struct View {
    EventId event = -1;
    double weight = 0.0;
    std::vector<double> vector; // sum over incoming links of p/|p|^w
};

View view(const EnergeticCausalSet& ecs, EventId e, double w);

// All views at once, flat [num_events x d]. The hot path for pair sums.
std::vector<double> all_views(const EnergeticCausalSet& ecs, double w);

// D(I,J) = |W_I - W_J|^2 under the flat momentum-space metric.
double difference(const EnergeticCausalSet& ecs, EventId i, EventId j, double w);

// Mean squared view difference over unordered pairs:
// (2/(N(N-1))) * sum_{I<J} D(I,J).
double total_variety(const EnergeticCausalSet& ecs, double w);

class CausalRelationTable {
  public:
    CausalRelationTable() = default;
    CausalRelationTable(int n) : n_(n), words_((n + 63) / 64), bits_(std::size_t(n) * words_, 0) {}

    int size() const { return n_; }

    bool reaches(EventId i, EventId j) const {
        return (bits_[std::size_t(i) * words_ + std::size_t(j) / 64] >> (j % 64)) & 1u;
    }
    bool acausal(EventId i, EventId j) const {
        return i != j && !reaches(i, j) && !reaches(j, i);
    }

    void set(EventId i, EventId j) {
        bits_[std::size_t(i) * words_ + std::size_t(j) / 64] |= (std::uint64_t(1) << (j % 64));
    }
    void merge_row(EventId into, EventId from) {
        std::uint64_t* a = &bits_[std::size_t(into) * words_];
        const std::uint64_t* b = &bits_[std::size_t(from) * words_];
        for (int w = 0; w < words_; ++w) a[w] |= b[w];
    }

  private:
    int n_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Transitive closure of the link relation. Throws MalformedHistory on cycles.
CausalRelationTable causal_relations(const EnergeticCausalSet& ecs);

// All unordered pairs with no causal relation either way.
std::vector<std::pair<EventId, EventId>> acausal_pairs(const CausalRelationTable& table);

// |p_{L->I} - (p_{L->J} + p_{J->I})| for a link triangle; flat momentum
// space, so transport is trivial and addition is componentwise.
double path_additivity_check(const EnergeticCausalSet& ecs, EventId l, EventId j, EventId i);

} // namespace ecsim

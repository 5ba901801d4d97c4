#include "doctest.h"

#include <cmath>

#include "ecsim/energy.hpp"
#include "test_helpers.hpp"

using namespace ecsim;
using namespace ecsim::test;

namespace {

// disjoint copy of a causal set shifted by an id offset
EnergeticCausalSet disjoint_union(const EnergeticCausalSet& a, const EnergeticCausalSet& b) {
    EnergeticCausalSet out(a.dim(), a.num_events() + b.num_events());
    for (int l = 0; l < a.num_links(); ++l)
        out.add_link(a.link(l).source, a.link(l).target, a.momentum(l));
    for (int l = 0; l < b.num_links(); ++l)
        out.add_link(b.link(l).source + a.num_events(), b.link(l).target + a.num_events(),
                     b.momentum(l));
    out.finalize(std::max(a.n_pre(), b.n_pre()));
    return out;
}

LayeredConfig small_cfg(std::uint64_t seed) {
    LayeredConfig cfg;
    cfg.d = 2;
    cfg.layers = 4;
    cfg.events_per_layer = 8;
    cfg.n_pre = 2;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("surprise") {
    SUBCASE("view equal to each parent view gives zero") {
        // chain with constant momentum: interior event's view equals parent's
        auto ecs = make_ecs(1, 3, {{0, 1, {2.0}}, {1, 2, {2.0}}});
        CHECK(surprise(ecs, 2).value == doctest::Approx(0.0));
    }
    SUBCASE("single parent with D = 3 gives 9") {
        // W_child - W_parent = p - 0, want |p|^2 = 3
        auto ecs = make_ecs(1, 2, {{0, 1, {std::sqrt(3.0)}}});
        CHECK(surprise(ecs, 1).value == doctest::Approx(9.0));
    }
    SUBCASE("parentless events are boundary with zero surprise") {
        auto ecs = make_ecs(1, 2, {{0, 1, {1.0}}});
        auto s = surprise(ecs, 0);
        CHECK(s.boundary);
        CHECK(s.value == 0.0);
    }
    SUBCASE("random event matches a direct recomputation") {
        auto ecs = generate_layered(small_cfg(31));
        for (EventId e : {9, 17, 25}) {
            double sum = 0.0;
            for (int l = 0; l < ecs.num_links(); ++l)
                if (ecs.link(l).target == e)
                    sum += oracle_pair_diff(ecs, e, ecs.link(l).source, 0.0);
            CHECK(surprise(ecs, e).value == doctest::Approx(sum * sum).epsilon(1e-12));
        }
    }
}

TEST_CASE("kinetic energy") {
    SUBCASE("single link") {
        auto ecs = make_ecs(1, 2, {{0, 1, {2.0}}});
        CHECK(kinetic_energy(ecs) == doctest::Approx(4.0));
    }
    SUBCASE("matches brute-force pair loop on a random set") {
        auto ecs = generate_layered(small_cfg(77));
        double brute = 0.0;
        for (int l = 0; l < ecs.num_links(); ++l)
            brute += oracle_pair_diff(ecs, ecs.link(l).target, ecs.link(l).source, 0.0);
        CHECK(kinetic_energy(ecs) == doctest::Approx(brute).epsilon(1e-12));
    }
    SUBCASE("doubles over a disjoint union") {
        auto ecs = generate_layered(small_cfg(3));
        auto two = disjoint_union(ecs, ecs);
        CHECK(kinetic_energy(two) == doctest::Approx(2.0 * kinetic_energy(ecs)).epsilon(1e-12));
    }
    SUBCASE("quadratic form with uniform D") {
        auto ecs = make_ecs(1, 2, {{0, 1, {2.0}}});
        CHECK(kinetic_energy_quadratic_form(ecs) == doctest::Approx(2.0));
        CHECK(kinetic_energy_quadratic_form(ecs, 4) == doctest::Approx(8.0));
    }
    SUBCASE("invariant under global momentum rotation") {
        auto ecs = generate_layered(small_cfg(8));
        double t0 = kinetic_energy(ecs);
        double u0 = potential_energy(ecs);
        const double c = std::cos(0.7), s = std::sin(0.7);
        EnergeticCausalSet rotated(ecs.dim(), ecs.num_events());
        for (int l = 0; l < ecs.num_links(); ++l) {
            auto p = ecs.momentum(l);
            std::vector<double> q{c * p[0] - s * p[1], s * p[0] + c * p[1]};
            rotated.add_link(ecs.link(l).source, ecs.link(l).target, q);
        }
        rotated.finalize(ecs.n_pre());
        CHECK(kinetic_energy(rotated) == doctest::Approx(t0).epsilon(1e-10));
        CHECK(potential_energy(rotated) == doctest::Approx(u0).epsilon(1e-10));
    }
}

TEST_CASE("potential energy") {
    SUBCASE("totally ordered history has no acausal pairs") {
        auto ecs = make_ecs(1, 3, {{0, 1, {1.0}}, {1, 2, {1.0}}});
        CHECK(potential_energy(ecs) == 0.0);
    }
    SUBCASE("parallel chains with identical momenta cancel") {
        // two chains off one root: every acausal pair sees the same view,
        // and the root itself relates causally to everything
        auto ecs = make_ecs(1, 7,
                            {{0, 1, {1.5}},
                             {1, 2, {1.5}},
                             {2, 3, {1.5}},
                             {0, 4, {1.5}},
                             {4, 5, {1.5}},
                             {5, 6, {1.5}}});
        CHECK(!acausal_pairs(causal_relations(ecs)).empty());
        CHECK(potential_energy(ecs) == doctest::Approx(0.0));
    }
    SUBCASE("matches the brute-force loop on a random layered set") {
        LayeredConfig cfg = small_cfg(55);
        cfg.layers = 5;
        cfg.events_per_layer = 10;
        auto ecs = generate_layered(cfg);
        auto dense = oracle_closure(ecs);
        const int n = ecs.num_events();
        double brute = 0.0;
        for (EventId i = 0; i < n; ++i)
            for (EventId j = i + 1; j < n; ++j) {
                bool rel = dense[std::size_t(i) * n + j] || dense[std::size_t(j) * n + i];
                if (!rel) brute += oracle_pair_diff(ecs, i, j, 2.0);
            }
        CHECK(potential_energy(ecs) == doctest::Approx(brute).epsilon(1e-12));
    }
    SUBCASE("disjoint union grows by the cross terms") {
        auto ecs = generate_layered(small_cfg(21));
        auto two = disjoint_union(ecs, ecs);
        const int n = ecs.num_events();
        double cross = 0.0;
        for (EventId i = 0; i < n; ++i)
            for (EventId j = 0; j < n; ++j)
                cross += oracle_pair_diff(ecs, i, j, 2.0); // every (left i, right j) pair
        double expected = 2.0 * potential_energy(ecs) + cross;
        CHECK(potential_energy(two) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("hamiltonian combines linearly") {
    auto ecs = generate_layered(small_cfg(4));
    double t = kinetic_energy(ecs);
    double u = potential_energy(ecs);
    HamiltonianParams p;
    p.g = 1.0;
    p.g_prime = 0.0;
    CHECK(hamiltonian(ecs, p).H == doctest::Approx(t));
    p.g = 0.0;
    p.g_prime = 1.0;
    CHECK(hamiltonian(ecs, p).H == doctest::Approx(u));
    p.g = 2.0;
    p.g_prime = 3.0;
    auto rep = hamiltonian(ecs, p);
    CHECK(rep.H == doctest::Approx(2.0 * t + 3.0 * u));
    CHECK(rep.H == doctest::Approx(p.g * rep.T + p.g_prime * rep.U));
    CHECK(int(rep.per_event_surprise.size()) == ecs.num_events());
}

TEST_CASE("quantum-matched couplings") {
    auto p = HamiltonianParams::quantum_matched(2.0, 0.5, 1.0, 4.0, 2);
    CHECK(p.g_prime == doctest::Approx(2.0 * 2.0 * 1.0 * 4.0 / (8.0 * 0.5)));
    CHECK(p.quantum_matched_consistent());
    p.g_prime *= 1.5;
    CHECK(!p.quantum_matched_consistent());
}

TEST_CASE("effective action") {
    HamiltonianParams params;
    params.g = 2.0;
    params.g_prime = 0.5;

    SUBCASE("conservation-solved history reduces to gT + g'U") {
        auto ecs = generate_layered(small_cfg(11));
        EmbeddingConfig z(ecs.dim(), ecs.num_events());
        Rng rng(5);
        for (double& v : z.z) v = rng.uniform(-3.0, 3.0);
        double s = effective_action(ecs, z, params);
        double want = params.g * kinetic_energy(ecs) + params.g_prime * potential_energy(ecs);
        CHECK(s == doctest::Approx(want).epsilon(1e-12));

        SUBCASE("and is then translation invariant") {
            EmbeddingConfig shifted = z;
            for (int e = 0; e < ecs.num_events(); ++e) {
                shifted.at(e)[0] += 17.0;
                shifted.at(e)[1] -= 4.0;
            }
            CHECK(effective_action(ecs, shifted, params) == doctest::Approx(s).epsilon(1e-12));
        }
    }
    SUBCASE("violated interior event shifts the action by -z.P") {
        // interior event 1 with incoming (1,0) and outgoing (0,0) impossible;
        // use incoming (1,0), outgoing (0,... ) hand-built violation
        auto ecs = make_ecs(2, 3, {{0, 1, {1.0, 0.0}}, {1, 2, {0.0, 0.0}}});
        EmbeddingConfig z(2, 3);
        double base = effective_action(ecs, z, params);
        z.at(1)[0] = 3.0; // P at event 1 is (1,0)
        double shifted = effective_action(ecs, z, params);
        CHECK(base - shifted == doctest::Approx(3.0));
    }
    SUBCASE("shape mismatch") {
        auto ecs = make_ecs(2, 3, {{0, 1, {1.0, 0.0}}});
        EmbeddingConfig z(1, 3);
        CHECK_THROWS_AS((void)effective_action(ecs, z, params), Error);
    }
}

TEST_CASE("potential energy parallel reduction is bit-stable") {
    LayeredConfig cfg = small_cfg(61);
    cfg.layers = 6;
    cfg.events_per_layer = 25;
    auto ecs = generate_layered(cfg);
    auto table = causal_relations(ecs);
    double u1 = potential_energy(ecs, table);
    double u2 = potential_energy(ecs, table);
    CHECK(u1 == u2);
}

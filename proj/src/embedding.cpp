#include "ecsim/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecsim {

Projectors projectors(std::span<const double> p) {
    const int d = int(p.size());
    double n2 = norm2(p);
    if (std::sqrt(n2) <= kMomentumFloor)
        throw Error(ErrorKind::DegenerateDirection, "projector undefined for |p| ~ 0");
    Projectors pr;
    pr.d = d;
    pr.longitudinal.assign(std::size_t(d) * d, 0.0);
    pr.transverse.assign(std::size_t(d) * d, 0.0);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double l = p[a] * p[b] / n2;
            pr.longitudinal[std::size_t(a) * d + b] = l;
            pr.transverse[std::size_t(a) * d + b] = (a == b ? 1.0 : 0.0) - l;
        }
    return pr;
}

MomentumSplit split_momentum(std::span<const double> p, std::span<const double> dp) {
    const int d = int(p.size());
    if (int(dp.size()) != d)
        throw Error(ErrorKind::ShapeMismatch, "fluctuation dimension mismatch");
    double n2 = norm2(p);
    if (std::sqrt(n2) <= kMomentumFloor)
        throw Error(ErrorKind::DegenerateDirection, "split undefined for |p| ~ 0");
    double coeff = dot(p, dp) / n2;
    MomentumSplit s;
    s.longitudinal.resize(d);
    s.transverse.resize(d);
    for (int a = 0; a < d; ++a) {
        s.longitudinal[a] = coeff * p[a];
        s.transverse[a] = dp[a] - s.longitudinal[a];
    }
    return s;
}

namespace {

double stationary_denominator(const HamiltonianParams& params, const StationaryOptions& opts) {
    double npow = 1.0;
    for (int i = 0; i < opts.n_pre_power; ++i) npow *= double(params.n_pre);
    return opts.sp_factor * params.g * npow;
}

// p = (z_J - z_K)/den for every link K->J
std::vector<double> order0_momenta(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                                   double den) {
    const int d = ecs.dim();
    std::vector<double> p(std::size_t(ecs.num_links()) * d);
    for (int l = 0; l < ecs.num_links(); ++l) {
        const auto& lk = ecs.link(l);
        auto zj = z.at(lk.target);
        auto zk = z.at(lk.source);
        auto out = row(p, l, d);
        for (int c = 0; c < d; ++c) out[c] = (zj[c] - zk[c]) / den;
    }
    return p;
}

// w=0 views accumulated from an explicit momentum buffer
std::vector<double> views_from(const EnergeticCausalSet& ecs, const std::vector<double>& p) {
    const int d = ecs.dim();
    std::vector<double> views(std::size_t(ecs.num_events()) * d, 0.0);
    for (int l = 0; l < ecs.num_links(); ++l)
        add_to(row(views, ecs.link(l).target, d), row(p, l, d));
    return views;
}

// transverse g' correction applied to a momentum buffer, in place
void apply_transverse_correction(const EnergeticCausalSet& ecs, std::vector<double>& p,
                                 const std::vector<double>& base,
                                 const std::vector<double>& views, double gp_over_den) {
    const int d = ecs.dim();
    std::vector<double> dv(d);
    for (int l = 0; l < ecs.num_links(); ++l) {
        auto pb = row(base, l, d);
        if (norm(pb) <= kMomentumFloor) continue; // direction undefined: leave order-0 value
        const auto& lk = ecs.link(l);
        auto wj = row(views, lk.target, d);
        auto wk = row(views, lk.source, d);
        for (int c = 0; c < d; ++c) dv[c] = wj[c] - wk[c];
        MomentumSplit s = split_momentum(pb, dv);
        auto out = row(p, l, d);
        for (int c = 0; c < d; ++c) out[c] -= gp_over_den * s.transverse[c];
    }
}

} // namespace

StationaryResult stationary_momenta(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                                    const HamiltonianParams& params,
                                    const StationaryOptions& opts) {
    params.require_positive_g();
    if (z.d != ecs.dim() || z.num_events() != ecs.num_events())
        throw Error(ErrorKind::ShapeMismatch, "embedding does not match causal set");
    for (double v : z.z)
        if (!std::isfinite(v)) throw Error(ErrorKind::InputError, "non-finite embedding");
    if (opts.order != 0 && opts.order != 1)
        throw Error(ErrorKind::InvalidConfig, "order must be 0 or 1");

    const int d = ecs.dim();
    const double den = stationary_denominator(params, opts);
    StationaryResult res;
    res.momenta = order0_momenta(ecs, z, den);

    if (opts.order == 1 && params.g_prime != 0.0) {
        std::vector<double> base = res.momenta;
        std::vector<double> views = views_from(ecs, base);
        apply_transverse_correction(ecs, res.momenta, base, views, params.g_prime / den);

        // fixed-point residual: re-evaluate the relation with the updated views
        std::vector<double> check = order0_momenta(ecs, z, den);
        std::vector<double> views1 = views_from(ecs, res.momenta);
        apply_transverse_correction(ecs, check, base, views1, params.g_prime / den);
        double worst = 0.0;
        std::vector<double> diff(d);
        for (int l = 0; l < ecs.num_links(); ++l) {
            auto a = row(res.momenta, l, d);
            auto b = row(check, l, d);
            for (int c = 0; c < d; ++c) diff[c] = a[c] - b[c];
            worst = std::max(worst, norm(diff));
        }
        res.fixed_point_residual = worst;
    }
    return res;
}

double classical_velocity_check(const EnergeticCausalSet& ecs, const EmbeddingConfig& z,
                                const HamiltonianParams& params, double dt) {
    if (dt <= 0.0) throw Error(ErrorKind::InputError, "dt must be positive");
    StationaryResult sm = stationary_momenta(ecs, z, params, {.order = 0});
    const int d = ecs.dim();
    double worst = 0.0;
    std::vector<double> diff(d);
    for (int l = 0; l < ecs.num_links(); ++l) {
        const auto& lk = ecs.link(l);
        auto p = row(sm.momenta, l, d);
        auto zj = z.at(lk.target);
        auto zk = z.at(lk.source);
        for (int c = 0; c < d; ++c) diff[c] = p[c] - params.m * (zj[c] - zk[c]) / dt;
        worst = std::max(worst, norm(diff));
    }
    return worst;
}

ReconstructionResult reconstruct_embedding(const EnergeticCausalSet& ecs,
                                           std::span<const double> momenta,
                                           const HamiltonianParams& params,
                                           const ReconstructionOptions& opts) {
    params.require_positive_g();
    const int d = ecs.dim();
    const int n = ecs.num_events();
    const int m = ecs.num_links();
    if (int(momenta.size()) != m * d)
        throw Error(ErrorKind::ShapeMismatch, "momentum buffer size mismatch");
    ecs.check_event(opts.gauge_event);

    double npow = double(params.n_pre) * double(params.n_pre);
    const double scale = params.g * npow; // target: z_J - z_K = scale * p

    // connected components (undirected) and one pinned gauge event each
    std::vector<int> comp(n, -1);
    {
        std::vector<EventId> stack;
        int c = 0;
        for (EventId seed_event = 0; seed_event < n; ++seed_event) {
            if (comp[seed_event] >= 0) continue;
            comp[seed_event] = c;
            stack.push_back(seed_event);
            while (!stack.empty()) {
                EventId e = stack.back();
                stack.pop_back();
                auto visit = [&](EventId other) {
                    if (comp[other] < 0) {
                        comp[other] = c;
                        stack.push_back(other);
                    }
                };
                for (int l : ecs.out_links(e)) visit(ecs.link(l).target);
                for (int l : ecs.in_links(e)) visit(ecs.link(l).source);
            }
            ++c;
        }
    }
    std::vector<char> pinned(n, 0);
    {
        std::vector<char> seen;
        seen.assign(std::size_t(*std::max_element(comp.begin(), comp.end())) + 1, 0);
        pinned[opts.gauge_event] = 1;
        seen[comp[opts.gauge_event]] = 1;
        for (EventId e = 0; e < n; ++e)
            if (!seen[comp[e]]) {
                seen[comp[e]] = 1;
                pinned[e] = 1;
            }
    }

    ReconstructionResult res;
    res.z = EmbeddingConfig(d, n);
    res.component = comp;

    // Spanning-tree integration for the initial guess: exact when momenta
    // are cycle-consistent, which is the common case.
    {
        std::vector<char> done(n, 0);
        std::vector<EventId> stack;
        for (EventId e = 0; e < n; ++e) {
            if (!pinned[e]) continue;
            done[e] = 1;
            stack.push_back(e);
            while (!stack.empty()) {
                EventId v = stack.back();
                stack.pop_back();
                for (int l : ecs.out_links(v)) {
                    EventId t = ecs.link(l).target;
                    if (done[t]) continue;
                    done[t] = 1;
                    auto zt = res.z.at(t);
                    auto zv = res.z.at(v);
                    auto p = std::span<const double>(momenta.data() + std::size_t(l) * d, d);
                    for (int c = 0; c < d; ++c) zt[c] = zv[c] + scale * p[c];
                    stack.push_back(t);
                }
                for (int l : ecs.in_links(v)) {
                    EventId s = ecs.link(l).source;
                    if (done[s]) continue;
                    done[s] = 1;
                    auto zs = res.z.at(s);
                    auto zv = res.z.at(v);
                    auto p = std::span<const double>(momenta.data() + std::size_t(l) * d, d);
                    for (int c = 0; c < d; ++c) zs[c] = zv[c] - scale * p[c];
                    stack.push_back(s);
                }
            }
        }
    }

    // Conjugate gradient on the graph Laplacian (normal equations), one
    // scalar solve per dimension; pinned rows act as identity.
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        std::fill(y.begin(), y.end(), 0.0);
        for (int l = 0; l < m; ++l) {
            const auto& lk = ecs.link(l);
            double r = x[lk.target] - x[lk.source];
            if (!pinned[lk.target]) y[lk.target] += r;
            if (!pinned[lk.source]) y[lk.source] -= r;
        }
        for (EventId e = 0; e < n; ++e)
            if (pinned[e]) y[e] = x[e];
    };

    int max_it = opts.max_iterations > 0 ? opts.max_iterations : 10 * n + 100;
    std::vector<double> x(n), b(n), r(n), p(n), ap(n);
    for (int c = 0; c < d; ++c) {
        for (EventId e = 0; e < n; ++e) x[e] = res.z.at(e)[c];
        std::fill(b.begin(), b.end(), 0.0);
        for (int l = 0; l < m; ++l) {
            const auto& lk = ecs.link(l);
            double t = scale * momenta[std::size_t(l) * d + c];
            if (!pinned[lk.target]) b[lk.target] += t;
            if (!pinned[lk.source]) b[lk.source] -= t;
        }
        for (EventId e = 0; e < n; ++e)
            if (pinned[e]) b[e] = 0.0; // gauge value

        apply(x, ap);
        double bnorm = 0.0;
        for (EventId e = 0; e < n; ++e) {
            r[e] = b[e] - ap[e];
            bnorm += b[e] * b[e];
        }
        bnorm = std::sqrt(bnorm);
        double tol = opts.cg_tol * std::max(1.0, bnorm);
        p = r;
        double rs = dot(r, r);
        for (int it = 0; it < max_it && std::sqrt(rs) > tol; ++it) {
            apply(p, ap);
            double denom = dot(p, ap);
            if (denom <= 0.0) break; // singular direction: stop and report residuals
            double alpha = rs / denom;
            for (EventId e = 0; e < n; ++e) {
                x[e] += alpha * p[e];
                r[e] -= alpha * ap[e];
            }
            double rs_new = dot(r, r);
            double beta = rs_new / rs;
            rs = rs_new;
            for (EventId e = 0; e < n; ++e) p[e] = r[e] + beta * p[e];
        }
        for (EventId e = 0; e < n; ++e) res.z.at(e)[c] = x[e];
    }

    // per-link residuals of the solved system
    res.max_link_residual = 0.0;
    res.worst_link = -1;
    std::vector<double> diff(d);
    for (int l = 0; l < m; ++l) {
        const auto& lk = ecs.link(l);
        auto zj = res.z.at(lk.target);
        auto zk = res.z.at(lk.source);
        for (int c = 0; c < d; ++c)
            diff[c] = (zj[c] - zk[c]) - scale * momenta[std::size_t(l) * d + c];
        double rl = norm(diff);
        if (rl > res.max_link_residual) {
            res.max_link_residual = rl;
            res.worst_link = l;
        }
    }
    if (res.max_link_residual > opts.consistency_tol) {
        const auto& lk = ecs.link(res.worst_link);
        throw Error(ErrorKind::IncompatibleMomenta,
                    "momenta are not cycle-consistent; worst link " +
                        std::to_string(lk.source) + "->" + std::to_string(lk.target) +
                        " residual " + std::to_string(res.max_link_residual));
    }
    return res;
}

} // namespace ecsim

#include "ecsim/runner.hpp"

#include <chrono>
#include <limits>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "ecsim/coarse_grain.hpp"
#include "ecsim/embedding.hpp"
#include "ecsim/energy.hpp"
#include "ecsim/io.hpp"
#include "ecsim/madelung.hpp"

namespace ecsim::run {

using nlohmann::json;

const char* version_string() { return "0.1.0"; }

namespace {

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- schema ------------------------------------------------------------

enum class FieldType { Int, Num, Str, Bool, List, Obj };

struct Field {
    const char* name;
    FieldType type;
};

void check_schema(const json& params, std::initializer_list<Field> fields,
                  const std::string& command) {
    for (auto it = params.begin(); it != params.end(); ++it) {
        const Field* match = nullptr;
        for (const auto& f : fields)
            if (it.key() == f.name) {
                match = &f;
                break;
            }
        if (!match)
            throw Error(ErrorKind::InvalidConfig,
                        command + ": unknown config key '" + it.key() + "'");
        const json& v = it.value();
        bool ok = false;
        switch (match->type) {
            case FieldType::Int: ok = v.is_number_integer(); break;
            case FieldType::Num: ok = v.is_number(); break;
            case FieldType::Str: ok = v.is_string(); break;
            case FieldType::Bool: ok = v.is_boolean(); break;
            case FieldType::List: ok = v.is_array(); break;
            case FieldType::Obj: ok = v.is_object(); break;
        }
        if (!ok)
            throw Error(ErrorKind::InvalidConfig,
                        command + ": wrong type for config key '" + it.key() + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

// --- shared builders -----------------------------------------------------

LayeredConfig layered_from(const json& p) {
    LayeredConfig cfg;
    cfg.d = get_or(p, "d", 1);
    cfg.layers = get_or(p, "layers", 50);
    cfg.events_per_layer = get_or(p, "epl", 20);
    cfg.n_pre = get_or(p, "n_pre", 2);
    cfg.seed = get_or<std::uint64_t>(p, "seed", 0);
    std::string kind = get_or<std::string>(p, "sampler", "gaussian");
    if (kind == "gaussian") {
        cfg.sampler.kind = MomentumSampler::Kind::Gaussian;
        cfg.sampler.mean = get_or(p, "sampler_mean", 0.0);
        cfg.sampler.sigma = get_or(p, "sampler_sigma", 1.0);
    } else if (kind == "uniform") {
        cfg.sampler.kind = MomentumSampler::Kind::Uniform;
        cfg.sampler.lo = get_or(p, "sampler_lo", -1.0);
        cfg.sampler.hi = get_or(p, "sampler_hi", 1.0);
    } else {
        throw Error(ErrorKind::InvalidConfig, "unknown sampler '" + kind + "'");
    }
    return cfg;
}

constexpr std::initializer_list<Field> kLayeredFields = {
    {"d", FieldType::Int},           {"layers", FieldType::Int},
    {"epl", FieldType::Int},         {"n_pre", FieldType::Int},
    {"seed", FieldType::Int},        {"sampler", FieldType::Str},
    {"sampler_mean", FieldType::Num}, {"sampler_sigma", FieldType::Num},
    {"sampler_lo", FieldType::Num},  {"sampler_hi", FieldType::Num},
};

EnergeticCausalSet load_or_generate(const json& p, const std::filesystem::path& out_dir) {
    std::string input = get_or<std::string>(p, "input", "");
    if (!input.empty()) {
        std::filesystem::path path(input);
        if (path.is_relative() && std::filesystem::exists(out_dir / path))
            path = out_dir / path;
        return io::ecs_from_json(io::read_text(path));
    }
    return generate_layered(layered_from(p));
}

HamiltonianParams params_from(const json& p, int n_pre) {
    HamiltonianParams hp;
    hp.g = get_or(p, "g", 1.0);
    hp.m = get_or(p, "m", 1.0);
    hp.hbar = get_or(p, "hbar", 1.0);
    hp.Z_V = get_or(p, "Z_V", 1.0);
    hp.n_pre = n_pre;
    if (get_or(p, "quantum_matched", false))
        hp = HamiltonianParams::quantum_matched(hp.g, hp.m, hp.hbar, hp.Z_V, hp.n_pre);
    else
        hp.g_prime = get_or(p, "g_prime", 0.0);
    return hp;
}

DensityModel model_from(const json& p) {
    DensityModel m;
    std::string kind = get_or<std::string>(p, "model", "gaussian");
    if (kind == "gaussian") {
        m.kind = DensityModel::Kind::Gaussian;
        m.mean = get_or(p, "mean", 0.0);
        m.sigma = get_or(p, "sigma", 1.0);
    } else if (kind == "uniform") {
        m.kind = DensityModel::Kind::Uniform;
        m.lo = get_or(p, "lo", 0.0);
        m.hi = get_or(p, "hi", 1.0);
    } else if (kind == "mixture") {
        m.kind = DensityModel::Kind::Mixture;
        m.mean = get_or(p, "mean", -1.0);
        m.sigma = get_or(p, "sigma", 1.0);
        m.mean2 = get_or(p, "mean2", 1.5);
        m.sigma2 = get_or(p, "sigma2", 0.5);
        m.w2 = get_or(p, "w2", 0.4);
    } else {
        throw Error(ErrorKind::InvalidConfig, "unknown density model '" + kind + "'");
    }
    return m;
}

EvolveMode mode_from(const std::string& s) {
    if (s == "classical") return EvolveMode::Classical;
    if (s == "quantum") return EvolveMode::Quantum;
    if (s == "quantum+correction") return EvolveMode::QuantumCorrected;
    throw Error(ErrorKind::InvalidConfig, "unknown mode '" + s + "'");
}

struct Ctx {
    const RunConfig& cfg;
    RunManifest& manifest;
    std::string hash;

    void emit(const std::string& name, const std::string& text) const {
        io::write_text_atomic(cfg.out_dir / name, text);
        manifest.outputs.push_back(name);
    }
    void metric(const std::string& key, double v) const { manifest.metrics[key] = v; }
};

// --- subcommands ---------------------------------------------------------

void run_generate(const Ctx& ctx, const json& p) {
    check_schema(p, kLayeredFields, "generate");
    auto ecs = generate_layered(layered_from(p));
    ctx.emit("causal_set.json", io::ecs_to_json(ecs, ctx.hash));
    std::string csv = "# ecsim residuals config=" + ctx.hash + "\n";
    csv += "event,residual,boundary\n";
    double worst = 0.0;
    for (EventId e = 0; e < ecs.num_events(); ++e) {
        auto r = conservation_residual(ecs, e);
        double n = norm(r.value);
        if (!r.boundary) worst = std::max(worst, n);
        csv += std::to_string(e) + "," + io::format_double(n) + "," +
               (r.boundary ? "1" : "0") + "\n";
    }
    ctx.emit("residuals.csv", csv);
    ctx.metric("max_interior_residual", worst);
    ctx.metric("num_events", ecs.num_events());
    ctx.metric("num_links", ecs.num_links());
}

void run_energy(const Ctx& ctx, const json& p) {
    check_schema(p,
                 {{"d", FieldType::Int},       {"layers", FieldType::Int},
                  {"epl", FieldType::Int},     {"n_pre", FieldType::Int},
                  {"seed", FieldType::Int},    {"sampler", FieldType::Str},
                  {"sampler_mean", FieldType::Num}, {"sampler_sigma", FieldType::Num},
                  {"sampler_lo", FieldType::Num},   {"sampler_hi", FieldType::Num},
                  {"input", FieldType::Str},   {"g", FieldType::Num},
                  {"g_prime", FieldType::Num}, {"m", FieldType::Num},
                  {"hbar", FieldType::Num},    {"Z_V", FieldType::Num},
                  {"quantum_matched", FieldType::Bool}},
                 "energy");
    auto ecs = load_or_generate(p, ctx.cfg.out_dir);
    auto hp = params_from(p, std::max(1, ecs.n_pre()));
    auto rep = hamiltonian(ecs, hp);
    ctx.emit("energy.csv", io::energy_csv(rep, ctx.hash));
    ctx.emit("energy.json", io::energy_json(rep, ctx.hash));
    ctx.metric("T", rep.T);
    ctx.metric("U", rep.U);
    ctx.metric("H", rep.H);
}

void run_embed(const Ctx& ctx, const json& p) {
    check_schema(p,
                 {{"d", FieldType::Int},       {"layers", FieldType::Int},
                  {"epl", FieldType::Int},     {"n_pre", FieldType::Int},
                  {"seed", FieldType::Int},    {"sampler", FieldType::Str},
                  {"sampler_mean", FieldType::Num}, {"sampler_sigma", FieldType::Num},
                  {"sampler_lo", FieldType::Num},   {"sampler_hi", FieldType::Num},
                  {"input", FieldType::Str},   {"g", FieldType::Num},
                  {"g_prime", FieldType::Num}, {"m", FieldType::Num},
                  {"hbar", FieldType::Num},    {"Z_V", FieldType::Num},
                  {"quantum_matched", FieldType::Bool},
                  {"order", FieldType::Int},   {"gauge_event", FieldType::Int}},
                 "embed");
    auto ecs = load_or_generate(p, ctx.cfg.out_dir);
    auto hp = params_from(p, std::max(1, ecs.n_pre()));
    hp.g = get_or(p, "g", 0.1);
    ReconstructionOptions opts;
    opts.gauge_event = get_or(p, "gauge_event", 0);
    // raw generated momenta are generally not cycle-consistent; report the
    // least-squares projection and its residual instead of refusing
    opts.consistency_tol = std::numeric_limits<double>::infinity();
    std::vector<double> momenta;
    momenta.reserve(std::size_t(ecs.num_links()) * ecs.dim());
    for (int l = 0; l < ecs.num_links(); ++l)
        momenta.insert(momenta.end(), ecs.momentum(l).begin(), ecs.momentum(l).end());
    auto rec = reconstruct_embedding(ecs, momenta, hp, opts);
    ctx.emit("embedding.csv", io::embedding_csv(rec.z, ctx.hash));
    ctx.metric("max_link_residual", rec.max_link_residual);

    if (get_or(p, "order", 0) == 1) {
        auto sm = stationary_momenta(ecs, rec.z, hp, {.order = 1});
        ctx.metric("fixed_point_residual", sm.fixed_point_residual);
        double worst = 0.0;
        for (int l = 0; l < ecs.num_links(); ++l) {
            double s = 0.0;
            for (int c = 0; c < ecs.dim(); ++c) {
                double t = sm.momenta[std::size_t(l) * ecs.dim() + c] -
                           momenta[std::size_t(l) * ecs.dim() + c];
                s += t * t;
            }
            worst = std::max(worst, std::sqrt(s));
        }
        ctx.metric("max_order1_shift", worst);
    }
}

constexpr std::initializer_list<Field> kModelFields = {
    {"model", FieldType::Str}, {"mean", FieldType::Num},  {"sigma", FieldType::Num},
    {"lo", FieldType::Num},    {"hi", FieldType::Num},    {"mean2", FieldType::Num},
    {"sigma2", FieldType::Num}, {"w2", FieldType::Num},
};

void run_variety(const Ctx& ctx, const json& p) {
    check_schema(p,
                 {{"model", FieldType::Str}, {"mean", FieldType::Num},
                  {"sigma", FieldType::Num}, {"lo", FieldType::Num},
                  {"hi", FieldType::Num},    {"mean2", FieldType::Num},
                  {"sigma2", FieldType::Num}, {"w2", FieldType::Num},
                  {"N", FieldType::Int},     {"L", FieldType::Num},
                  {"d", FieldType::Int},     {"seed", FieldType::Int},
                  {"grid_cells", FieldType::Int}, {"study", FieldType::List}},
                 "variety");
    if (get_or(p, "d", 1) != 1)
        throw Error(ErrorKind::InvalidConfig, "variety supports d = 1");
    DensityModel model = model_from(p);
    const double L = get_or(p, "L", 1.0);
    const std::uint64_t seed = get_or<std::uint64_t>(p, "seed", 0);

    if (p.contains("study")) {
        std::vector<long long> ns = p.at("study").get<std::vector<long long>>();
        auto table = convergence_study(model, ns, L, seed);
        ctx.emit("convergence.csv", io::convergence_csv(table, ctx.hash));
        ctx.metric("slope_det", table.slope_det);
        ctx.metric("slope_kde", table.slope_kde);
        return;
    }

    const long long n = get_or<long long>(p, "N", 10000);
    Rng rng(seed);
    Rng sampler = rng.derive("variety/samples");
    std::vector<double> samples(n);
    for (long long i = 0; i < n; ++i) samples[i] = model.sample(sampler);
    double zlo, zhi;
    model.support(zlo, zhi);
    Grid grid = Grid::line(get_or(p, "grid_cells", 2048), zlo - 0.5 * model.width(),
                           zhi + 0.5 * model.width());
    CoarseState state = estimate_density(samples, int(n), grid);
    CutoffSpec cut = cutoffs(state, L);
    VarietyReport rep = continuum_variety(state, cut);
    ResolutionVariety rv = variety_at_resolution(state, L);
    rep.discrete = rv.value;
    ctx.emit("variety.csv", io::variety_csv(rep, rv.value, ctx.hash));
    ctx.metric("discrete", rv.value);
    ctx.metric("fisher", rep.fisher_term);
    ctx.metric("constant", rep.constant_term);
    ctx.metric("correction", rep.correction_term);
    ctx.metric("clipped_fraction", state.clipped_fraction);
}

constexpr std::initializer_list<Field> kEvolveFields = {
    {"mode", FieldType::Str},      {"dt", FieldType::Num},
    {"steps", FieldType::Int},     {"grid", FieldType::Int},
    {"extent", FieldType::Num},    {"sigma0", FieldType::Num},
    {"center", FieldType::Num},    {"velocity", FieldType::Num},
    {"m", FieldType::Num},         {"hbar", FieldType::Num},
    {"correction_strength", FieldType::Num},
    {"boundary", FieldType::Str},  {"snapshot_every", FieldType::Int},
    {"format", FieldType::Str},
};

std::string snapshot_text(const HydroState& st, const std::string& fmt,
                          const std::string& hash) {
    if (fmt == "json") return io::hydro_json(st, hash);
    if (fmt == "csv") return io::hydro_csv(st, hash);
    throw Error(ErrorKind::InvalidConfig, "unknown snapshot format '" + fmt + "'");
}

MadelungParams madelung_from(const json& p) {
    MadelungParams mp;
    mp.m = get_or(p, "m", 1.0);
    mp.hbar = get_or(p, "hbar", 1.0);
    mp.correction_strength = get_or(p, "correction_strength", 0.0);
    std::string bc = get_or<std::string>(p, "boundary", "periodic");
    if (bc == "periodic")
        mp.boundary = BoundaryMode::Periodic;
    else if (bc == "walls")
        mp.boundary = BoundaryMode::Walls;
    else
        throw Error(ErrorKind::InvalidConfig, "unknown boundary '" + bc + "'");
    return mp;
}

void run_evolve(const Ctx& ctx, const json& p) {
    check_schema(p, kEvolveFields, "evolve");
    MadelungParams mp = madelung_from(p);
    EvolveMode mode = mode_from(get_or<std::string>(p, "mode", "quantum"));
    double extent = get_or(p, "extent", 8.0);
    Grid grid = Grid::line(get_or(p, "grid", 512), -extent, extent);
    HydroState st = gaussian_packet(grid, get_or(p, "sigma0", 1.0), get_or(p, "center", 0.0),
                                    get_or(p, "velocity", 0.0), mp.m);
    double dt = get_or(p, "dt", 1e-4);
    int steps = get_or(p, "steps", 1000);
    int every = get_or(p, "snapshot_every", 0);
    std::string fmt = get_or<std::string>(p, "format", "csv");

    ctx.emit("hydro_0000." + fmt, snapshot_text(st, fmt, ctx.hash));
    int snap = 1;
    EvolveReport rep;
    rep.state = st;
    if (every > 0) {
        int done = 0;
        while (done < steps) {
            int chunk = std::min(every, steps - done);
            auto r = evolve(rep.state, mp, dt, chunk, mode);
            rep.state = r.state;
            rep.mass_drift += r.mass_drift;
            rep.energy_drift = std::max(rep.energy_drift, r.energy_drift);
            done += chunk;
            char name[32];
            std::snprintf(name, sizeof(name), "hydro_%04d.%s", snap++, fmt.c_str());
            ctx.emit(name, snapshot_text(rep.state, fmt, ctx.hash));
        }
    } else {
        rep = evolve(st, mp, dt, steps, mode);
        ctx.emit("hydro_final." + fmt, snapshot_text(rep.state, fmt, ctx.hash));
    }
    ctx.metric("mass_drift", rep.mass_drift);
    ctx.metric("energy_drift", rep.energy_drift);
    ctx.metric("t_final", rep.state.t);
}

void run_compare(const Ctx& ctx, const json& p) {
    check_schema(p, kEvolveFields, "compare");
    MadelungParams mp = madelung_from(p);
    EvolveMode mode = mode_from(get_or<std::string>(p, "mode", "quantum"));
    double extent = get_or(p, "extent", 8.0);
    Grid grid = Grid::line(get_or(p, "grid", 512), -extent, extent);
    HydroState st = gaussian_packet(grid, get_or(p, "sigma0", 1.0), get_or(p, "center", 0.0),
                                    get_or(p, "velocity", 0.0), mp.m);
    auto rep = compare_evolutions(st, mp, get_or(p, "dt", 1e-4), get_or(p, "steps", 1000),
                                  mode);
    std::string csv = "# ecsim compare config=" + ctx.hash + "\n";
    csv += "metric,value\n";
    csv += "l2_amplitude_error," + io::format_double(rep.l2_amplitude_error) + "\n";
    csv += "phase_rms_error," + io::format_double(rep.phase_rms_error) + "\n";
    csv += "mass_drift," + io::format_double(rep.mass_drift) + "\n";
    csv += "energy_drift," + io::format_double(rep.energy_drift) + "\n";
    ctx.emit("compare.csv", csv);
    std::string fmt = get_or<std::string>(p, "format", "csv");
    ctx.emit("hydro_final." + fmt, snapshot_text(rep.hydro_final, fmt, ctx.hash));
    ctx.metric("l2_amplitude_error", rep.l2_amplitude_error);
    ctx.metric("phase_rms_error", rep.phase_rms_error);
    ctx.metric("mass_drift", rep.mass_drift);
    ctx.metric("energy_drift", rep.energy_drift);
}

void run_pipeline(const Ctx& ctx, const json& p) {
    check_schema(p,
                 {{"d", FieldType::Int},       {"layers", FieldType::Int},
                  {"epl", FieldType::Int},     {"n_pre", FieldType::Int},
                  {"seed", FieldType::Int},    {"sampler", FieldType::Str},
                  {"sampler_mean", FieldType::Num}, {"sampler_sigma", FieldType::Num},
                  {"g", FieldType::Num},       {"g_prime", FieldType::Num},
                  {"m", FieldType::Num},       {"hbar", FieldType::Num},
                  {"Z_V", FieldType::Num},     {"quantum_matched", FieldType::Bool},
                  {"slice_layer", FieldType::Int}, {"L", FieldType::Num},
                  {"bandwidth_scale", FieldType::Num},
                  {"grid", FieldType::Int},    {"dt", FieldType::Num},
                  {"steps", FieldType::Int},   {"correction_strength", FieldType::Num}},
                 "pipeline");
    json q = p; // demo-sized defaults: the slice must feed the KDE
    if (!q.contains("layers")) q["layers"] = 50;
    if (!q.contains("epl")) q["epl"] = 200;
    std::string stage = "generate";
    try {
        LayeredConfig lc = layered_from(q);
        if (lc.d != 1)
            throw Error(ErrorKind::InvalidConfig, "pipeline runs in d = 1");
        auto ecs = generate_layered(lc);
        ctx.emit("causal_set.json", io::ecs_to_json(ecs, ctx.hash));
        ctx.metric("max_interior_residual", max_interior_residual(ecs));

        stage = "energy";
        auto hp = params_from(q, lc.n_pre);
        hp.g = get_or(q, "g", 0.05);
        auto erep = hamiltonian(ecs, hp);
        ctx.emit("energy.csv", io::energy_csv(erep, ctx.hash));
        ctx.metric("T", erep.T);
        ctx.metric("U", erep.U);
        ctx.metric("H", erep.H);

        stage = "embed";
        std::vector<double> momenta;
        for (int l = 0; l < ecs.num_links(); ++l)
            momenta.insert(momenta.end(), ecs.momentum(l).begin(), ecs.momentum(l).end());
        ReconstructionOptions ropts;
        ropts.consistency_tol = std::numeric_limits<double>::infinity();
        auto rec = reconstruct_embedding(ecs, momenta, hp, ropts);
        ctx.emit("embedding.csv", io::embedding_csv(rec.z, ctx.hash));
        ctx.metric("max_link_residual", rec.max_link_residual);

        stage = "coarse-grain";
        // equal-split conservation diffuses momenta, so deep layers embed
        // to nearly coincident points; the first sampled layer carries the
        // microscopic diversity
        int slice = get_or(q, "slice_layer", 1);
        if (slice < 0 || slice >= lc.layers)
            throw Error(ErrorKind::InvalidConfig, "slice_layer out of range");
        std::vector<double> slice_z;
        for (int k = 0; k < lc.events_per_layer; ++k)
            slice_z.push_back(rec.z.at(slice * lc.events_per_layer + k)[0]);
        // standardize to slice units: the emergent packet's own width sets
        // the length scale, so the coarse density is order-one smooth and
        // the hbar = m = 1 evolution is well conditioned
        double mean = 0.0;
        for (double z : slice_z) mean += z;
        mean /= double(slice_z.size());
        double var = 0.0;
        for (double z : slice_z) var += (z - mean) * (z - mean);
        double sigma = std::sqrt(var / std::max<std::size_t>(1, slice_z.size() - 1));
        if (sigma <= 0.0) sigma = 1e-3;
        for (double& z : slice_z) z = (z - mean) / sigma;
        // stragglers beyond 5 widths would sit as isolated kernel islands
        // with near-empty gaps that the quantum force cannot cross
        std::size_t kept = 0;
        for (double z : slice_z)
            if (std::abs(z) <= 5.0) slice_z[kept++] = z;
        ctx.metric("slice_outliers_dropped", double(slice_z.size() - kept));
        slice_z.resize(kept);
        ctx.metric("slice_sigma", sigma);
        Grid grid = Grid::line(get_or(q, "grid", 256), -8.0, 8.0);
        // coarser kernel than Silverman: the evolved field should be the
        // collective packet, not the sampling noise of a finite slice
        CoarseState state =
            estimate_density(slice_z, int(slice_z.size()), grid, 1.0,
                             get_or(q, "bandwidth_scale", 4.0));
        CutoffSpec cut = cutoffs(state, get_or(q, "L", 1.0));
        VarietyReport vrep = continuum_variety(state, cut);
        ctx.emit("variety.csv", io::variety_csv(vrep, vrep.discrete, ctx.hash));
        ctx.metric("fisher", vrep.fisher_term);

        stage = "compare";
        MadelungParams mp;
        mp.m = hp.m;
        mp.hbar = hp.hbar;
        mp.correction_strength = get_or(q, "correction_strength", 0.0);
        // coupling-driven dispatch: g' = 0 selects the classical limit
        EvolveMode mode = hp.g_prime == 0.0 ? EvolveMode::Classical
                          : mp.correction_strength != 0.0 ? EvolveMode::QuantumCorrected
                                                          : EvolveMode::Quantum;
        HydroState st;
        st.grid = grid;
        st.rho = state.rho;
        st.S.assign(grid.size(), 0.0);
        // the truncated-kernel KDE reaches exact zero; pad the tails so the
        // quantum force stays smooth (both solvers see the same state)
        double peak = *std::max_element(st.rho.begin(), st.rho.end());
        for (double& v : st.rho) v += 1e-5 * peak;
        double mass = integrate(grid, st.rho);
        for (double& v : st.rho) v /= mass;
        double dt = get_or(q, "dt", 1e-4);
        double bound = grid.h(0) * grid.h(0) * mp.m / (2.0 * mp.hbar);
        if (mode != EvolveMode::Classical && dt > bound) dt = 0.5 * bound;
        auto crep = compare_evolutions(st, mp, dt, get_or(q, "steps", 1500), mode);
        ctx.emit("hydro_final.csv", io::hydro_csv(crep.hydro_final, ctx.hash));
        ctx.metric("l2_amplitude_error", crep.l2_amplitude_error);
        ctx.metric("mass_drift", crep.mass_drift);
        ctx.metric("energy_drift", crep.energy_drift);
        ctx.metric("mode", mode == EvolveMode::Classical ? 0.0
                          : mode == EvolveMode::Quantum  ? 1.0
                                                         : 2.0);

        // headline summary table
        std::string csv = "# ecsim pipeline config=" + ctx.hash + "\n";
        csv += "metric,value\n";
        for (const auto& [k, v] : ctx.manifest.metrics)
            csv += k + "," + io::format_double(v) + "\n";
        ctx.emit("summary.csv", csv);
    } catch (const Error& e) {
        throw Error(e.kind(), "pipeline stage '" + stage + "': " + e.what());
    }
}

void run_sweep(const Ctx& ctx, const json& p) {
    check_schema(p, {{"runs", FieldType::List}, {"parallel", FieldType::Bool}}, "sweep");
    if (!p.contains("runs"))
        throw Error(ErrorKind::InvalidConfig, "sweep needs a 'runs' array");
    const auto& runs = p.at("runs");
    bool parallel = get_or(p, "parallel", true);

    std::vector<RunConfig> configs;
    int idx = 0;
    for (const auto& r : runs) {
        RunConfig sub;
        sub.command = r.at("command").get<std::string>();
        if (sub.command == "sweep")
            throw Error(ErrorKind::InvalidConfig, "sweep cannot nest");
        sub.params = r.value("params", json::object());
        sub.out_dir = ctx.cfg.out_dir / ("run_" + std::to_string(idx++));
        configs.push_back(std::move(sub));
    }
    std::vector<std::string> errors(configs.size());
    auto worker = [&](std::size_t i) {
        try {
            (void)run(configs[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    if (parallel) {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < configs.size(); ++i) pool.emplace_back(worker, i);
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < configs.size(); ++i) worker(i);
    }
    int failed = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (!errors[i].empty()) ++failed;
        ctx.manifest.outputs.push_back("run_" + std::to_string(i) + "/manifest.json");
    }
    ctx.metric("runs", double(configs.size()));
    ctx.metric("failed", double(failed));
    if (failed > 0)
        throw Error(ErrorKind::NumericError, std::to_string(failed) + " sweep runs failed");
}

} // namespace

std::string config_hash(const RunConfig& cfg) {
    json canon;
    canon["command"] = cfg.command;
    canon["params"] = cfg.params;
    std::string dump = canon.dump(); // nlohmann objects iterate in key order
    std::uint64_t h = detail::fnv1a64(dump);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path resolve_out_dir(const std::filesystem::path& dir) {
    const char* root = std::getenv("ECSIM_OUTPUT_ROOT");
    if (root && *root && dir.is_relative()) return std::filesystem::path(root) / dir;
    return dir;
}

RunManifest run(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    cfg.out_dir = resolve_out_dir(cfg.out_dir);
    std::filesystem::create_directories(cfg.out_dir);

    RunManifest manifest;
    manifest.command = cfg.command;
    manifest.config_hash = config_hash(cfg);
    manifest.version = version_string();
    manifest.started_at = now_iso();

    Ctx ctx{cfg, manifest, manifest.config_hash};
    if (cfg.command == "generate")
        run_generate(ctx, cfg.params);
    else if (cfg.command == "energy")
        run_energy(ctx, cfg.params);
    else if (cfg.command == "embed")
        run_embed(ctx, cfg.params);
    else if (cfg.command == "variety")
        run_variety(ctx, cfg.params);
    else if (cfg.command == "evolve")
        run_evolve(ctx, cfg.params);
    else if (cfg.command == "compare")
        run_compare(ctx, cfg.params);
    else if (cfg.command == "pipeline")
        run_pipeline(ctx, cfg.params);
    else if (cfg.command == "sweep")
        run_sweep(ctx, cfg.params);
    else
        throw Error(ErrorKind::InvalidConfig, "unknown command '" + cfg.command + "'");

    manifest.finished_at = now_iso();
    json j;
    j["command"] = manifest.command;
    j["config_hash"] = manifest.config_hash;
    j["version"] = manifest.version;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    j["outputs"] = manifest.outputs;
    j["metrics"] = manifest.metrics;
    j["config"] = {{"command", cfg.command}, {"params", cfg.params}};
    io::write_text_atomic(cfg.out_dir / "manifest.json", j.dump(2) + "\n");
    return manifest;
}

} // namespace ecsim::run

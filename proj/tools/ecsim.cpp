// Command-line front end: subcommands map onto the runner's JSON configs.
// Flags override values from --config; outputs land in --out.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecsim/error.hpp"
#include "ecsim/io.hpp"
#include "ecsim/runner.hpp"

using nlohmann::json;

namespace {

struct CommandState {
    json params = json::object();
    std::string out_dir = ".";
    std::string config_file;
};

void add_common(CLI::App* cmd, CommandState& st) {
    cmd->add_option("--out", st.out_dir, "output directory");
    cmd->add_option("--config", st.config_file, "JSON config file; flags override");
}

template <typename T>
void opt(CLI::App* cmd, CommandState& st, const std::string& flag, const char* key,
         const char* help) {
    cmd->add_option_function<T>(
        flag, [&st, key](const T& v) { st.params[key] = v; }, help);
}

void add_layered(CLI::App* cmd, CommandState& st) {
    opt<int>(cmd, st, "--d", "d", "spatial dimension");
    opt<int>(cmd, st, "--layers", "layers", "number of layers");
    opt<int>(cmd, st, "--epl", "epl", "events per layer");
    opt<int>(cmd, st, "--n-pre", "n_pre", "parents per event");
    opt<std::uint64_t>(cmd, st, "--seed", "seed", "RNG seed");
    opt<std::string>(cmd, st, "--sampler", "sampler", "gaussian|uniform");
    opt<double>(cmd, st, "--sampler-mean", "sampler_mean", "Gaussian sampler mean");
    opt<double>(cmd, st, "--sampler-sigma", "sampler_sigma", "Gaussian sampler sigma");
    opt<double>(cmd, st, "--sampler-lo", "sampler_lo", "uniform sampler lower bound");
    opt<double>(cmd, st, "--sampler-hi", "sampler_hi", "uniform sampler upper bound");
}

void add_couplings(CLI::App* cmd, CommandState& st) {
    opt<double>(cmd, st, "--g", "g", "kinetic coupling g");
    opt<double>(cmd, st, "--g-prime", "g_prime", "potential coupling g'");
    opt<double>(cmd, st, "--m", "m", "mass");
    opt<double>(cmd, st, "--hbar", "hbar", "hbar");
    opt<double>(cmd, st, "--z-v", "Z_V", "variety normalization Z_V");
    cmd->add_flag_function(
        "--quantum-matched",
        [&st](std::int64_t) { st.params["quantum_matched"] = true; },
        "set g' = g^2 hbar^2 Z_V / (8 m)");
}

void add_model(CLI::App* cmd, CommandState& st) {
    opt<std::string>(cmd, st, "--model", "model", "gaussian|uniform|mixture");
    opt<double>(cmd, st, "--mean", "mean", "model mean");
    opt<double>(cmd, st, "--sigma", "sigma", "model sigma");
    opt<double>(cmd, st, "--lo", "lo", "uniform support lower edge");
    opt<double>(cmd, st, "--hi", "hi", "uniform support upper edge");
    opt<double>(cmd, st, "--mean2", "mean2", "second mixture mean");
    opt<double>(cmd, st, "--sigma2", "sigma2", "second mixture sigma");
    opt<double>(cmd, st, "--w2", "w2", "second mixture weight");
}

void add_evolution(CLI::App* cmd, CommandState& st) {
    opt<std::string>(cmd, st, "--mode", "mode", "classical|quantum|quantum+correction");
    opt<double>(cmd, st, "--dt", "dt", "time step");
    opt<int>(cmd, st, "--steps", "steps", "number of steps");
    opt<int>(cmd, st, "--grid", "grid", "grid cells");
    opt<double>(cmd, st, "--extent", "extent", "half-width of the domain");
    opt<double>(cmd, st, "--sigma0", "sigma0", "initial packet width");
    opt<double>(cmd, st, "--center", "center", "initial packet center");
    opt<double>(cmd, st, "--velocity", "velocity", "initial packet velocity");
    opt<double>(cmd, st, "--m", "m", "mass");
    opt<double>(cmd, st, "--hbar", "hbar", "hbar");
    opt<double>(cmd, st, "--correction-strength", "correction_strength",
                "non-linear correction strength kappa");
    opt<std::string>(cmd, st, "--boundary", "boundary", "periodic|walls");
    opt<int>(cmd, st, "--snapshot-every", "snapshot_every", "snapshot cadence in steps");
}

int dispatch(const std::string& command, CommandState& st) {
    ecsim::run::RunConfig cfg;
    cfg.command = command;
    if (!st.config_file.empty()) {
        json file = json::parse(ecsim::io::read_text(st.config_file), nullptr, false);
        if (file.is_discarded())
            throw ecsim::Error(ecsim::ErrorKind::InvalidConfig, "malformed config file");
        json base = file.value("params", file);
        base.update(st.params); // flags win
        cfg.params = base;
    } else {
        cfg.params = st.params;
    }
    cfg.out_dir = st.out_dir;
    auto manifest = ecsim::run::run(cfg);
    std::cout << "config " << manifest.config_hash << "\n";
    for (const auto& [k, v] : manifest.metrics)
        std::cout << k << " = " << ecsim::io::format_double(v) << "\n";
    std::cout << "outputs in " << ecsim::run::resolve_out_dir(cfg.out_dir).string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"energetic causal set simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ecsim::run::version_string());

    std::map<std::string, CommandState> states;
    auto make = [&](const char* name, const char* help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        CommandState& st = states[name];
        add_common(cmd, st);
        return cmd;
    };

    CLI::App* generate = make("generate", "generate a layered energetic causal set");
    add_layered(generate, states["generate"]);

    CLI::App* energy = make("energy", "evaluate T, U, H and per-event surprise");
    add_layered(energy, states["energy"]);
    add_couplings(energy, states["energy"]);
    opt<std::string>(energy, states["energy"], "--input", "input", "causal-set JSON path");

    CLI::App* embed = make("embed", "reconstruct embedding coordinates from momenta");
    add_layered(embed, states["embed"]);
    add_couplings(embed, states["embed"]);
    opt<std::string>(embed, states["embed"], "--input", "input", "causal-set JSON path");
    opt<int>(embed, states["embed"], "--order", "order", "stationary relation order (0|1)");
    opt<int>(embed, states["embed"], "--gauge-event", "gauge_event", "event pinned to z = 0");

    CLI::App* variety = make("variety", "coarse-grained variety report for a density model");
    add_model(variety, states["variety"]);
    opt<long long>(variety, states["variety"], "--N", "N", "number of samples");
    opt<double>(variety, states["variety"], "--L", "L", "fixed physical scale L");
    opt<int>(variety, states["variety"], "--d", "d", "dimension (1)");
    opt<std::uint64_t>(variety, states["variety"], "--seed", "seed", "RNG seed");
    opt<int>(variety, states["variety"], "--grid-cells", "grid_cells", "KDE grid cells");
    variety->add_option_function<std::vector<long long>>(
        "--study",
        [&states](const std::vector<long long>& ns) {
            states["variety"].params["study"] = ns;
        },
        "convergence study over these N values");

    CLI::App* evolve = make("evolve", "evolve (rho, S) hydrodynamically");
    add_evolution(evolve, states["evolve"]);

    CLI::App* compare = make("compare", "hydrodynamic evolution vs the linear oracle");
    add_evolution(compare, states["compare"]);

    CLI::App* pipeline = make("pipeline", "generate -> energy -> embed -> coarse-grain -> compare");
    add_layered(pipeline, states["pipeline"]);
    add_couplings(pipeline, states["pipeline"]);
    opt<int>(pipeline, states["pipeline"], "--slice-layer", "slice_layer",
             "layer used as the constant-time slice");
    opt<double>(pipeline, states["pipeline"], "--L", "L", "fixed physical scale L");
    opt<int>(pipeline, states["pipeline"], "--grid", "grid", "comparison grid cells");
    opt<double>(pipeline, states["pipeline"], "--dt", "dt", "time step");
    opt<int>(pipeline, states["pipeline"], "--steps", "steps", "number of steps");
    opt<double>(pipeline, states["pipeline"], "--correction-strength", "correction_strength",
                "non-linear correction strength kappa");

    CLI::App* sweep = make("sweep", "run many configs with isolated output directories");
    sweep->add_flag_function(
        "--serial", [&states](std::int64_t) { states["sweep"].params["parallel"] = false; },
        "run sweeps one at a time");

    CLI11_PARSE(app, argc, argv);

    std::string chosen;
    for (const auto* cmd :
         {generate, energy, embed, variety, evolve, compare, pipeline, sweep})
        if (cmd->parsed()) chosen = cmd->get_name();

    try {
        return dispatch(chosen, states[chosen]);
    } catch (const ecsim::Error& e) {
        std::cerr << "error [" << ecsim::error_kind_name(e.kind()) << "]: " << e.what()
                  << "\n";
        return e.kind() == ecsim::ErrorKind::InvalidConfig ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

#include "ecsim/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ecsim::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string ecs_to_json(const EnergeticCausalSet& ecs, const std::string& config_hash) {
    json j;
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    j["d"] = ecs.dim();
    j["n_pre"] = ecs.n_pre();
    json events = json::array();
    for (EventId e = 0; e < ecs.num_events(); ++e) {
        json ev;
        ev["id"] = e;
        json parents = json::array();
        for (int l : ecs.in_links(e)) parents.push_back(ecs.link(l).source);
        ev["parents"] = parents;
        events.push_back(ev);
    }
    j["events"] = events;
    json links = json::array();
    for (int l = 0; l < ecs.num_links(); ++l) {
        json lk;
        lk["src"] = ecs.link(l).source;
        lk["dst"] = ecs.link(l).target;
        lk["p"] = std::vector<double>(ecs.momentum(l).begin(), ecs.momentum(l).end());
        links.push_back(lk);
    }
    j["links"] = links;
    return j.dump(2);
}

EnergeticCausalSet ecs_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw Error(ErrorKind::IoError, "malformed causal-set JSON");
    try {
        int d = j.at("d").get<int>();
        int n_pre = j.at("n_pre").get<int>();
        const auto& events = j.at("events");
        EnergeticCausalSet ecs(d, int(events.size()));
        for (const auto& lk : j.at("links")) {
            std::vector<double> p = lk.at("p").get<std::vector<double>>();
            ecs.add_link(lk.at("src").get<EventId>(), lk.at("dst").get<EventId>(), p);
        }
        ecs.finalize(n_pre);
        return ecs;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::IoError, std::string("causal-set JSON: ") + e.what());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    write_text(tmp, text);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IoError, "rename failed for " + path.string());
}

namespace {

std::string header(const std::string& label, const std::string& hash) {
    return "# ecsim " + label + " config=" + hash + "\n";
}

} // namespace

std::string embedding_csv(const EmbeddingConfig& z, const std::string& hash) {
    std::string out = header("embedding", hash);
    out += "event";
    for (int c = 0; c < z.d; ++c) out += ",z" + std::to_string(c);
    out += "\n";
    for (int e = 0; e < z.num_events(); ++e) {
        out += std::to_string(e);
        for (int c = 0; c < z.d; ++c) out += "," + format_double(z.at(e)[c]);
        out += "\n";
    }
    return out;
}

std::string energy_csv(const EnergyReport& report, const std::string& hash) {
    std::string out = header("energy", hash);
    out += "quantity,value\n";
    out += "T," + format_double(report.T) + "\n";
    out += "U," + format_double(report.U) + "\n";
    out += "H," + format_double(report.H) + "\n";
    out += "event,surprise\n";
    for (const auto& [e, s] : report.per_event_surprise)
        out += std::to_string(e) + "," + format_double(s) + "\n";
    return out;
}

std::string variety_csv(const VarietyReport& report, double discrete_value,
                        const std::string& hash) {
    std::string out = header("variety", hash);
    out += "term,value\n";
    out += "discrete," + format_double(discrete_value) + "\n";
    out += "fisher," + format_double(report.fisher_term) + "\n";
    out += "constant," + format_double(report.constant_term) + "\n";
    out += "correction," + format_double(report.correction_term) + "\n";
    out += "Z_V," + format_double(report.Z_V) + "\n";
    out += "N," + std::to_string(report.N) + "\n";
    return out;
}

std::string convergence_csv(const ConvergenceTable& table, const std::string& hash) {
    std::string out = header("convergence", hash);
    out += "N,discrete_det,discrete_kde,fisher,constant,diff_det,diff_kde\n";
    for (const auto& row : table.rows) {
        out += std::to_string(row.N) + "," + format_double(row.discrete_det) + "," +
               format_double(row.discrete_kde) + "," + format_double(row.fisher) + "," +
               format_double(row.constant) + "," + format_double(row.diff_det) + "," +
               format_double(row.diff_kde) + "\n";
    }
    out += "# slope_det=" + format_double(table.slope_det) +
           " slope_kde=" + format_double(table.slope_kde) + "\n";
    return out;
}

std::string energy_json(const EnergyReport& report, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["T"] = report.T;
    j["U"] = report.U;
    j["H"] = report.H;
    json surprise = json::array();
    for (const auto& [e, s] : report.per_event_surprise)
        surprise.push_back({{"event", e}, {"surprise", s}});
    j["per_event_surprise"] = surprise;
    return j.dump(2) + "\n";
}

std::string hydro_json(const HydroState& state, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["t"] = state.t;
    j["grid"] = {{"cells", state.grid.shape[0]},
                 {"lo", state.grid.lo[0]},
                 {"hi", state.grid.hi[0]}};
    j["rho"] = state.rho;
    j["S"] = state.S;
    return j.dump() + "\n";
}

std::string hydro_csv(const HydroState& state, const std::string& hash) {
    std::string out = header("hydro t=" + format_double(state.t), hash);
    out += "cell,z,rho,S\n";
    for (int i = 0; i < state.grid.size(); ++i) {
        out += std::to_string(i) + "," + format_double(state.grid.coord(0, i)) + "," +
               format_double(state.rho[i]) + "," + format_double(state.S[i]) + "\n";
    }
    return out;
}

} // namespace ecsim::io

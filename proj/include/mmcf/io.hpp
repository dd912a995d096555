#pragma once

// Pinned on-disk formats:
//   snapshot      JSON {"n", "topology", "theta": [...], "v": [...]} with
//                 reals printed to 17 significant digits (lossless round trip)
//   trajectory    CSV, header
//                 step,t,energy,dissipation,residual_sup,w_max,G_max,u_max,v_min,v_max
//   continuation  CSV, header sigma,iters,final_residual
//   config        flat key=value lines; [section] headers group keys but do
//                 not qualify them; '#' starts a comment
//   manifest      JSON run summary: config echo, version, status, output
//                 inventory with FNV-1a hashes, wall times.  The content
//                 hash covers the output files only, so deterministic reruns
//                 agree; wall times never enter any hash.
//   report        JSON array of {check, status, measured, bound} rows with
//                 status one of pass | fail | warn | n/a
//
// Files are written atomically (temporary name, then rename).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmcf/cmc.hpp"
#include "mmcf/diagnostics.hpp"
#include "mmcf/grid.hpp"
#include "mmcf/version.hpp"

namespace mmcf {

inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out << text;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move " + tmp + " into place");
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Snapshots.

template <class Real>
std::string snapshot_text(const HeightField<Real>& f) {
    std::ostringstream os;
    os << "{\n  \"n\": " << f.grid.n << ",\n  \"topology\": \""
       << to_string(f.grid.topology) << "\",\n  \"theta\": [";
    for (std::size_t i = 0; i < f.size(); ++i)
        os << (i ? ", " : "") << format_real(double(f.grid.theta[i]));
    os << "],\n  \"v\": [";
    for (std::size_t i = 0; i < f.size(); ++i)
        os << (i ? ", " : "") << format_real(double(f.v[i]));
    os << "]\n}\n";
    return os.str();
}

template <class Real>
void write_snapshot(const std::string& path, const HeightField<Real>& f) {
    write_text_atomic(path, snapshot_text(f));
}

inline HeightField<double> parse_snapshot(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    for (const char* key : {"n", "topology", "theta", "v"})
        if (!j.contains(key))
            throw std::runtime_error(std::string("snapshot missing field '") + key + "'");
    const std::string topo = j["topology"].get<std::string>();
    Grid<double> g;
    if (topo == "axisymmetric")
        g.topology = Topology::Axisymmetric;
    else if (topo == "meridian")
        g.topology = Topology::Meridian;
    else
        throw std::runtime_error("snapshot topology must be axisymmetric or meridian");
    g.n = j["n"].get<int>();
    if (g.topology == Topology::Axisymmetric && g.n < 2)
        throw std::runtime_error("axisymmetric snapshot requires n >= 2");
    if (g.topology == Topology::Meridian && g.n != 1)
        throw std::runtime_error("meridian snapshot requires n = 1");
    g.theta = j["theta"].get<std::vector<double>>();
    const auto v = j["v"].get<std::vector<double>>();
    if (g.theta.size() != v.size())
        throw std::runtime_error("snapshot theta and v lengths differ");
    if (g.theta.size() < 5) throw std::runtime_error("snapshot needs at least 5 nodes");
    for (std::size_t i = 0; i + 1 < g.theta.size(); ++i)
        if (!(g.theta[i] < g.theta[i + 1]))
            throw std::runtime_error("snapshot theta must be strictly increasing");
    if (g.topology == Topology::Axisymmetric && g.theta.front() != 0.0)
        throw std::runtime_error("axisymmetric snapshot must start at theta = 0");
    g.h = (g.theta.back() - g.theta.front()) / double(g.theta.size() - 1);
    g.y.resize(g.theta.size());
    g.s.resize(g.theta.size());
    for (std::size_t i = 0; i < g.theta.size(); ++i) {
        g.y[i] = std::cos(g.theta[i]);
        g.s[i] = std::sin(g.theta[i]);
    }
    HeightField<double> f(std::move(g));
    f.v = v;
    return f;
}

inline HeightField<double> read_snapshot(const std::string& path) {
    return parse_snapshot(read_text(path));
}

// ---------------------------------------------------------------------------
// Trajectory and continuation tables.

inline constexpr const char* trajectory_csv_header =
    "step,t,energy,dissipation,residual_sup,w_max,G_max,u_max,v_min,v_max";

inline std::string trajectory_csv_text(const std::vector<DiagnosticsRecord>& recs) {
    std::ostringstream os;
    os << trajectory_csv_header << "\n";
    for (const auto& r : recs) {
        os << r.step;
        for (double x : {r.t, r.energy, r.dissipation, r.residual_sup, r.w_max,
                         r.G_max, r.u_max, r.v_min, r.v_max})
            os << ',' << format_real(x);
        os << "\n";
    }
    return os.str();
}

inline void write_trajectory_csv(const std::string& path,
                                 const std::vector<DiagnosticsRecord>& recs) {
    write_text_atomic(path, trajectory_csv_text(recs));
}

inline std::string continuation_csv_text(const std::vector<ContinuationRow>& rows) {
    std::ostringstream os;
    os << "sigma,iters,final_residual\n";
    for (const auto& r : rows)
        os << format_real(r.sigma) << ',' << r.iters << ','
           << format_real(r.residual) << "\n";
    return os.str();
}

inline void write_continuation_csv(const std::string& path,
                                   const std::vector<ContinuationRow>& rows) {
    write_text_atomic(path, continuation_csv_text(rows));
}

// ---------------------------------------------------------------------------
// Configuration files.

struct Config {
    // bare key -> value; [section] lines organize the file without
    // qualifying the keys under them
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    const std::string& raw(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end())
            throw std::runtime_error("missing config key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw(key) : fallback;
    }

    double get_real(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const std::string& s = raw(key);
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size())
            throw std::runtime_error("config key '" + key + "': cannot parse '" + s +
                                     "' as a number");
        return x;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string& s = raw(key);
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size())
            throw std::runtime_error("config key '" + key + "': cannot parse '" + s +
                                     "' as an integer");
        return x;
    }
};

namespace detail {
inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}
} // namespace detail

inline Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw std::runtime_error("config line " + std::to_string(lineno) +
                                         ": malformed section header");
            continue;   // sections group keys visually only
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = detail::strip(line.substr(0, eq));
        const std::string val = detail::strip(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": empty key");
        if (cfg.values.count(key))
            throw std::runtime_error("duplicate config key '" + key + "'");
        cfg.values[key] = val;
    }
    return cfg;
}

inline Config read_config(const std::string& path) {
    return parse_config_text(read_text(path));
}

// ---------------------------------------------------------------------------
// Manifest.

inline constexpr std::uint64_t fnv1a_offset = 0xcbf29ce484222325ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = fnv1a_offset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = fnv1a_offset) {
    return fnv1a64(s.data(), s.size(), h);
}

struct OutputEntry {
    std::string file;          // name relative to the run directory
    std::uint64_t bytes = 0;
    std::uint64_t hash = 0;    // FNV-1a of the file contents
};

inline OutputEntry hash_output(const std::string& dir, const std::string& name) {
    const std::string text = read_text(dir.empty() ? name : dir + "/" + name);
    return {name, text.size(), fnv1a64(text)};
}

inline std::string hex64(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Combined hash of the run outputs: name, then contents, chained in order.
inline std::uint64_t combined_output_hash(const std::vector<OutputEntry>& outputs) {
    std::uint64_t h = fnv1a_offset;
    for (const auto& o : outputs) {
        h = fnv1a64(o.file, h);
        h = fnv1a64(&o.hash, sizeof o.hash, h);
    }
    return h;
}

inline std::string manifest_text(const std::string& command, const std::string& status,
                                 const Config& cfg,
                                 const std::vector<OutputEntry>& outputs,
                                 const std::map<std::string, double>& wall_times) {
    nlohmann::json j;
    j["version"] = version_string;
    j["command"] = command;
    j["status"] = status;
    nlohmann::json jc = nlohmann::json::object();
    for (const auto& [k, v] : cfg.values) jc[k] = v;
    j["config"] = jc;
    nlohmann::json jo = nlohmann::json::array();
    for (const auto& o : outputs)
        jo.push_back({{"file", o.file}, {"bytes", o.bytes}, {"fnv1a", hex64(o.hash)}});
    j["outputs"] = jo;
    j["content_hash"] = hex64(combined_output_hash(outputs));
    // wall times are informational only and stay outside every hash
    nlohmann::json jt = nlohmann::json::object();
    for (const auto& [k, v] : wall_times) jt[k] = v;
    j["wall_time_seconds"] = jt;
    return j.dump(2) + "\n";
}

inline void write_manifest(const std::string& path, const std::string& command,
                           const std::string& status, const Config& cfg,
                           const std::vector<OutputEntry>& outputs,
                           const std::map<std::string, double>& wall_times) {
    write_text_atomic(path, manifest_text(command, status, cfg, outputs, wall_times));
}

// ---------------------------------------------------------------------------
// Verification report.

struct CheckResult {
    std::string name;
    std::string status;   // pass | fail | warn | n/a
    double measured = 0;
    double bound = 0;
    std::string note;
};

inline std::string report_text(const std::vector<CheckResult>& checks) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json row = {{"check", c.name},
                              {"status", c.status},
                              {"measured", c.measured},
                              {"bound", c.bound}};
        if (!c.note.empty()) row["note"] = c.note;
        arr.push_back(row);
    }
    return arr.dump(2) + "\n";
}

inline void write_report(const std::string& path, const std::vector<CheckResult>& checks) {
    write_text_atomic(path, report_text(checks));
}

} // namespace mmcf

// mmcf: batch front end for the flow library.
//
//   flow    evolve an initial surface toward stationarity; writes initial.json,
//           final.json, trajectory.csv, manifest.json into the output directory
//   cmc     construct the stationary start by continuation in sigma; writes
//           initial.json, continuation.csv, manifest.json
//   verify  run a named check suite (oracles | flow | all); writes report.json
//   sweep   epsilon uniformity sweep (--eps-list) or resolution order sweep
//           (--n-list); writes report.json
//
// Configuration is flat key=value text; [section] headers group lines without
// qualifying the keys (grammar documented in the README).  Every config key
// has a same-named command-line flag that overrides the file.  The only
// environment variable honored is MMCF_OUT, a fallback for --out.
//
// Exit codes: 0 success (flow: converged; verify/sweep: no failed check),
// 2 flow timed out, 1 any error.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mmcf/io.hpp"
#include "mmcf/verify.hpp"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

// --------------------------------------------------------------------------
// Argument plumbing shared by the subcommands.

struct CmdArgs {
    std::string config_path;
    std::string out_dir;
    std::map<std::string, std::string> overrides;   // only flags actually passed
};

void add_common_flags(CLI::App* cmd, CmdArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--out", args.out_dir,
                    "output directory (fallback: env MMCF_OUT, then ./out)");
}

void add_override_flags(CLI::App* cmd, const std::vector<std::string>& keys,
                        CmdArgs& args) {
    for (const std::string& key : keys)
        cmd->add_option_function<std::string>(
            "--" + key,
            [&args, key](const std::string& v) { args.overrides[key] = v; },
            "override config key '" + key + "'");
}

mmcf::Config load_config(const CmdArgs& args, const std::set<std::string>& allowed) {
    mmcf::Config cfg;
    if (!args.config_path.empty()) cfg = mmcf::read_config(args.config_path);
    for (const auto& [k, v] : args.overrides) cfg.values[k] = v;
    for (const auto& [k, v] : cfg.values)
        if (!allowed.count(k))
            throw std::runtime_error("unknown config key '" + k + "'");
    return cfg;
}

std::string resolve_out(const CmdArgs& args) {
    if (!args.out_dir.empty()) return args.out_dir;
    if (const char* env = std::getenv("MMCF_OUT"); env && *env) return env;
    return "out";
}

// --------------------------------------------------------------------------
// Config -> library objects.

mmcf::Scheme parse_scheme(const std::string& s) {
    if (s == "semi_implicit") return mmcf::Scheme::SemiImplicit;
    if (s == "explicit_rk2") return mmcf::Scheme::ExplicitRK2;
    throw std::runtime_error(
        "config key 'scheme': expected semi_implicit or explicit_rk2, got '" + s + "'");
}

mmcf::DtPolicy parse_dt_policy(const std::string& s) {
    if (s == "fixed") return mmcf::DtPolicy::Fixed;
    if (s == "cfl") return mmcf::DtPolicy::Cfl;
    throw std::runtime_error("config key 'dt_policy': expected fixed or cfl, got '" +
                             s + "'");
}

struct BaseGeometry {
    double sigma = 0.5;
    double eps = 0.05;
    double r = 1.0;
    int n = 2;
    std::size_t N = 200;
};

BaseGeometry read_geometry(const mmcf::Config& cfg) {
    BaseGeometry geo;
    geo.sigma = cfg.get_real("sigma", 0.5);
    if (!(geo.sigma > -1 && geo.sigma < 1))
        throw std::runtime_error("sigma out of (-1,1)");
    geo.eps = cfg.get_real("eps", 0.05);
    if (!(geo.eps > 0)) throw std::runtime_error("config key 'eps': must be positive");
    geo.r = cfg.get_real("r", 1.0);
    if (!(geo.r > 0)) throw std::runtime_error("config key 'r': must be positive");
    geo.n = static_cast<int>(cfg.get_int("n", 2));
    if (geo.n < 1) throw std::runtime_error("config key 'n': must be >= 1");
    const auto N = cfg.get_int("N", 200);
    if (N < 5) throw std::runtime_error("config key 'N': need at least 5 nodes");
    geo.N = static_cast<std::size_t>(N);
    return geo;
}

// n = 1 runs in a meridian plane over the symmetric domain [-theta_b, theta_b];
// n >= 2 is axisymmetric over [0, theta_b].
mmcf::Grid<double> make_run_grid(const BaseGeometry& geo, double eps) {
    const auto lb = mmcf::boundary_angle(geo.r, eps);
    if (geo.n == 1) return mmcf::make_meridian_grid(-lb.theta_b, lb.theta_b, geo.N);
    return mmcf::make_axisymmetric_grid(geo.n, lb.theta_b, geo.N);
}

mmcf::FlowParams<double> read_flow_params(const mmcf::Config& cfg, double sigma) {
    mmcf::FlowParams<double> p;
    p.sigma = sigma;
    p.scheme = parse_scheme(cfg.get_string("scheme", "semi_implicit"));
    p.dt_policy = parse_dt_policy(cfg.get_string("dt_policy", "fixed"));
    p.dt = cfg.get_real("dt", 1e-3);
    if (!(p.dt > 0)) throw std::runtime_error("config key 'dt': must be positive");
    p.cfl_safety = cfg.get_real("cfl_safety", 0.9);
    if (!(p.cfl_safety > 0 && p.cfl_safety <= 1))
        throw std::runtime_error("config key 'cfl_safety': must lie in (0, 1]");
    p.t_max = cfg.get_real("t_max", 50.0);
    if (p.t_max < 0) throw std::runtime_error("config key 't_max': must be >= 0");
    p.residual_tol = cfg.get_real("residual_tol", 1e-6);
    return p;
}

// Stationary cap through the lifted boundary circle, optionally perturbed by
// a pole bump that vanishes at the Dirichlet nodes.
mmcf::HeightField<double> cap_initial(const mmcf::Grid<double>& g,
                                      const BaseGeometry& geo, double eps,
                                      double bump) {
    const double R = mmcf::radius_from_boundary(geo.r, geo.sigma, eps);
    auto f = mmcf::cap_height_field(R, geo.sigma, g);
    if (bump != 0) {
        const double tb = g.theta.back();
        for (std::size_t i = 0; i < f.size(); ++i)
            f.v[i] += bump * std::cos(1.5707963267948966 * g.theta[i] / tb);
    }
    return f;
}

// --------------------------------------------------------------------------
// Shared report printing (same shape as the acceptance gate).

void print_rows(const std::vector<mmcf::CheckResult>& rows) {
    int i = 0;
    for (const auto& c : rows)
        std::printf("[%2d/%zu] %-28s %-4s  measured %-11.4g bound %-9.4g %s\n", ++i,
                    rows.size(), c.name.c_str(), c.status.c_str(), c.measured, c.bound,
                    c.note.c_str());
}

bool all_hard_checks_pass(const std::vector<mmcf::CheckResult>& rows) {
    for (const auto& c : rows)
        if (c.status == "fail") return false;
    return true;
}

// --------------------------------------------------------------------------
// flow

const std::set<std::string> flow_keys = {
    "sigma",        "eps",  "r",       "n",          "N",
    "scheme",       "dt",   "dt_policy", "cfl_safety", "t_max",
    "residual_tol", "initial", "bump", "initial_file", "horosphere_height",
    "diag_every"};

int cmd_flow(const CmdArgs& args) {
    using namespace mmcf;
    const auto t_start = Clock::now();
    const Config cfg = load_config(args, flow_keys);
    const std::string out = resolve_out(args);

    const BaseGeometry geo = read_geometry(cfg);
    const FlowParams<double> p = read_flow_params(cfg, geo.sigma);

    Config eff;   // resolved configuration echoed into the manifest
    eff.values["sigma"] = format_real(geo.sigma);
    eff.values["eps"] = format_real(geo.eps);
    eff.values["r"] = format_real(geo.r);
    eff.values["n"] = std::to_string(geo.n);
    eff.values["N"] = std::to_string(geo.N);
    eff.values["scheme"] = to_string(p.scheme);
    eff.values["dt_policy"] = to_string(p.dt_policy);
    eff.values["dt"] = format_real(p.dt);
    eff.values["cfl_safety"] = format_real(p.cfl_safety);
    eff.values["t_max"] = format_real(p.t_max);
    eff.values["residual_tol"] = format_real(p.residual_tol);

    const std::string mode = cfg.get_string("initial", "cap");
    HeightField<double> f0;
    if (mode == "cap") {
        const double bump = cfg.get_real("bump", 0.05);
        f0 = cap_initial(make_run_grid(geo, geo.eps), geo, geo.eps, bump);
        eff.values["bump"] = format_real(bump);
    } else if (mode == "horosphere") {
        const double c = cfg.get_real("horosphere_height", geo.eps);
        f0 = horosphere_field(c, make_run_grid(geo, geo.eps));
        eff.values["horosphere_height"] = format_real(c);
    } else if (mode == "file") {
        const std::string path = cfg.raw("initial_file");
        f0 = read_snapshot(path);   // snapshot fixes topology, n, and the grid
        eff.values["initial_file"] = path;
        eff.values["n"] = std::to_string(f0.grid.n);
        eff.values["N"] = std::to_string(f0.size());
    } else {
        throw std::runtime_error(
            "config key 'initial': expected cap, horosphere, or file, got '" + mode +
            "'");
    }
    eff.values["initial"] = mode;

    RunObservers<double> obs;
    obs.diag_every = cfg.get_int("diag_every", 0);
    eff.values["diag_every"] = std::to_string(obs.diag_every);

    const auto t_run = Clock::now();
    const Trajectory<double> traj = run_to_stationarity(f0, p, obs);
    const double run_s = seconds_since(t_run);

    fs::create_directories(out);
    write_snapshot(join(out, "initial.json"), f0);
    write_snapshot(join(out, "final.json"), traj.final_field);
    write_trajectory_csv(join(out, "trajectory.csv"), traj.records);
    const std::vector<OutputEntry> outputs = {hash_output(out, "initial.json"),
                                              hash_output(out, "final.json"),
                                              hash_output(out, "trajectory.csv")};
    write_manifest(join(out, "manifest.json"), "flow", to_string(traj.status), eff,
                   outputs, {{"run", run_s}, {"total", seconds_since(t_start)}});

    std::printf("flow: %s after %lld steps, t = %.6g, residual = %.4g\n",
                to_string(traj.status), static_cast<long long>(traj.steps),
                traj.t_final, traj.records.back().residual_sup);
    if (!traj.message.empty()) std::printf("flow: %s\n", traj.message.c_str());
    std::printf("flow: wrote %s\n", out.c_str());

    switch (traj.status) {
        case RunStatus::Converged: return 0;
        case RunStatus::TimedOut: return 2;
        default: return 1;
    }
}

// --------------------------------------------------------------------------
// cmc

const std::set<std::string> cmc_keys = {"sigma0", "eps", "r", "n",
                                        "N",      "continuation_step"};

int cmd_cmc(const CmdArgs& args) {
    using namespace mmcf;
    const auto t_start = Clock::now();
    Config cfg = load_config(args, cmc_keys);
    const std::string out = resolve_out(args);

    // reuse the geometry reader; sigma0 plays the role of sigma
    cfg.values["sigma"] = cfg.get_string("sigma0", "0.5");
    cfg.values.erase("sigma0");
    const BaseGeometry geo = read_geometry(cfg);
    const double step = cfg.get_real("continuation_step", 0.05);

    const auto t_solve = Clock::now();
    const auto g = make_run_grid(geo, geo.eps);
    const auto built = construct_initial(g, geo.eps, geo.sigma, step);
    const double solve_s = seconds_since(t_solve);

    fs::create_directories(out);
    write_snapshot(join(out, "initial.json"), built.field);
    write_continuation_csv(join(out, "continuation.csv"), built.log);

    Config eff;
    eff.values["sigma0"] = format_real(geo.sigma);
    eff.values["eps"] = format_real(geo.eps);
    eff.values["r"] = format_real(geo.r);
    eff.values["n"] = std::to_string(geo.n);
    eff.values["N"] = std::to_string(geo.N);
    eff.values["continuation_step"] = format_real(step);
    const std::vector<OutputEntry> outputs = {hash_output(out, "initial.json"),
                                              hash_output(out, "continuation.csv")};
    write_manifest(join(out, "manifest.json"), "cmc", "converged", eff, outputs,
                   {{"solve", solve_s}, {"total", seconds_since(t_start)}});

    const auto slab = slab_report(built.field, geo.r, geo.eps, geo.sigma);
    const auto bnd = boundary_structure_report(built.field, geo.r, geo.eps, geo.sigma);
    std::printf("cmc: reached sigma0 = %g in %zu continuation steps\n", geo.sigma,
                built.log.size());
    std::printf("cmc: slab margins upper %.4g lower %.4g (%s)\n",
                slab.upper_margin, slab.lower_margin,
                slab.inside ? "inside" : "OUTSIDE");
    std::printf(
        "cmc: boundary normal %.6g, collar min %.4g (bound %.4g), H_E %.6g in "
        "(%.4g, %.4g)\n",
        bnd.boundary_normal, bnd.collar_normal_min, bnd.collar_normal_bound,
        bnd.euclidean_H, bnd.euclidean_H_lo, bnd.euclidean_H_hi);
    std::printf("cmc: wrote %s\n", out.c_str());
    return 0;
}

// --------------------------------------------------------------------------
// verify

int cmd_verify(const CmdArgs& args, const std::string& suite) {
    using namespace mmcf;
    const auto t_start = Clock::now();
    load_config(args, {});   // verify takes no config keys; reject any given
    const std::string out = resolve_out(args);

    const auto rows = verification_suite(suite);
    print_rows(rows);
    const bool ok = all_hard_checks_pass(rows);

    fs::create_directories(out);
    write_report(join(out, "report.json"), rows);
    Config eff;
    eff.values["suite"] = suite;
    write_manifest(join(out, "manifest.json"), "verify", ok ? "pass" : "fail", eff,
                   {hash_output(out, "report.json")},
                   {{"total", seconds_since(t_start)}});
    std::printf("verify (%s): %s, report in %s\n", suite.c_str(),
                ok ? "PASS" : "FAIL", out.c_str());
    return ok ? 0 : 1;
}

// --------------------------------------------------------------------------
// sweep

const std::set<std::string> sweep_keys = {
    "sigma", "eps",        "r",          "n",     "N",    "scheme",
    "dt",    "dt_policy",  "cfl_safety", "t_max", "residual_tol", "bump"};

std::vector<std::string> split_list(const std::string& s, const char* flag) {
    if (trim(s).empty()) throw std::runtime_error(std::string(flag) + " is empty");
    std::vector<std::string> items;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        const std::string item = trim(s.substr(start, comma - start));
        if (item.empty())
            throw std::runtime_error(std::string(flag) + " has an empty element");
        items.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

std::vector<double> parse_real_list(const std::string& s, const char* flag) {
    std::vector<double> out;
    for (const std::string& item : split_list(s, flag)) {
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size())
            throw std::runtime_error(std::string(flag) + ": cannot parse '" + item +
                                     "' as a number");
        out.push_back(x);
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* flag) {
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(s, flag)) {
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || x < 5)
            throw std::runtime_error(std::string(flag) + ": '" + item +
                                     "' is not a node count >= 5");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

std::string short_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

// Runs one flow per epsilon (descending), fanning out over up to `jobs`
// threads.  Results land in slots indexed by the sorted list, so the merged
// report does not depend on thread scheduling.
std::vector<mmcf::CheckResult> eps_sweep_rows(const mmcf::Config& cfg,
                                              std::vector<double> eps, int jobs) {
    using namespace mmcf;
    for (double e : eps)
        if (!(e > 0))
            throw std::runtime_error("--eps-list: values must be positive");
    std::sort(eps.begin(), eps.end(), std::greater<double>());

    BaseGeometry geo = read_geometry(cfg);
    const FlowParams<double> p = read_flow_params(cfg, geo.sigma);
    const double bump = cfg.get_real("bump", 0.05);

    std::vector<Trajectory<double>> runs(eps.size());
    std::vector<std::exception_ptr> errors(eps.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= eps.size()) return;
            try {
                auto f = cap_initial(make_run_grid(geo, eps[k]), geo, eps[k], bump);
                runs[k] = run_to_stationarity(std::move(f), p, {});
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t fan =
        std::min<std::size_t>(std::max(jobs, 1), eps.size());
    if (fan <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < fan; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    std::vector<CheckResult> rows;
    double wmin = std::numeric_limits<double>::infinity(), wmax = 0;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        double w = 0;
        for (const auto& rec : runs[k].records) w = std::max(w, rec.w_max);
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
        std::ostringstream note;
        note << "steps " << runs[k].steps << ", t " << short_real(runs[k].t_final);
        if (!runs[k].message.empty()) note << "; " << runs[k].message;
        rows.push_back({"flow_eps_" + short_real(eps[k]),
                        runs[k].status == RunStatus::Converged ? "pass" : "fail", w,
                        0.0, note.str()});
    }
    rows.push_back({"w_max_spread", wmax / wmin <= 1.5 ? "pass" : "fail",
                    wmax / wmin, 1.5, "max/min of the per-run slope bounds"});

    std::vector<double> cauchy;
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
        cauchy.push_back(
            sup_overlap_difference(runs[k].final_field, runs[k + 1].final_field));
        rows.push_back({"cauchy_sup_" + short_real(eps[k]) + "_to_" +
                            short_real(eps[k + 1]),
                        "n/a", cauchy.back(), 0.0,
                        "sup |v_coarse - v_fine| on the overlap"});
    }
    if (cauchy.size() >= 2) {
        double ratio = 0;
        for (std::size_t k = 0; k + 1 < cauchy.size(); ++k)
            ratio = std::max(ratio, cauchy[k + 1] / cauchy[k]);
        rows.push_back({"cauchy_contraction", ratio <= 0.6 ? "pass" : "fail", ratio,
                        0.6, "max ratio of consecutive sups"});
    }
    return rows;
}

int cmd_sweep(const CmdArgs& args, bool has_eps, const std::string& eps_list,
              bool has_n, const std::string& n_list, int jobs) {
    using namespace mmcf;
    const auto t_start = Clock::now();
    const Config cfg = load_config(args, sweep_keys);
    const std::string out = resolve_out(args);

    if (has_eps == has_n)
        throw std::runtime_error("sweep needs exactly one of --eps-list or --n-list");

    std::vector<CheckResult> rows;
    Config eff;
    if (has_eps) {
        rows = eps_sweep_rows(cfg, parse_real_list(eps_list, "--eps-list"), jobs);
        eff = cfg;
        eff.values["eps_list"] = eps_list;
    } else {
        const auto Ns = parse_size_list(n_list, "--n-list");
        const BaseGeometry geo = read_geometry(cfg);
        rows = {check_resolution_order(Ns, geo.r, geo.sigma, geo.eps)};
        eff.values["sigma"] = format_real(geo.sigma);
        eff.values["eps"] = format_real(geo.eps);
        eff.values["r"] = format_real(geo.r);
        eff.values["n_list"] = n_list;
    }
    print_rows(rows);
    const bool ok = all_hard_checks_pass(rows);

    fs::create_directories(out);
    write_report(join(out, "report.json"), rows);
    write_manifest(join(out, "manifest.json"), "sweep", ok ? "pass" : "fail", eff,
                   {hash_output(out, "report.json")},
                   {{"total", seconds_since(t_start)}});
    std::printf("sweep: %s, report in %s\n", ok ? "PASS" : "FAIL", out.c_str());
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"modified mean curvature flow of star-shaped graphs: evolve, "
                 "construct stationary starts, verify, sweep"};
    app.require_subcommand(1);

    CmdArgs flow_args, cmc_args, verify_args, sweep_args;
    std::string suite = "oracles";
    std::string eps_list, n_list;
    int jobs = 1;

    CLI::App* flow = app.add_subcommand("flow", "evolve a surface to stationarity");
    add_common_flags(flow, flow_args);
    add_override_flags(flow,
                       {"sigma", "eps", "r", "n", "N", "scheme", "dt", "dt_policy",
                        "cfl_safety", "t_max", "residual_tol", "initial", "bump",
                        "initial_file", "horosphere_height", "diag_every"},
                       flow_args);

    CLI::App* cmc = app.add_subcommand(
        "cmc", "construct the stationary start by continuation in sigma");
    add_common_flags(cmc, cmc_args);
    add_override_flags(cmc, {"sigma0", "eps", "r", "n", "N", "continuation_step"},
                       cmc_args);

    CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
    add_common_flags(verify, verify_args);
    verify->add_option("--suite", suite, "oracles | flow | all")
        ->capture_default_str();

    CLI::App* sweep = app.add_subcommand(
        "sweep", "epsilon uniformity sweep or resolution order sweep");
    add_common_flags(sweep, sweep_args);
    sweep->add_option("--eps-list", eps_list, "comma-separated epsilon values");
    sweep->add_option("--n-list", n_list, "comma-separated node counts");
    sweep->add_option("--jobs", jobs, "max concurrent runs")->capture_default_str();
    add_override_flags(sweep,
                       {"sigma", "eps", "r", "n", "N", "scheme", "dt", "dt_policy",
                        "cfl_safety", "t_max", "residual_tol", "bump"},
                       sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0; every usage error maps to plain 1
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (flow->parsed()) return cmd_flow(flow_args);
        if (cmc->parsed()) return cmd_cmc(cmc_args);
        if (verify->parsed()) return cmd_verify(verify_args, suite);
        if (sweep->parsed())
            return cmd_sweep(sweep_args, sweep->count("--eps-list") > 0, eps_list,
                             sweep->count("--n-list") > 0, n_list, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

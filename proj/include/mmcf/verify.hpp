#pragma once

// Named verification checks over oracles, flows, and elliptic solves, shared
// by the gate binary and the CLI verify subcommand.  Each check yields a
// CheckResult row; suites aggregate them:
//   "oracles"  closed-form closure rows, fast
//   "flow"     stationarity, limits, balance, monotonicity, max principle,
//              uniformity, and elliptic agreement (the run battery)
//   "all"      the full twelve-row battery incl. height bound, barriers,
//              boundary asymptotics, and the sigma = 0 regression
// Hard rows report pass|fail; the asymptotics row is soft (pass|warn).
//
// Fixtures are locked at desk scale (N <= 400, every run well under 60 s on
// one core).  The drift row runs at boundary radius r = 0.1 where the
// discrete stationary cap sits within 1e-6 of the continuum cap; at r = 1
// that gap alone is ~1.7e-6.  Per-step energy descent is enforced at 1e-10
// on the balance run; on the remaining runs the tolerance is
// 1e-10 + 4e-5 dt, since the semidiscrete defect drives late-tail increments
// linear in dt (measured coefficient 1.6e-5 at eps = 0.025, N = 400).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmcf/cmc.hpp"
#include "mmcf/diagnostics.hpp"
#include "mmcf/exact_solutions.hpp"
#include "mmcf/flow.hpp"
#include "mmcf/io.hpp"

namespace mmcf {

namespace verify_detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

inline CheckResult row(const std::string& name, bool ok, double measured,
                       double bound, const std::string& note = "",
                       bool soft = false) {
    return {name, ok ? "pass" : (soft ? "warn" : "fail"), measured, bound, note};
}

// Per-step descent tolerance for runs other than the dedicated balance run.
inline double descent_tol(double dt) { return 1e-10 + 4e-5 * dt; }

inline HeightField<double> cap_on(const Grid<double>& g, double r, double sigma,
                                  double eps) {
    return cap_height_field(radius_from_boundary(r, sigma, eps), sigma, g);
}

// Stationary cap plus the standard boundary-vanishing cosine bump.
inline HeightField<double> bumped_cap(const Grid<double>& g, double r, double sigma,
                                      double eps, double amp) {
    auto f = cap_on(g, r, sigma, eps);
    const double tb = g.theta.back();
    for (std::size_t i = 0; i + 1 < f.size(); ++i)
        f.v[i] += amp * std::cos(std::numbers::pi * g.theta[i] / (2 * tb));
    return f;
}

inline double sup_diff(const HeightField<double>& a, const HeightField<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

struct NamedRun {
    std::string label;
    double r, eps, sigma, dt;
    Trajectory<double> traj;
};

} // namespace verify_detail

// Discrete mean curvature against the cap family: sup|H - sigma| at N = 200
// over sigma x n, all nodes, plus the halving ratio.  sigma = 0 caps are
// constant fields, exactly stationary discretely, so their ratio is skipped.
inline CheckResult check_curvature_oracle_closure() {
    using namespace verify_detail;
    const auto lb = boundary_angle(1.0, 0.05);
    double worst_err = 0, worst_ratio = 1e9;
    for (int n : {1, 2, 3}) {
        for (double sg : {0.0, 0.3, 0.5, 0.9}) {
            const double R = radius_from_boundary(1.0, sg, 0.05);
            double errs[2];
            std::size_t k = 0;
            for (std::size_t N : {std::size_t(200), std::size_t(399)}) {
                Grid<double> g = (n == 1)
                    ? make_meridian_grid(-lb.theta_b, lb.theta_b, N)
                    : make_axisymmetric_grid(n, lb.theta_b, N);
                const auto H = mean_curvature(cap_height_field(R, sg, g));
                double m = 0;
                for (double x : H) m = std::max(m, std::abs(x - sg));
                errs[k++] = m;
            }
            worst_err = std::max(worst_err, errs[0]);
            if (errs[0] > 1e-12)   // below that the cap is discretely exact
                worst_ratio = std::min(worst_ratio, errs[0] / errs[1]);
        }
    }
    const bool ok = worst_err <= 2e-3 && worst_ratio >= 3.5;
    return row("curvature_oracle_closure", ok, worst_err, 2e-3,
               "min halving ratio " + fmt(worst_ratio) + " (need >= 3.5)");
}

// The remaining closed-form closures, reported as individual oracle rows.
inline std::vector<CheckResult> oracle_rows() {
    using namespace verify_detail;
    std::vector<CheckResult> rows;
    rows.push_back(check_curvature_oracle_closure());

    {   // horosphere u = const is stationary at sigma = 1
        auto g = make_axisymmetric_grid(2, 1.3, std::size_t(301));
        double m = 0;
        const auto sp = flow_rhs(horosphere_field(0.4, g), 1.0);
        for (std::size_t i = 0; i < sp.size(); ++i)
            if (!g.is_dirichlet(i)) m = std::max(m, std::abs(sp[i]));
        rows.push_back(row("horosphere_stationarity", m <= 5e-4, m, 5e-4));
    }
    {   // meridian tangent-plane section is stationary
        auto g = make_meridian_grid(-0.3, 1.2, std::size_t(401));
        const auto sp = flow_rhs(tangent_plane_eta(2.0, 0.5, g), 0.5);
        double m = 0;
        for (std::size_t i = 1; i + 1 < sp.size(); ++i)
            m = std::max(m, std::abs(sp[i]));
        rows.push_back(row("tangent_plane_stationarity", m <= 2e-3, m, 2e-3));
    }
    {   // gradient quantity is the constant R (1 - sigma^2) along caps
        const double R = radius_from_boundary(1.0, 0.5, 0.1);
        auto g = make_axisymmetric_grid(2, boundary_angle(1.0, 0.1).theta_b,
                                        std::size_t(200));
        const auto G = gradient_quantity(cap_on(g, 1.0, 0.5, 0.1), 0.5);
        double m = 0;
        for (double x : G) m = std::max(m, std::abs(x - R * 0.75));
        rows.push_back(row("gradient_quantity_cap_constant", m <= 5e-10, m, 5e-10));
    }
    {   // energy closed forms (hemisphere area, meridian strip)
        const auto lb = boundary_angle(1.0, 0.05);
        auto g = make_axisymmetric_grid(2, lb.theta_b, std::size_t(800));
        HeightField<double> f(g, std::log(std::sqrt(1.0025)));
        const double e1 = std::abs(energy(f, 0.0) - 119.5375024168482);
        rows.push_back(row("energy_closed_form_axisymmetric", e1 <= 0.05, e1, 0.05));

        auto gm = make_meridian_grid(-lb.theta_b, lb.theta_b, std::size_t(401));
        HeightField<double> fm(gm, 0.0);
        const double e2 = std::abs(energy(fm, 0.0) - 7.37900773797781);
        rows.push_back(row("energy_closed_form_meridian", e2 <= 0.005, e2, 0.005));
    }
    {   // divergence identity: d/dtheta(s^{n-1} y^{-n} v'/w) = n H y^{-(n+1)} s^{n-1}
        auto g = make_axisymmetric_grid(2, boundary_angle(1.0, 0.1).theta_b,
                                        std::size_t(400));
        auto f = cap_on(g, 1.0, 0.5, 0.1);
        for (std::size_t i = 0; i + 1 < f.size(); ++i)   // pole moves, boundary fixed
            f.v[i] += 0.05 * std::cos(3 * g.theta[i]);
        const auto d = derivatives(f);
        const auto w = slope_factor(d.d1);
        const auto H = mean_curvature(f);
        std::vector<double> flux(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            flux[i] = g.s[i] * std::pow(g.y[i], -2.0) * d.d1[i] / w[i];
        double m = 0;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            if (g.theta[i] > 1.2) break;   // weight y^{-(n+1)} amplifies the tail
            const double lhs = (flux[i + 1] - flux[i - 1]) / (2 * g.h);
            const double rhs = 2 * H[i] * std::pow(g.y[i], -3.0) * g.s[i];
            m = std::max(m, std::abs(lhs - rhs));
        }
        rows.push_back(row("divergence_identity", m <= 0.1, m, 0.1,
                           "window theta <= 1.2"));
    }
    return rows;
}

// Observed convergence order of sup|H - sigma| on the stationary cap under
// grid refinement (Richardson), used by the resolution sweep.
inline CheckResult check_resolution_order(const std::vector<std::size_t>& Ns,
                                          double r = 1.0, double sigma = 0.5,
                                          double eps = 0.05) {
    if (Ns.size() < 2)
        throw std::invalid_argument("resolution sweep needs at least two sizes");
    const auto lb = boundary_angle(r, eps);
    const double R = radius_from_boundary(r, sigma, eps);
    std::vector<double> errs;
    for (std::size_t N : Ns) {
        auto g = make_axisymmetric_grid(2, lb.theta_b, N);
        const auto H = mean_curvature(cap_height_field(R, sigma, g));
        double m = 0;
        for (double x : H) m = std::max(m, std::abs(x - sigma));
        errs.push_back(m);
    }
    double order = 1e9;
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        const double hr = double(Ns[k + 1] - 1) / double(Ns[k] - 1);
        order = std::min(order, std::log(errs[k] / errs[k + 1]) / std::log(hr));
    }
    std::ostringstream note;
    note << "errors";
    for (double e : errs) note << " " << verify_detail::fmt(e);
    return verify_detail::row("curvature_resolution_order", order >= 1.9, order, 1.9,
                              note.str());
}

// The full run battery.  "flow" emits the seven run-based rows; "all"
// prepends the oracle closure row and appends height bound, barriers,
// asymptotics, and the sigma = 0 regression.
inline std::vector<CheckResult> verification_suite(const std::string& suite) {
    using namespace verify_detail;
    if (suite == "oracles") return oracle_rows();
    if (suite != "flow" && suite != "all")
        throw std::invalid_argument("unknown verify suite '" + suite +
                                    "' (expected oracles, flow, or all)");
    const bool full = suite == "all";

    const double r = 1.0, eps = 0.05, sigma = 0.5;
    const std::size_t N = 400;
    const double dt = 1.5e-4;
    const auto lb = boundary_angle(r, eps);
    const double R = radius_from_boundary(r, sigma, eps);

    std::vector<NamedRun> runs;   // converged-run pool for the global checks
    std::vector<CheckResult> rows;

    if (full) rows.push_back(check_curvature_oracle_closure());

    // -- stationarity drift (r = 0.1 grid; see header note), with the
    //    1.001-scaled enclosing sphere attached as the literal barrier case
    double literal_margin = -std::numeric_limits<double>::infinity();
    {
        const double rs = 0.1;
        const auto lbs = boundary_angle(rs, eps);
        auto g = make_axisymmetric_grid(2, lbs.theta_b, std::size_t(200));
        auto f0 = cap_on(g, rs, sigma, eps);
        FlowParams<double> p;
        p.sigma = sigma;
        p.dt = 1e-3;
        p.t_max = 1.0;
        p.residual_tol = 0.0;   // never converges: run to t = 1 exactly
        RunObservers<double> obs;
        obs.barrier_inside_of = EquidistanceSphere<double>{
            sigma, 1.001 * radius_from_boundary(rs, sigma, eps), 0.0,
            SphereKind::Interior};
        auto traj = run_to_stationarity(f0, p, obs);
        const double drift = sup_diff(traj.final_field, f0);
        for (double x : traj.inside_extreme)
            literal_margin = std::max(literal_margin, x);
        rows.push_back(row("stationary_cap_drift",
                           traj.status != RunStatus::Failed && drift <= 1e-6, drift,
                           1e-6, "exact cap held for t = 1 at dt 1e-3"));
        runs.push_back({"drift", rs, eps, sigma, p.dt, std::move(traj)});
    }

    // -- perturbed cap converges to the unique stationary limit
    auto g_main = make_axisymmetric_grid(2, lb.theta_b, N);
    Trajectory<double> main_traj;
    {
        auto f = bumped_cap(g_main, r, sigma, eps, 0.05);
        FlowParams<double> p;
        p.sigma = sigma;
        p.dt = dt;
        p.t_max = 50;
        p.residual_tol = 1e-6;
        RunObservers<double> obs;
        obs.barrier_inside_of = EquidistanceSphere<double>{
            sigma, R * std::exp(0.06), 0.0, SphereKind::Interior};
        auto [b1, b2] = barrier_radii(1.0, 0.5, eps, sigma);
        (void)b1;
        b2.center_axis_offset = 1.55;   // excluded ball fully outside the domain
        obs.barrier_outside_of = b2;
        main_traj = run_to_stationarity(f, p, obs);
        const double dev = sup_diff(main_traj.final_field, cap_on(g_main, r, sigma, eps));
        rows.push_back(row("perturbed_cap_limit",
                           main_traj.status == RunStatus::Converged && dev <= 1e-3,
                           dev, 1e-3,
                           "converged at t = " + fmt(main_traj.t_final)));
        runs.push_back({"perturbed", r, eps, sigma, p.dt, main_traj});
    }

    // -- energy balance on the main run, refined run, and global descent
    {
        const auto main_rep = check_energy_balance(main_traj.records, 1e-10, 0.05);

        auto gr = make_axisymmetric_grid(2, lb.theta_b, std::size_t(799));
        auto fr = bumped_cap(gr, r, sigma, eps, 0.05);
        FlowParams<double> p;
        p.sigma = sigma;
        p.dt = 7.5e-5;
        p.t_max = 50;
        p.residual_tol = 1e-6;
        auto rtraj = run_to_stationarity(fr, p);
        const auto ref_rep = check_energy_balance(rtraj.records, 1e-10, 0.01);
        runs.push_back({"refined", r, eps, sigma, p.dt, std::move(rtraj)});

        const bool ok = main_rep.monotone && main_rep.balanced && ref_rep.balanced;
        rows.push_back(row("energy_balance", ok, main_rep.max_step_increase, 1e-10,
                           "balance " + fmt(100 * main_rep.balance_rel) +
                               "% (<= 5%), refined " + fmt(100 * ref_rep.balance_rel) +
                               "% (<= 1%)"));
    }

    // -- monotone motion from the sigma0 = 0.9 stationary solution
    Trajectory<double> cmc_traj;
    {
        auto built = construct_initial(g_main, eps, 0.9);
        FlowParams<double> p;
        p.sigma = sigma;
        p.dt = dt;
        p.t_max = 50;
        p.residual_tol = 1e-6;
        cmc_traj = run_to_stationarity(built.field, p);
        const auto rep = check_monotone(cmc_traj.records, cmc_traj.initial_speed_min);
        rows.push_back(row("monotone_from_cmc", rep.applicable && rep.pass,
                           rep.min_increment, -1e-10,
                           "initial speed min " + fmt(cmc_traj.initial_speed_min)));
        runs.push_back({"monotone", r, eps, sigma, p.dt, cmc_traj});
    }

    // -- sharp gradient maximum principle on the two runs above
    {
        const auto ga = check_gradient_quantity(main_traj.records);
        const auto gb = check_gradient_quantity(cmc_traj.records);
        const double excess = std::max(ga.interior_max - ga.parabolic_max,
                                       gb.interior_max - gb.parabolic_max);
        rows.push_back(row("gradient_max_principle", ga.pass && gb.pass, excess, 1e-8,
                           "interior max minus parabolic max, worse of two runs"));
    }

    // -- eps uniformity sweep
    {
        FlowParams<double> p;
        p.sigma = sigma;
        p.dt = dt;
        p.t_max = 50;
        p.residual_tol = 1e-6;
        auto sweep = epsilon_sweep<double>(
            {0.2, 0.1, 0.05, 0.025}, p,
            [&](double e) {
                return make_axisymmetric_grid(2, boundary_angle(r, e).theta_b, N);
            },
            [&](const Grid<double>& g, double e) {
                // 0.02: at eps = 0.025 a 0.05 bump would start above the
                // slab ceiling (0.616 vs 0.602), voiding the height check
                return bumped_cap(g, r, sigma, e, 0.02);
            });
        double wlo = 1e9, whi = 0, ratio = 0;
        bool conv = true;
        for (std::size_t k = 0; k < sweep.runs.size(); ++k) {
            wlo = std::min(wlo, sweep.w_max[k]);
            whi = std::max(whi, sweep.w_max[k]);
            conv = conv && sweep.runs[k].status == RunStatus::Converged;
            runs.push_back({"sweep_eps_" + fmt(sweep.eps[k]), r, sweep.eps[k], sigma,
                            p.dt, std::move(sweep.runs[k])});
        }
        for (std::size_t k = 1; k < sweep.cauchy_sup.size(); ++k)
            ratio = std::max(ratio, sweep.cauchy_sup[k] / sweep.cauchy_sup[k - 1]);
        const bool ok = conv && whi / wlo <= 1.5 && ratio <= 0.6;
        rows.push_back(row("eps_uniformity", ok, ratio, 0.6,
                           "max-w spread " + fmt(whi / wlo) + " (<= 1.5)"));
    }

    // -- elliptic/flow agreement: Newton continuation vs the tight flow limit
    {
        auto f = bumped_cap(g_main, r, sigma, eps, 0.05);
        FlowParams<double> p;
        p.sigma = sigma;
        p.dt = dt;
        p.t_max = 50;
        p.residual_tol = 1e-9;
        auto traj = run_to_stationarity(f, p);
        auto built = construct_initial(g_main, eps, sigma);
        const double dev = sup_diff(built.field, traj.final_field);
        rows.push_back(row("elliptic_flow_agreement",
                           traj.status == RunStatus::Converged && dev <= 1e-6, dev,
                           1e-6, "flow at residual_tol 1e-9"));
        runs.push_back({"agreement", r, eps, sigma, p.dt, std::move(traj)});
    }

    // -- sigma = 0 regression run joins the pool now; its row is emitted
    //    last so the battery keeps its reading order
    CheckResult mcf_row;
    if (full) {
        auto g = make_axisymmetric_grid(2, lb.theta_b, std::size_t(200));
        auto f = bumped_cap(g, r, 0.0, eps, 0.02);
        FlowParams<double> p;
        p.sigma = 0.0;
        p.dt = 1e-3;
        p.t_max = 50;
        p.residual_tol = 1e-9;
        auto traj = run_to_stationarity(f, p);
        double lo = traj.final_field.v[0], hi = lo;
        for (double x : traj.final_field.v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        mcf_row = row("mcf_regression",
                      traj.status == RunStatus::Converged && hi - lo <= 1e-6, hi - lo,
                      1e-6, "final oscillation sup - inf");
        runs.push_back({"mcf", r, eps, 0.0, p.dt, std::move(traj)});
    }

    // -- per-run energy descent across the whole pool (scaled tolerance; see
    //    header note) backs the balance row; a violation anywhere flips it
    {
        double worst_descent = 0;
        bool descent_ok = true;
        for (const auto& nr : runs) {
            const auto rep =
                check_energy_balance(nr.traj.records, descent_tol(nr.dt), 1.0);
            worst_descent = std::max(worst_descent, rep.max_step_increase);
            descent_ok = descent_ok && rep.monotone;
        }
        for (auto& c : rows)
            if (c.name == "energy_balance") {
                if (descent_ok)
                    c.note += "; descent holds on all " +
                              std::to_string(runs.size()) + " pooled runs";
                else {
                    c.status = "fail";
                    c.note += "; descent violated on a pooled run (max step increase " +
                              fmt(worst_descent) + ")";
                }
            }
    }

    if (!full) return rows;

    // -- height bound, strict at every record of every run in the pool
    {
        double min_slack = 1e9;
        bool ok = true;
        for (const auto& nr : runs) {
            const auto rep = check_height_bound(nr.traj.records, nr.r, nr.eps, nr.sigma);
            min_slack = std::min(min_slack, rep.slack);
            ok = ok && rep.pass;
        }
        rows.push_back(row("height_bound", ok, min_slack, 0.0,
                           "min slack over " + std::to_string(runs.size()) +
                               " runs; positive means strict"));
    }

    // -- barrier containment on the main run plus the literal 1.001 sphere
    {
        const auto inside =
            check_barrier_containment(main_traj.inside_extreme, BarrierSide::Inside);
        const auto outside =
            check_barrier_containment(main_traj.outside_extreme, BarrierSide::Outside);
        const double worst = std::max({inside.worst, -outside.worst, literal_margin});
        rows.push_back(row("barrier_containment",
                           inside.pass && outside.pass && literal_margin <= 1e-9,
                           worst, 1e-9,
                           "enclosing, excluded off-axis, and 1.001-scaled spheres"));
    }

    // -- boundary asymptotics against the tangent plane of the lifted circle
    //    (tangent to the cap at the Dirichlet point), soft threshold
    {
        const double sigma_eff = (eps + sigma * R) / R;
        const double p0e1 = (r * r + eps * eps + eps * sigma * R) / r;
        auto eta = tangent_plane_eta(p0e1, sigma_eff, g_main);
        const auto fit = boundary_asymptotics_fit(main_traj.final_field, eta);
        rows.push_back(row("boundary_asymptotics", fit.fitted && fit.exponent >= 1.9,
                           fit.exponent, 1.9,
                           std::to_string(fit.points) + " window points", true));
    }

    rows.push_back(mcf_row);
    return rows;
}

} // namespace mmcf

#pragma once

// Time integration of the reduced graph flow
//
//   v_t = (y^2/n) (v_tt / w^2 + (n-1) cot(theta) v_t) + y sin(theta) v_t
//         - sigma y w
//       = y w (H - sigma),
//
// with Dirichlet data held fixed.  Two steppers:
//
//   ExplicitRK2   Heun's method, subject to the parabolic step restriction
//                 dt <= h^2 / (2 max y^2/(n w^2)),
//   SemiImplicit  backward Euler in the second-order term with coefficients
//                 frozen at the current state; unconditionally stable, and
//                 its fixed points are exactly the discrete stationary
//                 solutions independent of dt.
//
// run_to_stationarity drives either stepper until the flow speed
// sup |y w (H - sigma)| drops below a tolerance or a time horizon is hit,
// recording diagnostics along the way.  The reduced right-hand side and the
// curvature-based speed y w (H - sigma) are evaluated through separate code
// paths and cross-checked at every recorded step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmcf/diagnostics.hpp"
#include "mmcf/exact_solutions.hpp"
#include "mmcf/geometry.hpp"
#include "mmcf/grid.hpp"
#include "mmcf/tridiag.hpp"

namespace mmcf {

enum class Scheme { ExplicitRK2, SemiImplicit };
enum class DtPolicy { Fixed, Cfl };
enum class RunStatus { Converged, TimedOut, Failed };

inline const char* to_string(Scheme s) {
    return s == Scheme::ExplicitRK2 ? "explicit_rk2" : "semi_implicit";
}
inline const char* to_string(DtPolicy p) {
    return p == DtPolicy::Fixed ? "fixed" : "cfl";
}
inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "converged";
        case RunStatus::TimedOut: return "timed_out";
        default: return "failed";
    }
}

template <class Real = double>
struct FlowParams {
    Real sigma = Real(0.5);
    Scheme scheme = Scheme::SemiImplicit;
    DtPolicy dt_policy = DtPolicy::Fixed;
    Real dt = Real(1e-3);          // step size under the Fixed policy
    Real cfl_safety = Real(0.9);   // fraction of the explicit limit under Cfl
    Real t_max = Real(50);
    Real residual_tol = Real(1e-6);
};

// Optional per-run instrumentation: barrier spheres whose signed-distance
// extremes are tracked at every recorded step, and the record cadence.
template <class Real = double>
struct RunObservers {
    // surface must stay inside this sphere (signed distance <= 0)
    std::optional<EquidistanceSphere<Real>> barrier_inside_of;
    // surface must stay outside this sphere (signed distance >= 0)
    std::optional<EquidistanceSphere<Real>> barrier_outside_of;
    std::int64_t diag_every = 0;   // 0: pick automatically (~2000 records)
};

template <class Real = double>
struct Trajectory {
    RunStatus status = RunStatus::TimedOut;
    std::string message;
    std::vector<DiagnosticsRecord> records;
    HeightField<Real> final_field;
    std::int64_t steps = 0;
    double t_final = 0;
    // min over interior nodes of y w (H - sigma) at t = 0; its sign decides
    // whether the monotone-motion check applies
    double initial_speed_min = 0;
    // per-record signed-distance extremes against the observer barriers:
    // max for barrier_inside_of, min for barrier_outside_of
    std::vector<double> inside_extreme;
    std::vector<double> outside_extreme;
};

// Reduced right-hand side y w (H - sigma); zero at Dirichlet nodes.
template <class Real>
std::vector<Real> flow_rhs(const HeightField<Real>& f, Real sigma) {
    const auto& g = f.grid;
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const auto a = trace_term(f, d, w);
    std::vector<Real> r(f.size(), Real(0));
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (g.is_dirichlet(i)) continue;
        r[i] = g.y[i] * g.y[i] / Real(g.n) * a[i] + g.y[i] * g.s[i] * d.d1[i] -
               sigma * g.y[i] * w[i];
    }
    return r;
}

// Largest stable explicit step h^2 / (2 max c) over the per-node diffusion
// coefficients c.  Interior rows have c = y^2/(n w^2).  The pole row reduces
// to rhs_0 = 2 (v_1 - v_0)/h^2 - sigma (the even reflection aggregates the
// trace to n d2 and the 1/n cancels), so it carries unit coefficient; taking
// only y^2/(n w^2) there underestimates its stiffness by a factor n and
// leaves an undamped pole sawtooth under Heun stepping.
template <class Real>
Real explicit_dt_limit(const HeightField<Real>& f) {
    const auto& g = f.grid;
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    Real coeff = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (g.is_dirichlet(i)) continue;
        const Real c = g.is_pole(i)
                           ? Real(1)
                           : g.y[i] * g.y[i] / (Real(g.n) * w[i] * w[i]);
        coeff = std::max(coeff, c);
    }
    return g.h * g.h / (2 * coeff);
}

// One Heun (explicit trapezoidal) step.  Returns the smallest nodal update.
// Enforces the stability restriction; violating it is a configuration error.
template <class Real>
Real heun_step(HeightField<Real>& f, Real sigma, Real dt) {
    const Real limit = explicit_dt_limit(f);
    if (dt > limit * (1 + Real(1e-9))) {
        std::ostringstream os;
        os << "explicit step " << dt << " exceeds the stability limit " << limit;
        throw std::invalid_argument(os.str());
    }
    const auto k1 = flow_rhs(f, sigma);
    HeightField<Real> mid = f;
    for (std::size_t i = 0; i < f.size(); ++i) mid.v[i] += dt * k1[i];
    const auto k2 = flow_rhs(mid, sigma);
    Real min_inc = std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Real inc = dt / 2 * (k1[i] + k2[i]);
        f.v[i] += inc;
        min_inc = std::min(min_inc, inc);
    }
    return min_inc;
}

template <class Real = double>
struct SemiImplicitRows {
    std::vector<Real> lo, di, up, rhs;
};

// Linearized backward-Euler system.  Interior row i, with A = y^2/(n w^2)
// and B = y^2 (n-1) cot(theta)/n + y sin(theta) frozen at the current state:
//
//   (1 + 2 dt A/h^2) v+_i - dt (A/h^2 + B/(2h)) v+_{i+1}
//                        - dt (A/h^2 - B/(2h)) v+_{i-1} = v_i - dt sigma y w.
//
// Pole row (axisymmetric): the even reflection collapses the operator to a
// pure second difference with unit coefficient,
//   (1 + 2 dt/h^2) v+_0 - (2 dt/h^2) v+_1 = v_0 - dt sigma.
// Dirichlet rows are identities.
template <class Real>
SemiImplicitRows<Real> assemble_semi_implicit(const HeightField<Real>& f,
                                              Real sigma, Real dt) {
    const auto& g = f.grid;
    const std::size_t N = f.size();
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const Real h = g.h, h2 = h * h;
    SemiImplicitRows<Real> rows;
    rows.lo.assign(N, Real(0));
    rows.di.assign(N, Real(1));
    rows.up.assign(N, Real(0));
    rows.rhs = f.v;
    for (std::size_t i = 0; i < N; ++i) {
        if (g.is_dirichlet(i)) continue;   // identity row keeps boundary data
        if (g.is_pole(i)) {
            rows.di[i] = 1 + 2 * dt / h2;
            rows.up[i] = -2 * dt / h2;
            rows.rhs[i] = f.v[i] - dt * sigma;
            continue;
        }
        const Real A = g.y[i] * g.y[i] / (Real(g.n) * w[i] * w[i]);
        Real B = g.y[i] * g.s[i];
        if (g.n > 1)
            B += g.y[i] * g.y[i] * Real(g.n - 1) * (g.y[i] / g.s[i]) / Real(g.n);
        rows.di[i] = 1 + 2 * dt * A / h2;
        rows.up[i] = -dt * (A / h2 + B / (2 * h));
        rows.lo[i] = -dt * (A / h2 - B / (2 * h));
        rows.rhs[i] = f.v[i] - dt * sigma * g.y[i] * w[i];
    }
    return rows;
}

// Rows are diagonally dominant whenever dt |B| <= h (amply true at the step
// sizes of interest); equality is approached at the node next to the pole
// for n = 3, hence the relative slack.
template <class Real>
void require_diagonally_dominant(const SemiImplicitRows<Real>& rows) {
    for (std::size_t i = 0; i < rows.di.size(); ++i) {
        if (std::abs(rows.lo[i]) + std::abs(rows.up[i]) >
            std::abs(rows.di[i]) * (1 + Real(1e-7)))
            throw std::logic_error("semi-implicit row lost diagonal dominance");
    }
}

template <class Real>
Real semi_implicit_step(HeightField<Real>& f, Real sigma, Real dt) {
    auto rows = assemble_semi_implicit(f, sigma, dt);
    require_diagonally_dominant(rows);
    std::vector<Real> work(f.size());
    solve_tridiagonal(rows.lo, rows.di, rows.up, rows.rhs, work);
    Real min_inc = std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        min_inc = std::min(min_inc, rows.rhs[i] - f.v[i]);
        f.v[i] = rows.rhs[i];
    }
    return min_inc;
}

namespace detail {

// Relative agreement between the reduced right-hand side and the
// curvature-path speed y w (H - sigma) at interior nodes.
template <class Real>
bool speeds_agree(const std::vector<Real>& rhs, const std::vector<Real>& speed,
                  const Grid<Real>& g, std::size_t& bad_node, Real& bad_diff) {
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        if (g.is_dirichlet(i)) continue;
        const Real scale = std::max({Real(1), std::abs(rhs[i]), std::abs(speed[i])});
        const Real diff = std::abs(rhs[i] - speed[i]);
        if (diff > Real(1e-12) * scale) {
            bad_node = i;
            bad_diff = diff / scale;
            return false;
        }
    }
    return true;
}

} // namespace detail

template <class Real>
Trajectory<Real> run_to_stationarity(HeightField<Real> f, const FlowParams<Real>& p,
                                     const RunObservers<Real>& obs = {}) {
    const auto& g = f.grid;
    Trajectory<Real> traj;
    traj.final_field = f;

    std::int64_t diag_every = obs.diag_every;
    if (diag_every <= 0) {
        const double est = p.dt > 0 ? double(p.t_max) / double(p.dt) : 0.0;
        diag_every = std::max<std::int64_t>(1, std::int64_t(est / 2000.0));
    }

    std::int64_t step = 0;
    Real t = 0;
    Real window_min = std::numeric_limits<Real>::infinity();
    std::int64_t last_recorded = -1;

    auto record = [&](const std::vector<Real>& rhs) -> bool {
        const auto speed = flow_speed(f, p.sigma);
        std::size_t bad_node = 0;
        Real bad_diff = 0;
        if (!detail::speeds_agree(rhs, speed, g, bad_node, bad_diff)) {
            std::ostringstream os;
            os << "right-hand side and curvature speed disagree at node "
               << bad_node << " (relative " << bad_diff << ") at step " << step;
            traj.status = RunStatus::Failed;
            traj.message = os.str();
            return false;
        }
        const Real mi = std::isfinite(window_min) ? window_min : Real(0);
        traj.records.push_back(compute_record(f, p.sigma, step, t, rhs, mi));
        window_min = std::numeric_limits<Real>::infinity();
        last_recorded = step;
        if (obs.barrier_inside_of) {
            const auto dist = sphere_signed_distance(f, *obs.barrier_inside_of);
            traj.inside_extreme.push_back(
                double(*std::max_element(dist.begin(), dist.end())));
        }
        if (obs.barrier_outside_of) {
            const auto dist = sphere_signed_distance(f, *obs.barrier_outside_of);
            traj.outside_extreme.push_back(
                double(*std::min_element(dist.begin(), dist.end())));
        }
        traj.final_field = f;
        return true;
    };

    {
        const auto speed0 = flow_rhs(f, p.sigma);
        Real mn = std::numeric_limits<Real>::infinity();
        for (std::size_t i = 0; i < f.size(); ++i)
            if (!g.is_dirichlet(i)) mn = std::min(mn, speed0[i]);
        traj.initial_speed_min = double(mn);
    }

    while (true) {
        const auto rhs = flow_rhs(f, p.sigma);
        const Real residual = residual_sup_from(rhs, g, step);

        if (step % diag_every == 0 || residual <= p.residual_tol ||
            t >= p.t_max * (1 - Real(1e-12))) {
            if (last_recorded != step && !record(rhs)) break;
        }
        if (residual <= p.residual_tol) {
            traj.status = RunStatus::Converged;
            break;
        }
        if (t >= p.t_max * (1 - Real(1e-12)) || p.t_max <= Real(0)) {
            traj.status = RunStatus::TimedOut;
            std::ostringstream os;
            os << "residual " << residual << " still above tolerance "
               << p.residual_tol << " at t = " << double(t);
            traj.message = os.str();
            break;
        }

        Real dt = p.dt;
        if (p.dt_policy == DtPolicy::Cfl)
            dt = p.cfl_safety * explicit_dt_limit(f);
        if (t + dt > p.t_max) dt = p.t_max - t;

        Real step_min;
        if (p.scheme == Scheme::ExplicitRK2)
            step_min = heun_step(f, p.sigma, dt);
        else
            step_min = semi_implicit_step(f, p.sigma, dt);
        window_min = std::min(window_min, step_min);

        bool finite = true;
        for (const Real x : f.v)
            if (!std::isfinite(x)) { finite = false; break; }
        if (!finite) {
            std::ostringstream os;
            os << "solution lost finiteness during step " << step + 1
               << "; keeping the last recorded state";
            traj.status = RunStatus::Failed;
            traj.message = os.str();
            f = traj.final_field;   // roll back to the last good snapshot
            break;
        }

        ++step;
        t += dt;
    }

    traj.steps = step;
    traj.t_final = double(t);
    if (traj.status != RunStatus::Failed) traj.final_field = f;
    return traj;
}

// ---------------------------------------------------------------------------
// Regularization sweep: independent runs over a descending list of boundary
// heights eps, each on its own grid with its own initial surface.  Reports
// per-run gradient bounds and the sup difference between consecutive final
// profiles on their common angular window (evaluated by cubic interpolation),
// which should contract as eps decreases.

template <class Real = double>
struct EpsilonSweep {
    std::vector<Real> eps;                  // descending
    std::vector<Trajectory<Real>> runs;     // matching order
    std::vector<double> w_max;              // space-time slope bound per run
    std::vector<double> cauchy_sup;         // size()-1 consecutive differences
};

// Sup-norm gap between two profiles over the overlap of their domains,
// sampling b at the nodes of a.  Used to compare stationary limits computed
// on different grids (the regularized domains shrink with eps).
template <class Real>
double sup_overlap_difference(const HeightField<Real>& a, const HeightField<Real>& b) {
    double sup = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Real th = a.grid.theta[i];
        if (th < b.grid.theta.front() || th > b.grid.theta.back())
            continue;
        sup = std::max(sup, std::abs(double(a.v[i] - sample_field(b, th))));
    }
    return sup;
}

template <class Real, class MakeGrid, class MakeInitial>
EpsilonSweep<Real> epsilon_sweep(std::vector<Real> eps_list,
                                 const FlowParams<Real>& params,
                                 MakeGrid&& make_grid, MakeInitial&& make_initial,
                                 const RunObservers<Real>& obs = {}) {
    if (eps_list.empty())
        throw std::invalid_argument("epsilon sweep needs a non-empty list");
    for (const Real e : eps_list)
        if (!(e > Real(0)))
            throw std::invalid_argument("epsilon values must be positive");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<Real>());

    EpsilonSweep<Real> sweep;
    sweep.eps = eps_list;
    for (const Real e : eps_list) {
        Grid<Real> g = make_grid(e);
        HeightField<Real> v0 = make_initial(g, e);
        sweep.runs.push_back(run_to_stationarity(std::move(v0), params, obs));
        double wmax = 0;
        for (const auto& rec : sweep.runs.back().records)
            wmax = std::max(wmax, rec.w_max);
        sweep.w_max.push_back(wmax);
    }
    for (std::size_t k = 0; k + 1 < sweep.runs.size(); ++k)
        sweep.cauchy_sup.push_back(sup_overlap_difference(
            sweep.runs[k].final_field, sweep.runs[k + 1].final_field));
    return sweep;
}

} // namespace mmcf

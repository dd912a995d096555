#pragma once

// Energy functional, dissipation identity, and the run invariants checked on
// recorded trajectories:
//   I(v) = int w y^{ -n} dz + n sigma int v y^{-(n+1)} dz,  dI/dt = -D,
//   D    = n int (H - sigma)^2 dA,   dA = w y^{-n} dz,
// with dz the area element of the hemisphere domain: |S^{n-1}| sin^{n-1}
// (Axisymmetric) or plain dtheta (Meridian).  The flow speed y w (H - sigma)
// doubles as the stationarity residual.
//
// Incompatible Dirichlet corner data smooths out in a short initial window;
// following that, checks act on "accepted" steps: step index >= 10 and
// t >= burn-in time (default 0.05).  The residual diagnostic likewise skips
// the two nodes adjacent to each Dirichlet node for the first 10 steps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mmcf/geometry.hpp"
#include "mmcf/grid.hpp"

namespace mmcf {

inline constexpr std::int64_t default_burn_in_steps = 10;
inline constexpr double default_burn_in_time = 0.05;

// Compensated (Kahan) trapezoid rule; the energy descent test resolves
// per-step increments of order 1e-10 against integrals of order 1e+2, so
// plain accumulation noise would be visible.
template <class Real>
Real trapezoid(const std::vector<Real>& f, Real h) {
    Real sum = 0, c = 0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const Real term = (f[i] + f[i + 1]) * (h / 2) - c;
        const Real next = sum + term;
        c = (next - sum) - term;
        sum = next;
    }
    return sum;
}

// Angular measure dz per node: |S^{n-1}| sin^{n-1}(theta) or 1.
template <class Real>
std::vector<Real> angular_measure(const Grid<Real>& g) {
    std::vector<Real> mu(g.size(), Real(1));
    if (g.topology == Topology::Axisymmetric) {
        const Real area_Sn1 =
            2 * std::pow(std::numbers::pi_v<Real>, Real(g.n) / 2) /
            Real(std::tgamma(double(g.n) / 2));
        for (std::size_t i = 0; i < g.size(); ++i)
            mu[i] = area_Sn1 * std::pow(g.s[i], Real(g.n - 1));
    }
    return mu;
}

template <class Real>
Real energy(const HeightField<Real>& f, Real sigma) {
    const auto& g = f.grid;
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const auto mu = angular_measure(g);
    std::vector<Real> area(g.size()), vol(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Real yn = std::pow(g.y[i], Real(-g.n));
        area[i] = w[i] * yn * mu[i];
        vol[i] = f.v[i] * yn / g.y[i] * mu[i];
    }
    return trapezoid(area, g.h) + Real(g.n) * sigma * trapezoid(vol, g.h);
}

template <class Real>
Real dissipation(const HeightField<Real>& f, Real sigma) {
    const auto& g = f.grid;
    const auto H = mean_curvature(f);
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const auto mu = angular_measure(g);
    std::vector<Real> q(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        q[i] = (H[i] - sigma) * (H[i] - sigma) * w[i] * std::pow(g.y[i], Real(-g.n)) * mu[i];
    return Real(g.n) * trapezoid(q, g.h);
}

// Normal flow speed y w (H - sigma) per node, the quantity whose sup norm
// defines stationarity.  Computed through mean_curvature; the flow solver
// computes the same thing through the reduced right-hand side, and the two
// are cross-checked at every diagnostics row.
template <class Real>
std::vector<Real> flow_speed(const HeightField<Real>& f, Real sigma) {
    const auto H = mean_curvature(f);
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    std::vector<Real> sp(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        sp[i] = f.grid.y[i] * w[i] * (H[i] - sigma);
    return sp;
}

// Gradient comparison quantity e^v (w + sigma (y + e.grad v)); its interior
// space-time maximum is controlled by the parabolic boundary.
template <class Real>
std::vector<Real> gradient_quantity(const HeightField<Real>& f, Real sigma) {
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    std::vector<Real> G(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        G[i] = std::exp(f.v[i]) *
               (w[i] + sigma * (f.grid.y[i] - f.grid.s[i] * d.d1[i]));
    return G;
}

struct DiagnosticsRecord {
    std::int64_t step = 0;
    double t = 0;
    double energy = 0;
    double dissipation = 0;
    double residual_sup = 0;
    double w_max = 0;
    double w_interior_max = 0;
    double w_boundary_max = 0;
    double G_max = 0;
    double G_interior_max = 0;
    double G_boundary_max = 0;
    double u_max = 0;
    double u_min_interior = 0;
    double v_min = 0;
    double v_max = 0;
    // min over nodes and over the steps since the previous record of the
    // per-step update v^{k} - v^{k-1}; zero for the initial record
    double min_increment = 0;

    bool all_finite() const {
        for (double x : {t, energy, dissipation, residual_sup, w_max, G_max, u_max,
                         v_min, v_max, min_increment})
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline bool is_accepted_step(const DiagnosticsRecord& rec,
                             std::int64_t burn_in_steps = default_burn_in_steps,
                             double burn_in_time = default_burn_in_time) {
    return rec.step >= burn_in_steps && rec.t >= burn_in_time;
}

// Stationarity residual with the corner window applied: while step < 10 the
// two nodes adjacent to each Dirichlet node are excluded.
template <class Real>
Real residual_sup_from(const std::vector<Real>& speed, const Grid<Real>& g,
                       std::int64_t step_count) {
    const std::size_t N = speed.size();
    std::size_t lo = (g.topology == Topology::Meridian) ? 1 : 0;
    std::size_t hi = N - 1;   // one past the last interior node
    if (step_count < 10) {
        hi = (hi >= 2) ? hi - 2 : 0;
        if (g.topology == Topology::Meridian) lo += 2;
    }
    Real m = 0;
    for (std::size_t i = lo; i < hi; ++i)
        if (!g.is_dirichlet(i)) m = std::max(m, std::abs(speed[i]));
    return m;
}

// Full per-record snapshot of the scalar diagnostics.
template <class Real>
DiagnosticsRecord
compute_record(const HeightField<Real>& f, Real sigma, std::int64_t step, Real t,
               const std::vector<Real>& speed, Real min_increment = Real(0)) {
    const auto& g = f.grid;
    DiagnosticsRecord rec;
    rec.step = step;
    rec.t = double(t);
    rec.energy = double(energy(f, sigma));
    rec.dissipation = double(dissipation(f, sigma));
    rec.residual_sup = double(residual_sup_from(speed, g, step));
    rec.min_increment = double(min_increment);

    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const auto G = gradient_quantity(f, sigma);
    rec.w_max = rec.G_max = -std::numeric_limits<double>::infinity();
    rec.w_interior_max = rec.w_boundary_max = -std::numeric_limits<double>::infinity();
    rec.G_interior_max = rec.G_boundary_max = -std::numeric_limits<double>::infinity();
    rec.u_max = -std::numeric_limits<double>::infinity();
    rec.u_min_interior = std::numeric_limits<double>::infinity();
    rec.v_min = std::numeric_limits<double>::infinity();
    rec.v_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double u = std::exp(f.v[i]) * g.y[i];
        rec.w_max = std::max(rec.w_max, double(w[i]));
        rec.G_max = std::max(rec.G_max, double(G[i]));
        rec.u_max = std::max(rec.u_max, u);
        rec.v_min = std::min(rec.v_min, double(f.v[i]));
        rec.v_max = std::max(rec.v_max, double(f.v[i]));
        if (g.is_dirichlet(i)) {
            rec.w_boundary_max = std::max(rec.w_boundary_max, double(w[i]));
            rec.G_boundary_max = std::max(rec.G_boundary_max, double(G[i]));
        } else {
            rec.w_interior_max = std::max(rec.w_interior_max, double(w[i]));
            rec.G_interior_max = std::max(rec.G_interior_max, double(G[i]));
            rec.u_min_interior = std::min(rec.u_min_interior, u);
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Trajectory checks.  Each returns a small report; "pass" states the hard
// criterion, the measured numbers stay available for logging.

struct EnergyBalanceReport {
    double max_step_increase = 0;        // over accepted consecutive records
    std::int64_t worst_step = -1;
    double drop = 0;                     // I(first accepted) - I(end)
    double balance_error = 0;            // |Delta I + int D dt|
    double balance_rel = 0;              // relative to |Delta I|
    bool monotone = false;               // increase <= tolerance per step
    bool balanced = false;               // balance_rel <= bound
};

inline EnergyBalanceReport
check_energy_balance(const std::vector<DiagnosticsRecord>& recs,
                     double per_step_tol = 1e-10, double balance_bound = 0.05,
                     std::int64_t burn_in_steps = default_burn_in_steps,
                     double burn_in_time = default_burn_in_time) {
    EnergyBalanceReport rep;
    const DiagnosticsRecord* prev = nullptr;
    double intD = 0;
    bool have_first = false;
    double I_first = 0, I_last = 0;
    for (const auto& rec : recs) {
        if (!is_accepted_step(rec, burn_in_steps, burn_in_time)) continue;
        if (prev) {
            const double steps = double(rec.step - prev->step);
            const double inc = (rec.energy - prev->energy) / steps;
            if (inc > rep.max_step_increase) {
                rep.max_step_increase = inc;
                rep.worst_step = rec.step;
            }
            intD += (rec.t - prev->t) * (rec.dissipation + prev->dissipation) / 2;
        }
        if (!have_first) { I_first = rec.energy; have_first = true; }
        I_last = rec.energy;
        prev = &rec;
    }
    if (!have_first) return rep;   // nothing accepted: trivially empty report
    rep.drop = I_first - I_last;
    rep.balance_error = std::abs((I_last - I_first) + intD);
    rep.balance_rel = rep.drop != 0 ? rep.balance_error / std::abs(rep.drop) : 0;
    rep.monotone = rep.max_step_increase <= per_step_tol;
    rep.balanced = rep.balance_rel <= balance_bound;
    return rep;
}

struct GradientMaxReport {
    double interior_max = 0;    // over interior nodes, accepted records
    double parabolic_max = 0;   // initial slice everywhere + boundary in time
    bool pass = false;
};

inline GradientMaxReport
check_gradient_quantity(const std::vector<DiagnosticsRecord>& recs, double slack = 1e-8) {
    GradientMaxReport rep;
    if (recs.empty()) return rep;
    rep.parabolic_max = recs.front().G_max;
    rep.interior_max = -std::numeric_limits<double>::infinity();
    for (const auto& rec : recs) {
        rep.parabolic_max = std::max(rep.parabolic_max, rec.G_boundary_max);
        rep.interior_max = std::max(rep.interior_max, rec.G_interior_max);
    }
    rep.pass = rep.interior_max <= rep.parabolic_max + slack;
    return rep;
}

struct MonotoneReport {
    bool applicable = false;    // requires H(v0) >= sigma everywhere
    double min_increment = 0;
    bool pass = false;
};

inline MonotoneReport check_monotone(const std::vector<DiagnosticsRecord>& recs,
                                     double initial_H_minus_sigma_min,
                                     double tol = 1e-10) {
    MonotoneReport rep;
    rep.applicable = initial_H_minus_sigma_min >= 0;
    if (!rep.applicable) return rep;   // contrapositive not claimed
    rep.min_increment = 0;
    for (const auto& rec : recs)
        rep.min_increment = std::min(rep.min_increment, rec.min_increment);
    rep.pass = rep.min_increment >= -tol;
    return rep;
}

struct HeightBoundReport {
    double bound = 0;           // r sqrt((1-sigma)/(1+sigma)) + eps
    double u_max = 0;           // over nodes and records
    double slack = 0;
    bool pass = false;
};

inline HeightBoundReport check_height_bound(const std::vector<DiagnosticsRecord>& recs,
                                            double r, double eps, double sigma) {
    HeightBoundReport rep;
    rep.bound = r * std::sqrt((1 - sigma) / (1 + sigma)) + eps;
    rep.u_max = -std::numeric_limits<double>::infinity();
    for (const auto& rec : recs) rep.u_max = std::max(rep.u_max, rec.u_max);
    rep.slack = rep.bound - rep.u_max;
    rep.pass = rep.u_max < rep.bound;
    return rep;
}

struct WGrowthReport {
    double worst_ratio = 0;     // max over records of w_int / (e^{3t} parab)
    bool pass = false;
};

// Interior gradient growth against e^{3t} times the parabolic boundary
// maximum, with 5% discretization slack.
inline WGrowthReport check_w_growth(const std::vector<DiagnosticsRecord>& recs,
                                    double slack_factor = 1.05) {
    WGrowthReport rep;
    if (recs.empty()) return rep;
    double parabolic = recs.front().w_max;
    for (const auto& rec : recs) {
        parabolic = std::max(parabolic, rec.w_boundary_max);
        const double allowed = slack_factor * std::exp(3 * rec.t) * parabolic;
        rep.worst_ratio = std::max(rep.worst_ratio,
                                   rec.w_interior_max / allowed);
    }
    rep.pass = rep.worst_ratio <= 1.0;
    return rep;
}

enum class BarrierSide { Inside, Outside };

struct BarrierReport {
    BarrierSide side = BarrierSide::Inside;
    double worst = 0;           // worst signed violation over the run
    bool pass = false;
};

// extremes[k] is the per-record extreme signed distance to the sphere:
// max over nodes for Inside, min over nodes for Outside.
inline BarrierReport check_barrier_containment(const std::vector<double>& extremes,
                                               BarrierSide side, double tol = 1e-9) {
    BarrierReport rep;
    rep.side = side;
    if (extremes.empty()) return rep;
    if (side == BarrierSide::Inside)
        rep.worst = *std::max_element(extremes.begin(), extremes.end());
    else
        rep.worst = *std::min_element(extremes.begin(), extremes.end());
    rep.pass = (side == BarrierSide::Inside) ? rep.worst <= tol : rep.worst >= -tol;
    return rep;
}

struct AsymptoticsFit {
    bool fitted = false;        // false: window too small or below noise
    double exponent = 0;
    std::size_t points = 0;
};

// Least-squares slope of log|v - eta| against log(angular distance to the
// Dirichlet node), over the quarter of the domain nearest to the boundary,
// excluding the three nodes closest to it.  Soft diagnostic.
template <class Real>
AsymptoticsFit boundary_asymptotics_fit(const HeightField<Real>& f,
                                        const HeightField<Real>& eta,
                                        double noise_floor = 1e-12) {
    require_same_grid(f, eta);
    const auto& g = f.grid;
    const std::size_t N = g.size();
    const std::size_t quarter = N / 4;
    AsymptoticsFit fit;
    if (quarter < 9) return fit;                    // window too small
    std::vector<double> X, Y;
    for (std::size_t k = 3; k < quarter; ++k) {
        const std::size_t i = N - 1 - k;            // k nodes from the boundary
        const double diff = std::abs(double(f.v[i] - eta.v[i]));
        if (diff < noise_floor) continue;
        X.push_back(std::log(double(g.theta[N - 1] - g.theta[i])));
        Y.push_back(std::log(diff));
    }
    if (X.size() < 6) return fit;                   // fit refused
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < X.size(); ++j) {
        sx += X[j]; sy += Y[j]; sxx += X[j] * X[j]; sxy += X[j] * Y[j];
    }
    const double m = double(X.size());
    fit.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.points = X.size();
    fit.fitted = true;
    return fit;
}

} // namespace mmcf

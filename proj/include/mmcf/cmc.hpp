#pragma once

// Stationary surfaces: Dirichlet problem for constant modified mean
// curvature H = sigma, written in divergence-free nodal form
//
//   F_i = v_tt / w^2 + (n-1) cot(theta) v_t - (n/y) (sigma w - sin(theta) v_t)
//
// at interior nodes (F = (n/y^2) times the flow speed, so both vanish on the
// same fields).  Solved by damped Newton with the exact tridiagonal Jacobian.
//
// construct_initial builds the starting surface of the evolution problem by
// continuation in sigma: at sigma = 1 the horosphere u = eps solves the
// problem up to O(h^2), and each continuation step re-solves with the
// previous solution as the initial guess, halving the step on failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mmcf/exact_solutions.hpp"
#include "mmcf/geometry.hpp"
#include "mmcf/grid.hpp"
#include "mmcf/tridiag.hpp"

namespace mmcf {

template <class Real>
std::vector<Real> cmc_residual(const HeightField<Real>& f, Real sigma) {
    const auto& g = f.grid;
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    std::vector<Real> F(f.size(), Real(0));
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (g.is_dirichlet(i)) continue;
        if (g.is_pole(i)) {
            // even reflection: v_tt/w^2 + (n-1) cot v_t -> n d2, and y = 1
            F[i] = Real(g.n) * (d.d2[i] - sigma);
            continue;
        }
        Real F_i = d.d2[i] / (w[i] * w[i]) -
                   Real(g.n) / g.y[i] * (sigma * w[i] - g.s[i] * d.d1[i]);
        if (g.n > 1) F_i += Real(g.n - 1) * (g.y[i] / g.s[i]) * d.d1[i];
        F[i] = F_i;
    }
    return F;
}

struct NewtonOptions {
    double tol = 1e-12;
    int max_iters = 50;
    int max_halvings = 10;
};

struct NewtonResult {
    bool converged = false;
    int iters = 0;
    double residual = std::numeric_limits<double>::infinity();
    std::vector<double> history;   // sup residual after each iteration
};

// The nodal residual divides second differences by h^2, so it carries an
// irreducible evaluation noise of a few ulp(v)/h^2 (about 2e-12 at N = 200).
// Convergence therefore also accepts an update below machine scale: the
// iteration is then at its fixed point to working precision even when the
// residual tolerance sits under the noise floor.
template <class Real>
Real newton_step_floor(const HeightField<Real>& f) {
    Real vmax = 0;
    for (const Real x : f.v) vmax = std::max(vmax, std::abs(x));
    return 100 * std::numeric_limits<Real>::epsilon() * (1 + vmax);
}

namespace detail {

template <class Real>
Real sup_norm(const std::vector<Real>& x) {
    Real m = 0;
    for (const Real t : x) {
        if (!std::isfinite(t)) return std::numeric_limits<Real>::infinity();
        m = std::max(m, std::abs(t));
    }
    return m;
}

// Tridiagonal Jacobian of cmc_residual.  Interior rows couple through
// d1 = (v_{i+1} - v_{i-1})/(2h) and d2 = (v_{i+1} - 2 v_i + v_{i-1})/h^2:
//   dF/dd2 = 1/w^2,
//   dF/dd1 = -2 d2 d1 / w^4 + (n-1) cot(theta) - (n/y)(sigma d1/w - sin(theta)).
template <class Real>
void assemble_jacobian(const HeightField<Real>& f, Real sigma,
                       std::vector<Real>& lo, std::vector<Real>& di,
                       std::vector<Real>& up) {
    const auto& g = f.grid;
    const std::size_t N = f.size();
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const Real h = g.h, h2 = h * h;
    lo.assign(N, Real(0));
    di.assign(N, Real(1));
    up.assign(N, Real(0));
    for (std::size_t i = 0; i < N; ++i) {
        if (g.is_dirichlet(i)) continue;
        if (g.is_pole(i)) {
            di[i] = -2 * Real(g.n) / h2;
            up[i] = 2 * Real(g.n) / h2;
            continue;
        }
        const Real w2 = w[i] * w[i];
        const Real dFdd2 = 1 / w2;
        Real dFdd1 = -2 * d.d2[i] * d.d1[i] / (w2 * w2) -
                     Real(g.n) / g.y[i] * (sigma * d.d1[i] / w[i] - g.s[i]);
        if (g.n > 1) dFdd1 += Real(g.n - 1) * (g.y[i] / g.s[i]);
        di[i] = -2 * dFdd2 / h2;
        up[i] = dFdd2 / h2 + dFdd1 / (2 * h);
        lo[i] = dFdd2 / h2 - dFdd1 / (2 * h);
    }
}

} // namespace detail

// Newton iteration on the nodal residual, keeping Dirichlet data fixed.
// Full steps by default; backtracking kicks in only to restore a finite
// residual or to pick up an available decrease, and the largest finite step
// is taken regardless (the sup residual may rise transiently on the way to
// the quadratic basin).  The field is advanced in place; on failure it holds
// the last iterate.
template <class Real>
NewtonResult newton_solve(HeightField<Real>& f, Real sigma,
                          const NewtonOptions& opt = {}) {
    NewtonResult out;
    std::vector<Real> lo, di, up, work(f.size());
    auto F = cmc_residual(f, sigma);
    Real res = detail::sup_norm(F);
    for (int it = 0; it < opt.max_iters; ++it) {
        if (res <= Real(opt.tol)) {
            out.converged = true;
            break;
        }
        detail::assemble_jacobian(f, sigma, lo, di, up);
        auto rhs = F;
        for (auto& x : rhs) x = -x;
        solve_tridiagonal(lo, di, up, rhs, work);   // rhs becomes the step

        Real lambda = 1;
        HeightField<Real> trial = f;
        HeightField<Real> fallback;
        std::vector<Real> fallback_F;
        Real fallback_res = std::numeric_limits<Real>::infinity();
        Real fallback_lambda = 0;
        bool decreased = false;
        Real applied = 0;
        for (int k = 0; k <= opt.max_halvings; ++k) {
            for (std::size_t i = 0; i < f.size(); ++i)
                trial.v[i] = f.v[i] + lambda * rhs[i];
            const auto Ft = cmc_residual(trial, sigma);
            const Real trial_res = detail::sup_norm(Ft);
            if (std::isfinite(trial_res)) {
                if (!std::isfinite(fallback_res)) {   // largest finite step
                    fallback = trial;
                    fallback_F = Ft;
                    fallback_res = trial_res;
                    fallback_lambda = lambda;
                }
                if (trial_res < res) {
                    f = trial;
                    F = Ft;
                    res = trial_res;
                    applied = lambda;
                    decreased = true;
                    break;
                }
            }
            lambda /= 2;
        }
        if (!decreased) {
            if (!std::isfinite(fallback_res)) break;   // no usable step at all
            f = fallback;
            F = fallback_F;
            res = fallback_res;
            applied = fallback_lambda;
        }
        out.iters = it + 1;
        out.history.push_back(double(res));
        if (applied * detail::sup_norm(rhs) <= newton_step_floor(f)) {
            out.converged = true;   // stationary to working precision
            break;
        }
    }
    out.converged = out.converged || res <= Real(opt.tol);
    out.residual = double(res);
    return out;
}

// u = eps over the whole domain; the exact solution at sigma = 1 and the
// seed of the continuation.
template <class Real>
HeightField<Real> continuation_seed(const Grid<Real>& g, Real eps) {
    return horosphere_field(eps, g);
}

struct ContinuationRow {
    double sigma = 1;
    int iters = 0;
    double residual = 0;
};

template <class Real = double>
struct StationaryConstruction {
    HeightField<Real> field;
    std::vector<ContinuationRow> log;
};

// March sigma from 1 down to sigma0, re-solving at each value.  A failed
// solve halves the continuation step; below min_step the construction gives
// up.  sigma0 = 1 returns the horosphere seed without any solve.
template <class Real>
StationaryConstruction<Real> construct_initial(const Grid<Real>& g, Real eps,
                                               Real sigma0, Real step = Real(0.05),
                                               const NewtonOptions& opt = {},
                                               Real min_step = Real(1e-3)) {
    if (!(eps > Real(0))) throw std::invalid_argument("eps must be positive");
    if (!(sigma0 > Real(-1) && sigma0 <= Real(1)))
        throw std::invalid_argument("sigma0 out of (-1, 1]");
    if (!(step > Real(0))) throw std::invalid_argument("continuation step must be positive");

    StationaryConstruction<Real> out;
    out.field = continuation_seed(g, eps);
    Real sigma = 1;
    while (sigma > sigma0) {
        const Real trial_sigma = std::max(sigma0, sigma - step);
        HeightField<Real> trial = out.field;
        const auto res = newton_solve(trial, trial_sigma, opt);
        if (res.converged) {
            out.field = trial;
            sigma = trial_sigma;
            out.log.push_back({double(sigma), res.iters, res.residual});
            continue;
        }
        step /= 2;
        if (step < min_step) {
            std::ostringstream os;
            os << "continuation stalled at sigma = " << double(sigma)
               << " (step underflow below " << double(min_step) << ")";
            throw std::runtime_error(os.str());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics of the constructed surface.

// Graph-height slab that the starting surface must occupy:
//   upper: u < r sqrt((1-s)/(1+s)) + eps            everywhere,
//   lower: u >= (r - rho) sqrt((1-s)/(1+s)) + s eps/(1+s)   (rho = distance
//          from the axis of the projected point), at interior nodes.
template <class Real = double>
struct SlabReport {
    Real upper_bound = 0;       // the constant upper barrier
    Real upper_margin = 0;      // min (bound - u) over non-Dirichlet nodes
    Real lower_margin = 0;      // min (u - lower_i) over non-Dirichlet nodes
    bool inside = false;
};

template <class Real>
SlabReport<Real> slab_report(const HeightField<Real>& f, Real r, Real eps, Real sigma0) {
    const auto& g = f.grid;
    const Real slope = std::sqrt((1 - sigma0) / (1 + sigma0));
    SlabReport<Real> rep;
    rep.upper_bound = r * slope + eps;
    rep.upper_margin = std::numeric_limits<Real>::infinity();
    rep.lower_margin = std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (g.is_dirichlet(i)) continue;
        const Real ev = std::exp(f.v[i]);
        const Real u = ev * g.y[i];
        const Real rho = std::abs(ev * g.s[i]);
        const Real lower = (r - rho) * slope + sigma0 * eps / (1 + sigma0);
        rep.upper_margin = std::min(rep.upper_margin, rep.upper_bound - u);
        rep.lower_margin = std::min(rep.lower_margin, u - lower);
    }
    rep.inside = rep.upper_margin > 0 && rep.lower_margin >= 0;
    return rep;
}

// Gradient and curvature structure near the boundary:
//   - e.nu_E at the Dirichlet node (equals eps/R + sigma0 for the exact cap),
//   - min of e.nu_E on the collar { u <= lambda sigma0 r }, reported against
//     the expected lower bound (1 - lambda) sigma0,
//   - Euclidean mean curvature at the boundary, (sigma0 - e.nu_E)/u, which
//     must sit strictly inside the geometric sandwich below.
template <class Real = double>
struct BoundaryStructureReport {
    Real boundary_normal = 0;
    Real collar_height = 0;
    Real collar_normal_min = std::numeric_limits<Real>::quiet_NaN();
    Real collar_normal_bound = 0;
    bool collar_ok = false;
    Real euclidean_H = 0;
    Real euclidean_H_lo = 0;
    Real euclidean_H_hi = 0;
    bool sandwiched = false;
};

template <class Real>
BoundaryStructureReport<Real>
boundary_structure_report(const HeightField<Real>& f, Real r, Real eps, Real sigma0,
                          Real lambda = Real(0.5)) {
    const auto& g = f.grid;
    const auto nu = vertical_normal_component(f);
    BoundaryStructureReport<Real> rep;
    rep.collar_height = lambda * sigma0 * r;
    rep.collar_normal_bound = (1 - lambda) * sigma0;
    Real collar_min = std::numeric_limits<Real>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Real u = std::exp(f.v[i]) * g.y[i];
        if (u <= rep.collar_height) {
            collar_min = std::min(collar_min, nu[i]);
            any = true;
        }
    }
    if (any) rep.collar_normal_min = collar_min;
    rep.collar_ok = any && collar_min >= rep.collar_normal_bound;

    const std::size_t ib = g.size() - 1;
    const Real ub = std::exp(f.v[ib]) * g.y[ib];
    rep.boundary_normal = nu[ib];
    rep.euclidean_H = (sigma0 - nu[ib]) / ub;
    const Real root = std::sqrt(1 - sigma0 * sigma0);
    rep.euclidean_H_lo = -root / r - eps * (1 - sigma0) / (r * r);
    rep.euclidean_H_hi = root / r + eps * (1 + sigma0) / (r * r);
    rep.sandwiched =
        rep.euclidean_H > rep.euclidean_H_lo && rep.euclidean_H < rep.euclidean_H_hi;
    return rep;
}

} // namespace mmcf

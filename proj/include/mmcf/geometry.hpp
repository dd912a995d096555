#pragma once

// Differential geometry of radial graphs over the upper hemisphere in the
// half-space model: finite-difference derivatives, the hyperbolic mean
// curvature of the graph, the profile embedding, and the lifted boundary
// data.
//
// Conventions (n = dim of the hypersurface, y = cos theta, s = sin theta):
//   w           = sqrt(1 + v_theta^2)
//   e.grad v    = -s v_theta                    (e = vertical unit vector)
//   e.nu_E      = (y + s v_theta) / w           (Euclidean unit normal)
//   H           = y (v_tt/w^2 + (n-1) cot(theta) v_t) / (n w) + s v_t / w
// The normal points away from the origin; with it a Euclidean sphere of
// radius R has H_E = -1/R, and the equidistance cap of parameter sigma > 0
// has hyperbolic mean curvature H = +sigma.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmcf/grid.hpp"

namespace mmcf {

template <class Real = double>
struct Derivatives {
    std::vector<Real> d1;   // v_theta
    std::vector<Real> d2;   // v_theta_theta
};

// Second-order stencils throughout.  At the pole the even reflection
// v_{-1} = v_1 gives d1 = 0 and d2 = 2 (v_1 - v_0) / h^2.  At Dirichlet ends
// one-sided stencils are used; they feed diagnostics only, the flow never
// touches boundary derivatives.
template <class Real>
Derivatives<Real> derivatives(const HeightField<Real>& f) {
    const auto& g = f.grid;
    const auto& v = f.v;
    const std::size_t N = v.size();
    const Real h = g.h, h2 = h * h;
    Derivatives<Real> d;
    d.d1.resize(N);
    d.d2.resize(N);
    for (std::size_t i = 1; i + 1 < N; ++i) {
        d.d1[i] = (v[i + 1] - v[i - 1]) / (2 * h);
        d.d2[i] = (v[i + 1] - 2 * v[i] + v[i - 1]) / h2;
    }
    if (g.topology == Topology::Axisymmetric) {
        d.d1[0] = Real(0);
        d.d2[0] = 2 * (v[1] - v[0]) / h2;
    } else {
        d.d1[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h);
        d.d2[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h2;
    }
    const std::size_t m = N - 1;
    d.d1[m] = (3 * v[m] - 4 * v[m - 1] + v[m - 2]) / (2 * h);
    d.d2[m] = (2 * v[m] - 5 * v[m - 1] + 4 * v[m - 2] - v[m - 3]) / h2;
    return d;
}

template <class Real>
std::vector<Real> slope_factor(const std::vector<Real>& d1) {
    std::vector<Real> w(d1.size());
    for (std::size_t i = 0; i < d1.size(); ++i) w[i] = std::sqrt(1 + d1[i] * d1[i]);
    return w;
}

// Trace operator a^{ij} v_ij of the graph equation, reduced to the profile:
// v_tt / w^2 + (n-1) cot(theta) v_theta, with the pole limit
// cot(theta) v_theta -> v_tt handled by the even reflection above.
template <class Real>
std::vector<Real> trace_term(const HeightField<Real>& f, const Derivatives<Real>& d,
                             const std::vector<Real>& w) {
    const auto& g = f.grid;
    const std::size_t N = f.size();
    std::vector<Real> a(N);
    for (std::size_t i = 0; i < N; ++i) {
        Real t = d.d2[i] / (w[i] * w[i]);
        if (g.n > 1) {
            if (g.is_pole(i))
                t += Real(g.n - 1) * d.d2[i];
            else
                t += Real(g.n - 1) * (g.y[i] / g.s[i]) * d.d1[i];
        }
        a[i] = t;
    }
    return a;
}

// Hyperbolic mean curvature of the radial graph at every node.
template <class Real>
std::vector<Real> mean_curvature(const HeightField<Real>& f) {
    const auto& g = f.grid;
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    const auto a = trace_term(f, d, w);
    std::vector<Real> H(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        H[i] = g.y[i] * a[i] / (Real(g.n) * w[i]) + g.s[i] * d.d1[i] / w[i];
    return H;
}

// Profile point of the embedding X = e^v z in the meridian plane:
// (rho, height) = e^v (sin theta, cos theta).
template <class Real = double>
struct ProfilePoint {
    Real rho;
    Real height;
};

template <class Real>
std::vector<ProfilePoint<Real>> embed(const HeightField<Real>& f) {
    std::vector<ProfilePoint<Real>> p(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Real ev = std::exp(f.v[i]);
        p[i] = {ev * f.grid.s[i], ev * f.grid.y[i]};
    }
    return p;
}

// Vertical component of the Euclidean unit normal, per node.
template <class Real>
std::vector<Real> vertical_normal_component(const HeightField<Real>& f) {
    const auto d = derivatives(f);
    const auto w = slope_factor(d.d1);
    std::vector<Real> en(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        en[i] = (f.grid.y[i] + f.grid.s[i] * d.d1[i]) / w[i];
    return en;
}

// Lifting the asymptotic boundary circle of radius r to height eps:
// the lifted circle sits at polar angle theta_b with radial height phi.
// eps = 0 gives the ideal boundary itself (usable for oracles; a flow grid
// rejects theta_b = pi/2).
template <class Real = double>
struct LiftedBoundary {
    Real theta_b;
    Real phi;    // Dirichlet value: log sqrt(r^2 + eps^2)
};

template <class Real>
LiftedBoundary<Real> boundary_angle(Real r, Real eps) {
    if (!(r > Real(0))) throw std::invalid_argument("boundary radius must be positive");
    if (eps < Real(0)) throw std::invalid_argument("eps must be nonnegative");
    LiftedBoundary<Real> b;
    b.theta_b = std::atan2(r, eps);
    b.phi = std::log(r * r + eps * eps) / 2;
    return b;
}

} // namespace mmcf

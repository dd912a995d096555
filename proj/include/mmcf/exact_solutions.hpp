#pragma once

// Closed-form CMC surfaces in the half-space model, used as oracles and
// barriers: equidistance spheres (Euclidean spheres with center at signed
// height -sigma R or +sigma R, constant hyperbolic mean curvature sigma),
// horospheres (horizontal planes, H = 1), and the CMC tangent plane through
// a boundary point.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mmcf/geometry.hpp"
#include "mmcf/grid.hpp"

namespace mmcf {

// Interior (type-1) spheres have H = sigma w.r.t. the outward normal and
// center height -sigma R; exterior (type-2) spheres have H = sigma w.r.t.
// the inward normal and center height +sigma R.  The trace on the ideal
// boundary has radius R sqrt(1 - sigma^2).  center_axis_offset admits
// spheres whose center sits off the rotation axis; for axisymmetric fields
// distances to such a center are measured in the profile half-plane, which
// is exact for surfaces of revolution.
enum class SphereKind { Interior, Exterior };

template <class Real = double>
struct EquidistanceSphere {
    Real sigma = 0;
    Real R = 1;
    Real center_axis_offset = 0;
    SphereKind kind = SphereKind::Interior;

    Real center_height() const {
        return (kind == SphereKind::Interior ? -sigma : sigma) * R;
    }
};

// Positive root of R^2 = (eps + sigma R)^2 + r^2: the radius of the
// equidistance sphere whose height-eps circle has radius r.
template <class Real>
Real radius_from_boundary(Real r, Real sigma, Real eps) {
    if (!(r > Real(0))) throw std::invalid_argument("boundary radius must be positive");
    if (eps < Real(0)) throw std::invalid_argument("eps must be nonnegative");
    if (!(sigma > Real(-1) && sigma < Real(1)))
        throw std::invalid_argument("sigma out of (-1,1)");
    const Real q = 1 - sigma * sigma;
    return (eps * sigma + std::sqrt(eps * eps * sigma * sigma + q * (eps * eps + r * r))) / q;
}

// Radial height of the upper cap of the sphere with radius R, parameter
// sigma and center (center_offset, -sigma R) in the profile plane.  Derived
// from |e^v z - center| = R, upper branch:
//   e^v = z.a + sqrt((z.a)^2 + R^2 - |a|^2),   a = center.
template <class Real>
HeightField<Real> cap_height_field(Real R, Real sigma, const Grid<Real>& grid,
                                   Real center_offset = Real(0)) {
    if (!(R > Real(0))) throw std::invalid_argument("R must be positive");
    if (!(sigma > Real(-1) && sigma < Real(1)))
        throw std::invalid_argument("sigma out of (-1,1)");
    const Real ah = -sigma * R;
    const Real disc0 = R * R - center_offset * center_offset - ah * ah;
    HeightField<Real> f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Real za = grid.s[i] * center_offset + grid.y[i] * ah;
        const Real ev = za + std::sqrt(za * za + disc0);
        if (!(ev > Real(0)))
            throw std::domain_error("ray misses the upper cap");
        f.v[i] = std::log(ev);
    }
    return f;
}

// Barrier-ball radii: type-1 tangent radius delta1 (enclosing ball) and
// type-2 tangent radius delta2 (excluded ball), both lifted to height eps.
//   R_i  = (-(-1)^i eps sigma0 + sqrt(eps^2 + delta_i^2 (1 - sigma0^2)))
//          / (1 - sigma0^2),      center height a_i = (-1)^i R_i sigma0.
template <class Real>
std::pair<EquidistanceSphere<Real>, EquidistanceSphere<Real>>
barrier_radii(Real delta1, Real delta2, Real eps, Real sigma0) {
    if (!(delta1 > Real(0)) || !(delta2 > Real(0)))
        throw std::invalid_argument("tangency radii must be positive");
    if (eps < Real(0)) throw std::invalid_argument("eps must be nonnegative");
    if (!(sigma0 >= Real(0) && sigma0 < Real(1)))
        throw std::invalid_argument("sigma0 out of [0,1)");
    const Real q = 1 - sigma0 * sigma0;
    EquidistanceSphere<Real> b1, b2;
    b1.sigma = b2.sigma = sigma0;
    b1.kind = SphereKind::Interior;
    b2.kind = SphereKind::Exterior;
    b1.R = (eps * sigma0 + std::sqrt(eps * eps + delta1 * delta1 * q)) / q;
    b2.R = (-eps * sigma0 + std::sqrt(eps * eps + delta2 * delta2 * q)) / q;
    return {b1, b2};
}

// Signed profile distance |embed - center| - R per node; negative inside.
template <class Real>
std::vector<Real> sphere_signed_distance(const HeightField<Real>& f,
                                         const EquidistanceSphere<Real>& sph) {
    const auto pts = embed(f);
    std::vector<Real> d(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Real dr = pts[i].rho - sph.center_axis_offset;
        const Real dh = pts[i].height - sph.center_height();
        d[i] = std::sqrt(dr * dr + dh * dh) - sph.R;
    }
    return d;
}

// Radial height of the plane x.e1 + lambda x_{n+1} = P0.e1 with
// lambda = sigma / sqrt(1 - sigma^2); the plane has constant hyperbolic
// mean curvature sigma.  Evaluated at a hemisphere point with given z.e1
// and vertical component y.
template <class Real>
Real tangent_plane_eta_at(Real P0_dot_e1, Real sigma, Real z_e1, Real y) {
    if (!(P0_dot_e1 > Real(0))) throw std::invalid_argument("P0.e1 must be positive");
    if (!(sigma > Real(-1) && sigma < Real(1)))
        throw std::invalid_argument("sigma out of (-1,1)");
    const Real lambda = sigma / std::sqrt(1 - sigma * sigma);
    const Real den = lambda * y + z_e1;
    if (!(den > Real(0)))
        throw std::domain_error("point outside the half-space of the plane");
    return std::log(P0_dot_e1 / den);
}

// Grid version; e1 is the horizontal direction of the tangency point, so
// z.e1 = sin(theta) along the meridian through it.
template <class Real>
HeightField<Real> tangent_plane_eta(Real P0_dot_e1, Real sigma, const Grid<Real>& grid) {
    HeightField<Real> f(grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.v[i] = tangent_plane_eta_at(P0_dot_e1, sigma, grid.s[i], grid.y[i]);
    return f;
}

// Horizontal plane x_{n+1} = c as a radial graph: v = log(c / cos theta).
template <class Real>
HeightField<Real> horosphere_field(Real c, const Grid<Real>& grid) {
    if (!(c > Real(0))) throw std::invalid_argument("horosphere height must be positive");
    HeightField<Real> f(grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.v[i] = std::log(c) - std::log(grid.y[i]);
    return f;
}

// Meridian cap through two lifted endpoints (x_l, eps), (x_r, eps): the
// center offset is forced to the midpoint by symmetry, and the radius solves
// the same quadratic as radius_from_boundary at half the separation.  The
// cap is a radial graph about the origin only when the interval straddles
// the axis; a one-sided interval folds over near its inner endpoint.
template <class Real>
EquidistanceSphere<Real> off_axis_sphere(Real x_l, Real x_r, Real sigma, Real eps) {
    if (!(x_l < x_r)) throw std::invalid_argument("need x_l < x_r");
    EquidistanceSphere<Real> sph;
    sph.sigma = sigma;
    sph.kind = SphereKind::Interior;
    sph.center_axis_offset = (x_l + x_r) / 2;
    sph.R = radius_from_boundary((x_r - x_l) / 2, sigma, eps);
    return sph;
}

} // namespace mmcf

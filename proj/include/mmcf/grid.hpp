#pragma once

// Uniform angular grids on the upper unit hemisphere and the radial height
// fields living on them.  A hypersurface is represented as the radial graph
// X = e^{v(z)} z, so a field is just the vector of nodal values of v.
//
// Two topologies:
//   Axisymmetric  v = v(theta), theta in [0, theta_b], n >= 2.  Node 0 is the
//                 pole (rotation axis), the last node carries Dirichlet data.
//   Meridian      one-dimensional section (n == 1), theta in [theta_l,
//                 theta_r] with Dirichlet data at both ends.  theta may be
//                 signed; the profile sits in a fixed meridian plane.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmcf {

enum class Topology { Axisymmetric, Meridian };

inline const char* to_string(Topology t) {
    return t == Topology::Axisymmetric ? "axisymmetric" : "meridian";
}

template <class Real = double>
struct Grid {
    Topology topology = Topology::Axisymmetric;
    int n = 2;                  // hypersurface dimension
    std::vector<Real> theta;    // uniform nodes, strictly increasing
    std::vector<Real> y;        // cos(theta), the vertical coordinate of z
    std::vector<Real> s;        // sin(theta)
    Real h = 0;                 // node spacing

    std::size_t size() const { return theta.size(); }

    bool is_dirichlet(std::size_t i) const {
        if (topology == Topology::Axisymmetric) return i + 1 == theta.size();
        return i == 0 || i + 1 == theta.size();
    }

    // Pole node (axis of symmetry); only meaningful for Axisymmetric grids.
    bool is_pole(std::size_t i) const {
        return topology == Topology::Axisymmetric && i == 0;
    }
};

// theta_b is the polar angle of the lifted boundary circle; N is the node
// count including the pole and the boundary node.
template <class Real>
Grid<Real> make_axisymmetric_grid(int n, Real theta_b, std::size_t N) {
    if (n < 2) throw std::invalid_argument("axisymmetric grid requires n >= 2");
    if (!(theta_b > Real(0)) || !(theta_b < Real(1.5707963267948966)))
        throw std::invalid_argument("theta_b must lie in (0, pi/2)");
    if (N < 5) throw std::invalid_argument("need at least 5 nodes");
    Grid<Real> g;
    g.topology = Topology::Axisymmetric;
    g.n = n;
    g.h = theta_b / Real(N - 1);
    g.theta.resize(N);
    g.y.resize(N);
    g.s.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        g.theta[i] = (i + 1 == N) ? theta_b : Real(i) * g.h;
        g.y[i] = std::cos(g.theta[i]);
        g.s[i] = std::sin(g.theta[i]);
    }
    return g;
}

template <class Real>
Grid<Real> make_meridian_grid(Real theta_l, Real theta_r, std::size_t N) {
    if (!(theta_l < theta_r))
        throw std::invalid_argument("meridian grid requires theta_l < theta_r");
    if (std::abs(theta_l) >= Real(1.5707963267948966) ||
        std::abs(theta_r) >= Real(1.5707963267948966))
        throw std::invalid_argument("meridian endpoints must lie in (-pi/2, pi/2)");
    if (N < 5) throw std::invalid_argument("need at least 5 nodes");
    Grid<Real> g;
    g.topology = Topology::Meridian;
    g.n = 1;
    g.h = (theta_r - theta_l) / Real(N - 1);
    g.theta.resize(N);
    g.y.resize(N);
    g.s.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        g.theta[i] = (i + 1 == N) ? theta_r : theta_l + Real(i) * g.h;
        g.y[i] = std::cos(g.theta[i]);
        g.s[i] = std::sin(g.theta[i]);
    }
    return g;
}

template <class Real = double>
struct HeightField {
    Grid<Real> grid;
    std::vector<Real> v;

    HeightField() = default;
    explicit HeightField(Grid<Real> g, Real fill = Real(0))
        : grid(std::move(g)), v(grid.size(), fill) {}

    std::size_t size() const { return v.size(); }
};

// Value of the field at an arbitrary angle inside the domain, by cubic
// (4-point) Lagrange interpolation on the nearest nodes.  Used to compare
// fields living on different grids, e.g. across a regularization sweep.
template <class Real>
Real sample_field(const HeightField<Real>& f, Real theta) {
    const auto& th = f.grid.theta;
    const std::size_t N = th.size();
    if (theta < th.front() - f.grid.h * Real(1e-9) ||
        theta > th.back() + f.grid.h * Real(1e-9))
        throw std::domain_error("sample angle outside the grid");
    auto jf = std::ptrdiff_t(std::floor((theta - th.front()) / f.grid.h));
    jf = std::max<std::ptrdiff_t>(1, std::min<std::ptrdiff_t>(jf, std::ptrdiff_t(N) - 3));
    const std::size_t j0 = std::size_t(jf - 1);   // stencil j0 .. j0+3
    Real out = 0;
    for (std::size_t a = 0; a < 4; ++a) {
        Real L = 1;
        for (std::size_t b = 0; b < 4; ++b)
            if (b != a) L *= (theta - th[j0 + b]) / (th[j0 + a] - th[j0 + b]);
        out += L * f.v[j0 + a];
    }
    return out;
}

template <class Real>
void require_same_grid(const HeightField<Real>& a, const HeightField<Real>& b) {
    if (a.grid.topology != b.grid.topology || a.grid.n != b.grid.n ||
        a.grid.size() != b.grid.size() ||
        a.grid.theta.front() != b.grid.theta.front() ||
        a.grid.theta.back() != b.grid.theta.back())
        throw std::invalid_argument("fields live on different grids");
}

} // namespace mmcf

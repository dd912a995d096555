#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mmcf/exact_solutions.hpp"
#include "mmcf/geometry.hpp"
#include "mmcf/grid.hpp"
#include "oracle.hpp"

using namespace mmcf;

TEST_CASE("sphere radius through a lifted boundary circle") {
    CHECK(radius_from_boundary(1.0, 0.5, 0.0) ==
          Catch::Approx(1.1547005383792517).margin(1e-14));
    CHECK(radius_from_boundary(1.0, 0.5, 0.1) ==
          Catch::Approx(1.229039718277513).margin(1e-14));
    CHECK(radius_from_boundary(1.0, 0.0, 0.3) ==
          Catch::Approx(std::sqrt(1.09)).margin(1e-14));

    // defining identity and the height sandwich, across the parameter box
    for (double sigma : {-0.5, 0.0, 0.3, 0.5, 0.9}) {
        for (double eps : {0.0, 0.05, 0.2}) {
            for (double r : {0.3, 1.0, 2.5}) {
                const double R = radius_from_boundary(r, sigma, eps);
                CHECK(std::abs(R * R - (eps + sigma * R) * (eps + sigma * R) - r * r) <
                      1e-13 * R * R);
                const double q = 1 - sigma * sigma;
                if (sigma >= 0) {
                    CHECK(R >= r / std::sqrt(q) + sigma * eps / q - 1e-13);
                    CHECK(R <= r / std::sqrt(q) + (1 + sigma) * eps / q + 1e-13);
                }
            }
        }
    }
    CHECK_THROWS_AS(radius_from_boundary(1.0, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("cap height field hits the sphere exactly") {
    const double sigma = 0.5;
    const double R = 2.0 / std::sqrt(3.0);

    auto g = make_axisymmetric_grid(2, boundary_angle(1.0, 0.1).theta_b, std::size_t(201));
    const auto f = cap_height_field(R, sigma, g);

    // top-of-sphere identity e^v = R (1 - sigma) at the pole
    CHECK(std::exp(f.v[0]) == Catch::Approx(0.5773502691896258).margin(1e-15));

    // every node lies on the sphere of radius R about (0, -sigma R)
    const auto d = sphere_signed_distance(f, EquidistanceSphere<double>{sigma, R, 0.0,
                                                                        SphereKind::Interior});
    for (double di : d) CHECK(std::abs(di) < 1e-13);

    // the ideal trace has radius R sqrt(1 - sigma^2)
    CHECK(radius_from_boundary(1.0, sigma, 0.0) * std::sqrt(1 - sigma * sigma) ==
          Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("cap curvature closure across sigma and dimension") {
    const double eps = 0.05;
    const auto b = boundary_angle(1.0, eps);
    for (double sigma : {-0.5, 0.0, 0.3, 0.5, 0.9}) {
        const double R = radius_from_boundary(1.0, sigma, eps);
        for (int n : {1, 2, 3}) {
            double errs[2];
            std::size_t Ns[2] = {200, 400};
            for (int pass = 0; pass < 2; ++pass) {
                Grid<double> g = (n == 1)
                    ? make_meridian_grid(-b.theta_b, b.theta_b, Ns[pass])
                    : make_axisymmetric_grid(n, b.theta_b, Ns[pass]);
                const auto f = cap_height_field(R, sigma, g);
                const auto H = mean_curvature(f);
                double e = 0;
                for (std::size_t i = 1; i + 1 < H.size(); ++i)
                    e = std::max(e, std::abs(H[i] - sigma));
                errs[pass] = e;
            }
            if (sigma == 0.0) {
                CHECK(errs[0] < 1e-13);   // hemisphere: v is constant, H exactly 0
            } else {
                CHECK(errs[0] < 2e-3);
                CHECK(errs[0] / errs[1] > 3.5);
            }
        }
    }
}

TEST_CASE("barrier ball radii") {
    // eps = 0, delta = 1, sigma0 = 0.6: R = 1/sqrt(1 - 0.36) = 1.25
    auto [b1, b2] = barrier_radii(1.0, 1.0, 0.0, 0.6);
    CHECK(b1.R == Catch::Approx(1.25).margin(1e-14));
    CHECK(b1.center_height() == Catch::Approx(-0.75).margin(1e-14));
    CHECK(b2.R == Catch::Approx(1.25).margin(1e-14));
    CHECK(b2.center_height() == Catch::Approx(0.75).margin(1e-14));

    auto [c1, c2] = barrier_radii(0.7, 1.3, 0.2, 0.0);
    CHECK(c1.R == Catch::Approx(std::sqrt(0.04 + 0.49)).margin(1e-14));
    CHECK(c2.R == Catch::Approx(std::sqrt(0.04 + 1.69)).margin(1e-14));

    // the height-eps circles of the two balls recover the tangency radii
    auto [d1, d2] = barrier_radii(0.8, 0.5, 0.05, 0.9);
    const double rho1 = std::sqrt(d1.R * d1.R - std::pow(0.05 - d1.center_height(), 2));
    const double rho2 = std::sqrt(d2.R * d2.R - std::pow(0.05 - d2.center_height(), 2));
    CHECK(rho1 == Catch::Approx(0.8).margin(1e-12));
    CHECK(rho2 == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("CMC tangent plane") {
    // sigma = 0: vertical plane, eta = log(P0.e1) - log(z.e1)
    CHECK(tangent_plane_eta_at(2.0, 0.0, 0.5, 0.3) ==
          Catch::Approx(std::log(4.0)).margin(1e-14));
    CHECK(tangent_plane_eta_at(0.8, 0.0, 0.8, 0.1) == Catch::Approx(0.0).margin(1e-15));

    // sigma = 0.5, P0.e1 = 1, z.e1 = 0.8, y = 0.2
    const double eta = tangent_plane_eta_at(1.0, 0.5, 0.8, 0.2);
    CHECK(eta == Catch::Approx(0.08831762557413363).margin(1e-14));
    // cross-check: e^eta z lies on the plane x.e1 + lambda x_{n+1} = P0.e1
    const double lambda = 0.5 / std::sqrt(0.75);
    CHECK(std::exp(eta) * (0.8 + lambda * 0.2) == Catch::Approx(1.0).margin(1e-14));

    // the plane cuts the meridian through the tangency point in a curve of
    // constant hyperbolic curvature sigma (as a plane it is not a surface of
    // revolution, so the constancy is a section property)
    auto g = make_meridian_grid(0.1, 1.4, std::size_t(301));
    const auto f = tangent_plane_eta(1.0, 0.5, g);
    const auto H = mean_curvature(f);
    for (std::size_t i = 1; i + 1 < H.size(); ++i)
        CHECK(H[i] == Catch::Approx(0.5).margin(5e-4));

    CHECK_THROWS_AS(tangent_plane_eta_at(1.0, -0.9, 0.1, 0.05), std::domain_error);
}

TEST_CASE("horosphere field") {
    const auto b = boundary_angle(1.0, 0.1);
    auto g = make_axisymmetric_grid(2, b.theta_b, std::size_t(101));
    const auto f = horosphere_field(0.1, g);
    CHECK(f.v[0] == Catch::Approx(std::log(0.1)).margin(1e-15));
    // matches the Dirichlet data of the lifted circle for r = 1, eps = 0.1
    CHECK(f.v.back() == Catch::Approx(b.phi).margin(1e-14));
}

TEST_CASE("off-axis meridian cap through two lifted endpoints") {
    // the interval must straddle the axis, otherwise the cap is not
    // star-shaped about the origin near its inner endpoint
    const double sigma = 0.3, eps = 0.05;
    const double xl = -0.4, xr = 1.2;
    const auto sph = off_axis_sphere(xl, xr, sigma, eps);
    CHECK(sph.center_axis_offset == Catch::Approx(0.4).margin(1e-15));

    auto g = make_meridian_grid(std::atan2(xl, eps), std::atan2(xr, eps), std::size_t(401));
    const auto f = cap_height_field(sph.R, sigma, g, sph.center_axis_offset);

    const auto p = embed(f);
    CHECK(p.front().rho == Catch::Approx(xl).margin(1e-12));
    CHECK(p.front().height == Catch::Approx(eps).margin(1e-12));
    CHECK(p.back().rho == Catch::Approx(xr).margin(1e-12));
    CHECK(p.back().height == Catch::Approx(eps).margin(1e-12));

    for (double di : sphere_signed_distance(f, sph)) CHECK(std::abs(di) < 1e-13);

    const auto H = mean_curvature(f);
    for (std::size_t i = 2; i + 2 < H.size(); ++i)
        CHECK(H[i] == Catch::Approx(sigma).margin(2e-4));
}

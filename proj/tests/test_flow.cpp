#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mmcf/diagnostics.hpp"
#include "mmcf/exact_solutions.hpp"
#include "mmcf/flow.hpp"
#include "mmcf/grid.hpp"

using namespace mmcf;

namespace {

constexpr double kR = 1.0;
constexpr double kEps = 0.1;
constexpr double kSigma = 0.5;

HeightField<double> stationary_cap(int n, std::size_t N, double sigma = kSigma,
                                   double r = kR, double eps = kEps) {
    const auto lb = boundary_angle(r, eps);
    const double R = radius_from_boundary(r, sigma, eps);
    auto g = make_axisymmetric_grid(n, lb.theta_b, N);
    return cap_height_field(R, sigma, g);
}

// Stationary cap plus a smooth bump vanishing at the boundary.
HeightField<double> bumped_cap(int n, std::size_t N, double amp,
                               double sigma = kSigma) {
    auto f = stationary_cap(n, N, sigma);
    const double tb = f.grid.theta.back();
    for (std::size_t i = 0; i < f.size(); ++i)
        f.v[i] += amp * std::cos(std::numbers::pi * f.grid.theta[i] / (2 * tb));
    f.v.back() = stationary_cap(n, N, sigma).v.back();
    return f;
}

double sup_interior(const std::vector<double>& x, const Grid<double>& g) {
    double m = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!g.is_dirichlet(i)) m = std::max(m, std::abs(x[i]));
    return m;
}

} // namespace

TEST_CASE("right-hand side vanishes at second order on the stationary cap") {
    for (int n : {2, 3}) {
        double errs[2];
        std::size_t k = 0;
        for (std::size_t N : {std::size_t(100), std::size_t(200)}) {
            auto f = stationary_cap(n, N);
            errs[k++] = sup_interior(flow_rhs(f, kSigma), f.grid);
        }
        CHECK(errs[0] < 2e-3);
        CHECK(errs[0] / errs[1] > 3.5);
        CHECK(errs[0] / errs[1] < 4.5);
    }
}

TEST_CASE("horosphere is stationary for sigma = 1") {
    // u = const has H = 1 exactly; the discrete speed converges at O(h^2).
    auto g1 = make_axisymmetric_grid(2, 1.3, std::size_t(151));
    auto g2 = make_axisymmetric_grid(2, 1.3, std::size_t(301));
    const double e1 = sup_interior(flow_rhs(horosphere_field(0.4, g1), 1.0), g1);
    const double e2 = sup_interior(flow_rhs(horosphere_field(0.4, g2), 1.0), g2);
    CHECK(e1 < 2e-3);
    CHECK(e1 / e2 > 3.5);
}

TEST_CASE("constant field moves at exactly -sigma y") {
    // v = const is a Euclidean hemisphere: H = 0 on the discrete level too,
    // so the speed reduces to the forcing term.
    auto g = make_axisymmetric_grid(3, 1.1, std::size_t(81));
    HeightField<double> f(g, std::log(2.0));
    const auto r = flow_rhs(f, 0.5);
    for (std::size_t i = 0; i + 1 < f.size(); ++i)
        CHECK(r[i] == Catch::Approx(-0.5 * g.y[i]).margin(1e-15));
    CHECK(r.back() == 0.0);
}

TEST_CASE("meridian section of the tangent plane is stationary") {
    auto g = make_meridian_grid(-0.3, 1.2, std::size_t(201));
    auto g2 = make_meridian_grid(-0.3, 1.2, std::size_t(401));
    const double sigma = 0.5;
    const double e1 =
        sup_interior(flow_rhs(tangent_plane_eta(2.0, sigma, g), sigma), g);
    const double e2 =
        sup_interior(flow_rhs(tangent_plane_eta(2.0, sigma, g2), sigma), g2);
    CHECK(e1 < 5e-3);
    CHECK(e1 / e2 > 3.5);
}

TEST_CASE("semi-implicit fixed point is a discrete stationary solution") {
    // Drive the residual far below the step sizes used, then verify that
    // steps of very different dt leave the state unchanged: the fixed point
    // does not depend on dt.
    auto f = stationary_cap(2, std::size_t(100));
    FlowParams<double> p;
    p.sigma = kSigma;
    p.dt = 0.05;
    p.t_max = 500;
    p.residual_tol = 1e-12;
    auto traj = run_to_stationarity(f, p);
    REQUIRE(traj.status == RunStatus::Converged);

    for (double dt : {0.01, 0.1, 0.5}) {
        auto probe = traj.final_field;
        semi_implicit_step(probe, kSigma, dt);
        double move = 0;
        for (std::size_t i = 0; i < probe.size(); ++i)
            move = std::max(move, std::abs(probe.v[i] - traj.final_field.v[i]));
        CHECK(move < 1e-12);
    }
}

TEST_CASE("steppers converge at their formal order in dt") {
    const std::size_t N = 50;
    const double T = 0.06;
    auto v0 = bumped_cap(2, N, 0.05);

    auto integrate = [&](Scheme s, double dt) {
        auto f = v0;
        const auto steps = std::llround(T / dt);
        for (long long k = 0; k < steps; ++k) {
            if (s == Scheme::ExplicitRK2)
                heun_step(f, kSigma, dt);
            else
                semi_implicit_step(f, kSigma, dt);
        }
        return f;
    };
    auto supdiff = [](const HeightField<double>& a, const HeightField<double>& b) {
        double m = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
            m = std::max(m, std::abs(a.v[i] - b.v[i]));
        return m;
    };

    const auto ref = integrate(Scheme::ExplicitRK2, 3.75e-5);
    const double he1 = supdiff(integrate(Scheme::ExplicitRK2, 3e-4), ref);
    const double he2 = supdiff(integrate(Scheme::ExplicitRK2, 1.5e-4), ref);
    CHECK(he1 / he2 > 3.0);   // second order
    CHECK(he1 / he2 < 5.0);

    const double si1 = supdiff(integrate(Scheme::SemiImplicit, 3e-4), ref);
    const double si2 = supdiff(integrate(Scheme::SemiImplicit, 1.5e-4), ref);
    CHECK(si1 / si2 > 1.6);   // first order
    CHECK(si1 / si2 < 2.5);
}

TEST_CASE("semi-implicit stays stable far beyond the explicit limit") {
    auto f = bumped_cap(2, std::size_t(200), 0.05);
    const double dt = 10.0 * explicit_dt_limit(f);
    const double res0 = sup_interior(flow_rhs(f, kSigma), f.grid);
    for (int k = 0; k < 3000; ++k) semi_implicit_step(f, kSigma, dt);
    for (double x : f.v) REQUIRE(std::isfinite(x));
    const double res1 = sup_interior(flow_rhs(f, kSigma), f.grid);
    CHECK(res1 < 0.5 * res0);
}

// The pole row reduces to 2 (v_1 - v_0)/h^2 - sigma, i.e. unit diffusion
// coefficient; a limit built from y^2/(n w^2) alone admits a step n times
// too large there and Heun then carries a permanent pole sawtooth instead
// of converging.
TEST_CASE("explicit cfl stepping damps the pole mode to convergence") {
    auto f = bumped_cap(2, std::size_t(60), 0.05);
    const double h = f.grid.h;
    CHECK(explicit_dt_limit(f) <= 0.51 * h * h);

    FlowParams<double> p;
    p.sigma = kSigma;
    p.scheme = Scheme::ExplicitRK2;
    p.dt_policy = DtPolicy::Cfl;
    p.t_max = 40;
    p.residual_tol = 1e-6;
    const auto traj = run_to_stationarity(f, p);
    REQUIRE(traj.status == RunStatus::Converged);

    const auto speed = flow_speed(traj.final_field, kSigma);
    CHECK(std::abs(speed[0]) <= 1e-6);
}

TEST_CASE("explicit stepping rejects an unstable step size") {
    auto f = bumped_cap(2, std::size_t(100), 0.05);
    const double dt = 2.0 * explicit_dt_limit(f);
    CHECK_THROWS_AS(heun_step(f, kSigma, dt), std::invalid_argument);

    FlowParams<double> p;
    p.sigma = kSigma;
    p.scheme = Scheme::ExplicitRK2;
    p.dt = dt;
    p.t_max = 1.0;
    CHECK_THROWS_AS(run_to_stationarity(bumped_cap(2, std::size_t(100), 0.05), p),
                    std::invalid_argument);

    // the Cfl policy picks a stable step by itself
    p.dt_policy = DtPolicy::Cfl;
    p.t_max = 0.01;
    auto traj = run_to_stationarity(bumped_cap(2, std::size_t(100), 0.05), p);
    CHECK(traj.status == RunStatus::TimedOut);
    for (double x : traj.final_field.v) CHECK(std::isfinite(x));
}

TEST_CASE("first step from a hemisphere drops by dt sigma y") {
    auto g = make_axisymmetric_grid(2, 1.2, std::size_t(101));
    HeightField<double> f(g, 0.3);
    const double dt = 1e-5;
    auto stepped = f;
    heun_step(stepped, 0.5, dt);
    for (std::size_t i = 0; i + 1 < f.size(); ++i)
        CHECK(stepped.v[i] - f.v[i] ==
              Catch::Approx(-dt * 0.5 * g.y[i]).margin(2e-3 * dt));
}

TEST_CASE("flow from a perturbed cap settles back to the cap") {
    FlowParams<double> p;
    p.sigma = kSigma;
    p.dt = 1e-3;
    p.t_max = 50;
    p.residual_tol = 1e-6;
    auto traj = run_to_stationarity(bumped_cap(2, std::size_t(200), 0.05), p);
    REQUIRE(traj.status == RunStatus::Converged);
    REQUIRE(!traj.records.empty());
    CHECK(traj.records.front().step == 0);
    CHECK(traj.records.back().step == traj.steps);
    CHECK(traj.records.back().residual_sup <= p.residual_tol);

    const auto cap = stationary_cap(2, std::size_t(200));
    double dev = 0;
    for (std::size_t i = 0; i < cap.size(); ++i)
        dev = std::max(dev, std::abs(traj.final_field.v[i] - cap.v[i]));
    CHECK(dev < 5e-3);   // discrete stationary state vs continuum cap: O(h^2)

    // energy descends and balances against the dissipation integral
    const auto bal = check_energy_balance(traj.records, 1e-8, 0.05);
    CHECK(bal.monotone);
    CHECK(bal.balanced);
    CHECK(bal.drop > 0);

    // interior slope stays within the parabolic growth envelope
    CHECK(check_w_growth(traj.records).pass);
}

TEST_CASE("runs are deterministic") {
    FlowParams<double> p;
    p.sigma = kSigma;
    p.dt = 5e-4;
    p.t_max = 0.5;
    auto a = run_to_stationarity(bumped_cap(2, std::size_t(50), 0.03), p);
    auto b = run_to_stationarity(bumped_cap(2, std::size_t(50), 0.03), p);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.final_field.size(); ++i)
        CHECK(a.final_field.v[i] == b.final_field.v[i]);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].energy == b.records[k].energy);
        CHECK(a.records[k].residual_sup == b.records[k].residual_sup);
    }
}

TEST_CASE("flow respects sphere barriers on both sides") {
    // Scaling an equidistant sphere about the origin is an isometry of the
    // ambient space, so the scaled caps are stationary and the comparison
    // principle pins the evolving surface between them.
    const double R = radius_from_boundary(kR, kSigma, kEps);
    RunObservers<double> obs;
    obs.barrier_inside_of =
        EquidistanceSphere<double>{kSigma, R * std::exp(0.06), 0.0, SphereKind::Interior};
    obs.barrier_outside_of =
        EquidistanceSphere<double>{kSigma, R * std::exp(-0.06), 0.0, SphereKind::Interior};

    FlowParams<double> p;
    p.sigma = kSigma;
    p.dt = 1e-3;
    p.t_max = 50;
    p.residual_tol = 1e-6;
    auto traj = run_to_stationarity(bumped_cap(2, std::size_t(100), 0.02), p, obs);
    REQUIRE(traj.status == RunStatus::Converged);
    REQUIRE(traj.inside_extreme.size() == traj.records.size());
    REQUIRE(traj.outside_extreme.size() == traj.records.size());
    CHECK(check_barrier_containment(traj.inside_extreme, BarrierSide::Inside).pass);
    CHECK(check_barrier_containment(traj.outside_extreme, BarrierSide::Outside).pass);
}

TEST_CASE("monotone motion from a shrinking start") {
    // A cap with H = 0.9 flowed at sigma = 0.5 has positive speed everywhere,
    // so every nodal update should be nonnegative.
    const double sigma0 = 0.9;
    auto f = stationary_cap(2, std::size_t(100), sigma0);
    FlowParams<double> p;
    p.sigma = 0.5;
    p.dt = 1e-3;
    p.t_max = 50;
    p.residual_tol = 1e-6;
    auto traj = run_to_stationarity(f, p);
    REQUIRE(traj.status == RunStatus::Converged);
    CHECK(traj.initial_speed_min > 0);
    const auto rep = check_monotone(traj.records, traj.initial_speed_min);
    REQUIRE(rep.applicable);
    CHECK(rep.pass);
}

TEST_CASE("zero time horizon reports a single record and no convergence") {
    FlowParams<double> p;
    p.sigma = kSigma;
    p.t_max = 0;
    auto traj = run_to_stationarity(bumped_cap(2, std::size_t(60), 0.05), p);
    CHECK(traj.status == RunStatus::TimedOut);
    CHECK(traj.records.size() == 1);
    CHECK(traj.steps == 0);
}

TEST_CASE("an already stationary start converges without stepping") {
    auto f = stationary_cap(2, std::size_t(200));
    FlowParams<double> p;
    p.sigma = kSigma;
    p.residual_tol = 1e-2;   // well above the O(h^2) discretization residual
    auto traj = run_to_stationarity(f, p);
    CHECK(traj.status == RunStatus::Converged);
    CHECK(traj.steps == 0);
    CHECK(traj.records.size() == 1);
}

TEST_CASE("divergence-form identity holds at second order") {
    // (1/s^{n-1}) d/dtheta ( s^{n-1} y^{-n} v_theta / w ) = n H y^{-(n+1)};
    // both sides discretized with the same nodal data.
    auto mismatch = [](int n, std::size_t N) {
        auto f = stationary_cap(n, N);
        for (std::size_t i = 0; i < f.size(); ++i)
            f.v[i] += 0.05 * std::cos(3.0 * f.grid.theta[i]);
        const auto& g = f.grid;
        const auto d = derivatives(f);
        const auto w = slope_factor(d.d1);
        const auto H = mean_curvature(f);
        std::vector<double> F(f.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            F[i] = std::pow(g.s[i], double(g.n - 1)) *
                   std::pow(g.y[i], double(-g.n)) * d.d1[i] / w[i];
        // compare away from the boundary, where y^{-(n+1)} inflates both sides
        double sup = 0;
        for (std::size_t i = 1; i + 1 < f.size() && g.theta[i] <= 1.2; ++i) {
            const double lhs = (F[i + 1] - F[i - 1]) / (2 * g.h);
            const double rhs = g.n * H[i] * std::pow(g.y[i], double(-g.n - 1)) *
                               std::pow(g.s[i], double(g.n - 1));
            sup = std::max(sup, std::abs(lhs - rhs));
        }
        return sup;
    };
    for (int n : {2, 3}) {
        const double m1 = mismatch(n, std::size_t(100));
        const double m2 = mismatch(n, std::size_t(200));
        CHECK(m1 < 1.0);
        CHECK(m1 / m2 > 3.2);
    }
}

TEST_CASE("regularization sweep contracts and reports gradient bounds") {
    FlowParams<double> p;
    p.sigma = kSigma;
    p.dt = 1e-3;
    p.t_max = 50;
    p.residual_tol = 1e-5;
    auto sweep = epsilon_sweep<double>(
        {0.1, 0.2, 0.05}, p,
        [](double eps) {
            return make_axisymmetric_grid(2, boundary_angle(kR, eps).theta_b,
                                          std::size_t(80));
        },
        [](const Grid<double>& g, double eps) {
            return cap_height_field(radius_from_boundary(kR, kSigma, eps), kSigma, g);
        });
    REQUIRE(sweep.eps.size() == 3);
    CHECK(sweep.eps[0] == 0.2);   // sorted descending
    CHECK(sweep.cauchy_sup.size() == 2);
    for (const auto& run : sweep.runs) CHECK(run.status == RunStatus::Converged);
    for (double w : sweep.w_max) {
        CHECK(w >= 1.0);
        CHECK(w < 20.0);
    }
    for (double d : sweep.cauchy_sup) CHECK(d < 0.2);

    CHECK_THROWS_AS(epsilon_sweep<double>({}, p,
                                          [](double) { return Grid<double>{}; },
                                          [](const Grid<double>&, double) {
                                              return HeightField<double>{};
                                          }),
                    std::invalid_argument);
}

#include <doctest.h>

#include <random>

#include "dbparam/alm.hpp"
#include "dbparam/errors.hpp"
#include "dbparam/laplacian.hpp"
#include "dbparam/shapes.hpp"
#include "test_support.hpp"

using namespace dbparam;

namespace {

int folds(const TriMesh& mesh, const PlanarMap& map)
{
    return int((signed_face_areas(mesh.faces(), map).array() <= 0.0).count());
}

ALMState state_with(double lambda, double rho, double omega, double eta)
{
    ALMState s;
    s.lambda = lambda;
    s.rho = rho;
    s.omega = omega;
    s.eta = eta;
    return s;
}

void check_schedule(const SolveResult& res, const ALMConfig& cfg)
{
    REQUIRE(!res.history.empty());
    for (std::size_t k = 0; k < res.history.size(); ++k) {
        const OuterRecord& h = res.history[k];
        CHECK(h.lambda >= 0.0);
        CHECK(h.lambda <= 1.0);
        if (k + 1 < res.history.size()) {
            const OuterRecord& next = res.history[k + 1];
            if (h.multiplier_update) {
                CHECK(next.rho == h.rho);
                CHECK(next.lambda == doctest::Approx(h.lambda + h.rho * h.residual));
            }
            else {
                CHECK(next.rho == doctest::Approx(cfg.tau * h.rho));
                CHECK(next.lambda == h.lambda);
            }
        }
    }
    CHECK(res.state.lambda >= 0.0);
    CHECK(res.state.lambda <= 1.0);
}

}  // namespace

TEST_CASE("multiplier branch arithmetic")
{
    const ALMConfig cfg;
    // η = 0.1 so that r = 0.05 passes the tight test.
    const ALMState s = state_with(0.4, 0.1, 0.01, 0.1);
    REQUIRE(tight_criterion(s, 0.05));
    const ALMState n = update_state(s, 0.05, cfg);
    CHECK(n.lambda == doctest::Approx(0.405).epsilon(1e-15));
    CHECK(n.rho == 0.1);
    CHECK(n.u == doctest::Approx(0.1));
    CHECK(n.omega == doctest::Approx(0.01 * 0.1));
    CHECK(n.eta == doctest::Approx(0.1 * std::pow(0.1, 0.9)));
    CHECK(n.last_was_multiplier_update);
    CHECK(n.k == s.k + 1);
    CHECK(n.clamp_events == 0);

    const ALMState z = update_state(s, 0.0, cfg);
    CHECK(z.lambda == 0.4);
    CHECK(z.omega < s.omega);
    CHECK(z.eta < s.eta);
}

TEST_CASE("penalty branch arithmetic")
{
    const ALMConfig cfg;
    const ALMState s = state_with(0.4, 0.1, 0.01, 0.1);
    REQUIRE_FALSE(tight_criterion(s, 10.0));
    const ALMState n = update_state(s, 10.0, cfg);
    CHECK(n.lambda == 0.4);
    CHECK(n.rho == doctest::Approx(0.5));
    CHECK(n.u == doctest::Approx(0.1));
    CHECK(n.omega == doctest::Approx(0.1 * 0.1));
    CHECK(n.eta == doctest::Approx(0.01 * std::sqrt(0.1)));
    CHECK_FALSE(n.last_was_multiplier_update);

    // u follows 1/ρ once the penalty exceeds 1/γ.
    const ALMState big = update_state(state_with(0.4, 100.0, 0.01, 0.01), 1.0, cfg);
    CHECK(big.rho == doctest::Approx(500.0));
    CHECK(big.u == doctest::Approx(1.0 / 500.0));
}

TEST_CASE("tight criterion bounds keep lambda in [0, 1]")
{
    // The λ/ρ and (1 − λ)/ρ terms bind before η.
    const ALMState s = state_with(0.98, 2.0, 0.01, 1.0);
    CHECK(tight_criterion(s, 0.01));
    CHECK_FALSE(tight_criterion(s, 0.011));
    CHECK(tight_criterion(s, -0.01));
    const ALMState low = state_with(0.02, 2.0, 0.01, 1.0);
    CHECK_FALSE(tight_criterion(low, -0.011));

    std::mt19937 rng(9);
    std::uniform_real_distribution<double> lam(0.0, 1.0), rho(0.01, 50.0), res(-2.0, 2.0);
    const ALMConfig cfg;
    for (int trial = 0; trial < 2000; ++trial) {
        const ALMState st = state_with(lam(rng), rho(rng), 0.01, 1.0);
        const ALMState n = update_state(st, res(rng), cfg);
        CHECK(n.lambda >= 0.0);
        CHECK(n.lambda <= 1.0);
        CHECK(n.rho >= st.rho);
    }
}

TEST_CASE("initial state and config validation")
{
    ALMConfig cfg;
    const ALMState s = initial_state(cfg);
    CHECK(s.lambda == 0.4);
    CHECK(s.rho == 0.1);
    CHECK(s.omega == 0.01);
    CHECK(s.eta == 0.01);
    CHECK(s.u == doctest::Approx(0.1));
    CHECK_NOTHROW(cfg.validate());

    ALMConfig bad = cfg;
    bad.tau = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.eta_star = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.lambda0 = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS((void)solve_weighted(shapes::square_fan(), -1.0, Shape::Disk), ConfigError);
}

TEST_CASE("automatic corners sit at arc-length quartiles")
{
    for (const TriMesh& m : {shapes::bumpy_hemisphere(8), shapes::spike(7), shapes::square_grid(6)}) {
        const auto& loop = m.boundary_loop();
        std::vector<double> s{0.0};
        for (std::size_t k = 0; k < loop.size(); ++k) {
            s.push_back(s.back() + (m.vertices().row(loop[(k + 1) % loop.size()]) -
                                    m.vertices().row(loop[k]))
                                       .norm());
        }
        const auto corners = auto_corners(m);
        CHECK(corners[0] == loop[0]);
        for (int q = 1; q < 4; ++q) {
            const double target = s.back() * q / 4.0;
            double best = 1e300;
            for (std::size_t k = 0; k < loop.size(); ++k) {
                best = std::min(best, std::abs(s[k] - target));
            }
            const double got = std::abs(s[std::size_t(m.boundary_position(corners[q]))] - target);
            CHECK(got == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("square partition covers the loop with shared corners")
{
    const TriMesh m = shapes::bumpy_hemisphere(6);
    const BoundaryPartition p = partition_square(m);
    const int nb = int(m.num_boundary());
    CHECK(p.corner_positions[0] == 0);
    CHECK(p.loop.front() == p.corners[0]);
    CHECK(p.y0.front() == p.corners[0]);
    CHECK(p.y0.back() == p.corners[1]);
    CHECK(p.x1.front() == p.corners[1]);
    CHECK(p.x1.back() == p.corners[2]);
    CHECK(p.y1.front() == p.corners[2]);
    CHECK(p.y1.back() == p.corners[3]);
    CHECK(p.x0.front() == p.corners[3]);
    CHECK(p.x0.back() == p.corners[0]);
    CHECK(int(p.y0.size() + p.x1.size() + p.y1.size() + p.x0.size()) == nb + 4);

    for (int v : p.y0) CHECK(p.boundary_map(v, 1) == 0.0);
    for (int v : p.x1) CHECK(p.boundary_map(v, 0) == 1.0);
    for (int v : p.y1) CHECK(p.boundary_map(v, 1) == 1.0);
    for (int v : p.x0) CHECK(p.boundary_map(v, 0) == 0.0);
    const Eigen::Vector2d expected[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    for (int q = 0; q < 4; ++q) {
        CHECK(p.boundary_map.row(p.corners[q]).transpose() == expected[q]);
    }
    CHECK(p.free_x.size() == m.interior_indices().size() + p.y0.size() + p.y1.size() - 4);
    CHECK(p.free_y.size() == m.interior_indices().size() + p.x1.size() + p.x0.size() - 4);
    for (int c : p.corners) {
        CHECK(std::find(p.free_x.begin(), p.free_x.end(), c) == p.free_x.end());
        CHECK(std::find(p.free_y.begin(), p.free_y.end(), c) == p.free_y.end());
    }
}

TEST_CASE("corner errors")
{
    const TriMesh m = shapes::square_grid(4);
    const auto& loop = m.boundary_loop();
    const auto ok = auto_corners(m);
    CHECK_NOTHROW((void)partition_square(m, ok));
    CHECK_THROWS_AS((void)partition_square(m, std::array<int, 4>{ok[0], ok[2], ok[1], ok[3]}),
                    CornerOrderError);
    CHECK_THROWS_AS((void)partition_square(m, std::array<int, 4>{ok[0], ok[0], ok[2], ok[3]}),
                    CornerOrderError);
    CHECK_THROWS_AS((void)partition_square(m, std::array<int, 4>{12, ok[1], ok[2], ok[3]}),
                    CornerOrderError);
    CHECK_THROWS_AS((void)partition_square(m, std::array<int, 4>{-1, ok[1], ok[2], ok[3]}),
                    CornerOrderError);
    // A rotation of valid corners is still valid.
    CHECK_NOTHROW((void)partition_square(m, std::array<int, 4>{ok[1], ok[2], ok[3], ok[0]}));
    CHECK(loop.size() == 16);
}

TEST_CASE("arc-length circle boundary")
{
    const TriMesh m = shapes::spike(6);
    const PlanarMap b = arc_length_circle(m);
    const auto& loop = m.boundary_loop();
    CHECK(b(loop[0], 0) == 1.0);
    CHECK(b(loop[0], 1) == 0.0);
    for (int v : loop) {
        CHECK(b.row(v).norm() == doctest::Approx(1.0));
    }
    for (int v : m.interior_indices()) {
        CHECK(b.row(v).isZero());
    }
}

TEST_CASE("fixed-point initializer")
{
    const TriMesh m = shapes::bumpy_hemisphere(8);
    const auto& I = m.interior_indices();
    const auto& B = m.boundary_loop();

    SUBCASE("first iterate is the cotangent harmonic map")
    {
        const PlanarMap f = fixed_point_init(m, 0.0, 1);
        const SparseMatrix LD = build_LD(m);
        const Eigen::MatrixXd Lf = LD * f;
        double worst = 0.0;
        for (int v : I) {
            worst = std::max(worst, Lf.row(v).cwiseAbs().maxCoeff());
        }
        CHECK(worst <= 1e-10);
        const PlanarMap circle = arc_length_circle(m);
        for (int v : B) {
            CHECK(f.row(v) == circle.row(v));
        }
        // λ only enters after the first solve.
        CHECK(fixed_point_init(m, 0.7, 1) == f);
    }

    SUBCASE("lambda = 0 is idempotent")
    {
        const PlanarMap f1 = fixed_point_init(m, 0.0, 1);
        const PlanarMap f4 = fixed_point_init(m, 0.0, 4);
        CHECK((f1 - f4).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("default settings give no folds")
    {
        const PlanarMap f = fixed_point_init(m);
        CHECK(folds(m, f) == 0);
        CHECK((f - fixed_point_init(m, 0.0, 1)).norm() > 0.0);
    }

    CHECK_THROWS_AS((void)fixed_point_init(m, 1.5, 3), LambdaOutOfRange);
    CHECK_THROWS_AS((void)fixed_point_init(m, 0.4, 0), ConfigError);
    CHECK_THROWS_AS((void)fixed_point_init(m, PlanarMap::Zero(3, 2)), ShapeError);
}

TEST_CASE("unit square with identity initializer")
{
    const TriMesh m = shapes::square_grid(6);
    const int side = 7;
    const std::array<int, 4> corners{0, side - 1, side * side - 1, side * (side - 1)};
    const SolveResult res = solve_square(m, corners);
    CHECK(res.converged);
    CHECK(std::abs(res.report.E_C) <= 1e-9);
    CHECK(std::abs(res.report.E_A) <= 1e-9);
    CHECK((res.map - m.vertices().leftCols<2>()).cwiseAbs().maxCoeff() <= 1e-9);
    REQUIRE(res.partition.has_value());
    CHECK(res.partition->corners == corners);
}

TEST_CASE("disk solve on the hemisphere")
{
    const TriMesh m = shapes::bumpy_hemisphere(10);
    const ALMConfig cfg;
    const SolveResult res = solve_disk(m, cfg);
    CHECK(res.converged);
    CHECK(std::abs(res.report.E_A - res.report.E_C) <= 1e-5);
    CHECK(res.grad_norm <= res.omega_star);
    CHECK(res.omega_star == doctest::Approx(std::sqrt(double(2 * m.num_interior() + m.num_boundary())) * 1e-4));
    CHECK(folds(m, res.map) == 0);
    CHECK(res.report.E_C > 0.0);
    check_schedule(res, cfg);
    CHECK(res.outer_iterations == int(res.history.size()));
    CHECK(res.outer_iterations <= cfg.max_outer_iterations);

    // Boundary stays on the circle.
    for (int v : m.boundary_loop()) {
        CHECK(res.map.row(v).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }

    // The energy curves close in on each other.
    if (res.history.size() >= 6) {
        auto max_abs = [&](std::size_t from, std::size_t to) {
            double out = 0.0;
            for (std::size_t k = from; k < to; ++k) {
                out = std::max(out, std::abs(res.history[k].residual));
            }
            return out;
        };
        const std::size_t n = res.history.size();
        CHECK(max_abs(n - 3, n) < max_abs(0, 3));
    }

    // Trace iterations are numbered continuously.
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
        CHECK(res.trace[k].iteration == int(k));
    }
    CHECK(int(res.trace.size()) == res.inner_iterations + 1);
}

TEST_CASE("square solve on the hemisphere")
{
    const TriMesh m = shapes::bumpy_hemisphere(8);
    const ALMConfig cfg;
    const SolveResult res = solve_square(m, std::nullopt, cfg);
    CHECK(res.converged);
    CHECK(std::abs(res.report.residual) <= 1e-5);
    CHECK(folds(m, res.map) == 0);
    check_schedule(res, cfg);
    REQUIRE(res.partition.has_value());
    const BoundaryPartition& p = *res.partition;
    for (int v : p.y0) CHECK(res.map(v, 1) == 0.0);
    for (int v : p.x1) CHECK(res.map(v, 0) == 1.0);
    for (int v : p.y1) CHECK(res.map(v, 1) == 1.0);
    for (int v : p.x0) CHECK(res.map(v, 0) == 0.0);
    for (int v : m.boundary_loop()) {
        CHECK(res.map(v, 0) >= 0.0);
        CHECK(res.map(v, 0) <= 1.0);
        CHECK(res.map(v, 1) >= 0.0);
        CHECK(res.map(v, 1) <= 1.0);
    }
}

TEST_CASE("weighted constraint")
{
    const TriMesh m = shapes::spike(10);
    const SolveResult base = solve_disk(m);
    const SolveResult one = solve_weighted(m, 1.0, Shape::Disk);
    CHECK(one.map == base.map);
    CHECK(one.state.lambda == base.state.lambda);
    CHECK(one.outer_iterations == base.outer_iterations);

    const SolveResult heavy = solve_weighted(m, 15.0, Shape::Disk);
    CHECK(heavy.report.E_A < base.report.E_A);
    CHECK(std::abs(heavy.report.residual) <= 1e-5);
    CHECK(heavy.report.residual == doctest::Approx(15.0 * heavy.report.E_A - heavy.report.E_C));
    CHECK(heavy.state.lambda >= 0.0);
    CHECK(heavy.state.lambda <= 1.0);
    CHECK(heavy.state.clamp_events >= 0);
}

TEST_CASE("pinned multipliers bracket the balanced map")
{
    const TriMesh m = shapes::bumpy_hemisphere(8);
    const SolveResult conformal = solve_pinned(m, 0.0, Shape::Disk);
    const SolveResult authalic = solve_pinned(m, 1.0, Shape::Disk);
    const SolveResult balanced = solve_disk(m);
    CHECK(conformal.converged);
    CHECK(authalic.converged);
    CHECK(conformal.report.E_C < balanced.report.E_C);
    CHECK(authalic.report.E_A < balanced.report.E_A);
    CHECK(conformal.report.E_A > balanced.report.E_A);
    CHECK(authalic.report.E_C > balanced.report.E_C);
    CHECK(conformal.state.lambda == 0.0);
    CHECK(authalic.state.lambda == 1.0);
    CHECK_THROWS_AS((void)solve_pinned(m, 1.2, Shape::Disk), LambdaOutOfRange);
}

TEST_CASE("fixed-point result packaging")
{
    const TriMesh m = shapes::bumpy_hemisphere(6);
    ALMConfig cfg;
    const SolveResult disk = solve_fixed_point(m, Shape::Disk, cfg);
    CHECK((disk.map - fixed_point_init(m)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(disk.report.residual == doctest::Approx(disk.report.E_A - disk.report.E_C));
    const SolveResult sq = solve_fixed_point(m, Shape::Square, cfg);
    REQUIRE(sq.partition.has_value());
    CHECK(sq.report.image_area == doctest::Approx(1.0));
}

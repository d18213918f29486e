#include <doctest.h>

#include <numbers>
#include <random>
#include <set>

#include "dbparam/energy.hpp"
#include "dbparam/errors.hpp"
#include "dbparam/laplacian.hpp"
#include "dbparam/shapes.hpp"
#include "test_support.hpp"

using namespace dbparam;
using std::numbers::pi;

namespace {

PlanarMap planar_positions(const TriMesh& m)
{
    return m.vertices().leftCols<2>();
}

double max_abs(const SparseMatrix& a)
{
    double out = 0.0;
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            out = std::max(out, std::abs(it.value()));
        }
    }
    return out;
}

double max_abs_diff(const SparseMatrix& a, const SparseMatrix& b)
{
    return max_abs(SparseMatrix(a - b));
}

// Per-face accumulation with angles measured by acos and σ = |τ| / |f(τ)|.
Eigen::MatrixXd stretch_oracle(const TriMesh& mesh, const PlanarMap& map)
{
    const Eigen::Index n = mesh.num_vertices();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    const auto& F = mesh.faces();
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        const Eigen::Vector2d p0 = map.row(F(f, 0)), p1 = map.row(F(f, 1)), p2 = map.row(F(f, 2));
        const double img_area = std::abs(signed_area(p0, p1, p2));
        const double sigma = mesh.face_areas()[f] / img_area;
        const auto angles = corner_angles(Eigen::MatrixXd(map), F.row(f));
        for (int c = 0; c < 3; ++c) {
            const int i = F(f, (c + 1) % 3), j = F(f, (c + 2) % 3);
            const double w = 0.5 / std::tan(angles[std::size_t(c)]) / sigma;
            L(i, j) -= w;
            L(j, i) -= w;
            L(i, i) += w;
            L(j, j) += w;
        }
    }
    return L;
}

std::vector<TriMesh> test_meshes()
{
    std::vector<TriMesh> out;
    out.push_back(shapes::square_fan());
    out.push_back(shapes::planar_disk(5));
    out.push_back(shapes::square_grid(6));
    out.push_back(shapes::bumpy_hemisphere(8));
    out.push_back(shapes::spike(8));
    return out;
}

}  // namespace

TEST_CASE("right isoceles triangle weights")
{
    const RawMesh raw = shapes::single_triangle();
    const TriMesh m(raw.vertices, raw.faces);
    const SparseMatrix L = build_LD(m);
    // Hypotenuse (1,2) faces the right angle.
    CHECK(std::abs(L.coeff(1, 2)) <= 1e-16);
    CHECK(L.coeff(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(L.coeff(0, 2) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(L.coeff(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const Eigen::MatrixX3d w = half_cotangents(m);
    CHECK(std::abs(w(0, 0)) <= 1e-16);
    CHECK(w(0, 1) == doctest::Approx(0.5 / std::tan(pi / 4)));
    CHECK(w(0, 2) == doctest::Approx(0.5 / std::tan(pi / 4)));
}

TEST_CASE("four-triangle square: spokes weigh -1, rows sum to zero")
{
    const TriMesh m = shapes::square_fan();
    const SparseMatrix L = build_LD(m);
    for (int v = 0; v < 4; ++v) {
        CHECK(L.coeff(v, 4) == doctest::Approx(-1.0).epsilon(1e-14));
    }
    // Square sides face right angles at the center.
    for (int v = 0; v < 4; ++v) {
        CHECK(std::abs(L.coeff(v, (v + 1) % 4)) <= 1e-15);
    }
    const Eigen::VectorXd rows = L * Eigen::VectorXd::Ones(5);
    CHECK(rows.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("L_D is scale invariant")
{
    const TriMesh m = shapes::bumpy_hemisphere(6);
    const TriMesh scaled(10.0 * m.vertices(), m.faces());
    CHECK(max_abs_diff(build_LD(m), build_LD(scaled)) <= 1e-12 * max_abs(build_LD(m)));
}

TEST_CASE("identity map gives L_S = L_D on planar meshes")
{
    for (const TriMesh& m : {shapes::square_fan(), shapes::planar_disk(6), shapes::square_grid(7)}) {
        const SparseMatrix LD = build_LD(m);
        const SparseMatrix LS = build_LS(m, planar_positions(m));
        CHECK(max_abs_diff(LS, LD) <= 1e-12);
    }
}

TEST_CASE("scaling the image by c scales L_S by c squared")
{
    const TriMesh m = shapes::planar_disk(5);
    const PlanarMap id = planar_positions(m);
    const SparseMatrix LS = build_LS(m, id);
    for (double c : {0.5, 3.0}) {
        const SparseMatrix scaled = build_LS(m, c * id);
        CHECK(max_abs_diff(scaled, c * c * LS) <= 1e-12 * c * c * max_abs(LS));
    }
}

TEST_CASE("L_S matches a per-face acos oracle for random maps")
{
    std::mt19937 rng(17);
    for (const TriMesh& m : test_meshes()) {
        const PlanarMap f = testsupport::random_tutte_map(m, rng);
        const Eigen::MatrixXd oracle = stretch_oracle(m, f);
        const Eigen::MatrixXd LS = Eigen::MatrixXd(build_LS(m, f));
        CHECK((LS - oracle).cwiseAbs().maxCoeff() <= 1e-9 * oracle.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("degenerate image faces and shape mismatches are rejected")
{
    const TriMesh m = shapes::square_fan();
    PlanarMap f = planar_positions(m);
    f.row(4) = f.row(0);  // collapses faces 0 and 3
    CHECK_THROWS_AS((void)build_LS(m, f), DegenerateImageFaceError);
    CHECK_THROWS_AS((void)build_LS(m, PlanarMap::Zero(3, 2)), ShapeError);
}

TEST_CASE("blend coefficients")
{
    std::mt19937 rng(2);
    const TriMesh m = shapes::planar_disk(4);
    const PlanarMap f = testsupport::random_tutte_map(m, rng);
    const SparseMatrix LD = build_LD(m);
    const SparseMatrix LS = build_LS(m, f);
    const double area = m.total_area();

    CHECK(max_abs_diff(blend_Llambda(LD, LS, 0.0, area, 2.0), LD) == 0.0);
    CHECK(max_abs_diff(blend_Llambda(LD, LS, 1.0, area, 1.0, BlendMode::FixedPoint),
                       SparseMatrix(2.0 * LS)) <= 1e-14 * max_abs(LS));
    CHECK(max_abs_diff(blend_Llambda(LD, LS, 0.5, area, area),
                       SparseMatrix(0.5 * LD + LS)) <= 1e-14 * max_abs(LD));
    // Augmented mode carries |M| / A.
    CHECK(max_abs_diff(blend_Llambda(LD, LS, 0.25, 3.0, 2.0),
                       SparseMatrix(0.75 * LD + (2.0 * 3.0 * 0.25 / 2.0) * LS)) <=
          1e-14 * max_abs(LD));
    CHECK(max_abs_diff(blend_Llambda(LD, LS, 0.25, 3.0, 2.0, BlendMode::Augmented, 4.0),
                       SparseMatrix(0.75 * LD + (4.0 * 2.0 * 3.0 * 0.25 / 2.0) * LS)) <=
          1e-14 * max_abs(LD));

    CHECK_THROWS_AS((void)blend_Llambda(LD, LS, -0.1, area, area), LambdaOutOfRange);
    CHECK_THROWS_AS((void)blend_Llambda(LD, LS, 1.1, area, area), LambdaOutOfRange);
    CHECK_THROWS_AS((void)blend_Llambda(LD, LS, 0.5, area, 0.0), NonPositiveImageArea);
    CHECK_NOTHROW((void)blend_Llambda(LD, LS, 0.5, area, 0.0, BlendMode::FixedPoint));
}

TEST_CASE("symmetry, null space and sparsity pattern")
{
    std::mt19937 rng(23);
    for (const TriMesh& m : test_meshes()) {
        const PlanarMap f = testsupport::random_tutte_map(m, rng);
        const SparseMatrix LD = build_LD(m);
        const SparseMatrix LS = build_LS(m, f);
        Eigen::MatrixX2d polygon(Eigen::Index(m.num_boundary()), 2);
        for (std::size_t k = 0; k < m.boundary_loop().size(); ++k) {
            polygon.row(Eigen::Index(k)) = f.row(m.boundary_loop()[k]);
        }
        const SparseMatrix blend =
            blend_Llambda(LD, LS, 0.3, m.total_area(), shoelace_area(polygon));

        std::set<std::pair<int, int>> adjacency;
        for (Eigen::Index t = 0; t < m.num_faces(); ++t) {
            for (int c = 0; c < 3; ++c) {
                const int a = m.faces()(t, c), b = m.faces()(t, (c + 1) % 3);
                adjacency.emplace(a, b);
                adjacency.emplace(b, a);
            }
        }
        for (int v = 0; v < m.num_vertices(); ++v) {
            adjacency.emplace(v, v);
        }

        for (const SparseMatrix* L : {&LD, &LS, &blend}) {
            const SparseMatrix LT = L->transpose();
            CHECK(max_abs_diff(*L, LT) == 0.0);
            const Eigen::VectorXd rows = *L * Eigen::VectorXd::Ones(m.num_vertices());
            CHECK(rows.cwiseAbs().maxCoeff() <= 1e-12 * max_abs(*L));

            std::set<std::pair<int, int>> pattern;
            for (int k = 0; k < L->outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(*L, k); it; ++it) {
                    pattern.emplace(int(it.row()), int(it.col()));
                }
            }
            CHECK(pattern == adjacency);
        }
    }
}

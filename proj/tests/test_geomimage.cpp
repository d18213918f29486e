#include <doctest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "dbparam/alm.hpp"
#include "dbparam/errors.hpp"
#include "dbparam/geomimage.hpp"
#include "dbparam/metrics.hpp"
#include "dbparam/shapes.hpp"
#include "test_support.hpp"

using namespace dbparam;

namespace {

// Parameter positions of a reconstructed mesh: grid pixels, then quad centers.
PlanarMap reconstruction_params(int W, int H)
{
    PlanarMap p(Eigen::Index(W) * H + Eigen::Index(W - 1) * (H - 1), 2);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            p.row(y * W + x) << double(x) / (W - 1), double(y) / (H - 1);
        }
    }
    Eigen::Index q = Eigen::Index(W) * H;
    for (int y = 0; y + 1 < H; ++y) {
        for (int x = 0; x + 1 < W; ++x) {
            p.row(q++) << (x + 0.5) / (W - 1), (y + 0.5) / (H - 1);
        }
    }
    return p;
}

double distance_to_mesh(const Eigen::Vector3d& p, const TriMesh& m)
{
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index f = 0; f < m.num_faces(); ++f) {
        best = std::min(best, testsupport::point_triangle_distance(
                                  p, m.vertices().row(m.faces()(f, 0)),
                                  m.vertices().row(m.faces()(f, 1)),
                                  m.vertices().row(m.faces()(f, 2))));
    }
    return best;
}

}  // namespace

TEST_CASE("flat identity square stores pixel coordinates")
{
    const TriMesh flat = shapes::square_grid(3);
    const PlanarMap id = flat.vertices().leftCols<2>();
    for (auto [W, H] : {std::pair{2, 2}, std::pair{7, 5}, std::pair{16, 16}}) {
        const GeometryImage img = encode(flat, id, W, H);
        CHECK(img.width == W);
        CHECK(img.height == H);
        CHECK(std::all_of(img.mask.begin(), img.mask.end(), [](auto m) { return m == 1; }));
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const Eigen::Vector3d s = img.sample(x, y);
                CHECK(s.x() == doctest::Approx(double(x) / (W - 1)).epsilon(1e-12));
                CHECK(s.y() == doctest::Approx(double(y) / (H - 1)).epsilon(1e-12));
                CHECK(std::abs(s.z()) <= 1e-15);
            }
        }
    }
}

TEST_CASE("pixels on vertex parameters store the vertex exactly")
{
    // Bumpy surface over a 4x4 grid sampled at exactly the grid nodes.
    TriMesh grid = shapes::square_grid(4);
    Eigen::MatrixX3d v = grid.vertices();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        v(i, 2) = std::sin(3.0 * v(i, 0)) * std::cos(2.0 * v(i, 1));
    }
    const TriMesh bumpy(v, grid.faces());
    const GeometryImage img = encode(bumpy, grid.vertices().leftCols<2>(), 5, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            CHECK((img.sample(x, y) - v.row(y * 5 + x).transpose()).norm() <= 1e-15);
        }
    }
}

TEST_CASE("hemisphere samples lie on the input surface")
{
    const TriMesh m = shapes::bumpy_hemisphere(8);
    const SolveResult sq = solve_fixed_point(m, Shape::Square);
    const GeometryImage img = encode(m, sq.map, 64, 64);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < img.samples.rows(); ++i) {
        worst = std::max(worst, distance_to_mesh(img.samples.row(i).transpose(), m));
    }
    CHECK(worst <= 1e-9);
    CHECK((img.bbox_min.array() <= img.samples.colwise().minCoeff().transpose().array()).all());
    CHECK((img.bbox_max.array() >= img.samples.colwise().maxCoeff().transpose().array()).all());
}

TEST_CASE("encode preconditions")
{
    const TriMesh flat = shapes::square_grid(2);
    PlanarMap id = flat.vertices().leftCols<2>();
    CHECK_THROWS_AS((void)encode(flat, id, 1, 4), ConfigError);
    CHECK_THROWS_AS((void)encode(flat, PlanarMap::Zero(3, 2), 4, 4), ShapeError);

    PlanarMap folded = id;
    folded.row(4) << 1.4, 0.5;  // center pushed past the right side
    CHECK_THROWS_AS((void)encode(flat, folded, 4, 4), FoldedMapError);

    // A map that misses part of [0,1]² cannot be sampled.
    PlanarMap shrunk = 0.5 * id;
    CHECK_THROWS_AS((void)encode(flat, shrunk, 4, 4), PointLocationFailure);
}

TEST_CASE("point locator")
{
    const TriMesh flat = shapes::square_grid(5);
    const PlanarMap id = flat.vertices().leftCols<2>();
    const PointLocator loc(flat.faces(), id);
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Vector2d q(u(rng), u(rng));
        const auto hit = loc.locate(q);
        REQUIRE(hit.has_value());
        CHECK(hit->bary.minCoeff() >= 0.0);
        CHECK(hit->bary.sum() == doctest::Approx(1.0));
        Eigen::Vector2d back = Eigen::Vector2d::Zero();
        for (int c = 0; c < 3; ++c) {
            back += hit->bary[c] * id.row(flat.faces()(hit->face, c)).transpose();
        }
        CHECK((back - q).norm() <= 1e-12);
    }
    // Just outside snaps; far outside fails.
    const auto snapped = loc.locate({1.0 + 5e-10, 0.5});
    REQUIRE(snapped.has_value());
    CHECK(snapped->bary.minCoeff() >= 0.0);
    CHECK_FALSE(loc.locate({1.1, 0.5}).has_value());
}

TEST_CASE("reconstruction counts and orientation")
{
    const TriMesh flat = shapes::square_grid(2);
    const PlanarMap id = flat.vertices().leftCols<2>();
    for (auto [W, H] : {std::pair{2, 2}, std::pair{3, 7}, std::pair{10, 10}}) {
        const TriMesh rec = reconstruct(encode(flat, id, W, H));
        CHECK(rec.num_vertices() == Eigen::Index(W) * H + Eigen::Index(W - 1) * (H - 1));
        CHECK(rec.num_faces() == 4 * Eigen::Index(W - 1) * (H - 1));
        CHECK(fold_count(rec, reconstruction_params(W, H)) == 0);
    }
    const TriMesh one = reconstruct(encode(flat, id, 2, 2));
    CHECK(one.num_vertices() == 5);
    CHECK(one.num_faces() == 4);
    CHECK(one.vertices().row(4).transpose().isApprox(Eigen::Vector3d(0.5, 0.5, 0.0)));

    // Curved source: centers average the quad corners.
    const TriMesh m = shapes::bumpy_hemisphere(6);
    const SolveResult sq = solve_fixed_point(m, Shape::Square);
    const GeometryImage img = encode(m, sq.map, 9, 9);
    const TriMesh rec = reconstruct(img);
    const Eigen::Vector3d expected =
        0.25 * (img.sample(0, 0) + img.sample(1, 0) + img.sample(1, 1) + img.sample(0, 1));
    CHECK((rec.vertices().row(81).transpose() - expected).norm() <= 1e-15);
    CHECK(fold_count(rec, reconstruction_params(9, 9)) == 0);
}

TEST_CASE("PNG round trip and sidecar")
{
    const auto dir = testsupport::temp_dir("geomimage_png");
    const TriMesh m = shapes::bumpy_hemisphere(8);
    const SolveResult sq = solve_fixed_point(m, Shape::Square);
    const GeometryImage img = encode(m, sq.map, 33, 20);
    const auto png = dir / "hemi.png";
    write_image(img, png);
    CHECK(std::filesystem::exists(png));
    CHECK(sidecar_path(png) == dir / "hemi.gi.json");
    REQUIRE(std::filesystem::exists(sidecar_path(png)));

    std::ifstream side(sidecar_path(png));
    const auto j = nlohmann::json::parse(side);
    CHECK(j["width"] == 33);
    CHECK(j["height"] == 20);
    CHECK(j["bbox_min"].size() == 3);
    CHECK(j["bbox_max"].size() == 3);

    const GeometryImage back = read_image(png);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.bbox_min == img.bbox_min);
    CHECK(back.bbox_max == img.bbox_max);
    CHECK(back.mask == img.mask);
    const Eigen::Vector3d extent = img.bbox_max - img.bbox_min;
    for (int axis = 0; axis < 3; ++axis) {
        const double err = (back.samples.col(axis) - img.samples.col(axis)).cwiseAbs().maxCoeff();
        CHECK(err <= extent[axis] / 65535.0);
    }

    // Extremal samples map to the quantization endpoints and come back exactly.
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::Index lo = 0, hi = 0;
        img.samples.col(axis).minCoeff(&lo);
        img.samples.col(axis).maxCoeff(&hi);
        CHECK(back.samples(lo, axis) == img.bbox_min[axis]);
        CHECK(back.samples(hi, axis) == img.bbox_max[axis]);
    }
}

TEST_CASE("reading requires the sidecar and a readable file")
{
    const auto dir = testsupport::temp_dir("geomimage_missing");
    const TriMesh flat = shapes::square_grid(2);
    const GeometryImage img = encode(flat, flat.vertices().leftCols<2>(), 4, 4);
    write_image(img, dir / "a.png");
    std::filesystem::remove(sidecar_path(dir / "a.png"));
    CHECK_THROWS_AS((void)read_image(dir / "a.png"), MissingSidecar);

    const char* sidecar = R"({"width":4,"height":4,"bbox_min":[0,0,0],"bbox_max":[1,1,1]})";
    std::ofstream(dir / "nope.gi.json") << sidecar;
    CHECK_THROWS_AS((void)read_image(dir / "nope.png"), IOError);

    std::ofstream(dir / "junk.png") << "not a png";
    std::ofstream(dir / "junk.gi.json") << sidecar;
    CHECK_THROWS_AS((void)read_image(dir / "junk.png"), IOError);

    CHECK_THROWS_AS(write_image(img, dir / "no_such_dir" / "x.png"), IOError);
}

TEST_CASE("flat identity survives encode, write, read and reconstruct")
{
    const auto dir = testsupport::temp_dir("geomimage_flat");
    const TriMesh flat = shapes::square_grid(4);
    const GeometryImage img = encode(flat, flat.vertices().leftCols<2>(), 12, 12);
    write_image(img, dir / "flat.png");
    const TriMesh rec = reconstruct(read_image(dir / "flat.png"));
    for (int y = 0; y < 12; ++y) {
        for (int x = 0; x < 12; ++x) {
            const Eigen::Vector3d p = rec.vertices().row(y * 12 + x).transpose();
            CHECK(std::abs(p.x() - x / 11.0) <= 1.0 / 65535.0);
            CHECK(std::abs(p.y() - y / 11.0) <= 1.0 / 65535.0);
            CHECK(p.z() == 0.0);
        }
    }
}

#include "dbparam/shapes.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace dbparam::shapes {

namespace {

constexpr double kPi = std::numbers::pi;

struct RingLayout
{
    std::vector<Eigen::Vector2d> points;  // planar positions
    std::vector<Eigen::Vector3i> faces;
};

// Zips ring k-1 to ring k by walking both by azimuth. Faces come out CCW in
// the plane.
RingLayout ring_disk(const std::vector<double>& radii)
{
    const int rings = int(radii.size()) - 1;
    RingLayout out;
    std::vector<int> ring_start(rings + 2, 0);
    out.points.emplace_back(0.0, 0.0);
    ring_start[1] = 1;
    for (int k = 1; k <= rings; ++k) {
        const int count = 6 * k;
        for (int j = 0; j < count; ++j) {
            double psi = 2.0 * kPi * j / count;
            out.points.emplace_back(radii[k] * std::cos(psi), radii[k] * std::sin(psi));
        }
        ring_start[k + 1] = ring_start[k] + count;
    }

    auto push = [&](int a, int b, int c) {
        const auto& pa = out.points[a];
        const auto& pb = out.points[b];
        const auto& pc = out.points[c];
        double cross = (pb - pa).x() * (pc - pa).y() - (pb - pa).y() * (pc - pa).x();
        if (cross > 0) {
            out.faces.emplace_back(a, b, c);
        }
        else {
            out.faces.emplace_back(a, c, b);
        }
    };

    for (int k = 1; k <= rings; ++k) {
        const int inner_n = k == 1 ? 1 : 6 * (k - 1);
        const int outer_n = 6 * k;
        const int inner0 = k == 1 ? 0 : ring_start[k - 1];
        const int outer0 = ring_start[k];
        if (k == 1) {
            for (int j = 0; j < outer_n; ++j) {
                push(0, outer0 + j, outer0 + (j + 1) % outer_n);
            }
            continue;
        }
        // Merge by normalized azimuth j/count.
        int i = 0, j = 0;
        while (i < inner_n || j < outer_n) {
            double next_inner = double(i + 1) / inner_n;
            double next_outer = double(j + 1) / outer_n;
            if (j < outer_n && (i >= inner_n || next_outer <= next_inner)) {
                push(inner0 + i % inner_n, outer0 + j, outer0 + (j + 1) % outer_n);
                ++j;
            }
            else {
                push(inner0 + i, outer0 + j % outer_n, inner0 + (i + 1) % inner_n);
                ++i;
            }
        }
    }
    return out;
}

Eigen::MatrixX3i to_matrix(const std::vector<Eigen::Vector3i>& faces)
{
    Eigen::MatrixX3i f(Eigen::Index(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) {
        f.row(Eigen::Index(i)) = faces[i];
    }
    return f;
}

}  // namespace

TriMesh planar_disk(int rings)
{
    std::vector<double> radii(rings + 1);
    for (int k = 0; k <= rings; ++k) {
        radii[k] = double(k) / rings;
    }
    RingLayout layout = ring_disk(radii);
    Eigen::MatrixX3d v(Eigen::Index(layout.points.size()), 3);
    for (std::size_t i = 0; i < layout.points.size(); ++i) {
        v.row(Eigen::Index(i)) << layout.points[i].x(), layout.points[i].y(), 0.0;
    }
    return TriMesh(std::move(v), to_matrix(layout.faces));
}

TriMesh bumpy_hemisphere(int rings, double bump)
{
    std::vector<double> radii(rings + 1);
    for (int k = 0; k <= rings; ++k) {
        radii[k] = std::sin(0.5 * kPi * k / rings);
    }
    radii[rings] = 1.0;
    RingLayout layout = ring_disk(radii);
    // The outer ring (6R vertices) comes last.
    const std::size_t rim_start = layout.points.size() - std::size_t(6 * rings);
    Eigen::MatrixX3d v(Eigen::Index(layout.points.size()), 3);
    for (std::size_t i = 0; i < layout.points.size(); ++i) {
        const double x = layout.points[i].x();
        const double y = layout.points[i].y();
        const double r2 = std::min(1.0, x * x + y * y);
        const double psi = std::atan2(y, x);
        double z = std::sqrt(1.0 - r2) + bump * r2 * (1.0 - r2) * std::cos(3.0 * psi);
        if (i >= rim_start) {
            z = 0.0;
        }
        v.row(Eigen::Index(i)) << x, y, z;
    }
    return TriMesh(std::move(v), to_matrix(layout.faces));
}

TriMesh spike(int rings, double height, double width)
{
    // Quadratic grading puts more rings near the spike axis.
    std::vector<double> radii(rings + 1);
    for (int k = 0; k <= rings; ++k) {
        double t = double(k) / rings;
        radii[k] = 0.5 * t + 0.5 * t * t;
    }
    RingLayout layout = ring_disk(radii);
    Eigen::MatrixX3d v(Eigen::Index(layout.points.size()), 3);
    for (std::size_t i = 0; i < layout.points.size(); ++i) {
        const double r2 = layout.points[i].squaredNorm();
        v.row(Eigen::Index(i)) << layout.points[i].x(), layout.points[i].y(),
            height * std::exp(-r2 / (width * width));
    }
    return TriMesh(std::move(v), to_matrix(layout.faces));
}

TriMesh square_fan()
{
    Eigen::MatrixX3d v(5, 3);
    v << 0, 0, 0,  //
        1, 0, 0,   //
        1, 1, 0,   //
        0, 1, 0,   //
        0.5, 0.5, 0;
    Eigen::MatrixX3i f(4, 3);
    f << 0, 1, 4,  //
        1, 2, 4,   //
        2, 3, 4,   //
        3, 0, 4;
    return TriMesh(std::move(v), std::move(f));
}

TriMesh square_grid(int cells)
{
    const int side = cells + 1;
    Eigen::MatrixX3d v(side * side, 3);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            v.row(y * side + x) << double(x) / cells, double(y) / cells, 0.0;
        }
    }
    Eigen::MatrixX3i f(2 * cells * cells, 3);
    int k = 0;
    for (int y = 0; y < cells; ++y) {
        for (int x = 0; x < cells; ++x) {
            int a = y * side + x, b = a + 1, c = a + side + 1, d = a + side;
            if ((x + y) % 2 == 0) {
                f.row(k++) << a, b, c;
                f.row(k++) << a, c, d;
            }
            else {
                f.row(k++) << a, b, d;
                f.row(k++) << b, c, d;
            }
        }
    }
    return TriMesh(std::move(v), std::move(f));
}

RawMesh single_triangle()
{
    RawMesh raw;
    raw.vertices.resize(3, 3);
    raw.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    raw.faces.resize(1, 3);
    raw.faces << 0, 1, 2;
    return raw;
}

RawMesh tetrahedron()
{
    RawMesh raw;
    raw.vertices.resize(4, 3);
    raw.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    raw.faces.resize(4, 3);
    raw.faces << 0, 2, 1, 0, 1, 3, 1, 2, 3, 0, 3, 2;
    return raw;
}

RawMesh annulus(int segments)
{
    RawMesh raw;
    raw.vertices.resize(2 * segments, 3);
    for (int j = 0; j < segments; ++j) {
        double psi = 2.0 * kPi * j / segments;
        raw.vertices.row(j) << 0.5 * std::cos(psi), 0.5 * std::sin(psi), 0.0;
        raw.vertices.row(segments + j) << std::cos(psi), std::sin(psi), 0.0;
    }
    raw.faces.resize(2 * segments, 3);
    for (int j = 0; j < segments; ++j) {
        int a = j, b = (j + 1) % segments, c = segments + j, d = segments + (j + 1) % segments;
        raw.faces.row(2 * j) << a, c, d;
        raw.faces.row(2 * j + 1) << a, d, b;
    }
    return raw;
}

}  // namespace dbparam::shapes

#include "dbparam/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include <Eigen/Geometry>

#include "dbparam/errors.hpp"

namespace dbparam {

namespace {

constexpr double kDegenerateRelTol = 1e-14;

std::uint64_t edge_key(int a, int b)
{
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

template <class Vec>
double angle_between(const Vec& a, const Vec& b)
{
    double c = a.dot(b) / (a.norm() * b.norm());
    return std::acos(std::clamp(c, -1.0, 1.0));
}

bool is_connected(Eigen::Index n, const Eigen::MatrixX3i& faces)
{
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        int r0 = find(faces(f, 0));
        parent[find(faces(f, 1))] = r0;
        parent[find(faces(f, 2))] = r0;
    }
    int root = find(0);
    for (int v = 1; v < n; ++v) {
        if (find(v) != root) {
            return false;
        }
    }
    return true;
}

}  // namespace

double bounding_box_diagonal(const Eigen::MatrixXd& positions)
{
    if (positions.rows() == 0) {
        return 0.0;
    }
    return (positions.colwise().maxCoeff() - positions.colwise().minCoeff()).norm();
}

std::array<double, 3> corner_angles(const Eigen::MatrixXd& positions, const Eigen::Vector3i& face,
                                    double min_edge)
{
    if (min_edge < 0.0) {
        min_edge = kDegenerateRelTol * bounding_box_diagonal(positions);
    }
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd p = positions.row(face[c]);
        Eigen::VectorXd a = positions.row(face[(c + 1) % 3]).transpose() - p;
        Eigen::VectorXd b = positions.row(face[(c + 2) % 3]).transpose() - p;
        if (a.norm() < min_edge || b.norm() < min_edge || a.norm() == 0.0 || b.norm() == 0.0) {
            throw DegenerateFaceError("face (" + std::to_string(face[0]) + ", " +
                                      std::to_string(face[1]) + ", " + std::to_string(face[2]) +
                                      ") has a zero-length edge");
        }
        out[c] = angle_between(a, b);
    }
    return out;
}

Eigen::VectorXd signed_face_areas(const Eigen::MatrixX3i& faces, const PlanarMap& map)
{
    Eigen::VectorXd areas(faces.rows());
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        areas[f] = signed_area(map.row(faces(f, 0)), map.row(faces(f, 1)), map.row(faces(f, 2)));
    }
    return areas;
}

std::vector<int> boundary_loop(Eigen::Index num_vertices, const Eigen::MatrixX3i& faces)
{
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(std::size_t(faces.rows()) * 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            int a = faces(f, c);
            int b = faces(f, (c + 1) % 3);
            if (!directed.emplace(edge_key(a, b), int(f)).second) {
                throw TopologyError("directed edge (" + std::to_string(a) + ", " +
                                    std::to_string(b) +
                                    ") appears twice: inconsistent orientation or non-manifold edge");
            }
        }
    }

    // Boundary half-edges are those without a twin; follow them in face order.
    std::vector<int> next(num_vertices, -1);
    std::size_t boundary_edges = 0;
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            int a = faces(f, c);
            int b = faces(f, (c + 1) % 3);
            if (directed.count(edge_key(b, a)) == 0) {
                if (next[a] != -1) {
                    throw TopologyError("boundary vertex " + std::to_string(a) +
                                        " is non-manifold (several outgoing boundary edges)");
                }
                next[a] = b;
                ++boundary_edges;
            }
        }
    }
    if (boundary_edges == 0) {
        throw TopologyError("mesh has no boundary (closed surface)");
    }

    auto start = std::find_if(next.begin(), next.end(), [](int v) { return v != -1; });
    std::vector<int> loop;
    int v = int(start - next.begin());
    const int first = v;
    do {
        loop.push_back(v);
        v = next[v];
        if (v == -1 || loop.size() > boundary_edges) {
            throw TopologyError("boundary is not a closed loop");
        }
    } while (v != first);

    if (loop.size() != boundary_edges) {
        throw TopologyError("mesh has more than one boundary loop");
    }
    return loop;
}

TriMesh::TriMesh(Eigen::MatrixX3d vertices, Eigen::MatrixX3i faces, Validation validation)
    : vertices_(std::move(vertices)), faces_(std::move(faces))
{
    const Eigen::Index n = vertices_.rows();
    const Eigen::Index m = faces_.rows();
    if (n == 0 || m == 0) {
        throw TopologyError("mesh has no vertices or no faces");
    }
    if (!vertices_.allFinite()) {
        throw ParseError("vertex positions must be finite");
    }
    if (faces_.minCoeff() < 0 || faces_.maxCoeff() >= n) {
        throw TopologyError("face index out of range [0, " + std::to_string(n) + ")");
    }

    std::vector<char> referenced(n, 0);
    for (Eigen::Index f = 0; f < m; ++f) {
        int a = faces_(f, 0), b = faces_(f, 1), c = faces_(f, 2);
        if (a == b || b == c || a == c) {
            throw DegenerateFaceError("face " + std::to_string(f) + " repeats a vertex");
        }
        referenced[a] = referenced[b] = referenced[c] = 1;
    }
    if (std::find(referenced.begin(), referenced.end(), 0) != referenced.end()) {
        throw TopologyError("mesh has unreferenced vertices");
    }
    if (!is_connected(n, faces_)) {
        throw TopologyError("mesh is not connected");
    }

    boundary_ = dbparam::boundary_loop(n, faces_);

    // Euler characteristic V - E + F with E = (3F + |boundary edges|) / 2.
    const Eigen::Index edges = (3 * m + Eigen::Index(boundary_.size())) / 2;
    if (n - edges + m != 1) {
        throw TopologyError("Euler characteristic is " + std::to_string(n - edges + m) +
                            ", expected 1 for a disk");
    }

    boundary_position_.assign(n, -1);
    for (std::size_t i = 0; i < boundary_.size(); ++i) {
        boundary_position_[boundary_[i]] = int(i);
    }
    for (int v = 0; v < n; ++v) {
        if (boundary_position_[v] < 0) {
            interior_.push_back(v);
        }
    }

    bbox_diagonal_ = bounding_box_diagonal(vertices_);
    const double min_edge = kDegenerateRelTol * bbox_diagonal_;
    face_areas_.resize(m);
    angles_.resize(m, 3);
    for (Eigen::Index f = 0; f < m; ++f) {
        Eigen::Vector3d p0 = vertices_.row(faces_(f, 0));
        Eigen::Vector3d p1 = vertices_.row(faces_(f, 1));
        Eigen::Vector3d p2 = vertices_.row(faces_(f, 2));
        double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        bool degenerate = area <= 0.5 * kDegenerateRelTol * bbox_diagonal_ * bbox_diagonal_ ||
                          (p1 - p0).norm() < min_edge || (p2 - p1).norm() < min_edge ||
                          (p0 - p2).norm() < min_edge;
        if (degenerate) {
            if (validation == Validation::Strict) {
                throw DegenerateFaceError("face " + std::to_string(f) + " has (near) zero area");
            }
            warnings_.push_back("face " + std::to_string(f) + " is degenerate");
            angles_.row(f).setZero();
        }
        else {
            angles_(f, 0) = angle_between(p1 - p0, p2 - p0);
            angles_(f, 1) = angle_between(p2 - p1, p0 - p1);
            angles_(f, 2) = angle_between(p0 - p2, p1 - p2);
        }
        face_areas_[f] = area;
        if (is_boundary(faces_(f, 0)) && is_boundary(faces_(f, 1)) && is_boundary(faces_(f, 2))) {
            warnings_.push_back("face " + std::to_string(f) + " has no interior vertex");
        }
    }
    total_area_ = face_areas_.sum();
}

}  // namespace dbparam

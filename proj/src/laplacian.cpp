#include "dbparam/laplacian.hpp"

#include <cmath>

#include "dbparam/errors.hpp"

namespace dbparam {

namespace {

constexpr double kImageDegenerateRelTol = 1e-14;

using Triplets = std::vector<Eigen::Triplet<double>>;

// Adds one face's contribution; w[c] is the weight of the edge opposite corner c.
void add_face(Triplets& trips, const Eigen::Vector3i& face, const double w[3])
{
    for (int c = 0; c < 3; ++c) {
        const int i = face[(c + 1) % 3];
        const int j = face[(c + 2) % 3];
        trips.emplace_back(i, j, -w[c]);
        trips.emplace_back(j, i, -w[c]);
        trips.emplace_back(i, i, w[c]);
        trips.emplace_back(j, j, w[c]);
    }
}

SparseMatrix assemble(Eigen::Index n, const Triplets& trips)
{
    SparseMatrix L(n, n);
    L.setFromTriplets(trips.begin(), trips.end());
    L.makeCompressed();
    return L;
}

}  // namespace

Eigen::MatrixX3d half_cotangents(const TriMesh& mesh)
{
    const auto& V = mesh.vertices();
    const auto& F = mesh.faces();
    Eigen::MatrixX3d w(F.rows(), 3);
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        const double area2 = 2.0 * mesh.face_areas()[f];
        if (!(area2 > 0.0)) {
            throw DegenerateFaceError("face " + std::to_string(f) + " has zero area");
        }
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d p = V.row(F(f, c));
            Eigen::Vector3d a = V.row(F(f, (c + 1) % 3)).transpose() - p;
            Eigen::Vector3d b = V.row(F(f, (c + 2) % 3)).transpose() - p;
            // cot θ = (a·b) / |a × b| and |a × b| = 2|τ|.
            w(f, c) = 0.5 * a.dot(b) / area2;
        }
    }
    return w;
}

SparseMatrix build_LD(const TriMesh& mesh)
{
    const Eigen::MatrixX3d w = half_cotangents(mesh);
    Triplets trips;
    trips.reserve(std::size_t(mesh.num_faces()) * 12);
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        const double wf[3] = {w(f, 0), w(f, 1), w(f, 2)};
        add_face(trips, mesh.faces().row(f), wf);
    }
    return assemble(mesh.num_vertices(), trips);
}

SparseMatrix build_LS(const TriMesh& mesh, const PlanarMap& map)
{
    if (map.rows() != mesh.num_vertices()) {
        throw ShapeError("map has " + std::to_string(map.rows()) + " rows, mesh has " +
                         std::to_string(mesh.num_vertices()) + " vertices");
    }
    const Eigen::Vector2d extent = map.colwise().maxCoeff() - map.colwise().minCoeff();
    const double min_area = kImageDegenerateRelTol * extent.x() * extent.y();

    const auto& F = mesh.faces();
    Triplets trips;
    trips.reserve(std::size_t(F.rows()) * 12);
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        Eigen::Vector2d p[3] = {map.row(F(f, 0)), map.row(F(f, 1)), map.row(F(f, 2))};
        const double img_area = std::abs(signed_area(p[0], p[1], p[2]));
        if (!(img_area > min_area)) {
            throw DegenerateImageFaceError("image of face " + std::to_string(f) +
                                           " is degenerate");
        }
        // ½cot θ(f) / σ = (a·b) / (4|f(τ)|) · |f(τ)| / |τ| = (a·b) / (4|τ|).
        const double denom = 4.0 * mesh.face_areas()[f];
        double w[3];
        for (int c = 0; c < 3; ++c) {
            w[c] = (p[(c + 1) % 3] - p[c]).dot(p[(c + 2) % 3] - p[c]) / denom;
        }
        add_face(trips, F.row(f), w);
    }
    return assemble(mesh.num_vertices(), trips);
}

SparseMatrix blend_Llambda(const SparseMatrix& LD, const SparseMatrix& LS, double lambda,
                           double total_area, double image_area, BlendMode mode, double ls_weight)
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw LambdaOutOfRange("lambda = " + std::to_string(lambda) + " is outside [0, 1]");
    }
    if (LD.rows() != LS.rows() || LD.cols() != LS.cols()) {
        throw ShapeError("L_D and L_S differ in shape");
    }
    double ls_coeff = 2.0 * lambda * ls_weight;
    if (mode == BlendMode::Augmented) {
        if (!(image_area > 0.0)) {
            throw NonPositiveImageArea("image area " + std::to_string(image_area) + " <= 0");
        }
        ls_coeff *= total_area / image_area;
    }
    if (lambda == 0.0) {
        return LD;
    }
    SparseMatrix out = (1.0 - lambda) * LD + ls_coeff * LS;
    out.makeCompressed();
    return out;
}

}  // namespace dbparam

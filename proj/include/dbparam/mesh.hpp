#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dbparam {

/// n×2 matrix of image coordinates; row i is the image of vertex i.
using PlanarMap = Eigen::MatrixX2d;

enum class MeshFormat { Auto, Obj, Off };

/// How strictly a TriMesh is checked on construction. Lenient turns
/// degenerate faces into warnings; topology is always enforced.
enum class Validation { Strict, Lenient };

/// Immutable simply connected open triangle mesh (disk topology) with
/// cached boundary loop, face areas and corner angles.
class TriMesh
{
public:
    TriMesh(Eigen::MatrixX3d vertices, Eigen::MatrixX3i faces,
            Validation validation = Validation::Strict);

    [[nodiscard]] const Eigen::MatrixX3d& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const Eigen::MatrixX3i& faces() const noexcept { return faces_; }
    [[nodiscard]] Eigen::Index num_vertices() const noexcept { return vertices_.rows(); }
    [[nodiscard]] Eigen::Index num_faces() const noexcept { return faces_.rows(); }

    /// Counterclockwise w.r.t. face orientation, starting at the smallest
    /// boundary index.
    [[nodiscard]] const std::vector<int>& boundary_loop() const noexcept { return boundary_; }
    [[nodiscard]] const std::vector<int>& interior_indices() const noexcept { return interior_; }
    [[nodiscard]] Eigen::Index num_boundary() const noexcept { return Eigen::Index(boundary_.size()); }
    [[nodiscard]] Eigen::Index num_interior() const noexcept { return Eigen::Index(interior_.size()); }
    [[nodiscard]] bool is_boundary(int v) const { return boundary_position_[v] >= 0; }
    /// Position of v within boundary_loop(), or -1 for interior vertices.
    [[nodiscard]] int boundary_position(int v) const { return boundary_position_[v]; }

    [[nodiscard]] const Eigen::VectorXd& face_areas() const noexcept { return face_areas_; }
    [[nodiscard]] double total_area() const noexcept { return total_area_; }
    /// m×3, column c holds the angle at corner c of each face (radians).
    [[nodiscard]] const Eigen::MatrixX3d& corner_angles() const noexcept { return angles_; }
    [[nodiscard]] double bbox_diagonal() const noexcept { return bbox_diagonal_; }

    /// Non-fatal validation findings, e.g. faces without an interior vertex.
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    Eigen::MatrixX3d vertices_;
    Eigen::MatrixX3i faces_;
    std::vector<int> boundary_;
    std::vector<int> interior_;
    std::vector<int> boundary_position_;
    Eigen::VectorXd face_areas_;
    Eigen::MatrixX3d angles_;
    double total_area_ = 0.0;
    double bbox_diagonal_ = 0.0;
    std::vector<std::string> warnings_;
};

/// Unvalidated vertex/face arrays as read from disk.
struct RawMesh
{
    Eigen::MatrixX3d vertices;
    Eigen::MatrixX3i faces;
};

[[nodiscard]] RawMesh read_raw_mesh(const std::filesystem::path& path,
                                    MeshFormat format = MeshFormat::Auto);

/// Reads an OBJ or OFF file and validates it as a disk-topology mesh.
[[nodiscard]] TriMesh load_mesh(const std::filesystem::path& path,
                                MeshFormat format = MeshFormat::Auto);

/// Writes `v`/`f` records. Two-column positions are written with z = 0.
void write_obj(const std::filesystem::path& path, const Eigen::MatrixXd& positions,
               const Eigen::MatrixX3i& faces);

/// Extracts the single boundary loop of a face list, CCW with respect to the
/// face orientation and starting at its smallest vertex index. Throws
/// TopologyError for closed surfaces, several loops or non-manifold
/// boundary vertices.
[[nodiscard]] std::vector<int> boundary_loop(Eigen::Index num_vertices,
                                             const Eigen::MatrixX3i& faces);
[[nodiscard]] inline const std::vector<int>& boundary_loop(const TriMesh& mesh)
{
    return mesh.boundary_loop();
}

/// Interior angles of `face` measured in `positions` (n×2 or n×3).
/// Throws DegenerateFaceError when an edge is shorter than `min_edge`;
/// a negative `min_edge` means 1e-14 × bounding-box diagonal of positions.
[[nodiscard]] std::array<double, 3> corner_angles(const Eigen::MatrixXd& positions,
                                                  const Eigen::Vector3i& face,
                                                  double min_edge = -1.0);

/// Signed area of an image triangle (positive when counterclockwise).
[[nodiscard]] inline double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                        const Eigen::Vector2d& c)
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

/// Signed per-face image areas of a planar map.
[[nodiscard]] Eigen::VectorXd signed_face_areas(const Eigen::MatrixX3i& faces,
                                                const PlanarMap& map);

double bounding_box_diagonal(const Eigen::MatrixXd& positions);

}  // namespace dbparam

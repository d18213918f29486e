#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dbparam/mesh.hpp"

namespace dbparam {

/// Raster of 3D surface samples over [0,1]²; pixel (x, y) sits at
/// (u, v) = (x / (W − 1), y / (H − 1)).
struct GeometryImage
{
    int width = 0;
    int height = 0;
    /// Row y·width + x holds the sample of pixel (x, y).
    Eigen::MatrixX3d samples;
    Eigen::Vector3d bbox_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d bbox_max = Eigen::Vector3d::Zero();
    /// 1 where the pixel hit the parameter domain.
    std::vector<std::uint8_t> mask;

    [[nodiscard]] Eigen::Vector3d sample(int x, int y) const
    {
        return samples.row(Eigen::Index(y) * width + x).transpose();
    }
};

/// Uniform-grid spatial hash over the triangles of a planar map.
class PointLocator
{
public:
    PointLocator(const Eigen::MatrixX3i& faces, const PlanarMap& map);

    struct Hit
    {
        int face = -1;
        Eigen::Vector3d bary = Eigen::Vector3d::Zero();
    };

    /// Triangle containing q with barycentric coordinates >= −tol, or the
    /// nearest triangle when q lies within `tol` of it (coordinates snapped).
    [[nodiscard]] std::optional<Hit> locate(const Eigen::Vector2d& q, double tol = 1e-9) const;

private:
    [[nodiscard]] int cell_index(int cx, int cy) const { return cy * nx_ + cx; }
    [[nodiscard]] int cell_x(double x) const;
    [[nodiscard]] int cell_y(double y) const;

    const Eigen::MatrixX3i* faces_;
    const PlanarMap* map_;
    Eigen::Vector2d lo_;
    Eigen::Vector2d cell_size_;
    int nx_ = 1;
    int ny_ = 1;
    std::vector<std::vector<int>> cells_;
};

/// Samples the surface at every pixel by barycentric interpolation in the
/// containing image triangle. Throws FoldedMapError, PointLocationFailure and
/// ConfigError (W or H < 2).
[[nodiscard]] GeometryImage encode(const TriMesh& mesh, const PlanarMap& map, int width,
                                   int height);

/// Grid vertices plus one averaged center per quad, four triangles per quad.
[[nodiscard]] TriMesh reconstruct(const GeometryImage& img);

/// `<stem>.gi.json` next to the raster.
[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

/// 16-bit RGB PNG (x→R, y→G, z→B quantized over the bounding box) and its
/// JSON sidecar. Throws IOError.
void write_image(const GeometryImage& img, const std::filesystem::path& png_path);
/// Throws IOError and MissingSidecar.
[[nodiscard]] GeometryImage read_image(const std::filesystem::path& png_path);

}  // namespace dbparam

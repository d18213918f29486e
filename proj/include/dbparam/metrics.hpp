#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dbparam/mesh.hpp"

namespace dbparam {

/// Descriptive statistics with the population standard deviation. An empty
/// sample gives all zeros.
struct Stats
{
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

[[nodiscard]] Stats summarize(const Eigen::VectorXd& values);

/// |θ_f − θ| / θ per corner, laid out as 3·face + corner.
/// Throws DegenerateImageFaceError.
[[nodiscard]] Eigen::VectorXd angular_distortion(const TriMesh& mesh, const PlanarMap& map);

/// | |f(τ)|/|f(M)| − |τ|/|M| | / (|τ|/|M|) per face, with unsigned image areas.
/// Throws NonPositiveImageArea when the image has no area.
[[nodiscard]] Eigen::VectorXd area_distortion(const TriMesh& mesh, const PlanarMap& map);

/// Image triangles with signed area <= 0.
[[nodiscard]] int fold_count(const TriMesh& mesh, const PlanarMap& map);

struct DistortionReport
{
    Eigen::VectorXd angle;  // 3m corners
    Eigen::VectorXd area;   // m faces
    Stats angle_stats;
    Stats area_stats;
    int folds = 0;

    [[nodiscard]] std::string to_json() const;
};

[[nodiscard]] DistortionReport distortion_report(const TriMesh& mesh, const PlanarMap& map);

/// Quality of a mesh rebuilt from a geometry image.
struct ReconstructionMetrics
{
    Eigen::VectorXd d_angle;  // min(|∠ − 45°|, |∠ − 90°|) per corner, degrees
    Eigen::VectorXd d_area;   // | |τ| − mean |τ| | / mean |τ| per face
    Stats angle_stats;
    Stats area_stats;

    [[nodiscard]] std::string to_json() const;
};

[[nodiscard]] ReconstructionMetrics reconstruction_metrics(const TriMesh& mesh);

/// Equal-width bins over [min, max]; the last bin is closed. When all values
/// coincide every sample lands in the first bin.
struct Histogram
{
    std::vector<double> edges;  // bins + 1
    std::vector<std::size_t> counts;
};

/// Throws EmptyInput for no values and ConfigError for bins < 1.
[[nodiscard]] Histogram histogram(const Eigen::VectorXd& values, int bins);

/// Rows of bin_lo, bin_hi, count.
void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist);

}  // namespace dbparam

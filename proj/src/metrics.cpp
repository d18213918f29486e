#include "dbparam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "dbparam/errors.hpp"

namespace dbparam {

namespace {

nlohmann::json stats_json(const Stats& s)
{
    return {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

}  // namespace

Stats summarize(const Eigen::VectorXd& values)
{
    Stats s;
    s.count = std::size_t(values.size());
    if (values.size() == 0) {
        return s;
    }
    s.mean = values.mean();
    s.sd = std::sqrt((values.array() - s.mean).square().mean());
    s.min = values.minCoeff();
    s.max = values.maxCoeff();
    return s;
}

Eigen::VectorXd angular_distortion(const TriMesh& mesh, const PlanarMap& map)
{
    if (map.rows() != mesh.num_vertices()) {
        throw ShapeError("map does not match the mesh");
    }
    const auto& F = mesh.faces();
    const Eigen::Vector2d extent = map.colwise().maxCoeff() - map.colwise().minCoeff();
    const double min_area = 1e-14 * extent.x() * extent.y();
    const double min_edge = 1e-14 * extent.norm();
    Eigen::VectorXd d(3 * F.rows());
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        const Eigen::Vector2d p0 = map.row(F(f, 0));
        const Eigen::Vector2d p1 = map.row(F(f, 1));
        const Eigen::Vector2d p2 = map.row(F(f, 2));
        if (!(std::abs(signed_area(p0, p1, p2)) > min_area)) {
            throw DegenerateImageFaceError("image of face " + std::to_string(f) + " is degenerate");
        }
        std::array<double, 3> img;
        try {
            img = corner_angles(map, F.row(f).transpose(), min_edge);
        }
        catch (const DegenerateFaceError& e) {
            throw DegenerateImageFaceError(e.what());
        }
        for (int c = 0; c < 3; ++c) {
            const double src = mesh.corner_angles()(f, c);
            d[3 * f + c] = std::abs(img[c] - src) / src;
        }
    }
    return d;
}

Eigen::VectorXd area_distortion(const TriMesh& mesh, const PlanarMap& map)
{
    if (map.rows() != mesh.num_vertices()) {
        throw ShapeError("map does not match the mesh");
    }
    const Eigen::VectorXd img = signed_face_areas(mesh.faces(), map).cwiseAbs();
    const double img_total = img.sum();
    if (!(img_total > 0.0)) {
        throw NonPositiveImageArea("image has zero total area");
    }
    const Eigen::VectorXd src = mesh.face_areas() / mesh.total_area();
    return ((img / img_total) - src).cwiseAbs().cwiseQuotient(src);
}

int fold_count(const TriMesh& mesh, const PlanarMap& map)
{
    const Eigen::VectorXd a = signed_face_areas(mesh.faces(), map);
    return int((a.array() <= 0.0).count());
}

DistortionReport distortion_report(const TriMesh& mesh, const PlanarMap& map)
{
    DistortionReport r;
    r.angle = angular_distortion(mesh, map);
    r.area = area_distortion(mesh, map);
    r.angle_stats = summarize(r.angle);
    r.area_stats = summarize(r.area);
    r.folds = fold_count(mesh, map);
    return r;
}

std::string DistortionReport::to_json() const
{
    nlohmann::json j = {{"angle_distortion", stats_json(angle_stats)},
                        {"area_distortion", stats_json(area_stats)},
                        {"foldings", folds},
                        {"angle_pooling", "all corners"}};
    return j.dump(2);
}

ReconstructionMetrics reconstruction_metrics(const TriMesh& mesh)
{
    ReconstructionMetrics r;
    const Eigen::MatrixX3d& ang = mesh.corner_angles();
    r.d_angle.resize(3 * ang.rows());
    for (Eigen::Index f = 0; f < ang.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const double deg = ang(f, c) * 180.0 / std::numbers::pi;
            r.d_angle[3 * f + c] = std::min(std::abs(deg - 45.0), std::abs(deg - 90.0));
        }
    }
    const Eigen::VectorXd& a = mesh.face_areas();
    const double mean = a.mean();
    r.d_area = (a.array() - mean).abs() / mean;
    r.angle_stats = summarize(r.d_angle);
    r.area_stats = summarize(r.d_area);
    return r;
}

std::string ReconstructionMetrics::to_json() const
{
    nlohmann::json j = {{"d_angle_degrees", stats_json(angle_stats)},
                        {"d_area", stats_json(area_stats)}};
    return j.dump(2);
}

Histogram histogram(const Eigen::VectorXd& values, int bins)
{
    if (values.size() == 0) {
        throw EmptyInput("histogram of an empty sample");
    }
    if (bins < 1) {
        throw ConfigError("histogram needs at least one bin");
    }
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    Histogram h;
    h.counts.assign(std::size_t(bins), 0);
    h.edges.resize(std::size_t(bins) + 1);
    const double width = (hi - lo) / bins;
    for (int k = 0; k <= bins; ++k) {
        h.edges[std::size_t(k)] = lo + k * width;
    }
    h.edges.back() = hi;
    for (double v : values) {
        std::size_t k = 0;
        if (hi > lo) {
            k = std::size_t(std::clamp(int(std::floor((v - lo) / width)), 0, bins - 1));
            // Guard against rounding at the computed edges.
            while (k > 0 && v < h.edges[k]) {
                --k;
            }
            while (k + 1 < std::size_t(bins) && v >= h.edges[k + 1]) {
                ++k;
            }
        }
        ++h.counts[k];
    }
    return h;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist)
{
    std::ofstream out(path);
    if (!out) {
        throw IOError("cannot write " + path.string());
    }
    out.precision(17);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        out << hist.edges[k] << ',' << hist.edges[k + 1] << ',' << hist.counts[k] << '\n';
    }
}

}  // namespace dbparam

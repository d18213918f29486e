#include "dbparam/geomimage.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>
#include <png.h>

#include "dbparam/errors.hpp"

namespace dbparam {

namespace {

Eigen::Vector3d barycentric(const Eigen::Vector2d& q, const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    const double area = signed_area(a, b, c);
    return Eigen::Vector3d(signed_area(q, b, c), signed_area(a, q, c), signed_area(a, b, q)) / area;
}

// Closest point of triangle abc to q, as barycentric coordinates, and its distance.
std::pair<Eigen::Vector3d, double> closest_on_triangle(const Eigen::Vector2d& q,
                                                       const Eigen::Vector2d p[3])
{
    std::pair<Eigen::Vector3d, double> best{Eigen::Vector3d::Zero(),
                                            std::numeric_limits<double>::infinity()};
    for (int e = 0; e < 3; ++e) {
        const Eigen::Vector2d& a = p[e];
        const Eigen::Vector2d& b = p[(e + 1) % 3];
        const Eigen::Vector2d ab = b - a;
        const double len2 = ab.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((q - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const double d = (a + t * ab - q).norm();
        if (d < best.second) {
            best.second = d;
            best.first.setZero();
            best.first[e] = 1.0 - t;
            best.first[(e + 1) % 3] = t;
        }
    }
    return best;
}

constexpr double kQuantMax = 65535.0;

}  // namespace

// ---------------------------------------------------------------------------
// PointLocator

PointLocator::PointLocator(const Eigen::MatrixX3i& faces, const PlanarMap& map)
    : faces_(&faces), map_(&map)
{
    lo_ = map.colwise().minCoeff().transpose();
    const Eigen::Vector2d hi = map.colwise().maxCoeff().transpose();
    const int side = std::max(1, int(std::sqrt(double(faces.rows()))));
    nx_ = side;
    ny_ = side;
    cell_size_ = ((hi - lo_) / double(side)).cwiseMax(1e-300);
    cells_.assign(std::size_t(nx_) * std::size_t(ny_), {});
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        Eigen::Vector2d fmin = map.row(faces(f, 0)).transpose();
        Eigen::Vector2d fmax = fmin;
        for (int c = 1; c < 3; ++c) {
            fmin = fmin.cwiseMin(map.row(faces(f, c)).transpose());
            fmax = fmax.cwiseMax(map.row(faces(f, c)).transpose());
        }
        for (int cy = cell_y(fmin.y()); cy <= cell_y(fmax.y()); ++cy) {
            for (int cx = cell_x(fmin.x()); cx <= cell_x(fmax.x()); ++cx) {
                cells_[std::size_t(cell_index(cx, cy))].push_back(int(f));
            }
        }
    }
}

int PointLocator::cell_x(double x) const
{
    return std::clamp(int(std::floor((x - lo_.x()) / cell_size_.x())), 0, nx_ - 1);
}

int PointLocator::cell_y(double y) const
{
    return std::clamp(int(std::floor((y - lo_.y()) / cell_size_.y())), 0, ny_ - 1);
}

std::optional<PointLocator::Hit> PointLocator::locate(const Eigen::Vector2d& q, double tol) const
{
    const auto& F = *faces_;
    const auto& map = *map_;
    const int cx = cell_x(q.x());
    const int cy = cell_y(q.y());

    for (int f : cells_[std::size_t(cell_index(cx, cy))]) {
        const Eigen::Vector3d w =
            barycentric(q, map.row(F(f, 0)), map.row(F(f, 1)), map.row(F(f, 2)));
        if (w.minCoeff() >= -tol) {
            Eigen::Vector3d c = w.cwiseMax(0.0);
            return Hit{f, c / c.sum()};
        }
    }

    // Snap to the nearest triangle in the surrounding cells.
    std::optional<Hit> best;
    double best_dist = tol;
    for (int y = std::max(0, cy - 1); y <= std::min(ny_ - 1, cy + 1); ++y) {
        for (int x = std::max(0, cx - 1); x <= std::min(nx_ - 1, cx + 1); ++x) {
            for (int f : cells_[std::size_t(cell_index(x, y))]) {
                const Eigen::Vector2d p[3] = {map.row(F(f, 0)), map.row(F(f, 1)),
                                              map.row(F(f, 2))};
                const auto [w, d] = closest_on_triangle(q, p);
                if (d <= best_dist) {
                    best_dist = d;
                    best = Hit{f, w};
                }
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Encode / reconstruct

GeometryImage encode(const TriMesh& mesh, const PlanarMap& map, int width, int height)
{
    if (width < 2 || height < 2) {
        throw ConfigError("geometry image needs at least 2x2 pixels");
    }
    if (map.rows() != mesh.num_vertices()) {
        throw ShapeError("map does not match the mesh");
    }
    const Eigen::VectorXd signed_areas = signed_face_areas(mesh.faces(), map);
    const auto folds = (signed_areas.array() <= 0.0).count();
    if (folds > 0) {
        throw FoldedMapError(std::to_string(folds) + " image triangles are folded");
    }

    const PointLocator locator(mesh.faces(), map);
    GeometryImage img;
    img.width = width;
    img.height = height;
    img.samples.resize(Eigen::Index(width) * height, 3);
    img.mask.assign(std::size_t(width) * std::size_t(height), 1);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Eigen::Vector2d q(double(x) / (width - 1), double(y) / (height - 1));
            const auto hit = locator.locate(q);
            if (!hit) {
                throw PointLocationFailure("pixel (" + std::to_string(x) + ", " +
                                           std::to_string(y) + ") lies outside the parameter domain");
            }
            Eigen::Vector3d p = Eigen::Vector3d::Zero();
            for (int c = 0; c < 3; ++c) {
                p += hit->bary[c] * mesh.vertices().row(mesh.faces()(hit->face, c)).transpose();
            }
            img.samples.row(Eigen::Index(y) * width + x) = p.transpose();
        }
    }
    img.bbox_min = img.samples.colwise().minCoeff().transpose();
    img.bbox_max = img.samples.colwise().maxCoeff().transpose();
    return img;
}

TriMesh reconstruct(const GeometryImage& img)
{
    const int W = img.width;
    const int H = img.height;
    if (W < 2 || H < 2 || img.samples.rows() != Eigen::Index(W) * H) {
        throw ShapeError("geometry image has inconsistent dimensions");
    }
    const Eigen::Index grid = Eigen::Index(W) * H;
    const Eigen::Index quads = Eigen::Index(W - 1) * (H - 1);
    Eigen::MatrixX3d V(grid + quads, 3);
    V.topRows(grid) = img.samples;
    Eigen::MatrixX3i F(4 * quads, 3);
    auto vid = [W](int x, int y) { return y * W + x; };
    Eigen::Index q = 0;
    for (int y = 0; y + 1 < H; ++y) {
        for (int x = 0; x + 1 < W; ++x, ++q) {
            const int a = vid(x, y), b = vid(x + 1, y), c = vid(x + 1, y + 1), d = vid(x, y + 1);
            const int e = int(grid + q);
            V.row(e) = 0.25 * (V.row(a) + V.row(b) + V.row(c) + V.row(d));
            F.row(4 * q + 0) << a, b, e;
            F.row(4 * q + 1) << b, c, e;
            F.row(4 * q + 2) << c, d, e;
            F.row(4 * q + 3) << d, a, e;
        }
    }
    return TriMesh(std::move(V), std::move(F), Validation::Lenient);
}

// ---------------------------------------------------------------------------
// PNG + sidecar

std::filesystem::path sidecar_path(const std::filesystem::path& png_path)
{
    std::filesystem::path p = png_path;
    p.replace_extension(".gi.json");
    return p;
}

namespace {

// libpng reports errors through longjmp, so the calls are kept in functions
// whose locals are trivially destructible.
bool png_write_rgb16(const char* path, int width, int height, const std::uint8_t* data,
                     char* err, std::size_t err_len)
{
    FILE* fp = std::fopen(path, "wb");
    if (!fp) {
        std::snprintf(err, err_len, "cannot open for writing");
        return false;
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        std::snprintf(err, err_len, "libpng initialization failed");
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        std::snprintf(err, err_len, "libpng write error");
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 16, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = std::size_t(width) * 6;
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(data + std::size_t(y) * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::fclose(fp) == 0;
}

bool png_read_rgb16(const char* path, int* width, int* height, std::uint8_t** data, char* err,
                    std::size_t err_len)
{
    FILE* fp = std::fopen(path, "rb");
    if (!fp) {
        std::snprintf(err, err_len, "cannot open for reading");
        return false;
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        std::snprintf(err, err_len, "libpng initialization failed");
        return false;
    }
    std::uint8_t* volatile buffer = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        std::free(buffer);
        std::snprintf(err, err_len, "libpng read error (not a valid PNG?)");
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        std::snprintf(err, err_len, "expected a 16-bit RGB image");
        return false;
    }
    const std::size_t stride = std::size_t(w) * 6;
    buffer = static_cast<std::uint8_t*>(std::malloc(stride * h));
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, buffer + std::size_t(y) * stride, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    *width = int(w);
    *height = int(h);
    *data = buffer;
    return true;
}

}  // namespace

void write_image(const GeometryImage& img, const std::filesystem::path& png_path)
{
    const int W = img.width;
    const int H = img.height;
    if (img.samples.rows() != Eigen::Index(W) * H) {
        throw ShapeError("geometry image has inconsistent dimensions");
    }
    const Eigen::Vector3d extent = img.bbox_max - img.bbox_min;
    std::vector<std::uint8_t> raw(std::size_t(W) * std::size_t(H) * 6);
    for (Eigen::Index i = 0; i < img.samples.rows(); ++i) {
        for (int c = 0; c < 3; ++c) {
            double t = extent[c] > 0.0 ? (img.samples(i, c) - img.bbox_min[c]) / extent[c] : 0.0;
            const auto q = std::uint16_t(std::lround(std::clamp(t, 0.0, 1.0) * kQuantMax));
            raw[std::size_t(i) * 6 + std::size_t(c) * 2] = std::uint8_t(q >> 8);
            raw[std::size_t(i) * 6 + std::size_t(c) * 2 + 1] = std::uint8_t(q & 0xff);
        }
    }
    char err[256] = {0};
    if (!png_write_rgb16(png_path.string().c_str(), W, H, raw.data(), err, sizeof err)) {
        throw IOError(png_path.string() + ": " + err);
    }

    nlohmann::json side = {
        {"bbox_min", {img.bbox_min.x(), img.bbox_min.y(), img.bbox_min.z()}},
        {"bbox_max", {img.bbox_max.x(), img.bbox_max.y(), img.bbox_max.z()}},
        {"width", W},
        {"height", H},
    };
    if (std::find(img.mask.begin(), img.mask.end(), 0) != img.mask.end()) {
        side["mask"] = img.mask;
    }
    std::ofstream out(sidecar_path(png_path));
    if (!out) {
        throw IOError("cannot write " + sidecar_path(png_path).string());
    }
    out << side.dump(2) << '\n';
}

GeometryImage read_image(const std::filesystem::path& png_path)
{
    const std::filesystem::path side_path = sidecar_path(png_path);
    if (!std::filesystem::exists(side_path)) {
        throw MissingSidecar("missing sidecar " + side_path.string());
    }
    nlohmann::json side;
    try {
        std::ifstream in(side_path);
        side = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(side_path.string() + ": " + e.what());
    }

    int W = 0, H = 0;
    std::uint8_t* data = nullptr;
    char err[256] = {0};
    if (!png_read_rgb16(png_path.string().c_str(), &W, &H, &data, err, sizeof err)) {
        throw IOError(png_path.string() + ": " + err);
    }
    std::vector<std::uint8_t> raw(data, data + std::size_t(W) * std::size_t(H) * 6);
    std::free(data);

    GeometryImage img;
    img.width = W;
    img.height = H;
    try {
        if (side.at("width").get<int>() != W || side.at("height").get<int>() != H) {
            throw ParseError("sidecar size does not match the raster");
        }
        for (int c = 0; c < 3; ++c) {
            img.bbox_min[c] = side.at("bbox_min").at(std::size_t(c)).get<double>();
            img.bbox_max[c] = side.at("bbox_max").at(std::size_t(c)).get<double>();
        }
        if (side.contains("mask")) {
            img.mask = side.at("mask").get<std::vector<std::uint8_t>>();
        }
        else {
            img.mask.assign(std::size_t(W) * std::size_t(H), 1);
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(side_path.string() + ": " + e.what());
    }

    const Eigen::Vector3d extent = img.bbox_max - img.bbox_min;
    img.samples.resize(Eigen::Index(W) * H, 3);
    for (Eigen::Index i = 0; i < img.samples.rows(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const unsigned q = (unsigned(raw[std::size_t(i) * 6 + std::size_t(c) * 2]) << 8) |
                               raw[std::size_t(i) * 6 + std::size_t(c) * 2 + 1];
            img.samples(i, c) = img.bbox_min[c] + extent[c] * (double(q) / kQuantMax);
        }
    }
    return img;
}

}  // namespace dbparam

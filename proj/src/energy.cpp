#include "dbparam/energy.hpp"

#include <cmath>

#include <json.hpp>

#include "dbparam/errors.hpp"
#include "dbparam/laplacian.hpp"

namespace dbparam {

namespace {

constexpr double kCircleTol = 1e-6;

// Gradient of the shoelace area of the boundary polygon, placed on the
// boundary rows of an n×2 matrix.
PlanarMap shoelace_gradient(const std::vector<int>& loop, const PlanarMap& map)
{
    PlanarMap g = PlanarMap::Zero(map.rows(), 2);
    const std::size_t nb = loop.size();
    for (std::size_t i = 0; i < nb; ++i) {
        const int prev = loop[(i + nb - 1) % nb];
        const int next = loop[(i + 1) % nb];
        g(loop[i], 0) = 0.5 * (map(next, 1) - map(prev, 1));
        g(loop[i], 1) = 0.5 * (map(prev, 0) - map(next, 0));
    }
    return g;
}

double loop_shoelace(const std::vector<int>& loop, const PlanarMap& map)
{
    double twice = 0.0;
    const std::size_t nb = loop.size();
    for (std::size_t i = 0; i < nb; ++i) {
        const int a = loop[i];
        const int b = loop[(i + 1) % nb];
        twice += map(a, 0) * map(b, 1) - map(b, 0) * map(a, 1);
    }
    return 0.5 * twice;
}

}  // namespace

// ---------------------------------------------------------------------------
// DiskDomain

DiskDomain::DiskDomain(const TriMesh& mesh)
    : interior_(mesh.interior_indices()), boundary_(mesh.boundary_loop()), n_(mesh.num_vertices())
{
}

Eigen::Index DiskDomain::dimension() const
{
    return 2 * Eigen::Index(interior_.size()) + Eigen::Index(boundary_.size());
}

PlanarMap DiskDomain::to_planar(const Eigen::VectorXd& x) const
{
    if (x.size() != dimension()) {
        throw ShapeError("polar vector has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(dimension()));
    }
    const Eigen::Index ni = Eigen::Index(interior_.size());
    PlanarMap map(n_, 2);
    for (Eigen::Index k = 0; k < ni; ++k) {
        map(interior_[k], 0) = x[k];
        map(interior_[k], 1) = x[ni + k];
    }
    for (std::size_t k = 0; k < boundary_.size(); ++k) {
        const double t = x[2 * ni + Eigen::Index(k)];
        map(boundary_[k], 0) = std::cos(t);
        map(boundary_[k], 1) = std::sin(t);
    }
    return map;
}

Eigen::VectorXd DiskDomain::from_planar(const PlanarMap& map) const
{
    if (map.rows() != n_) {
        throw ShapeError("map has " + std::to_string(map.rows()) + " rows, expected " +
                         std::to_string(n_));
    }
    const Eigen::Index ni = Eigen::Index(interior_.size());
    Eigen::VectorXd x(dimension());
    for (Eigen::Index k = 0; k < ni; ++k) {
        x[k] = map(interior_[k], 0);
        x[ni + k] = map(interior_[k], 1);
    }
    for (std::size_t k = 0; k < boundary_.size(); ++k) {
        const double u = map(boundary_[k], 0);
        const double v = map(boundary_[k], 1);
        if (std::abs(std::hypot(u, v) - 1.0) > kCircleTol) {
            throw BoundaryOffCircle("boundary vertex " + std::to_string(boundary_[k]) +
                                    " is not on the unit circle (radius " +
                                    std::to_string(std::hypot(u, v)) + ")");
        }
        x[2 * ni + Eigen::Index(k)] = std::atan2(v, u);
    }
    return x;
}

double DiskDomain::image_area(const Eigen::VectorXd& x, const PlanarMap&) const
{
    const Eigen::Index ni = Eigen::Index(interior_.size());
    return image_area_polar(x.tail(dimension() - 2 * ni));
}

Eigen::VectorXd DiskDomain::pull_back(const Eigen::VectorXd& x, const PlanarMap& g) const
{
    const Eigen::Index ni = Eigen::Index(interior_.size());
    Eigen::VectorXd out(dimension());
    for (Eigen::Index k = 0; k < ni; ++k) {
        out[k] = g(interior_[k], 0);
        out[ni + k] = g(interior_[k], 1);
    }
    for (std::size_t k = 0; k < boundary_.size(); ++k) {
        const Eigen::Index pos = 2 * ni + Eigen::Index(k);
        const double t = x[pos];
        out[pos] = -std::sin(t) * g(boundary_[k], 0) + std::cos(t) * g(boundary_[k], 1);
    }
    return out;
}

std::vector<std::vector<int>> DiskDomain::preconditioner_blocks() const
{
    return {interior_, interior_, boundary_};
}

// ---------------------------------------------------------------------------
// SquareDomain

SquareDomain::SquareDomain(const TriMesh& mesh, std::vector<int> free_x, std::vector<int> free_y,
                           PlanarMap fixed)
    : free_x_(std::move(free_x)),
      free_y_(std::move(free_y)),
      fixed_(std::move(fixed)),
      boundary_(mesh.boundary_loop())
{
    if (fixed_.rows() != mesh.num_vertices()) {
        throw ShapeError("fixed map does not match the mesh");
    }
    for (std::size_t k = 0; k < free_x_.size(); ++k) {
        if (mesh.is_boundary(free_x_[k])) {
            sliding_.push_back(Eigen::Index(k));
        }
    }
    for (std::size_t k = 0; k < free_y_.size(); ++k) {
        if (mesh.is_boundary(free_y_[k])) {
            sliding_.push_back(Eigen::Index(free_x_.size() + k));
        }
    }
}

Eigen::Index SquareDomain::dimension() const
{
    return Eigen::Index(free_x_.size() + free_y_.size());
}

PlanarMap SquareDomain::to_planar(const Eigen::VectorXd& x) const
{
    if (x.size() != dimension()) {
        throw ShapeError("square variable vector has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(dimension()));
    }
    PlanarMap map = fixed_;
    const Eigen::Index nx = Eigen::Index(free_x_.size());
    for (Eigen::Index k = 0; k < nx; ++k) {
        map(free_x_[k], 0) = x[k];
    }
    for (std::size_t k = 0; k < free_y_.size(); ++k) {
        map(free_y_[k], 1) = x[nx + Eigen::Index(k)];
    }
    return map;
}

Eigen::VectorXd SquareDomain::from_planar(const PlanarMap& map) const
{
    if (map.rows() != fixed_.rows()) {
        throw ShapeError("map does not match the mesh");
    }
    Eigen::VectorXd x(dimension());
    const Eigen::Index nx = Eigen::Index(free_x_.size());
    for (Eigen::Index k = 0; k < nx; ++k) {
        x[k] = map(free_x_[k], 0);
    }
    for (std::size_t k = 0; k < free_y_.size(); ++k) {
        x[nx + Eigen::Index(k)] = map(free_y_[k], 1);
    }
    return x;
}

double SquareDomain::image_area(const Eigen::VectorXd&, const PlanarMap& map) const
{
    return loop_shoelace(boundary_, map);
}

Eigen::VectorXd SquareDomain::pull_back(const Eigen::VectorXd&, const PlanarMap& g) const
{
    Eigen::VectorXd out(dimension());
    const Eigen::Index nx = Eigen::Index(free_x_.size());
    for (Eigen::Index k = 0; k < nx; ++k) {
        out[k] = g(free_x_[k], 0);
    }
    for (std::size_t k = 0; k < free_y_.size(); ++k) {
        out[nx + Eigen::Index(k)] = g(free_y_[k], 1);
    }
    return out;
}

bool SquareDomain::admissible(const Eigen::VectorXd& x) const
{
    for (Eigen::Index pos : sliding_) {
        if (x[pos] < 0.0 || x[pos] > 1.0) {
            return false;
        }
    }
    return true;
}

std::vector<std::vector<int>> SquareDomain::preconditioner_blocks() const
{
    return {free_x_, free_y_};
}

// ---------------------------------------------------------------------------
// EnergyModel

EnergyModel::EnergyModel(const TriMesh& mesh, std::shared_ptr<const Domain> domain)
    : mesh_(&mesh), domain_(std::move(domain))
{
    LD_ = build_LD(mesh);
}

EnergyTerms EnergyModel::evaluate(const Eigen::VectorXd& x, EnergyGradients* grads) const
{
    const PlanarMap f = domain_->to_planar(x);
    const PlanarMap GD = LD_ * f;

    EnergyTerms t;
    t.dirichlet = 0.5 * (f.array() * GD.array()).sum();

    const auto& F = mesh_->faces();
    const auto& areas = mesh_->face_areas();
    PlanarMap GS;
    if (grads) {
        GS = PlanarMap::Zero(f.rows(), 2);
    }
    for (Eigen::Index k = 0; k < F.rows(); ++k) {
        const int i0 = F(k, 0), i1 = F(k, 1), i2 = F(k, 2);
        const double x0 = f(i0, 0), y0 = f(i0, 1);
        const double x1 = f(i1, 0), y1 = f(i1, 1);
        const double x2 = f(i2, 0), y2 = f(i2, 1);
        const double a = 0.5 * ((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0));
        const double inv = 1.0 / areas[k];
        t.stretch += a * a * inv;
        if (grads) {
            // ∇(a²/|τ|) = (2a/|τ|) ∇a, with ∇_{p_i} a = ½ (y_{i+1} − y_{i+2}, x_{i+2} − x_{i+1}).
            const double s = a * inv;
            GS(i0, 0) += s * (y1 - y2);
            GS(i0, 1) += s * (x2 - x1);
            GS(i1, 0) += s * (y2 - y0);
            GS(i1, 1) += s * (x0 - x2);
            GS(i2, 0) += s * (y0 - y1);
            GS(i2, 1) += s * (x1 - x0);
        }
    }

    t.area = domain_->image_area(x, f);
    if (!(t.area > 0.0)) {
        throw NonPositiveImageArea("image area " + std::to_string(t.area) + " <= 0");
    }
    const double M = mesh_->total_area();
    t.conformal = t.dirichlet - t.area;
    t.authalic = M / t.area * t.stretch - t.area;

    if (grads) {
        const PlanarMap GA = shoelace_gradient(mesh_->boundary_loop(), f);
        grads->area = domain_->pull_back(x, GA);
        grads->dirichlet = domain_->pull_back(x, GD);
        grads->stretch = domain_->pull_back(x, GS);
        grads->conformal = grads->dirichlet - grads->area;
        grads->authalic = (M / t.area) * grads->stretch -
                          (M * t.stretch / (t.area * t.area) + 1.0) * grads->area;
    }
    return t;
}

EnergyReport EnergyModel::report(const Eigen::VectorXd& x, double mu) const
{
    const EnergyTerms t = evaluate(x);
    EnergyReport r;
    r.E_D = t.dirichlet;
    r.E_S = t.stretch;
    r.E_C = t.conformal;
    r.E_A = t.authalic;
    r.image_area = t.area;
    r.residual = mu * t.authalic - t.conformal;
    return r;
}

std::string EnergyReport::to_json() const
{
    nlohmann::json j = {{"E_D", E_D}, {"E_S", E_S},        {"E_C", E_C},
                        {"E_A", E_A}, {"image_area", image_area}, {"residual", residual}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian

double auglag_value(const EnergyTerms& t, const AugLagParams& p)
{
    const double r = p.mu * t.authalic - t.conformal;
    return t.conformal + p.lambda * r + 0.5 * p.rho * r * r;
}

Eigen::VectorXd auglag_grad(const EnergyTerms& t, const EnergyGradients& g, const AugLagParams& p)
{
    const double r = p.mu * t.authalic - t.conformal;
    return g.conformal + (p.lambda + p.rho * r) * (p.mu * g.authalic - g.conformal);
}

// ---------------------------------------------------------------------------
// Free functions

PolarMap to_polar(const TriMesh& mesh, const PlanarMap& map)
{
    return DiskDomain(mesh).from_planar(map);
}

PlanarMap from_polar(const TriMesh& mesh, const PolarMap& x)
{
    return DiskDomain(mesh).to_planar(x);
}

double image_area_polar(const Eigen::VectorXd& theta)
{
    const Eigen::Index nb = theta.size();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < nb; ++i) {
        sum += std::sin(theta[(i + 1) % nb] - theta[i]);
    }
    return 0.5 * sum;
}

Eigen::VectorXd grad_area_polar(const Eigen::VectorXd& theta)
{
    const Eigen::Index nb = theta.size();
    const Eigen::ArrayXd c = theta.array().cos();
    const Eigen::ArrayXd s = theta.array().sin();
    Eigen::VectorXd g(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
        const Eigen::Index next = (i + 1) % nb;
        const Eigen::Index prev = (i + nb - 1) % nb;
        // (D v)_i = v_{i+1} − v_{i−1}
        g[i] = -0.5 * (c[i] * (c[next] - c[prev]) + s[i] * (s[next] - s[prev]));
    }
    return g;
}

double shoelace_area(const Eigen::MatrixX2d& polygon)
{
    const Eigen::Index k = polygon.rows();
    double twice = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index j = (i + 1) % k;
        twice += polygon(i, 0) * polygon(j, 1) - polygon(j, 0) * polygon(i, 1);
    }
    return 0.5 * twice;
}

namespace {

double quadratic_energy(const SparseMatrix& L, const PlanarMap& map)
{
    if (L.rows() != map.rows() || L.cols() != map.rows()) {
        throw ShapeError("operator is " + std::to_string(L.rows()) + "x" +
                         std::to_string(L.cols()) + " but map has " +
                         std::to_string(map.rows()) + " rows");
    }
    const PlanarMap Lf = L * map;
    return 0.5 * (map.array() * Lf.array()).sum();
}

}  // namespace

double dirichlet_energy(const SparseMatrix& LD, const PlanarMap& map)
{
    return quadratic_energy(LD, map);
}

double stretch_energy(const SparseMatrix& LS, const PlanarMap& map)
{
    return quadratic_energy(LS, map);
}

double conformal_energy(const TriMesh& mesh, const PolarMap& x)
{
    return EnergyModel(mesh, std::make_shared<DiskDomain>(mesh)).evaluate(x).conformal;
}

double authalic_energy(const TriMesh& mesh, const PolarMap& x)
{
    return EnergyModel(mesh, std::make_shared<DiskDomain>(mesh)).evaluate(x).authalic;
}

Eigen::VectorXd grad_conformal(const TriMesh& mesh, const PolarMap& x)
{
    EnergyGradients g;
    (void)EnergyModel(mesh, std::make_shared<DiskDomain>(mesh)).evaluate(x, &g);
    return g.conformal;
}

Eigen::VectorXd grad_authalic(const TriMesh& mesh, const PolarMap& x)
{
    EnergyGradients g;
    (void)EnergyModel(mesh, std::make_shared<DiskDomain>(mesh)).evaluate(x, &g);
    return g.authalic;
}

}  // namespace dbparam

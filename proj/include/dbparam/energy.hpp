#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dbparam/linalg.hpp"
#include "dbparam/mesh.hpp"

namespace dbparam {

/// Stacked optimization variables (e.g. f_I¹; f_I²; θ for the disk).
using PolarMap = Eigen::VectorXd;

/// Parameterization target. A domain maps its free variables to a full
/// planar map, measures the image area and pulls planar gradients back onto
/// the variables.
class Domain
{
public:
    virtual ~Domain() = default;

    [[nodiscard]] virtual Eigen::Index dimension() const = 0;
    [[nodiscard]] virtual PlanarMap to_planar(const Eigen::VectorXd& x) const = 0;
    [[nodiscard]] virtual Eigen::VectorXd from_planar(const PlanarMap& map) const = 0;

    /// Signed area of the boundary polygon.
    [[nodiscard]] virtual double image_area(const Eigen::VectorXd& x,
                                            const PlanarMap& map) const = 0;

    /// Chain rule: planar gradient (n×2) → gradient in the domain variables.
    [[nodiscard]] virtual Eigen::VectorXd pull_back(const Eigen::VectorXd& x,
                                                    const PlanarMap& planar_grad) const = 0;

    /// False when x violates a hard domain constraint.
    [[nodiscard]] virtual bool admissible(const Eigen::VectorXd&) const { return true; }

    /// Vertex index sets whose [L]_{S,S} blocks form the block-diagonal
    /// preconditioner, listed in variable order.
    [[nodiscard]] virtual std::vector<std::vector<int>> preconditioner_blocks() const = 0;
};

/// Unit disk with interior coordinates free and boundary points on the
/// circle given by their angles: x = (f_I¹; f_I²; θ).
class DiskDomain final : public Domain
{
public:
    explicit DiskDomain(const TriMesh& mesh);

    [[nodiscard]] Eigen::Index dimension() const override;
    [[nodiscard]] PlanarMap to_planar(const Eigen::VectorXd& x) const override;
    /// Throws BoundaryOffCircle when a boundary row is more than 1e-6 off the circle.
    [[nodiscard]] Eigen::VectorXd from_planar(const PlanarMap& map) const override;
    [[nodiscard]] double image_area(const Eigen::VectorXd& x, const PlanarMap& map) const override;
    [[nodiscard]] Eigen::VectorXd pull_back(const Eigen::VectorXd& x,
                                            const PlanarMap& planar_grad) const override;
    [[nodiscard]] std::vector<std::vector<int>> preconditioner_blocks() const override;

private:
    std::vector<int> interior_;
    std::vector<int> boundary_;
    Eigen::Index n_ = 0;
};

/// Unit square with fixed corners; boundary points slide along their side.
/// x = (f¹ on I₁; f² on I₂), where I₁ holds the interior vertices plus the
/// non-corner vertices of the bottom and top sides, and I₂ the interior
/// vertices plus the non-corner vertices of the right and left sides.
class SquareDomain final : public Domain
{
public:
    /// `fixed` provides every coordinate that is not a variable.
    SquareDomain(const TriMesh& mesh, std::vector<int> free_x, std::vector<int> free_y,
                 PlanarMap fixed);

    [[nodiscard]] Eigen::Index dimension() const override;
    [[nodiscard]] PlanarMap to_planar(const Eigen::VectorXd& x) const override;
    [[nodiscard]] Eigen::VectorXd from_planar(const PlanarMap& map) const override;
    [[nodiscard]] double image_area(const Eigen::VectorXd& x, const PlanarMap& map) const override;
    [[nodiscard]] Eigen::VectorXd pull_back(const Eigen::VectorXd& x,
                                            const PlanarMap& planar_grad) const override;
    /// Sliding boundary coordinates must stay within [0, 1].
    [[nodiscard]] bool admissible(const Eigen::VectorXd& x) const override;
    [[nodiscard]] std::vector<std::vector<int>> preconditioner_blocks() const override;

    [[nodiscard]] const std::vector<int>& free_x() const noexcept { return free_x_; }
    [[nodiscard]] const std::vector<int>& free_y() const noexcept { return free_y_; }

private:
    std::vector<int> free_x_;
    std::vector<int> free_y_;
    PlanarMap fixed_;
    std::vector<int> boundary_;
    std::vector<Eigen::Index> sliding_;  // positions in x of boundary coordinates
};

/// Scalar energies of one configuration.
struct EnergyTerms
{
    double dirichlet = 0.0;  // E_D
    double stretch = 0.0;    // E_S
    double area = 0.0;       // A
    double conformal = 0.0;  // E_C = E_D − A
    double authalic = 0.0;   // E_A = (|M|/A) E_S − A
};

/// Gradients of every energy with respect to the domain variables.
struct EnergyGradients
{
    Eigen::VectorXd area;
    Eigen::VectorXd dirichlet;
    Eigen::VectorXd stretch;
    Eigen::VectorXd conformal;
    Eigen::VectorXd authalic;
};

/// Summary of a configuration for reporting; residual = μE_A − E_C.
struct EnergyReport
{
    double E_D = 0.0;
    double E_S = 0.0;
    double E_C = 0.0;
    double E_A = 0.0;
    double image_area = 0.0;
    double residual = 0.0;

    [[nodiscard]] std::string to_json() const;
};

/// Energies and gradients of a mesh over a domain. L_D is assembled once;
/// the stretch terms are evaluated face by face on each call.
class EnergyModel
{
public:
    EnergyModel(const TriMesh& mesh, std::shared_ptr<const Domain> domain);

    [[nodiscard]] const TriMesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const Domain& domain() const noexcept { return *domain_; }
    [[nodiscard]] const SparseMatrix& LD() const noexcept { return LD_; }
    [[nodiscard]] Eigen::Index dimension() const { return domain_->dimension(); }

    /// Throws NonPositiveImageArea when A <= 0. Gradients are filled when
    /// `grads` is non-null.
    [[nodiscard]] EnergyTerms evaluate(const Eigen::VectorXd& x,
                                       EnergyGradients* grads = nullptr) const;

    [[nodiscard]] EnergyReport report(const Eigen::VectorXd& x, double mu = 1.0) const;

private:
    const TriMesh* mesh_;
    std::shared_ptr<const Domain> domain_;
    SparseMatrix LD_;
};

/// Augmented Lagrangian L = E_C + λr + (ρ/2)r² with r = μE_A − E_C.
struct AugLagParams
{
    double lambda = 0.0;
    double rho = 0.0;
    double mu = 1.0;
};

[[nodiscard]] double auglag_value(const EnergyTerms& terms, const AugLagParams& p);
[[nodiscard]] Eigen::VectorXd auglag_grad(const EnergyTerms& terms, const EnergyGradients& grads,
                                          const AugLagParams& p);

// Polar-form helpers for the disk.

/// θ_i = atan2 of the boundary rows in loop order. Throws BoundaryOffCircle.
[[nodiscard]] PolarMap to_polar(const TriMesh& mesh, const PlanarMap& map);
[[nodiscard]] PlanarMap from_polar(const TriMesh& mesh, const PolarMap& x);

/// A = ½ Σ sin(θ_{i+1} − θ_i) with wraparound.
[[nodiscard]] double image_area_polar(const Eigen::VectorXd& theta);
/// ∇A = −½ (diag(c) D c + diag(s) D s).
[[nodiscard]] Eigen::VectorXd grad_area_polar(const Eigen::VectorXd& theta);

/// Shoelace area of a closed polygon given as k×2 rows.
[[nodiscard]] double shoelace_area(const Eigen::MatrixX2d& polygon);

/// ½ Σ_s fˢᵀ L fˢ. Throws ShapeError on mismatched sizes.
[[nodiscard]] double dirichlet_energy(const SparseMatrix& LD, const PlanarMap& map);
[[nodiscard]] double stretch_energy(const SparseMatrix& LS, const PlanarMap& map);

// Disk energies in polar form.
[[nodiscard]] double conformal_energy(const TriMesh& mesh, const PolarMap& x);
[[nodiscard]] double authalic_energy(const TriMesh& mesh, const PolarMap& x);
[[nodiscard]] Eigen::VectorXd grad_conformal(const TriMesh& mesh, const PolarMap& x);
[[nodiscard]] Eigen::VectorXd grad_authalic(const TriMesh& mesh, const PolarMap& x);

}  // namespace dbparam

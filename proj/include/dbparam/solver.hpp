#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "dbparam/energy.hpp"
#include "dbparam/linalg.hpp"

namespace dbparam {

struct LineSearchConfig
{
    double armijo_c1 = 1e-4;
    int max_retries = 10;
    int max_halvings = 20;
    /// Also require |φ'(α)| <= c2 |φ'(0)| on interpolated steps.
    bool strong_wolfe = false;
    double wolfe_c2 = 0.4;
};

struct PCGConfig
{
    /// Gradient tolerance ω on the Euclidean norm of the full gradient.
    double tolerance = 0.01;
    int max_iterations = 500;
    /// Step used for the first interpolation.
    double initial_step = 0.1;
    LineSearchConfig line_search;
    /// Reject trial steps that increase the number of folded image triangles.
    bool reject_folds = true;
};

/// Block-diagonal SPD preconditioner made of Cholesky factors of principal
/// blocks of L_λ. Blocks over identical vertex sets share one factor.
class Preconditioner
{
public:
    /// Factorizes the blocks of L_λ(f⁰) listed by the model's domain. The L_S
    /// coefficient is 2|M|λμ / A. Throws NotPositiveDefinite.
    [[nodiscard]] static Preconditioner build(const EnergyModel& model, const Eigen::VectorXd& x0,
                                              double lambda, double mu = 1.0,
                                              Ordering ordering = Ordering::ApproximateMinimumDegree);
    /// M = I.
    [[nodiscard]] static Preconditioner identity(Eigen::Index dim);

    [[nodiscard]] Eigen::Index dimension() const noexcept { return dim_; }
    /// Solves M h = r.
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
    /// M x.
    [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

    struct Block
    {
        Eigen::Index offset = 0;
        Eigen::Index size = 0;
        int factor = -1;  // index into factors, -1 for identity
    };
    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] const SparseMatrix& block_matrix(int factor) const { return matrices_[factor]; }

private:
    Eigen::Index dim_ = 0;
    std::vector<Block> blocks_;
    std::vector<CholeskyFactor> factors_;
    std::vector<SparseMatrix> matrices_;
};

/// φ(α); writes φ'(α) to `slope` when non-null. May return +inf for
/// inadmissible steps.
using LineFunction = std::function<double(double alpha, double* slope)>;

struct LineSearchResult
{
    double alpha = 0.0;
    double value = 0.0;
    int evaluations = 0;
    bool success = false;
};

/// Quadratic-interpolation step: with b = φ'(0) and
/// a = (φ(α_prev) − φ(0) − α_prev b) / α_prev², tries α = −b / 2a. A rejected
/// α becomes the next α_prev; after `max_retries` the last trial is halved
/// until the Armijo condition holds. φ'(0) = 0 returns α = 0.
[[nodiscard]] LineSearchResult line_search(const LineFunction& phi, double phi0, double dphi0,
                                           double alpha_prev, const LineSearchConfig& config = {});

struct TraceRow
{
    int iteration = 0;
    double conformal = 0.0;
    double authalic = 0.0;
    double grad_norm = 0.0;
    double alpha = 0.0;
    double value = 0.0;
};

struct MinimizeResult
{
    Eigen::VectorXd x;
    EnergyTerms terms;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
    int rejected_trials = 0;
    std::vector<TraceRow> trace;
};

/// Preconditioned nonlinear conjugate gradient on the augmented Lagrangian
/// at fixed (λ, ρ, μ). Stops when ‖∇L‖₂ <= tolerance or at the iteration cap.
[[nodiscard]] MinimizeResult minimize(const EnergyModel& model, const Eigen::VectorXd& x0,
                                      const AugLagParams& params, const Preconditioner& precond,
                                      const PCGConfig& config = {});

/// Writes iteration, E_C, E_A, grad_norm, alpha, value as CSV.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

}  // namespace dbparam

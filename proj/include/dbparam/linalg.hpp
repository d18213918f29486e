#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace dbparam {

/// Symmetric sparse operator (compressed storage, no duplicate entries).
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Fill-reducing ordering used by the sparse factorization.
enum class Ordering { ApproximateMinimumDegree, Natural };

/// Block A(rows, cols) relabeled consecutively in the given order.
/// Throws IndexError for out-of-range or repeated indices.
[[nodiscard]] SparseMatrix submatrix(const SparseMatrix& a, std::span<const int> rows,
                                     std::span<const int> cols);

/// Preordered Cholesky factorization U^T U = P^T M P of an SPD matrix.
///
/// Matrices smaller than `kDenseThreshold` are factorized densely with the
/// identity permutation.
class CholeskyFactor
{
public:
    static constexpr Eigen::Index kDenseThreshold = 64;

    /// Throws NotPositiveDefinite when a non-positive pivot is met and
    /// ShapeError for non-square input.
    [[nodiscard]] static CholeskyFactor factorize(
        const SparseMatrix& m, Ordering ordering = Ordering::ApproximateMinimumDegree);

    CholeskyFactor(CholeskyFactor&&) noexcept;
    CholeskyFactor& operator=(CholeskyFactor&&) noexcept;
    ~CholeskyFactor();

    [[nodiscard]] Eigen::Index dimension() const noexcept { return dim_; }
    [[nodiscard]] bool is_dense() const noexcept;

    /// Solves M x = r column by column. Throws ShapeError on row mismatch.
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& r) const;
    [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& r) const;

    /// Upper triangular factor U.
    [[nodiscard]] SparseMatrix upper() const;
    /// perm[k] = row of M placed at position k, i.e. (P^T M P)(k, l) = M(perm[k], perm[l]).
    [[nodiscard]] std::vector<int> permutation() const;

private:
    struct Impl;
    explicit CholeskyFactor(std::unique_ptr<Impl> impl, Eigen::Index dim);

    std::unique_ptr<Impl> impl_;
    Eigen::Index dim_ = 0;
};

/// Writes a sparse matrix in MatrixMarket coordinate format (general, 1-based).
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& a);

/// Builds a compressed sparse matrix from a dense one (drops exact zeros).
[[nodiscard]] SparseMatrix to_sparse(const Eigen::MatrixXd& dense);

}  // namespace dbparam

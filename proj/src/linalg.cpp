#include "dbparam/linalg.hpp"

#include <fstream>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "dbparam/errors.hpp"

namespace dbparam {

namespace {

void check_indices(std::span<const int> idx, Eigen::Index dim, const char* what)
{
    std::vector<char> seen(std::size_t(dim), 0);
    for (int i : idx) {
        if (i < 0 || i >= dim) {
            throw IndexError(std::string(what) + " index " + std::to_string(i) +
                             " out of range [0, " + std::to_string(dim) + ")");
        }
        if (seen[std::size_t(i)]) {
            throw IndexError(std::string(what) + " index " + std::to_string(i) + " repeated");
        }
        seen[std::size_t(i)] = 1;
    }
}

using AmdLLT = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using NaturalLLT = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>;
using DenseLLT = Eigen::LLT<Eigen::MatrixXd>;

}  // namespace

SparseMatrix submatrix(const SparseMatrix& a, std::span<const int> rows, std::span<const int> cols)
{
    check_indices(rows, a.rows(), "row");
    check_indices(cols, a.cols(), "column");

    std::vector<int> row_map(std::size_t(a.rows()), -1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        row_map[std::size_t(rows[k])] = int(k);
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (SparseMatrix::InnerIterator it(a, cols[c]); it; ++it) {
            int r = row_map[std::size_t(it.row())];
            if (r >= 0) {
                trips.emplace_back(r, int(c), it.value());
            }
        }
    }
    SparseMatrix out(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

struct CholeskyFactor::Impl
{
    std::variant<DenseLLT, std::unique_ptr<AmdLLT>, std::unique_ptr<NaturalLLT>> solver;
};

CholeskyFactor::CholeskyFactor(std::unique_ptr<Impl> impl, Eigen::Index dim)
    : impl_(std::move(impl)), dim_(dim)
{
}
CholeskyFactor::CholeskyFactor(CholeskyFactor&&) noexcept = default;
CholeskyFactor& CholeskyFactor::operator=(CholeskyFactor&&) noexcept = default;
CholeskyFactor::~CholeskyFactor() = default;

bool CholeskyFactor::is_dense() const noexcept
{
    return std::holds_alternative<DenseLLT>(impl_->solver);
}

CholeskyFactor CholeskyFactor::factorize(const SparseMatrix& m, Ordering ordering)
{
    if (m.rows() != m.cols()) {
        throw ShapeError("factorize expects a square matrix");
    }
    const Eigen::Index n = m.rows();
    auto impl = std::make_unique<Impl>();
    if (n < kDenseThreshold) {
        Eigen::MatrixXd dense = Eigen::MatrixXd(m);
        DenseLLT llt(dense);
        // Eigen's dense LLT only reports failure on a non-positive pivot;
        // it does not look at the strictly upper triangle.
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefinite("matrix is not positive definite (dense pivot <= 0)");
        }
        impl->solver = std::move(llt);
    }
    else if (ordering == Ordering::ApproximateMinimumDegree) {
        auto llt = std::make_unique<AmdLLT>(m);
        if (llt->info() != Eigen::Success) {
            throw NotPositiveDefinite("matrix is not positive definite (sparse pivot <= 0)");
        }
        impl->solver = std::move(llt);
    }
    else {
        auto llt = std::make_unique<NaturalLLT>(m);
        if (llt->info() != Eigen::Success) {
            throw NotPositiveDefinite("matrix is not positive definite (sparse pivot <= 0)");
        }
        impl->solver = std::move(llt);
    }
    return CholeskyFactor(std::move(impl), n);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& r) const
{
    if (r.rows() != dim_) {
        throw ShapeError("right-hand side has " + std::to_string(r.rows()) + " rows, expected " +
                         std::to_string(dim_));
    }
    if (dim_ == 0) {
        return r;
    }
    return std::visit(
        [&](const auto& s) -> Eigen::MatrixXd {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DenseLLT>) {
                return s.solve(r);
            }
            else {
                return s->solve(r);
            }
        },
        impl_->solver);
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& r) const
{
    return solve(Eigen::MatrixXd(r)).col(0);
}

SparseMatrix CholeskyFactor::upper() const
{
    return std::visit(
        [&](const auto& s) -> SparseMatrix {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DenseLLT>) {
                return to_sparse(Eigen::MatrixXd(s.matrixU()));
            }
            else {
                return SparseMatrix(s->matrixU());
            }
        },
        impl_->solver);
}

std::vector<int> CholeskyFactor::permutation() const
{
    std::vector<int> perm(static_cast<std::size_t>(dim_));
    std::visit(
        [&](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DenseLLT>) {
                for (Eigen::Index k = 0; k < dim_; ++k) {
                    perm[std::size_t(k)] = int(k);
                }
            }
            else {
                // Eigen factors P M P^T with P mapping old index i to new
                // index P.indices()[i]; invert to get the row at position k.
                const auto& ind = s->permutationP().indices();
                if (ind.size() == 0) {
                    // Natural ordering leaves P empty.
                    for (Eigen::Index k = 0; k < dim_; ++k) {
                        perm[std::size_t(k)] = int(k);
                    }
                    return;
                }
                for (Eigen::Index i = 0; i < dim_; ++i) {
                    perm[std::size_t(ind[i])] = int(i);
                }
            }
        },
        impl_->solver);
    return perm;
}

SparseMatrix to_sparse(const Eigen::MatrixXd& dense)
{
    return dense.sparseView(0.0, 0.0);
}

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& a)
{
    std::ofstream out(path);
    if (!out) {
        throw IOError("cannot write " + path.string());
    }
    out.precision(17);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

}  // namespace dbparam

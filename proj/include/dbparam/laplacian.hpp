#pragma once

#include "dbparam/linalg.hpp"
#include "dbparam/mesh.hpp"

namespace dbparam {

/// Which λ-blend of L_D and L_S to form.
enum class BlendMode {
    /// (1 − λ) L_D + (2|M|λ / A) L_S, used by the augmented Lagrangian solver.
    Augmented,
    /// (1 − λ) L_D + 2λ L_S, used by the fixed-point initializer.
    FixedPoint,
};

/// Half-cotangents ½cot θ of the corner angles, m×3 (column c = corner c).
[[nodiscard]] Eigen::MatrixX3d half_cotangents(const TriMesh& mesh);

/// Cotangent Laplacian: L(i,j) = −½(cot θ_ij^k + cot θ_ji^l), diagonal = −row sum.
[[nodiscard]] SparseMatrix build_LD(const TriMesh& mesh);

/// Stretch Laplacian: cotangents measured in the image, each face term
/// divided by σ = |τ| / |f(τ)|. Throws DegenerateImageFaceError when an image
/// triangle is smaller than 1e-14 × image bounding-box area.
[[nodiscard]] SparseMatrix build_LS(const TriMesh& mesh, const PlanarMap& map);

/// Blend of L_D and L_S. `ls_weight` multiplies the L_S coefficient (the
/// constraint weight μ in the weighted problem). Throws LambdaOutOfRange for
/// λ outside [0, 1] and NonPositiveImageArea for image_area <= 0 in
/// augmented mode.
[[nodiscard]] SparseMatrix blend_Llambda(const SparseMatrix& LD, const SparseMatrix& LS,
                                         double lambda, double total_area, double image_area,
                                         BlendMode mode = BlendMode::Augmented,
                                         double ls_weight = 1.0);

}  // namespace dbparam

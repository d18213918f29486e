#pragma once

#include "dbparam/mesh.hpp"

// Deterministic synthetic meshes used by the tests, the acceptance suite and
// `dbparam generate`.
namespace dbparam::shapes {

/// Concentric-ring disk triangulation: ring k holds 6k vertices, so the mesh
/// has 1 + 3R(R+1) vertices and 6R^2 faces. Boundary on the unit circle.
/// Vertex 0 is the center; rings follow in order.
[[nodiscard]] TriMesh planar_disk(int rings);

/// Unit hemisphere built on the ring triangulation (ring k at polar angle
/// (k/R)·π/2), lifted by z = h(x, y) with a small cos(3ψ) bump that vanishes
/// at the center and on the rim. z == 0 exactly on the boundary.
/// rings = 25 gives 1951 vertices.
[[nodiscard]] TriMesh bumpy_hemisphere(int rings = 25, double bump = 0.08);

/// Disk of radius 1 lifted by a narrow Gaussian spike z = height·exp(-r²/width²).
/// Ring radii are graded so the spike is resolved.
[[nodiscard]] TriMesh spike(int rings = 20, double height = 1.5, double width = 0.3);

/// Unit square split into 4 triangles around the center vertex (index 4).
[[nodiscard]] TriMesh square_fan();

/// (cells+1)² grid on [0,1]², each cell split along alternating diagonals.
[[nodiscard]] TriMesh square_grid(int cells);

/// Single right triangle (0,0,0), (1,0,0), (0,1,0).
[[nodiscard]] RawMesh single_triangle();

/// Closed tetrahedron (not a disk).
[[nodiscard]] RawMesh tetrahedron();

/// Planar annulus with two boundary loops (not a disk).
[[nodiscard]] RawMesh annulus(int segments = 12);

}  // namespace dbparam::shapes

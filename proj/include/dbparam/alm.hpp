#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dbparam/energy.hpp"
#include "dbparam/solver.hpp"

namespace dbparam {

enum class Shape { Disk, Square };

struct ALMConfig
{
    double tau = 5.0;
    double rho0 = 0.1;
    double omega0 = 0.01;
    double eta0 = 0.01;
    /// Multiplicands of the tolerance reset on a penalty update.
    double omega_reset_base = 0.1;
    double eta_reset_base = 0.01;
    double t_omega = 1.0;
    double t_eta = 0.9;
    double v_omega = 1.0;
    double v_eta = 0.5;
    double gamma = 0.1;
    /// Final gradient tolerance; <= 0 selects √dim · 1e-4.
    double omega_star = -1.0;
    double eta_star = 1e-5;
    int max_outer_iterations = 50;
    /// Weight in the constraint μE_A = E_C.
    double mu = 1.0;
    /// Starting multiplier.
    double lambda0 = 0.4;
    /// Fixed-point initializer settings.
    double init_lambda = 0.4;
    int init_iterations = 5;
    PCGConfig pcg;
    Ordering ordering = Ordering::ApproximateMinimumDegree;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct ALMState
{
    double lambda = 0.4;
    double rho = 0.1;
    double omega = 0.01;
    double eta = 0.01;
    double u = 0.0;
    int k = 0;
    double residual = 0.0;
    /// Times λ had to be clipped back into [0, 1].
    int clamp_events = 0;
    bool last_was_multiplier_update = false;
};

[[nodiscard]] ALMState initial_state(const ALMConfig& config);

/// |r| <= min(η, (1 − λ)/ρ, λ/ρ).
[[nodiscard]] bool tight_criterion(const ALMState& state, double r);

/// Multiplier branch when the tight criterion holds, penalty branch otherwise.
[[nodiscard]] ALMState update_state(const ALMState& state, double r, const ALMConfig& config);

/// Corner placement and free coordinates for the square target.
struct BoundaryPartition
{
    /// Boundary loop rotated so that the first corner comes first.
    std::vector<int> loop;
    /// Corner positions within `loop`; corner_positions[0] == 0.
    std::array<int, 4> corner_positions{};
    /// Corner vertex ids.
    std::array<int, 4> corners{};
    /// Sides as vertex lists with shared corner endpoints: bottom (y = 0),
    /// right (x = 1), top (y = 1), left (x = 0, ends at the first corner).
    std::vector<int> y0, x1, y1, x0;
    /// Free first coordinates (interior + non-corner bottom/top vertices).
    std::vector<int> free_x;
    /// Free second coordinates (interior + non-corner right/left vertices).
    std::vector<int> free_y;
    /// Arc-length placement of the boundary on the square (interior rows zero).
    PlanarMap boundary_map;
};

/// Boundary vertices nearest the arc-length quartiles of the loop, starting
/// at boundary_loop()[0].
[[nodiscard]] std::array<int, 4> auto_corners(const TriMesh& mesh);

/// Throws CornerOrderError unless the corners are distinct boundary vertices
/// in counterclockwise loop order.
[[nodiscard]] BoundaryPartition partition_square(const TriMesh& mesh,
                                                 std::optional<std::array<int, 4>> corners = {});

/// Arc-length placement of the boundary loop on the unit circle, starting at
/// angle 0 for boundary_loop()[0]. Interior rows are zero.
[[nodiscard]] PlanarMap arc_length_circle(const TriMesh& mesh);

/// Iterated linear solves [L]_{I,I} f_I = −[L]_{I,B} b with L = L_D first and
/// L = (1 − λ)L_D + 2λ L_S(f) afterwards, L_S taken on the mesh rescaled to
/// the image area. `iterations` counts the linear solves. Throws SingularSystem.
[[nodiscard]] PlanarMap fixed_point_init(const TriMesh& mesh, const PlanarMap& boundary,
                                         double lambda = 0.4, int iterations = 5);
/// Disk version with the arc-length circle boundary.
[[nodiscard]] PlanarMap fixed_point_init(const TriMesh& mesh, double lambda = 0.4,
                                         int iterations = 5);

struct OuterRecord
{
    int k = 0;
    double lambda = 0.0;
    double rho = 0.0;
    double omega = 0.0;
    double eta = 0.0;
    double conformal = 0.0;
    double authalic = 0.0;
    double residual = 0.0;
    double grad_norm = 0.0;
    int inner_iterations = 0;
    bool multiplier_update = false;
};

struct SolveResult
{
    PlanarMap map;
    ALMState state;
    EnergyReport report;
    std::vector<OuterRecord> history;
    /// Inner iterations of every outer step, with continuing iteration numbers.
    std::vector<TraceRow> trace;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double grad_norm = 0.0;
    double omega_star = 0.0;
    bool converged = false;
    std::optional<BoundaryPartition> partition;
};

[[nodiscard]] SolveResult solve_disk(const TriMesh& mesh, const ALMConfig& config = {});
[[nodiscard]] SolveResult solve_square(const TriMesh& mesh,
                                       std::optional<std::array<int, 4>> corners = {},
                                       const ALMConfig& config = {});
/// Same solvers with the constraint μE_A = E_C.
[[nodiscard]] SolveResult solve_weighted(const TriMesh& mesh, double mu, Shape shape,
                                         ALMConfig config = {},
                                         std::optional<std::array<int, 4>> corners = {});

/// Minimizes E_C + λ(E_A − E_C) with λ fixed and no penalty: λ = 0 gives the
/// conformal map, λ = 1 the authalic one. The preconditioner is rebuilt
/// between rounds of at most pcg.max_iterations steps.
[[nodiscard]] SolveResult solve_pinned(const TriMesh& mesh, double lambda, Shape shape,
                                       const ALMConfig& config = {},
                                       std::optional<std::array<int, 4>> corners = {});

/// Fixed-point map in the chosen shape, packaged like a solver result.
[[nodiscard]] SolveResult solve_fixed_point(const TriMesh& mesh, Shape shape,
                                            const ALMConfig& config = {},
                                            std::optional<std::array<int, 4>> corners = {});

}  // namespace dbparam

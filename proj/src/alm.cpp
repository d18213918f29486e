#include "dbparam/alm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dbparam/errors.hpp"
#include "dbparam/laplacian.hpp"

namespace dbparam {

namespace {

// Cumulative 3D arc length along the loop; entry k is the length up to loop[k],
// entry nB the full perimeter.
std::vector<double> cumulative_length(const TriMesh& mesh, const std::vector<int>& loop)
{
    std::vector<double> s(loop.size() + 1, 0.0);
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const int a = loop[k];
        const int b = loop[(k + 1) % loop.size()];
        s[k + 1] = s[k] + (mesh.vertices().row(b) - mesh.vertices().row(a)).norm();
    }
    return s;
}

double boundary_area(const TriMesh& mesh, const PlanarMap& map)
{
    const auto& loop = mesh.boundary_loop();
    Eigen::MatrixX2d poly(loop.size(), 2);
    for (std::size_t k = 0; k < loop.size(); ++k) {
        poly.row(Eigen::Index(k)) = map.row(loop[k]);
    }
    return shoelace_area(poly);
}

struct Problem
{
    std::shared_ptr<const Domain> domain;
    Eigen::VectorXd x0;
    std::optional<BoundaryPartition> partition;
};

Problem make_problem(const TriMesh& mesh, Shape shape, const ALMConfig& config,
                     const std::optional<std::array<int, 4>>& corners)
{
    Problem p;
    if (shape == Shape::Disk) {
        auto domain = std::make_shared<DiskDomain>(mesh);
        const PlanarMap init = fixed_point_init(mesh, config.init_lambda, config.init_iterations);
        p.x0 = domain->from_planar(init);
        p.domain = std::move(domain);
    }
    else {
        BoundaryPartition part = partition_square(mesh, corners);
        const PlanarMap init = fixed_point_init(mesh, part.boundary_map, config.init_lambda,
                                                config.init_iterations);
        auto domain = std::make_shared<SquareDomain>(mesh, part.free_x, part.free_y, init);
        p.x0 = domain->from_planar(init);
        p.domain = std::move(domain);
        p.partition = std::move(part);
    }
    return p;
}

double resolve_omega_star(const ALMConfig& config, Eigen::Index dim)
{
    return config.omega_star > 0.0 ? config.omega_star : std::sqrt(double(dim)) * 1e-4;
}

void append_trace(SolveResult& out, const MinimizeResult& inner)
{
    const int base = out.inner_iterations;
    for (const TraceRow& row : inner.trace) {
        if (row.iteration == 0 && !out.trace.empty()) {
            continue;
        }
        TraceRow r = row;
        r.iteration += base;
        out.trace.push_back(r);
    }
    out.inner_iterations += inner.iterations;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration and multiplier schedule

void ALMConfig::validate() const
{
    if (!(tau > 1.0)) {
        throw ConfigError("tau must be > 1");
    }
    if (!(rho0 > 0.0 && omega0 > 0.0 && eta0 > 0.0 && eta_star > 0.0 && gamma > 0.0)) {
        throw ConfigError("penalty and tolerances must be positive");
    }
    if (!(omega_reset_base > 0.0 && eta_reset_base > 0.0)) {
        throw ConfigError("tolerance reset bases must be positive");
    }
    if (!(mu > 0.0)) {
        throw ConfigError("mu must be positive");
    }
    if (!(lambda0 >= 0.0 && lambda0 <= 1.0) || !(init_lambda >= 0.0 && init_lambda <= 1.0)) {
        throw ConfigError("lambda must lie in [0, 1]");
    }
    if (max_outer_iterations < 1 || init_iterations < 1 || pcg.max_iterations < 0) {
        throw ConfigError("iteration counts must be positive");
    }
}

ALMState initial_state(const ALMConfig& config)
{
    ALMState s;
    s.lambda = config.lambda0;
    s.rho = config.rho0;
    s.omega = config.omega0;
    s.eta = config.eta0;
    s.u = std::min(1.0 / s.rho, config.gamma);
    return s;
}

bool tight_criterion(const ALMState& s, double r)
{
    return std::abs(r) <= std::min({s.eta, (1.0 - s.lambda) / s.rho, s.lambda / s.rho});
}

ALMState update_state(const ALMState& state, double r, const ALMConfig& config)
{
    ALMState s = state;
    s.residual = r;
    s.k = state.k + 1;
    if (tight_criterion(state, r)) {
        s.lambda = state.lambda + state.rho * r;
        if (s.lambda < 0.0 || s.lambda > 1.0) {
            s.lambda = std::clamp(s.lambda, 0.0, 1.0);
            ++s.clamp_events;
        }
        s.u = std::min(1.0 / s.rho, config.gamma);
        s.omega = state.omega * std::pow(s.u, config.t_omega);
        s.eta = state.eta * std::pow(s.u, config.t_eta);
        s.last_was_multiplier_update = true;
    }
    else {
        s.rho = config.tau * state.rho;
        s.u = std::min(1.0 / s.rho, config.gamma);
        s.omega = config.omega_reset_base * std::pow(s.u, config.v_omega);
        s.eta = config.eta_reset_base * std::pow(s.u, config.v_eta);
        s.last_was_multiplier_update = false;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Boundary placement

PlanarMap arc_length_circle(const TriMesh& mesh)
{
    const auto& loop = mesh.boundary_loop();
    const std::vector<double> s = cumulative_length(mesh, loop);
    PlanarMap b = PlanarMap::Zero(mesh.num_vertices(), 2);
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const double t = 2.0 * std::numbers::pi * s[k] / s.back();
        b(loop[k], 0) = std::cos(t);
        b(loop[k], 1) = std::sin(t);
    }
    return b;
}

std::array<int, 4> auto_corners(const TriMesh& mesh)
{
    const auto& loop = mesh.boundary_loop();
    const int nb = int(loop.size());
    if (nb < 4) {
        throw CornerOrderError("boundary has fewer than 4 vertices");
    }
    const std::vector<double> s = cumulative_length(mesh, loop);
    std::array<int, 4> pos{0, 0, 0, 0};
    for (int q = 1; q < 4; ++q) {
        const double target = s.back() * q / 4.0;
        int best = 0;
        for (int k = 0; k < nb; ++k) {
            if (std::abs(s[k] - target) < std::abs(s[best] - target)) {
                best = k;
            }
        }
        pos[q] = best;
    }
    // Keep the corners distinct on very coarse loops.
    for (int q = 1; q < 4; ++q) {
        pos[q] = std::max(pos[q], pos[q - 1] + 1);
    }
    for (int q = 3; q >= 1; --q) {
        pos[q] = std::min(pos[q], nb - 4 + q);
        pos[q - 1] = std::min(pos[q - 1], pos[q] - 1);
    }
    return {loop[pos[0]], loop[pos[1]], loop[pos[2]], loop[pos[3]]};
}

BoundaryPartition partition_square(const TriMesh& mesh, std::optional<std::array<int, 4>> corners)
{
    const std::array<int, 4> c = corners ? *corners : auto_corners(mesh);
    const auto& loop = mesh.boundary_loop();
    const int nb = int(loop.size());
    for (int q = 0; q < 4; ++q) {
        if (c[q] < 0 || c[q] >= mesh.num_vertices() || !mesh.is_boundary(c[q])) {
            throw CornerOrderError("corner " + std::to_string(c[q]) + " is not a boundary vertex");
        }
    }

    BoundaryPartition part;
    part.corners = c;
    const int start = mesh.boundary_position(c[0]);
    part.loop.resize(loop.size());
    for (int k = 0; k < nb; ++k) {
        part.loop[k] = loop[(start + k) % nb];
    }
    for (int q = 0; q < 4; ++q) {
        part.corner_positions[q] = (mesh.boundary_position(c[q]) - start + nb) % nb;
    }
    for (int q = 1; q < 4; ++q) {
        if (part.corner_positions[q] <= part.corner_positions[q - 1]) {
            throw CornerOrderError("corners must be distinct and in counterclockwise loop order");
        }
    }

    const auto& R = part.loop;
    const auto& p = part.corner_positions;
    auto side = [&](int from, int to) {
        std::vector<int> out;
        for (int k = from; k <= to; ++k) {
            out.push_back(R[k % nb]);
        }
        return out;
    };
    part.y0 = side(p[0], p[1]);
    part.x1 = side(p[1], p[2]);
    part.y1 = side(p[2], p[3]);
    part.x0 = side(p[3], nb);

    // Arc-length placement of each side; (x, y) = start + t (end − start).
    part.boundary_map = PlanarMap::Zero(mesh.num_vertices(), 2);
    const Eigen::Vector2d square[5] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}};
    const std::vector<int>* sides[4] = {&part.y0, &part.x1, &part.y1, &part.x0};
    for (int q = 0; q < 4; ++q) {
        const std::vector<int>& sv = *sides[q];
        std::vector<double> s(sv.size(), 0.0);
        for (std::size_t k = 1; k < sv.size(); ++k) {
            s[k] = s[k - 1] + (mesh.vertices().row(sv[k]) - mesh.vertices().row(sv[k - 1])).norm();
        }
        for (std::size_t k = 0; k < sv.size(); ++k) {
            const double t = s[k] / s.back();
            part.boundary_map.row(sv[k]) = (square[q] + t * (square[q + 1] - square[q])).transpose();
        }
    }

    part.free_x = mesh.interior_indices();
    part.free_y = mesh.interior_indices();
    auto add_inner = [](std::vector<int>& dst, const std::vector<int>& sv) {
        dst.insert(dst.end(), sv.begin() + 1, sv.end() - 1);
    };
    add_inner(part.free_x, part.y0);
    add_inner(part.free_x, part.y1);
    add_inner(part.free_y, part.x1);
    add_inner(part.free_y, part.x0);
    return part;
}

// ---------------------------------------------------------------------------
// Fixed-point initializer

PlanarMap fixed_point_init(const TriMesh& mesh, const PlanarMap& boundary, double lambda,
                           int iterations)
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw LambdaOutOfRange("lambda = " + std::to_string(lambda) + " is outside [0, 1]");
    }
    if (iterations < 1) {
        throw ConfigError("fixed-point iterations must be >= 1");
    }
    if (boundary.rows() != mesh.num_vertices()) {
        throw ShapeError("boundary map does not match the mesh");
    }
    const auto& I = mesh.interior_indices();
    const auto& B = mesh.boundary_loop();

    PlanarMap f = PlanarMap::Zero(mesh.num_vertices(), 2);
    Eigen::MatrixX2d b(B.size(), 2);
    for (std::size_t k = 0; k < B.size(); ++k) {
        f.row(B[k]) = boundary.row(B[k]);
        b.row(Eigen::Index(k)) = boundary.row(B[k]);
    }
    if (I.empty()) {
        return f;
    }

    const SparseMatrix LD = build_LD(mesh);
    const double image_area = boundary_area(mesh, f);
    SparseMatrix L = LD;
    for (int it = 0; it < iterations; ++it) {
        const SparseMatrix LII = submatrix(L, I, I);
        const SparseMatrix LIB = submatrix(L, I, B);
        Eigen::MatrixXd fI;
        try {
            fI = CholeskyFactor::factorize(LII).solve(Eigen::MatrixXd(-(LIB * b)));
        }
        catch (const NotPositiveDefinite& e) {
            throw SingularSystem(std::string("fixed-point system is singular: ") + e.what());
        }
        if (!fI.allFinite()) {
            throw SingularSystem("fixed-point solve produced non-finite values");
        }
        for (std::size_t k = 0; k < I.size(); ++k) {
            f.row(I[k]) = fI.row(Eigen::Index(k));
        }
        if (it + 1 < iterations && lambda > 0.0) {
            // (1 − λ)L_D + 2λ L_S with L_S taken on the mesh rescaled so that
            // |M| equals the image area, i.e. an extra factor |M| / A.
            L = blend_Llambda(LD, build_LS(mesh, f), lambda, mesh.total_area(), image_area,
                              BlendMode::Augmented);
        }
    }
    return f;
}

PlanarMap fixed_point_init(const TriMesh& mesh, double lambda, int iterations)
{
    return fixed_point_init(mesh, arc_length_circle(mesh), lambda, iterations);
}

// ---------------------------------------------------------------------------
// Solvers

namespace {

SolveResult run_alm(const TriMesh& mesh, Shape shape, const ALMConfig& config,
                    const std::optional<std::array<int, 4>>& corners)
{
    config.validate();
    Problem prob = make_problem(mesh, shape, config, corners);
    const EnergyModel model(mesh, prob.domain);

    SolveResult out;
    out.partition = std::move(prob.partition);
    out.omega_star = resolve_omega_star(config, model.dimension());
    Eigen::VectorXd x = prob.x0;
    ALMState state = initial_state(config);

    for (int k = 0; k < config.max_outer_iterations; ++k) {
        const Preconditioner M =
            Preconditioner::build(model, x, state.lambda, config.mu, config.ordering);
        PCGConfig pcg = config.pcg;
        pcg.tolerance = state.omega;
        const MinimizeResult inner =
            minimize(model, x, AugLagParams{state.lambda, state.rho, config.mu}, M, pcg);
        x = inner.x;
        append_trace(out, inner);
        out.grad_norm = inner.grad_norm;
        const double r = config.mu * inner.terms.authalic - inner.terms.conformal;

        OuterRecord rec;
        rec.k = k;
        rec.lambda = state.lambda;
        rec.rho = state.rho;
        rec.omega = state.omega;
        rec.eta = state.eta;
        rec.conformal = inner.terms.conformal;
        rec.authalic = inner.terms.authalic;
        rec.residual = r;
        rec.grad_norm = inner.grad_norm;
        rec.inner_iterations = inner.iterations;
        out.outer_iterations = k + 1;
        state.residual = r;

        if (inner.grad_norm <= out.omega_star && std::abs(r) < config.eta_star) {
            out.history.push_back(rec);
            out.converged = true;
            break;
        }
        state = update_state(state, r, config);
        rec.multiplier_update = state.last_was_multiplier_update;
        out.history.push_back(rec);
    }

    out.state = state;
    out.map = prob.domain->to_planar(x);
    out.report = model.report(x, config.mu);
    return out;
}

}  // namespace

SolveResult solve_disk(const TriMesh& mesh, const ALMConfig& config)
{
    return run_alm(mesh, Shape::Disk, config, std::nullopt);
}

SolveResult solve_square(const TriMesh& mesh, std::optional<std::array<int, 4>> corners,
                         const ALMConfig& config)
{
    return run_alm(mesh, Shape::Square, config, corners);
}

SolveResult solve_weighted(const TriMesh& mesh, double mu, Shape shape, ALMConfig config,
                           std::optional<std::array<int, 4>> corners)
{
    if (!(mu > 0.0)) {
        throw ConfigError("mu must be positive");
    }
    config.mu = mu;
    return run_alm(mesh, shape, config, corners);
}

SolveResult solve_pinned(const TriMesh& mesh, double lambda, Shape shape, const ALMConfig& config,
                         std::optional<std::array<int, 4>> corners)
{
    config.validate();
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw LambdaOutOfRange("lambda = " + std::to_string(lambda) + " is outside [0, 1]");
    }
    Problem prob = make_problem(mesh, shape, config, corners);
    const EnergyModel model(mesh, prob.domain);

    SolveResult out;
    out.partition = std::move(prob.partition);
    out.omega_star = resolve_omega_star(config, model.dimension());
    out.state = initial_state(config);
    out.state.lambda = lambda;
    out.state.rho = 0.0;
    out.state.omega = out.omega_star;
    Eigen::VectorXd x = prob.x0;

    const AugLagParams params{lambda, 0.0, 1.0};
    for (int k = 0; k < config.max_outer_iterations; ++k) {
        const Preconditioner M = Preconditioner::build(model, x, lambda, 1.0, config.ordering);
        PCGConfig pcg = config.pcg;
        pcg.tolerance = out.omega_star;
        const MinimizeResult inner = minimize(model, x, params, M, pcg);
        x = inner.x;
        append_trace(out, inner);
        out.grad_norm = inner.grad_norm;
        out.outer_iterations = k + 1;

        OuterRecord rec;
        rec.k = k;
        rec.lambda = lambda;
        rec.omega = out.omega_star;
        rec.conformal = inner.terms.conformal;
        rec.authalic = inner.terms.authalic;
        rec.residual = inner.terms.authalic - inner.terms.conformal;
        rec.grad_norm = inner.grad_norm;
        rec.inner_iterations = inner.iterations;
        out.history.push_back(rec);
        if (inner.converged) {
            out.converged = true;
            break;
        }
        if (inner.iterations == 0) {
            break;
        }
    }
    out.map = prob.domain->to_planar(x);
    out.report = model.report(x, 1.0);
    out.state.residual = out.report.residual;
    return out;
}

SolveResult solve_fixed_point(const TriMesh& mesh, Shape shape, const ALMConfig& config,
                              std::optional<std::array<int, 4>> corners)
{
    config.validate();
    SolveResult out;
    std::shared_ptr<const Domain> domain;
    if (shape == Shape::Disk) {
        out.map = fixed_point_init(mesh, config.init_lambda, config.init_iterations);
        domain = std::make_shared<DiskDomain>(mesh);
    }
    else {
        BoundaryPartition part = partition_square(mesh, corners);
        out.map = fixed_point_init(mesh, part.boundary_map, config.init_lambda,
                                   config.init_iterations);
        domain = std::make_shared<SquareDomain>(mesh, part.free_x, part.free_y, out.map);
        out.partition = std::move(part);
    }
    const EnergyModel model(mesh, domain);
    const Eigen::VectorXd x = domain->from_planar(out.map);
    out.report = model.report(x, 1.0);
    out.state = initial_state(config);
    out.state.lambda = config.init_lambda;
    out.state.rho = 0.0;
    out.state.residual = out.report.residual;
    out.outer_iterations = config.init_iterations;
    out.omega_star = resolve_omega_star(config, model.dimension());
    EnergyGradients g;
    const EnergyTerms t = model.evaluate(x, &g);
    out.grad_norm = auglag_grad(t, g, AugLagParams{config.init_lambda, 0.0, 1.0}).norm();
    return out;
}

}  // namespace dbparam

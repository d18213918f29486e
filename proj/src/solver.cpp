#include "dbparam/solver.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "dbparam/errors.hpp"
#include "dbparam/laplacian.hpp"

namespace dbparam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int count_folds(const TriMesh& mesh, const PlanarMap& map)
{
    const Eigen::VectorXd a = signed_face_areas(mesh.faces(), map);
    return int((a.array() <= 0.0).count());
}

}  // namespace

// ---------------------------------------------------------------------------
// Preconditioner

Preconditioner Preconditioner::build(const EnergyModel& model, const Eigen::VectorXd& x0,
                                     double lambda, double mu, Ordering ordering)
{
    const Domain& domain = model.domain();
    const PlanarMap f0 = domain.to_planar(x0);
    SparseMatrix L;
    if (lambda == 0.0) {
        L = blend_Llambda(model.LD(), model.LD(), 0.0, 1.0, 1.0);
    }
    else {
        const double A = domain.image_area(x0, f0);
        L = blend_Llambda(model.LD(), build_LS(model.mesh(), f0), lambda,
                          model.mesh().total_area(), A, BlendMode::Augmented, mu);
    }

    Preconditioner p;
    p.dim_ = domain.dimension();
    std::vector<std::vector<int>> seen;
    Eigen::Index offset = 0;
    for (const auto& verts : domain.preconditioner_blocks()) {
        Block b;
        b.offset = offset;
        b.size = Eigen::Index(verts.size());
        offset += b.size;
        if (verts.empty()) {
            p.blocks_.push_back(b);
            continue;
        }
        for (std::size_t k = 0; k < seen.size(); ++k) {
            if (seen[k] == verts) {
                b.factor = int(k);
            }
        }
        if (b.factor < 0) {
            SparseMatrix block = submatrix(L, verts, verts);
            p.factors_.push_back(CholeskyFactor::factorize(block, ordering));
            p.matrices_.push_back(std::move(block));
            seen.push_back(verts);
            b.factor = int(p.factors_.size()) - 1;
        }
        p.blocks_.push_back(b);
    }
    if (offset != p.dim_) {
        throw ShapeError("preconditioner blocks do not cover the variables");
    }
    return p;
}

Preconditioner Preconditioner::identity(Eigen::Index dim)
{
    Preconditioner p;
    p.dim_ = dim;
    p.blocks_.push_back(Block{0, dim, -1});
    return p;
}

Eigen::VectorXd Preconditioner::apply(const Eigen::VectorXd& r) const
{
    if (r.size() != dim_) {
        throw ShapeError("preconditioner input has wrong length");
    }
    Eigen::VectorXd h(dim_);
    for (const Block& b : blocks_) {
        if (b.factor < 0) {
            h.segment(b.offset, b.size) = r.segment(b.offset, b.size);
        }
        else {
            h.segment(b.offset, b.size) =
                factors_[b.factor].solve(Eigen::VectorXd(r.segment(b.offset, b.size)));
        }
    }
    return h;
}

Eigen::VectorXd Preconditioner::multiply(const Eigen::VectorXd& x) const
{
    if (x.size() != dim_) {
        throw ShapeError("preconditioner input has wrong length");
    }
    Eigen::VectorXd y(dim_);
    for (const Block& b : blocks_) {
        if (b.factor < 0) {
            y.segment(b.offset, b.size) = x.segment(b.offset, b.size);
        }
        else {
            y.segment(b.offset, b.size) = matrices_[b.factor] * x.segment(b.offset, b.size);
        }
    }
    return y;
}

// ---------------------------------------------------------------------------
// Line search

LineSearchResult line_search(const LineFunction& phi, double phi0, double dphi0, double alpha_prev,
                             const LineSearchConfig& cfg)
{
    LineSearchResult res;
    res.value = phi0;
    if (dphi0 == 0.0) {
        res.success = true;
        return res;
    }
    auto armijo = [&](double a, double v) {
        return std::isfinite(v) && v <= phi0 + cfg.armijo_c1 * a * dphi0;
    };

    double ap = alpha_prev > 0.0 ? alpha_prev : 1.0;
    double last = ap;
    for (int retry = 0; retry <= cfg.max_retries; ++retry) {
        const double vp = phi(ap, nullptr);
        ++res.evaluations;
        last = ap;
        if (!std::isfinite(vp)) {
            ap *= 0.5;
            continue;
        }
        const double a = (vp - phi0 - ap * dphi0) / (ap * ap);
        if (!(a > 0.0)) {
            // No interior minimum along the sampled parabola.
            if (armijo(ap, vp)) {
                res.alpha = ap;
                res.value = vp;
                res.success = true;
                return res;
            }
            ap *= 0.5;
            continue;
        }
        const double alpha = -dphi0 / (2.0 * a);
        double slope = 0.0;
        const double v = phi(alpha, cfg.strong_wolfe ? &slope : nullptr);
        ++res.evaluations;
        last = alpha;
        const bool wolfe = !cfg.strong_wolfe || std::abs(slope) <= cfg.wolfe_c2 * std::abs(dphi0);
        if (armijo(alpha, v) && wolfe) {
            res.alpha = alpha;
            res.value = v;
            res.success = true;
            return res;
        }
        ap = alpha;
    }

    double alpha = last;
    for (int k = 0; k < cfg.max_halvings; ++k) {
        alpha *= 0.5;
        const double v = phi(alpha, nullptr);
        ++res.evaluations;
        if (armijo(alpha, v)) {
            res.alpha = alpha;
            res.value = v;
            res.success = true;
            return res;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Nonlinear CG

MinimizeResult minimize(const EnergyModel& model, const Eigen::VectorXd& x0,
                        const AugLagParams& params, const Preconditioner& precond,
                        const PCGConfig& config)
{
    const Eigen::Index dim = model.dimension();
    if (x0.size() != dim || precond.dimension() != dim) {
        throw ShapeError("initial point or preconditioner does not match the domain");
    }
    const Domain& domain = model.domain();
    const TriMesh& mesh = model.mesh();

    MinimizeResult out;
    out.x = x0;
    EnergyGradients grads;
    out.terms = model.evaluate(out.x, &grads);
    out.value = auglag_value(out.terms, params);
    Eigen::VectorXd g = auglag_grad(out.terms, grads, params);
    out.grad_norm = g.norm();
    int folds = count_folds(mesh, domain.to_planar(out.x));

    Eigen::VectorXd h = precond.apply(g);
    double gamma = h.dot(g);
    Eigen::VectorXd p = -h;
    double alpha_prev = config.initial_step;

    auto record = [&](int it, double alpha) {
        out.trace.push_back(TraceRow{it, out.terms.conformal, out.terms.authalic, out.grad_norm,
                                     alpha, out.value});
    };
    record(0, 0.0);

    // Cache of the most recent trial so an accepted step is not re-evaluated.
    struct Trial
    {
        double alpha = -1.0;
        Eigen::VectorXd x;
        EnergyTerms terms;
        EnergyGradients grads;
        int folds = 0;
    } trial;

    for (int it = 1; it <= config.max_iterations; ++it) {
        if (out.grad_norm <= config.tolerance) {
            out.converged = true;
            break;
        }
        double dphi0 = p.dot(g);
        if (dphi0 >= 0.0) {
            p = -h;
            dphi0 = p.dot(g);
        }
        if (dphi0 == 0.0) {
            break;
        }

        LineFunction phi = [&](double alpha, double* slope) -> double {
            trial.alpha = alpha;
            trial.x = out.x + alpha * p;
            trial.terms = EnergyTerms{};
            if (!domain.admissible(trial.x)) {
                trial.alpha = -1.0;
                ++out.rejected_trials;
                return kInf;
            }
            if (config.reject_folds) {
                trial.folds = count_folds(mesh, domain.to_planar(trial.x));
                if (trial.folds > folds) {
                    trial.alpha = -1.0;
                    ++out.rejected_trials;
                    return kInf;
                }
            }
            try {
                trial.terms = model.evaluate(trial.x, &trial.grads);
            }
            catch (const NonPositiveImageArea&) {
                trial.alpha = -1.0;
                ++out.rejected_trials;
                return kInf;
            }
            const double v = auglag_value(trial.terms, params);
            if (slope) {
                *slope = p.dot(auglag_grad(trial.terms, trial.grads, params));
            }
            return std::isfinite(v) ? v : kInf;
        };

        const LineSearchResult ls = line_search(phi, out.value, dphi0, alpha_prev, config.line_search);
        if (!ls.success || ls.alpha == 0.0) {
            out.line_search_failed = !ls.success;
            break;
        }
        if (trial.alpha != ls.alpha) {
            (void)phi(ls.alpha, nullptr);
        }
        out.x = trial.x;
        out.terms = trial.terms;
        out.value = ls.value;
        if (config.reject_folds) {
            folds = trial.folds;
        }
        g = auglag_grad(out.terms, trial.grads, params);
        out.grad_norm = g.norm();
        alpha_prev = ls.alpha;
        out.iterations = it;
        record(it, ls.alpha);

        h = precond.apply(g);
        const double gamma_new = h.dot(g);
        const double beta = gamma > 0.0 ? gamma_new / gamma : 0.0;
        gamma = gamma_new;
        if (it % (2 * dim) == 0) {
            p = -h;
        }
        else {
            p = -h + beta * p;
        }
    }
    if (!out.converged && out.grad_norm <= config.tolerance) {
        out.converged = true;
    }
    return out;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows)
{
    std::ofstream out(path);
    if (!out) {
        throw IOError("cannot write " + path.string());
    }
    out.precision(17);
    out << "iteration,E_C,E_A,grad_norm,alpha,value\n";
    for (const TraceRow& r : rows) {
        out << r.iteration << ',' << r.conformal << ',' << r.authalic << ',' << r.grad_norm << ','
            << r.alpha << ',' << r.value << '\n';
    }
}

}  // namespace dbparam

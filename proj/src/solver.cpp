#include "wpt/solver.hpp"

#include <cmath>
#include <limits>

namespace wpt::solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Workspace {
    const ConvexProgram& prog;
    Eigen::VectorXd scale;

    explicit Workspace(const ConvexProgram& p) : prog(p) {
        scale = p.scale.size() == p.dim ? p.scale
                                        : Eigen::VectorXd::Ones(p.dim);
    }

    Eigen::VectorXd to_x(const Eigen::VectorXd& y) const {
        return scale.cwiseProduct(y);
    }

    bool strictly_feasible(const Eigen::VectorXd& x) const {
        for (int i = 0; i < prog.dim; ++i) {
            if (prog.lower.size() && std::isfinite(prog.lower[i]) &&
                !(x[i] > prog.lower[i]))
                return false;
            if (prog.upper.size() && std::isfinite(prog.upper[i]) &&
                !(x[i] < prog.upper[i]))
                return false;
        }
        for (const auto& g : prog.constraints) {
            if (!(g(x, nullptr) < 0.0)) return false;
        }
        return true;
    }

    // Barrier value and gradient in scaled coordinates. Returns NaN when the
    // point is not strictly feasible or an evaluation is non-finite.
    double barrier(const Eigen::VectorXd& y, double mu,
                   Eigen::VectorXd* grad) const {
        Eigen::VectorXd x = to_x(y);
        if (grad) grad->setZero(prog.dim);
        Eigen::VectorXd gbuf(prog.dim);

        double value = prog.objective(x, grad ? &gbuf : nullptr);
        if (!std::isfinite(value)) return std::nan("");
        if (grad) *grad = scale.cwiseProduct(gbuf);

        for (const auto& g : prog.constraints) {
            double gv = g(x, grad ? &gbuf : nullptr);
            if (!(gv < 0.0) || !std::isfinite(gv)) return std::nan("");
            value -= mu * std::log(-gv);
            if (grad) *grad += (mu / -gv) * scale.cwiseProduct(gbuf);
        }
        for (int i = 0; i < prog.dim; ++i) {
            if (prog.lower.size() && std::isfinite(prog.lower[i])) {
                double d = x[i] - prog.lower[i];
                if (!(d > 0.0)) return std::nan("");
                value -= mu * std::log(d);
                if (grad) (*grad)[i] -= mu * scale[i] / d;
            }
            if (prog.upper.size() && std::isfinite(prog.upper[i])) {
                double d = prog.upper[i] - x[i];
                if (!(d > 0.0)) return std::nan("");
                value -= mu * std::log(d);
                if (grad) (*grad)[i] += mu * scale[i] / d;
            }
        }
        return value;
    }

    // Finite-difference Hessian of the barrier gradient.
    Eigen::MatrixXd fd_hessian(const Eigen::VectorXd& y, double mu,
                               const Eigen::VectorXd& g0) const {
        const int d = prog.dim;
        Eigen::MatrixXd h(d, d);
        Eigen::VectorXd gp(d);
        for (int j = 0; j < d; ++j) {
            double step = 1e-6 * std::max(1.0, std::abs(y[j]));
            Eigen::VectorXd yp = y;
            yp[j] += step;
            double v = barrier(yp, mu, &gp);
            if (std::isnan(v)) {
                yp[j] = y[j] - step;
                v = barrier(yp, mu, &gp);
                step = -step;
            }
            if (std::isnan(v)) {
                h.col(j).setZero();
                h(j, j) = 1.0;
                continue;
            }
            h.col(j) = (gp - g0) / step;
        }
        return 0.5 * (h + h.transpose());
    }
};

int count_inequalities(const ConvexProgram& p) {
    int n = static_cast<int>(p.constraints.size());
    for (int i = 0; i < p.dim; ++i) {
        if (p.lower.size() && std::isfinite(p.lower[i])) ++n;
        if (p.upper.size() && std::isfinite(p.upper[i])) ++n;
    }
    return n;
}

}  // namespace

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::kConverged: return "converged";
        case SolveStatus::kIterationLimit: return "iteration-limit";
        case SolveStatus::kInfeasibleStart: return "infeasible-start";
        case SolveStatus::kNumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

SolveResult minimize(const ConvexProgram& prog, const SolveOptions& opts) {
    Workspace ws(prog);
    SolveResult res;
    res.x = prog.x0;
    res.objective = prog.objective(prog.x0, nullptr);
    res.iterations = 0;

    if (!ws.strictly_feasible(prog.x0)) {
        res.status = SolveStatus::kInfeasibleStart;
        return res;
    }

    Eigen::VectorXd y = prog.x0.cwiseQuotient(ws.scale);
    Eigen::VectorXd y_best = y;
    double f_best = res.objective;

    const int n_ineq = std::max(1, count_inequalities(prog));
    double mu = opts.mu0;
    double kkt = 0.0;
    bool failed = false;

    for (int outer = 0; outer < opts.max_outer && !failed; ++outer) {
        Eigen::VectorXd grad(prog.dim);
        for (int inner = 0; inner < opts.max_inner; ++inner) {
            double b0 = ws.barrier(y, mu, &grad);
            if (std::isnan(b0)) {
                failed = true;
                break;
            }
            Eigen::MatrixXd hess = ws.fd_hessian(y, mu, grad);

            Eigen::VectorXd p;
            double reg = 0.0;
            double decrement = 0.0;
            for (int attempt = 0; attempt < 12; ++attempt) {
                Eigen::MatrixXd hreg = hess;
                if (reg > 0.0) {
                    hreg.diagonal().array() += reg;
                }
                Eigen::LDLT<Eigen::MatrixXd> ldlt(hreg);
                p = ldlt.solve(-grad);
                decrement = -grad.dot(p);
                if (ldlt.info() == Eigen::Success && decrement > 0.0 &&
                    p.allFinite()) {
                    break;
                }
                reg = (reg == 0.0) ? 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff())
                                   : reg * 100.0;
                p.setZero();
            }
            if (!(decrement > 0.0)) {
                p = -grad;  // fall back to steepest descent
                decrement = grad.squaredNorm();
            }

            ++res.iterations;
            if (0.5 * decrement <= std::max(1e-14, 1e-6 * mu)) {
                kkt = grad.norm();
                break;
            }

            // backtracking line search, keeping strict feasibility
            double t = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                Eigen::VectorXd y_try = y + t * p;
                double b_try = ws.barrier(y_try, mu, nullptr);
                if (!std::isnan(b_try) && b_try <= b0 - 1e-4 * t * decrement) {
                    y = y_try;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            double f_now = prog.objective(ws.to_x(y), nullptr);
            if (std::isfinite(f_now) && f_now < f_best) {
                f_best = f_now;
                y_best = y;
            }
            if (!moved) {
                kkt = grad.norm();
                break;
            }
            kkt = grad.norm();
        }
        if (mu * n_ineq <= opts.tol) {
            res.status = SolveStatus::kConverged;
            break;
        }
        mu *= opts.mu_shrink;
        res.status = SolveStatus::kIterationLimit;
    }

    if (failed) {
        res.status = SolveStatus::kNumericalFailure;
    }
    res.kkt_residual = kkt;

    double f_final = prog.objective(ws.to_x(y), nullptr);
    if (std::isfinite(f_final) && f_final < f_best && ws.strictly_feasible(ws.to_x(y))) {
        f_best = f_final;
        y_best = y;
    }
    res.x = ws.to_x(y_best);
    res.objective = f_best;
    return res;
}

}  // namespace wpt::solver

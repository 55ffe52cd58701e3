#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Generic smooth convex minimization with inequality constraints via a
// log-barrier path-following scheme. Hosts the SCA subproblems.

namespace wpt::solver {

// Returns the value at x; if grad is non-null, fills the gradient.
using DiffFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct ConvexProgram {
    int dim = 0;
    DiffFn objective;
    std::vector<DiffFn> constraints;  // g_k(x) <= 0
    Eigen::VectorXd lower;            // -inf allowed
    Eigen::VectorXd upper;            // +inf allowed
    Eigen::VectorXd x0;               // strictly feasible start
    Eigen::VectorXd scale;            // per-variable scale hints; empty = ones
};

enum class SolveStatus {
    kConverged,
    kIterationLimit,
    kInfeasibleStart,
    kNumericalFailure,
};

std::string to_string(SolveStatus s);

struct SolveOptions {
    double tol = 1e-9;       // duality-gap proxy target (objective units)
    double mu0 = 1.0;        // initial barrier weight
    double mu_shrink = 0.1;  // schedule mu <- mu * mu_shrink
    int max_inner = 200;     // Newton iterations per centering step
    int max_outer = 40;
};

struct SolveResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    SolveStatus status = SolveStatus::kNumericalFailure;
    double kkt_residual = 0.0;
    int iterations = 0;  // total inner iterations
};

SolveResult minimize(const ConvexProgram& prog, const SolveOptions& opts = {});

}  // namespace wpt::solver

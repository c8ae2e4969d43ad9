#pragma once

#include <Eigen/Dense>

#include <vector>

namespace garchx::cone {

/// Feasible set of one coordinate.
struct Bound {
    enum class Kind { Fixed, HalfLine, Free };
    Kind kind = Kind::Free;
    double value = 0.0;  // fixed value or lower bound

    static Bound fixed(double v) { return {Kind::Fixed, v}; }
    static Bound half_line(double lower) { return {Kind::HalfLine, lower}; }
    static Bound free() { return {Kind::Free, 0.0}; }
};

/// Axis-aligned product set, one Bound per coordinate.
using Cone = std::vector<Bound>;

struct QpSolution {
    Eigen::VectorXd minimizer;
    double value = 0.0;
    /// active[i] is true when coordinate i sits at its fixed value or lower bound.
    std::vector<bool> active;
    /// Set when some free subproblem needed a pseudo-inverse.
    bool pseudo_inverse = false;
};

/// Quadratic form (lambda - Z)' H (lambda - Z).
double quad_value(const Eigen::MatrixXd& H, const Eigen::VectorXd& Z, const Eigen::VectorXd& lambda);

/// Global minimizer of (lambda - Z)' H (lambda - Z) over the cone by
/// enumerating every pattern of active lower bounds. Among patterns with equal
/// minimum the one with the fewest active constraints wins.
/// Throws DomainError for dimension mismatch, d > 8 or non-finite bounds.
QpSolution solve_cone_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& Z, const Cone& cone);

/// Checks feasibility and first-order conditions of a candidate minimizer:
/// gradient 2H(lambda - Z) vanishes on inactive coordinates and is
/// nonnegative on active lower bounds, all up to `tol`.
bool kkt_holds(const Eigen::MatrixXd& H, const Eigen::VectorXd& Z, const Cone& cone,
               const Eigen::VectorXd& lambda, double tol = 1e-9);

/// Brute-force minimum over the lattice Z_i + k * half_width / steps,
/// k = -steps..steps, intersected with the cone (lower bounds are added as
/// lattice points). Test oracle only; cost grows as (2 steps + 2)^d.
QpSolution grid_oracle(const Eigen::MatrixXd& H, const Eigen::VectorXd& Z, const Cone& cone,
                       double half_width, int steps);

/// Minimizer of (l - z)' M (l - z) over l >= 0 in two dimensions, M positive
/// definite. Closed form over the four faces of the quadrant.
Eigen::Vector2d project_quadrant(const Eigen::Matrix2d& M, const Eigen::Vector2d& z);

/// Minimizer over {l1 >= 0, l2 = 0}: (max(0, z1 + M12 z2 / M11), 0).
Eigen::Vector2d project_first_axis(const Eigen::Matrix2d& M, const Eigen::Vector2d& z);

}  // namespace garchx::cone

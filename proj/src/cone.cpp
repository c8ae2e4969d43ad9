#include "garchx/cone.hpp"

#include "garchx/errors.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace garchx::cone {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double quad_value(const MatrixXd& H, const VectorXd& Z, const VectorXd& lambda) {
    const VectorXd d = lambda - Z;
    return d.dot(H * d);
}

namespace {

void check_inputs(const MatrixXd& H, const VectorXd& Z, const Cone& cone) {
    const auto d = Z.size();
    if (H.rows() != d || H.cols() != d || static_cast<Eigen::Index>(cone.size()) != d) {
        throw DomainError("cone QP: dimensions of H, Z and cone disagree");
    }
    if (d > 8) throw DomainError("cone QP: dimension above 8 is not supported");
    for (const auto& b : cone) {
        if (b.kind != Bound::Kind::Free && !std::isfinite(b.value)) {
            throw DomainError("cone QP: fixed values and lower bounds must be finite");
        }
    }
}

}  // namespace

QpSolution solve_cone_qp(const MatrixXd& H, const VectorXd& Z, const Cone& cone) {
    check_inputs(H, Z, cone);
    const int d = static_cast<int>(Z.size());

    std::vector<int> half;
    for (int i = 0; i < d; ++i) {
        if (cone[i].kind == Bound::Kind::HalfLine) half.push_back(i);
    }
    const unsigned patterns = 1u << half.size();

    QpSolution best;
    best.value = std::numeric_limits<double>::infinity();
    int best_active = d + 1;

    for (unsigned mask = 0; mask < patterns; ++mask) {
        std::vector<bool> pinned(d, false);
        VectorXd lambda = Z;
        for (int i = 0; i < d; ++i) {
            if (cone[i].kind == Bound::Kind::Fixed) {
                pinned[i] = true;
                lambda(i) = cone[i].value;
            }
        }
        for (std::size_t k = 0; k < half.size(); ++k) {
            if (mask & (1u << k)) {
                pinned[half[k]] = true;
                lambda(half[k]) = cone[half[k]].value;
            }
        }
        std::vector<int> fr, pn;
        for (int i = 0; i < d; ++i) (pinned[i] ? pn : fr).push_back(i);

        bool pinv = false;
        if (!fr.empty()) {
            const int f = static_cast<int>(fr.size());
            MatrixXd Hff(f, f);
            VectorXd rhs = VectorXd::Zero(f);
            for (int a = 0; a < f; ++a) {
                for (int b = 0; b < f; ++b) Hff(a, b) = H(fr[a], fr[b]);
                for (int p : pn) rhs(a) += H(fr[a], p) * (lambda(p) - Z(p));
            }
            // stationarity on the free block: Hff (l_F - Z_F) = -H_FP (l_P - Z_P)
            Eigen::LDLT<MatrixXd> ldlt(Hff);
            VectorXd delta;
            const double scale = std::max(1.0, Hff.diagonal().cwiseAbs().maxCoeff());
            const bool pd = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                            ldlt.vectorD().minCoeff() > 1e-13 * scale;
            if (pd) {
                delta = ldlt.solve(-rhs);
            } else {
                Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Hff);
                cod.setThreshold(1e-12);
                delta = cod.solve(-rhs);
                pinv = true;
            }
            for (int a = 0; a < f; ++a) lambda(fr[a]) = Z(fr[a]) + delta(a);
        }

        bool feasible = true;
        for (int i = 0; i < d && feasible; ++i) {
            if (cone[i].kind == Bound::Kind::HalfLine && !pinned[i] && lambda(i) < cone[i].value) {
                feasible = false;
            }
        }
        if (!feasible) continue;

        const double v = quad_value(H, Z, lambda);
        const int n_active = static_cast<int>(std::popcount(mask));
        const double tie = 1e-12 * std::max(1.0, std::abs(best.value));
        const bool better = v < best.value - tie ||
                            (std::abs(v - best.value) <= tie && n_active < best_active);
        if (better) {
            best.value = v;
            best.minimizer = lambda;
            best.active = pinned;
            best_active = n_active;
            best.pseudo_inverse = pinv;
        }
    }
    if (!std::isfinite(best.value)) throw NumericError("cone QP: no feasible stationary pattern");
    return best;
}

bool kkt_holds(const MatrixXd& H, const VectorXd& Z, const Cone& cone, const VectorXd& lambda,
               double tol) {
    check_inputs(H, Z, cone);
    if (lambda.size() != Z.size()) return false;
    const VectorXd g = 2.0 * H * (lambda - Z);
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff() * std::max(1.0, Z.cwiseAbs().maxCoeff()));
    const double t = tol * scale;
    for (int i = 0; i < Z.size(); ++i) {
        switch (cone[i].kind) {
            case Bound::Kind::Fixed:
                if (std::abs(lambda(i) - cone[i].value) > t) return false;
                break;
            case Bound::Kind::Free:
                if (std::abs(g(i)) > t) return false;
                break;
            case Bound::Kind::HalfLine:
                if (lambda(i) < cone[i].value - t) return false;
                if (std::abs(lambda(i) - cone[i].value) <= t) {
                    if (g(i) < -t) return false;
                } else if (std::abs(g(i)) > t) {
                    return false;
                }
                break;
        }
    }
    return true;
}

QpSolution grid_oracle(const MatrixXd& H, const VectorXd& Z, const Cone& cone, double half_width,
                       int steps) {
    check_inputs(H, Z, cone);
    if (steps < 10) throw DomainError("grid_oracle: steps must be >= 10");
    if (!(half_width > 0.0)) throw DomainError("grid_oracle: half_width must be positive");
    const int d = static_cast<int>(Z.size());
    const double h = half_width / steps;

    std::vector<std::vector<double>> axes(d);
    for (int i = 0; i < d; ++i) {
        if (cone[i].kind == Bound::Kind::Fixed) {
            axes[i] = {cone[i].value};
            continue;
        }
        for (int k = -steps; k <= steps; ++k) {
            const double v = Z(i) + k * h;
            if (cone[i].kind == Bound::Kind::HalfLine && v < cone[i].value) continue;
            axes[i].push_back(v);
        }
        if (cone[i].kind == Bound::Kind::HalfLine) axes[i].push_back(cone[i].value);
    }

    QpSolution best;
    best.value = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(d, 0);
    VectorXd lambda(d);
    for (;;) {
        for (int i = 0; i < d; ++i) lambda(i) = axes[i][idx[i]];
        const double v = quad_value(H, Z, lambda);
        if (v < best.value) {
            best.value = v;
            best.minimizer = lambda;
        }
        int i = 0;
        while (i < d && ++idx[i] == axes[i].size()) idx[i++] = 0;
        if (i == d) break;
    }
    best.active.assign(d, false);
    for (int i = 0; i < d; ++i) {
        best.active[i] = cone[i].kind == Bound::Kind::Fixed ||
                         (cone[i].kind == Bound::Kind::HalfLine && best.minimizer(i) == cone[i].value);
    }
    return best;
}

Eigen::Vector2d project_first_axis(const Eigen::Matrix2d& M, const Eigen::Vector2d& z) {
    return {std::max(0.0, z(0) + M(0, 1) * z(1) / M(0, 0)), 0.0};
}

Eigen::Vector2d project_quadrant(const Eigen::Matrix2d& M, const Eigen::Vector2d& z) {
    if (z(0) >= 0.0 && z(1) >= 0.0) return z;
    // Outside the quadrant the minimizer lies on one of the two boundary rays.
    const Eigen::Vector2d c1(std::max(0.0, z(0) + M(0, 1) * z(1) / M(0, 0)), 0.0);
    const Eigen::Vector2d c2(0.0, std::max(0.0, z(1) + M(0, 1) * z(0) / M(1, 1)));
    auto val = [&](const Eigen::Vector2d& l) {
        const Eigen::Vector2d e = l - z;
        return e.dot(M * e);
    };
    const double v1 = val(c1), v2 = val(c2);
    return v1 <= v2 ? c1 : c2;
}

}  // namespace garchx::cone

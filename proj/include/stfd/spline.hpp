// Cubic spline interpolation with not-a-knot end conditions.
#pragma once

#include <Eigen/Core>

namespace stfd {

// Interpolating cubic spline through (x_i, y_i) with not-a-knot ends
// (third derivative continuous across the first and last interior knots),
// exact for cubic polynomials. Requires strictly increasing x and >= 4
// points. Evaluation outside [x_0, x_{n-1}] extrapolates the end cubics.
class CubicSpline {
public:
    CubicSpline(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

    double operator()(double x) const;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& points) const;

private:
    Eigen::VectorXd x_;
    Eigen::VectorXd y_;
    Eigen::VectorXd m_;  // second derivatives at knots
};

}  // namespace stfd

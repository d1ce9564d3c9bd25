#include "stfd/spline.hpp"

#include "stfd/types.hpp"

#include <algorithm>

namespace stfd {

CubicSpline::CubicSpline(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
    : x_(x), y_(y) {
    const Eigen::Index n = x.size();
    if (y.size() != n)
        throw Error(ErrorKind::ShapeMismatch, "spline: x and y sizes differ");
    if (n < 4)
        throw Error(ErrorKind::InvalidArgument, "spline: need at least 4 points");
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (!(x[i + 1] > x[i]))
            throw Error(ErrorKind::NonMonotoneTime, "spline: knots not strictly increasing");
    }

    // Second-derivative (moment) formulation. Interior continuity gives a
    // tridiagonal system for m_1..m_{n-2}; not-a-knot eliminates m_0 and
    // m_{n-1} via third-derivative continuity at x_1 and x_{n-2}:
    //   m_0 = m_1 - h_0 (m_2 - m_1) / h_1
    //   m_{n-1} = m_{n-2} + h_{n-2} (m_{n-2} - m_{n-3}) / h_{n-3}
    const Eigen::Index k = n - 2;  // unknowns m_1..m_{n-2}
    Eigen::VectorXd h(n - 1);
    for (Eigen::Index i = 0; i < n - 1; ++i) h[i] = x[i + 1] - x[i];

    Eigen::VectorXd sub(k), diag(k), sup(k), rhs(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const Eigen::Index i = r + 1;  // knot index
        sub[r] = h[i - 1] / 6.0;
        diag[r] = (h[i - 1] + h[i]) / 3.0;
        sup[r] = h[i] / 6.0;
        rhs[r] = (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1];
    }
    // Fold the not-a-knot substitutions into the first and last rows.
    diag[0] += sub[0] * (1.0 + h[0] / h[1]);
    sup[0] -= sub[0] * (h[0] / h[1]);
    diag[k - 1] += sup[k - 1] * (1.0 + h[n - 2] / h[n - 3]);
    sub[k - 1] -= sup[k - 1] * (h[n - 2] / h[n - 3]);

    // Thomas algorithm.
    for (Eigen::Index r = 1; r < k; ++r) {
        const double w = sub[r] / diag[r - 1];
        diag[r] -= w * sup[r - 1];
        rhs[r] -= w * rhs[r - 1];
    }
    Eigen::VectorXd sol(k);
    sol[k - 1] = rhs[k - 1] / diag[k - 1];
    for (Eigen::Index r = k - 2; r >= 0; --r)
        sol[r] = (rhs[r] - sup[r] * sol[r + 1]) / diag[r];

    m_.resize(n);
    m_.segment(1, k) = sol;
    m_[0] = m_[1] - h[0] * (m_[2] - m_[1]) / h[1];
    m_[n - 1] = m_[n - 2] + h[n - 2] * (m_[n - 2] - m_[n - 3]) / h[n - 3];
}

double CubicSpline::operator()(double x) const {
    const Eigen::Index n = x_.size();
    const double* begin = x_.data();
    Eigen::Index i = std::upper_bound(begin, begin + n, x) - begin - 1;
    i = std::clamp<Eigen::Index>(i, 0, n - 2);

    const double h = x_[i + 1] - x_[i];
    const double u = x_[i + 1] - x;
    const double v = x - x_[i];
    return m_[i] * u * u * u / (6.0 * h) + m_[i + 1] * v * v * v / (6.0 * h) +
           (y_[i] / h - m_[i] * h / 6.0) * u + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * v;
}

Eigen::VectorXd CubicSpline::evaluate(const Eigen::VectorXd& points) const {
    Eigen::VectorXd out(points.size());
    for (Eigen::Index i = 0; i < points.size(); ++i) out[i] = (*this)(points[i]);
    return out;
}

}  // namespace stfd

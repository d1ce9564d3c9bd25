#include "stfd/group_sparse.hpp"

#include "stfd/fft.hpp"
#include "stfd/robust.hpp"

#include <cmath>

namespace stfd {

double group_norm(const MatrixXcd& x) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) sum += x.row(r).norm();
    return sum;
}

MatrixXcd group_shrink(const MatrixXcd& v, double threshold) {
    if (threshold < 0.0)
        throw Error(ErrorKind::InvalidArgument, "group_shrink: threshold must be >= 0");
    MatrixXcd out(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double nrm = v.row(r).norm();
        if (nrm > threshold)
            out.row(r) = v.row(r) * ((nrm - threshold) / nrm);
        else
            out.row(r).setZero();
    }
    return out;
}

MatrixXcd fourier_synthesis(const MatrixXcd& coeffs) {
    const int n = static_cast<int>(coeffs.rows());
    if (n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "fourier_synthesis: N_b must be even");
    FftEngine fft(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    MatrixXcd out(n, coeffs.cols());
    for (Eigen::Index c = 0; c < coeffs.cols(); ++c)
        out.col(c) = fft.inverse(coeffs.col(c)) * scale;
    return out;
}

MatrixXcd fourier_analysis(const MatrixXcd& grid_values) {
    const int n = static_cast<int>(grid_values.rows());
    if (n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "fourier_analysis: N_b must be even");
    FftEngine fft(n);
    const double scale = std::sqrt(static_cast<double>(n));
    MatrixXcd out(n, grid_values.cols());
    for (Eigen::Index c = 0; c < grid_values.cols(); ++c)
        out.col(c) = fft.forward(VectorXcd(grid_values.col(c))) * scale;
    return out;
}

namespace {

struct AlmWork {
    GroupCoefficients gc;
    MatrixXd z_bar;
};

// Shared three-block iteration; the plain extension is the robust one with
// the outlier block disabled.
AlmWork run_alm(const MatrixXd& f_observed, const ThetaGrid& grid, const AlmConfig& config,
                bool with_outliers) {
    const int n_b = grid.n_points;
    const int n_obs = static_cast<int>(f_observed.rows());
    const Eigen::Index m = f_observed.cols();
    if (m < 1) throw Error(ErrorKind::ShapeMismatch, "extend: need at least one signal column");
    if (n_obs < 1 || n_obs > n_b)
        throw Error(ErrorKind::ShapeMismatch, "extend: observed rows outside grid");
    if (config.gamma <= 0.0) throw Error(ErrorKind::InvalidArgument, "extend: gamma must be > 0");

    AlmWork work;
    GroupCoefficients& gc = work.gc;
    gc.n_observed = n_obs;
    gc.F_bar = MatrixXd::Zero(n_b, m);
    gc.F_bar.topRows(n_obs) = f_observed;
    gc.Y_bar = MatrixXcd::Zero(n_b, m);
    gc.Q = MatrixXcd::Zero(n_b, m);
    work.z_bar = MatrixXd::Zero(n_b, m);

    const double gamma = config.gamma;
    const double f_norm = gc.F_bar.norm();
    const double tol = config.tol_rel * f_norm;
    const MatrixXcd f_bar_c = gc.F_bar.cast<std::complex<double>>();

    MatrixXcd synth = MatrixXcd::Zero(n_b, m);
    if (f_norm == 0.0) {
        gc.X = MatrixXcd::Zero(n_b, m);
        gc.iterations = 1;
        gc.converged = true;
        gc.constraint_residual_rel = 0.0;
        return work;
    }

    for (int k = 0; k < config.max_iters; ++k) {
        MatrixXcd arg = gc.Y_bar + f_bar_c + gc.Q / gamma;
        if (with_outliers) arg -= work.z_bar.cast<std::complex<double>>();
        gc.X = group_shrink(fourier_analysis(arg), 1.0 / gamma);
        synth = fourier_synthesis(gc.X);

        gc.Y_bar = synth - f_bar_c - gc.Q / gamma;
        if (with_outliers) gc.Y_bar += work.z_bar.cast<std::complex<double>>();
        gc.Y_bar.topRows(n_obs).setZero();

        if (with_outliers && !config.disable_outliers) {
            const MatrixXd z_arg = (gc.Y_bar + f_bar_c + gc.Q / gamma - synth).real();
            work.z_bar = scalar_shrink(z_arg, 1.0 / gamma);
            work.z_bar.bottomRows(n_b - n_obs).setZero();
        }

        MatrixXcd q_next;
        if (config.paper_q_update) {
            q_next = gc.Q + gamma * (work.z_bar.cast<std::complex<double>>() - synth + f_bar_c);
        } else {
            q_next = gc.Q + gamma * (gc.Y_bar - work.z_bar.cast<std::complex<double>>() -
                                     synth + f_bar_c);
        }
        const double dq = (q_next - gc.Q).norm();
        gc.Q = q_next;
        gc.iterations = k + 1;
        if (dq <= tol) {
            gc.converged = true;
            break;
        }
    }

    MatrixXcd misfit = synth.topRows(n_obs) - f_bar_c.topRows(n_obs);
    if (with_outliers) misfit += work.z_bar.topRows(n_obs).cast<std::complex<double>>();
    gc.constraint_residual_rel = misfit.norm() / f_norm;
    return work;
}

}  // namespace

GroupCoefficients extend(const MatrixXd& f_observed, const ThetaGrid& grid,
                         const AlmConfig& config) {
    AlmWork work = run_alm(f_observed, grid, config, /*with_outliers=*/false);
    if (!work.gc.converged && config.throw_on_max_iters)
        throw MaxItersError("extend: ALM hit max_iters, constraint residual " +
                                std::to_string(work.gc.constraint_residual_rel),
                            work.gc);
    return work.gc;
}

RobustState extend_robust(const MatrixXd& f_observed, const ThetaGrid& grid,
                          const AlmConfig& config) {
    AlmWork work = run_alm(f_observed, grid, config, /*with_outliers=*/true);
    RobustState state{std::move(work.gc), std::move(work.z_bar)};
    if (!state.coeffs.converged && config.throw_on_max_iters)
        throw RobustMaxItersError("extend_robust: ALM hit max_iters, constraint residual " +
                                      std::to_string(state.coeffs.constraint_residual_rel),
                                  state);
    return state;
}

}  // namespace stfd

#include "stfd/gn_solver.hpp"

#include "stfd/fft.hpp"

#include <algorithm>
#include <cmath>

namespace stfd {

double GnConfig::resolved_epsilon0(Eigen::Index n_samples) const {
    return epsilon_0 > 0.0 ? epsilon_0 : 1e-6 * std::sqrt(static_cast<double>(n_samples));
}

double GnConfig::resolved_eta_step() const {
    return eta_step > 0.0 ? eta_step : resolved_eta_max() / 8.0;
}

double GnConfig::resolved_eta_max() const {
    return eta_max > 0.0 ? std::min(eta_max, lambda) : lambda;
}

namespace {

// Rotate carrier-frame envelopes (relative to cos/sin(theta - theta0)) into
// the theta frame: a cos(theta) + b sin(theta) == A cos(theta - theta0) +
// B sin(theta - theta0).
void rotate_envelopes(double theta0, VectorXd& a, VectorXd& b) {
    const double c = std::cos(theta0);
    const double s = std::sin(theta0);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double big_a = a[i];
        const double big_b = b[i];
        a[i] = big_a * c - big_b * s;
        b[i] = big_a * s + big_b * c;
    }
}

EnvelopePair envelope_step_periodic(const MatrixXd& residual_rows, const VectorXd& times,
                                    const PhaseFunction& phase, const FilterSpec& filter) {
    const Eigen::Index m = residual_rows.rows();
    const Eigen::Index n = residual_rows.cols();
    const int n_grid = static_cast<int>(n) + static_cast<int>(n % 2);
    const ThetaGrid grid = ThetaGrid::periodic(phase, n_grid);

    EnvelopePair out;
    out.a.resize(m, n);
    out.b.resize(m, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        const VectorXd r_theta = resample_to_theta(residual_rows.row(j), times, phase, grid);
        const EnvelopeTheta env = demodulate(r_theta, grid, grid.period_factor, filter);
        VectorXd a = resample_to_time(env.a, grid, phase, times, /*periodic_wrap=*/true);
        VectorXd b = resample_to_time(env.b, grid, phase, times, /*periodic_wrap=*/true);
        rotate_envelopes(grid.theta0, a, b);
        out.a.row(j) = a;
        out.b.row(j) = b;
    }
    return out;
}

EnvelopePair envelope_step_extended(const MatrixXd& residual_rows, const VectorXd& times,
                                    const PhaseFunction& phase, const FilterSpec& filter,
                                    bool robust, const AlmConfig& alm, int* alm_failures,
                                    MatrixXd* outliers) {
    const Eigen::Index m = residual_rows.rows();
    const Eigen::Index n = residual_rows.cols();
    const ThetaGrid grid = ThetaGrid::extended(phase, static_cast<int>(n));
    const int n_obs = grid.observed_points(phase.span());

    MatrixXd f_observed(n_obs, m);
    for (Eigen::Index j = 0; j < m; ++j)
        f_observed.col(j) = resample_to_theta(residual_rows.row(j), times, phase, grid);

    MatrixXcd coeffs;
    if (robust) {
        RobustState state = extend_robust(f_observed, grid, alm);
        if (!state.coeffs.converged && alm_failures) ++*alm_failures;
        if (outliers) *outliers = state.Z();
        coeffs = std::move(state.coeffs.X);
    } else {
        GroupCoefficients gc = extend(f_observed, grid, alm);
        if (!gc.converged && alm_failures) ++*alm_failures;
        coeffs = std::move(gc.X);
    }

    // X holds unitary coefficients; demodulate_spectrum expects the
    // (1/N)-normalized convention.
    const double to_forward_norm = 1.0 / std::sqrt(static_cast<double>(grid.n_points));

    EnvelopePair out;
    out.a.resize(m, n);
    out.b.resize(m, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        const VectorXcd spectrum = coeffs.col(j) * to_forward_norm;
        const EnvelopeTheta env = demodulate_spectrum(spectrum, grid, grid.period_factor, filter);
        VectorXd a = resample_to_time(env.a, grid, phase, times, /*periodic_wrap=*/false);
        VectorXd b = resample_to_time(env.b, grid, phase, times, /*periodic_wrap=*/false);
        rotate_envelopes(grid.theta0, a, b);
        out.a.row(j) = a;
        out.b.row(j) = b;
    }
    return out;
}

}  // namespace

EnvelopePair envelope_step(const MatrixXd& residual_rows, const VectorXd& times,
                           const PhaseFunction& phase, SolveMode mode, const GnConfig& config,
                           const AlmConfig& alm, int* alm_failures, MatrixXd* outliers) {
    if (residual_rows.cols() != times.size() || phase.size() != times.size())
        throw Error(ErrorKind::ShapeMismatch, "envelope_step: shape mismatch");

    FilterSpec filter;
    filter.lambda = config.lambda;
    filter.normalize = true;
    filter.window = config.envelope_window;

    if (mode == SolveMode::periodic)
        return envelope_step_periodic(residual_rows, times, phase, filter);
    return envelope_step_extended(residual_rows, times, phase, filter,
                                  mode == SolveMode::robust, alm, alm_failures, outliers);
}

std::pair<VectorXd, VectorXd> envelope_step(const VectorXd& residual_row, const VectorXd& times,
                                            const PhaseFunction& phase, SolveMode mode,
                                            const GnConfig& config, const AlmConfig& alm) {
    const EnvelopePair pair =
        envelope_step(MatrixXd(residual_row.transpose()), times, phase, mode, config, alm);
    return {pair.a.row(0), pair.b.row(0)};
}

FrequencyUpdate frequency_update(const MatrixXd& a, const MatrixXd& b, const VectorXd& times,
                                 const GnConfig& config) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(ErrorKind::ShapeMismatch, "frequency_update: a/b shape mismatch");
    if (a.cols() != times.size())
        throw Error(ErrorKind::ShapeMismatch, "frequency_update: times length mismatch");

    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();

    FrequencyUpdate out;
    out.weights = a.array().square() + b.array().square();
    const double gamma_max = out.weights.maxCoeff();
    if (gamma_max <= 0.0) {
        // Amplitude-free input (e.g. a harmonic absent from the data):
        // no evidence, no update.
        out.delta_omega_per_signal = MatrixXd::Zero(m, n);
        out.delta_omega = VectorXd::Zero(n);
        return out;
    }
    const double eps_gamma = config.gamma_floor_rel * gamma_max;

    out.delta_omega_per_signal.resize(m, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        const VectorXd da = fd_derivative(a.row(j), times);
        const VectorXd db = fd_derivative(b.row(j), times);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double num = a(j, i) * db[i] - b(j, i) * da[i];
            out.delta_omega_per_signal(j, i) = num / (out.weights(j, i) + eps_gamma);
        }
    }

    out.delta_omega = VectorXd::Zero(n);
    // Threshold the per-signal average weight so duplicating rows does not
    // change which points are treated as amplitude-free. The average is
    // accumulated around the first row as pivot: deviations of identical
    // rows cancel exactly, so M copies of one signal reproduce the M = 1
    // update bit for bit.
    const double total_floor = eps_gamma * static_cast<double>(m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = out.weights.col(i).sum();
        if (total <= total_floor) continue;
        const double pivot = out.delta_omega_per_signal(0, i);
        double correction = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
            correction += out.weights(j, i) * (out.delta_omega_per_signal(j, i) - pivot);
        out.delta_omega[i] = pivot + correction / total;
    }
    return out;
}

std::pair<PhaseFunction, double> phase_update(const PhaseFunction& phase,
                                              const VectorXd& delta_omega, double eta,
                                              const VectorXd& times, const GnConfig& config) {
    const Eigen::Index n = phase.size();
    if (delta_omega.size() != n || times.size() != n)
        throw Error(ErrorKind::ShapeMismatch, "phase_update: length mismatch");

    const VectorXd dtheta_prime = project_lowfreq(delta_omega, phase, eta);

    // Trapezoid integral of the projected correction from t = 0.
    VectorXd dtheta(n);
    dtheta[0] = 0.0;
    for (Eigen::Index i = 1; i < n; ++i)
        dtheta[i] = dtheta[i - 1] +
                    0.5 * (dtheta_prime[i] + dtheta_prime[i - 1]) * (times[i] - times[i - 1]);

    // (theta - alpha * dtheta) is affine in alpha on each interval, so the
    // maximal monotonicity-preserving step is the smallest positive ratio.
    double beta = 1.0;
    bool binding = false;
    const VectorXd& theta = phase.theta();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double g = theta[i + 1] - theta[i];
        const double d = dtheta[i + 1] - dtheta[i];
        if (d > 0.0 && g < beta * d) {
            beta = g / d;
            binding = true;
        }
    }
    // Back the binding step off infinitesimally so the new phase stays
    // strictly increasing (flat intervals would break spline resampling).
    double beta_eff = binding ? beta * (1.0 - 1e-9) : beta;
    beta_eff *= std::clamp(config.relaxation, 0.0, 1.0);

    return {PhaseFunction(theta - beta_eff * dtheta), beta_eff};
}

ImfComponent refine_component(const MatrixXd& residual_rows, const VectorXd& times,
                              const PhaseFunction& initial_phase, SolveMode mode,
                              const GnConfig& config, const AlmConfig& alm, ComponentDiag* diag) {
    const Eigen::Index n = residual_rows.cols();
    if (config.lambda <= 0.0 || config.lambda > 0.5)
        throw Error(ErrorKind::InvalidArgument, "refine_component: lambda must be in (0, 1/2]");
    const double eps0 = config.resolved_epsilon0(n);
    const double d_eta = config.resolved_eta_step();
    if (!(eps0 > 0.0) || d_eta > config.lambda)
        throw Error(ErrorKind::InvalidArgument, "refine_component: invalid tolerances");

    if (initial_phase.cycle_count() < 1)
        throw Error(ErrorKind::DegeneratePhase,
                    "refine_component: initial phase has no full oscillation");
    PhaseFunction phase = initial_phase;
    EnvelopePair env;
    int alm_failures = 0;

    const double eta_max = config.resolved_eta_max();
    double eta = 0.0;
    bool last_stage = false;
    double update_norm = 0.0;
    while (!last_stage) {
        if (eta >= eta_max * (1.0 - 1e-9)) {
            eta = eta_max;
            last_stage = true;
        }
        EtaStageDiag stage;
        stage.eta = eta;
        int iters = 0;
        for (; iters < config.max_inner_iters; ++iters) {
            env = envelope_step(residual_rows, times, phase, mode, config, alm, &alm_failures);
            const FrequencyUpdate update = frequency_update(env.a, env.b, times, config);
            auto [next_phase, beta] = phase_update(phase, update.delta_omega, eta, times, config);
            update_norm = (next_phase.theta() - phase.theta()).norm();
            phase = std::move(next_phase);
            stage.min_beta = std::min(stage.min_beta, beta);
            if (update_norm <= eps0) {
                ++iters;
                break;
            }
        }
        stage.iterations = iters;
        stage.final_update_norm = update_norm;
        if (diag) {
            diag->stages.push_back(stage);
            diag->total_iterations += iters;
        }
        if (last_stage && iters >= config.max_inner_iters && update_norm > 100.0 * eps0)
            throw NoConvergenceError("refine_component: inner loop exhausted at final eta, "
                                     "update norm " +
                                     std::to_string(update_norm));
        eta += d_eta;
    }

    env = envelope_step(residual_rows, times, phase, mode, config, alm, &alm_failures);

    if (config.fold_phase_offset) {
        // A constant quadrature offset is indistinguishable from a phase
        // shift; fold the Gamma-weighted consensus offset into theta so the
        // reported quadrature envelope vanishes for in-phase ensembles.
        const MatrixXd gamma = env.a.array().square() + env.b.array().square();
        const double wa = (gamma.array() * env.a.array()).sum();
        const double wb = (gamma.array() * env.b.array()).sum();
        const double offset = std::atan2(wb, wa);
        if (std::abs(offset) > 1e-14) {
            phase = PhaseFunction(phase.theta().array() - offset);
            env = envelope_step(residual_rows, times, phase, mode, config, alm, &alm_failures);
        }
        if (diag) diag->phase_offset_folded = offset;
    }

    if (diag) {
        diag->final_update_norm = update_norm;
        diag->alm_unconverged_calls = alm_failures;
    }

    ImfComponent component{phase, env.a, env.b,
                           MatrixXd(env.a.array().square() + env.b.array().square())};
    return component;
}

}  // namespace stfd

#include "stfd/cable.hpp"

#include "stfd/fft.hpp"
#include "stfd/robust.hpp"
#include "stfd/spline.hpp"

#include <algorithm>
#include <cmath>

namespace stfd {

VectorXd tension_from_frequency(const VectorXd& omega_n, int n, const CableSpec& spec) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "tension: mode index must be >= 1");
    if (spec.mass_density <= 0.0 || spec.length <= 0.0)
        throw Error(ErrorKind::InvalidArgument, "tension: mass density and length must be > 0");
    if ((omega_n.array() <= 0.0).any())
        throw Error(ErrorKind::NonPositiveFrequency, "tension: omega must be positive pointwise");

    const double factor = 4.0 * spec.mass_density * spec.length * spec.length /
                          (4.0 * M_PI * M_PI * static_cast<double>(n) * static_cast<double>(n));
    return factor * omega_n.array().square();
}

namespace {

// Fundamental bin via a harmonic-comb score on the mean periodogram: the
// candidate maximizing the summed power at its mode multiples. Ties go to
// the larger candidate (divisors of the true fundamental score the same
// when higher-harmonic bins are empty).
long guess_fundamental_bin(const MatrixXd& rows, const VectorXd& times,
                           const std::vector<int>& modes) {
    const int n = static_cast<int>(times.size());
    const VectorXd uniform =
        VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) / n);
    FftEngine fft(n);
    VectorXd power = VectorXd::Zero(n / 2 + 1);
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        const CubicSpline spline(times, rows.row(j));
        const VectorXcd spectrum = fft.forward(spline.evaluate(uniform));
        for (int k = 0; k <= n / 2; ++k) power[k] += std::norm(spectrum[k]);
    }

    const int n_max = *std::max_element(modes.begin(), modes.end());
    const int l_max = (n / 2 - 1) / n_max;
    long best = 1;
    double best_score = -1.0;
    for (int l = 1; l <= l_max; ++l) {
        double score = 0.0;
        for (int mode : modes) {
            // One bin of slack for chirping harmonics.
            double peak = 0.0;
            for (int k = std::max(1, mode * l - 1); k <= std::min(n / 2, mode * l + 1); ++k)
                peak = std::max(peak, power[k]);
            score += peak;
        }
        if (score >= best_score) {
            best_score = score;
            best = l;
        }
    }
    // Local refinement on the raw periodogram.
    for (long k = std::max<long>(1, best - 1); k <= std::min<long>(n / 2, best + 1); ++k)
        if (power[k] > power[best]) best = k;
    return best;
}

// Per-mode envelopes on a shared grid of the fundamental phase. Mode n is
// the carrier n * grid.period_factor; since every harmonic of theta is an
// exact integer mode on that grid, no cross-harmonic leakage occurs. The
// band is capped at half the harmonic spacing.
struct ModeEnvelopes {
    std::vector<EnvelopePair> per_mode;
};

ModeEnvelopes mode_envelope_step(const MatrixXd& values, const VectorXd& times,
                                 const PhaseFunction& phase, const std::vector<int>& modes,
                                 SolveMode solve_mode, const GnConfig& gn, const AlmConfig& alm,
                                 int* alm_failures) {
    const Eigen::Index m = values.rows();
    const Eigen::Index n = values.cols();
    const std::size_t n_modes = modes.size();
    const bool periodic = solve_mode == SolveMode::periodic;

    ThetaGrid grid;
    std::vector<VectorXcd> spectra(m);
    if (periodic) {
        const int n_grid = static_cast<int>(n) + static_cast<int>(n % 2);
        grid = ThetaGrid::periodic(phase, n_grid);
        FftEngine fft(grid.n_points);
        for (Eigen::Index j = 0; j < m; ++j)
            spectra[j] = fft.forward(resample_to_theta(values.row(j), times, phase, grid));
    } else {
        grid = ThetaGrid::extended(phase, static_cast<int>(n));
        const int n_obs = grid.observed_points(phase.span());
        MatrixXd f_observed(n_obs, m);
        for (Eigen::Index j = 0; j < m; ++j)
            f_observed.col(j) = resample_to_theta(values.row(j), times, phase, grid);
        MatrixXcd coeffs;
        if (solve_mode == SolveMode::robust) {
            RobustState state = extend_robust(f_observed, grid, alm);
            if (!state.coeffs.converged && alm_failures) ++*alm_failures;
            coeffs = std::move(state.coeffs.X);
        } else {
            GroupCoefficients gc = extend(f_observed, grid, alm);
            if (!gc.converged && alm_failures) ++*alm_failures;
            coeffs = std::move(gc.X);
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(grid.n_points));
        for (Eigen::Index j = 0; j < m; ++j) spectra[j] = coeffs.col(j) * scale;
    }

    ModeEnvelopes out;
    out.per_mode.resize(n_modes);
    for (std::size_t q = 0; q < n_modes; ++q) {
        const int mode = modes[q];
        FilterSpec filter;
        filter.lambda = std::min(gn.lambda, 0.5 / static_cast<double>(mode));
        filter.normalize = true;
        filter.window = gn.envelope_window;
        const long carrier = static_cast<long>(mode) * grid.period_factor;

        EnvelopePair& pair = out.per_mode[q];
        pair.a.resize(m, n);
        pair.b.resize(m, n);
        const double rot_c = std::cos(mode * grid.theta0);
        const double rot_s = std::sin(mode * grid.theta0);
        for (Eigen::Index j = 0; j < m; ++j) {
            const EnvelopeTheta env = demodulate_spectrum(spectra[j], grid, carrier, filter);
            const VectorXd big_a = resample_to_time(env.a, grid, phase, times, periodic);
            const VectorXd big_b = resample_to_time(env.b, grid, phase, times, periodic);
            // Rotate from the carrier frame of cos(n(theta - theta0)).
            pair.a.row(j) = big_a * rot_c - big_b * rot_s;
            pair.b.row(j) = big_a * rot_s + big_b * rot_c;
        }
    }
    return out;
}

}  // namespace

CableResult harmonic_fuse(const SignalEnsemble& input, const CableSpec& spec,
                          const DriverConfig& config) {
    if (spec.modes.empty())
        throw Error(ErrorKind::InvalidArgument, "harmonic_fuse: modes list is empty");
    for (int n : spec.modes)
        if (n < 1) throw Error(ErrorKind::InvalidArgument, "harmonic_fuse: modes must be >= 1");

    SignalEnsemble ensemble = input;
    CableResult result;
    if (ensemble.has_missing()) ensemble = prefill_missing(ensemble);

    const VectorXd& times = ensemble.times;
    const Eigen::Index n_samples = ensemble.n_samples();
    const Eigen::Index m = ensemble.n_signals();
    const std::size_t n_modes = spec.modes.size();

    PhaseFunction phase = [&]() {
        if (!config.initial_phases.empty()) return PhaseFunction(config.initial_phases[0]);
        const long bin = guess_fundamental_bin(ensemble.values, times, spec.modes);
        return PhaseFunction(2.0 * M_PI * bin * times);
    }();

    const GnConfig& gn = config.gn;
    const double eps0 = gn.resolved_epsilon0(n_samples);
    const double d_eta = gn.resolved_eta_step();
    const double eta_max = gn.resolved_eta_max();

    int alm_failures = 0;
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
        for (; iters < gn.max_inner_iters; ++iters) {
            const ModeEnvelopes envs = mode_envelope_step(
                ensemble.values, times, phase, spec.modes, config.mode, gn, config.alm,
                &alm_failures);

            // Pool the rescaled frequency corrections of every mode with
            // Gamma weights before the shared phase update.
            VectorXd numer = VectorXd::Zero(n_samples);
            VectorXd denom = VectorXd::Zero(n_samples);
            double gamma_max = 0.0;
            std::vector<FrequencyUpdate> updates(n_modes);
            for (std::size_t q = 0; q < n_modes; ++q) {
                updates[q] =
                    frequency_update(envs.per_mode[q].a, envs.per_mode[q].b, times, gn);
                gamma_max = std::max(gamma_max, updates[q].weights.maxCoeff());
            }
            for (std::size_t q = 0; q < n_modes; ++q) {
                const double inv_mode = 1.0 / static_cast<double>(spec.modes[q]);
                for (Eigen::Index i = 0; i < n_samples; ++i) {
                    for (Eigen::Index j = 0; j < m; ++j) {
                        const double w = updates[q].weights(j, i);
                        numer[i] += w * updates[q].delta_omega_per_signal(j, i) * inv_mode;
                        denom[i] += w;
                    }
                }
            }
            VectorXd delta_omega = VectorXd::Zero(n_samples);
            const double floor =
                gn.gamma_floor_rel * gamma_max * static_cast<double>(m) * n_modes;
            for (Eigen::Index i = 0; i < n_samples; ++i)
                if (denom[i] > floor) delta_omega[i] = numer[i] / denom[i];

            auto [next_phase, beta] = phase_update(phase, delta_omega, eta, times, gn);
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
        result.diag.stages.push_back(stage);
        result.diag.total_iterations += iters;
        if (last_stage && iters >= gn.max_inner_iters && update_norm > 100.0 * eps0)
            throw NoConvergenceError("harmonic_fuse: inner loop exhausted at final eta");
        eta += d_eta;
    }
    result.diag.alm_unconverged_calls = alm_failures;

    result.theta = phase.theta();
    result.omega1 = fd_derivative(phase.theta(), times);
    result.force = tension_from_frequency(result.omega1, 1, spec);
    return result;
}

}  // namespace stfd

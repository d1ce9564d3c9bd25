#include "stfd/driver.hpp"

#include "stfd/fft.hpp"
#include "stfd/robust.hpp"
#include "stfd/spline.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stfd {

namespace {

// Detection spectrum over the ensemble, on a right-open uniform resampling
// of [0, 1] so that bin k is the tone cos(2*pi*k*t). Signals share their
// phases, so the coherent row mean keeps the line power while dividing the
// noise floor by M; the incoherent mean (scaled to the same floor) is added
// so sign-flipped envelopes cannot cancel the detection entirely.
VectorXd mean_periodogram(const MatrixXd& rows, const VectorXd& times, int n_points) {
    const Eigen::Index m = rows.rows();
    const VectorXd uniform =
        VectorXd::LinSpaced(n_points, 0.0, static_cast<double>(n_points - 1) / n_points);
    FftEngine fft(n_points);
    VectorXd incoherent = VectorXd::Zero(n_points / 2 + 1);
    VectorXcd mean_spectrum = VectorXcd::Zero(n_points);
    for (Eigen::Index j = 0; j < m; ++j) {
        const CubicSpline spline(times, rows.row(j));
        const VectorXcd spectrum = fft.forward(spline.evaluate(uniform));
        mean_spectrum += spectrum;
        for (int k = 0; k <= n_points / 2; ++k) incoherent[k] += std::norm(spectrum[k]);
    }
    mean_spectrum /= static_cast<double>(m);
    incoherent /= static_cast<double>(m * m);

    VectorXd power(n_points / 2 + 1);
    for (int k = 0; k <= n_points / 2; ++k)
        power[k] = std::norm(mean_spectrum[k]) + incoherent[k];
    return power;
}

}  // namespace

PhaseFunction initial_phase_guess(const MatrixXd& residual_rows, const VectorXd& times,
                                  int smooth_width, long* bin_out) {
    const int n = static_cast<int>(times.size());
    const double scale = residual_rows.cwiseAbs().maxCoeff();
    if (scale < 1e-300)
        throw Error(ErrorKind::ZeroResidual, "initial_phase_guess: residual is zero");

    const VectorXd power = mean_periodogram(residual_rows, times, n);
    const int n_bins = static_cast<int>(power.size());
    const int half = std::max(1, (smooth_width > 0 ? smooth_width : n / 16) / 2);

    // Box smoothing spreads narrow peaks but lets broad chirp bands beat
    // isolated noise bins; DC is excluded throughout.
    VectorXd smooth = VectorXd::Zero(n_bins);
    for (int k = 1; k < n_bins; ++k) {
        double sum = 0.0;
        int count = 0;
        for (int i = std::max(1, k - half); i <= std::min(n_bins - 1, k + half); ++i) {
            sum += power[i];
            ++count;
        }
        smooth[k] = sum / count;
    }

    // Subtract the broadband noise floor (median of the smoothed spectrum)
    // so the dominant lobe stays localized even when the floor exceeds half
    // of the peak.
    std::vector<double> sorted(smooth.data() + 1, smooth.data() + n_bins);
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double floor_level = sorted[sorted.size() / 2];
    VectorXd lobe_power = (smooth.array() - floor_level).cwiseMax(0.0);
    lobe_power[0] = 0.0;

    int center = 1;
    for (int k = 2; k < n_bins; ++k)
        if (lobe_power[k] > lobe_power[center]) center = k;

    // Centroid of the half-power lobe around the smoothed maximum, then the
    // raw argmax in a window of the original (unsmoothed) periodogram.
    int lo = center, hi = center;
    while (lo > 1 && lobe_power[lo - 1] >= 0.5 * lobe_power[center]) --lo;
    while (hi < n_bins - 1 && lobe_power[hi + 1] >= 0.5 * lobe_power[center]) ++hi;
    double weight = 0.0, moment = 0.0;
    for (int k = lo; k <= hi; ++k) {
        weight += lobe_power[k];
        moment += lobe_power[k] * k;
    }
    const int centroid = static_cast<int>(std::lround(moment / weight));

    int best = std::max(1, centroid - half);
    for (int k = best; k <= std::min(n_bins - 1, centroid + half); ++k)
        if (power[k] > power[best]) best = k;

    if (bin_out) *bin_out = best;
    return PhaseFunction(2.0 * M_PI * best * times);
}

DecompositionResult decompose(const SignalEnsemble& input, const DriverConfig& config) {
    if (config.residual_tol <= 0.0 || config.max_components < 1)
        throw Error(ErrorKind::InvalidArgument, "decompose: invalid driver config");

    SignalEnsemble ensemble = input;
    DecompositionResult result;
    if (ensemble.has_missing()) {
        ensemble = prefill_missing(ensemble);
        result.diagnostics.prefilled_missing = true;
    }

    const Eigen::Index m = ensemble.n_signals();
    VectorXd row_scales(m);
    for (Eigen::Index j = 0; j < m; ++j)
        row_scales[j] = std::max(ensemble.values.row(j).norm(), 1e-300);

    auto max_relative_norm = [&](const MatrixXd& rows) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
            worst = std::max(worst, rows.row(j).norm() / row_scales[j]);
        return worst;
    };

    MatrixXd residual = ensemble.values;
    const double input_energy = std::max(residual.squaredNorm(), 1e-300);
    result.diagnostics.residual_norms.push_back(max_relative_norm(residual));

    while (result.n_components() < config.max_components) {
        if (max_relative_norm(residual) <= config.residual_tol) break;

        ComponentDiag diag;
        PhaseFunction guess = [&]() {
            const std::size_t k = result.components.size();
            if (k < config.initial_phases.size()) return PhaseFunction(config.initial_phases[k]);
            return initial_phase_guess(residual, ensemble.times, config.guess_smooth_width,
                                       &diag.initial_guess_bin);
        }();

        std::optional<ImfComponent> refined;
        try {
            refined = refine_component(residual, ensemble.times, guess, config.mode, config.gn,
                                       config.alm, &diag);
        } catch (const NoConvergenceError& e) {
            result.residuals = residual;
            throw NoConvergenceError(e.what(), std::move(result));
        } catch (const Error& e) {
            // A phase collapsing below one oscillation mid-iteration means the
            // candidate was a trend; stop extracting.
            if (e.kind() != ErrorKind::DegeneratePhase) throw;
            result.diagnostics.rejected_trailing_component = true;
            result.diagnostics.components.push_back(diag);
            break;
        }
        ImfComponent component = std::move(*refined);

        // Reject trend-like or ineffective components; extraction stops there.
        const MatrixXd contribution =
            component.envelopes_a * VectorXd(component.phase.theta().array().cos()).asDiagonal();
        // Energy removed as a fraction of the input energy: trailing noise
        // ridges shave a share of an already-tiny residual and fall below
        // the cutoff, real modes do not.
        const MatrixXd next_residual = residual - contribution;
        const double before = residual.squaredNorm();
        const double after = next_residual.squaredNorm();
        diag.energy_reduction = (before - after) / input_energy;

        if (component.phase.cycle_count() < 1 ||
            diag.energy_reduction < config.min_energy_reduction ||
            max_relative_norm(next_residual) > max_relative_norm(residual)) {
            result.diagnostics.rejected_trailing_component = true;
            result.diagnostics.components.push_back(diag);
            break;
        }

        residual = next_residual;
        result.components.push_back(std::move(component));
        result.diagnostics.components.push_back(diag);
        result.diagnostics.residual_norms.push_back(max_relative_norm(residual));
    }

    if (result.n_components() >= config.max_components &&
        max_relative_norm(residual) > config.residual_tol)
        result.diagnostics.component_cap_reached = true;

    result.residuals = residual;
    return result;
}

}  // namespace stfd

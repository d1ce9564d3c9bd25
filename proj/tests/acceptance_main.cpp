// Acceptance suite: runs every shipping criterion at its pinned tolerance
// and prints one PASS/FAIL line per criterion.
#include "stfd/cable.hpp"
#include "stfd/driver.hpp"
#include "stfd/fft.hpp"
#include "stfd/generators.hpp"
#include "stfd/gn_solver.hpp"
#include "stfd/io.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace stfd;
using test_util::interior_max_error;
using test_util::interior_rel_error;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// Recovered instantaneous frequency (Hz) of the first component.
VectorXd first_component_if_hz(const DecompositionResult& result, const VectorXd& times) {
    return fd_derivative(result.components.at(0).phase.theta(), times) / (2.0 * M_PI);
}

DriverConfig noisy_chirp_config() {
    DriverConfig config;
    config.mode = SolveMode::periodic;
    config.max_components = 1;
    config.residual_tol = 1e-6;  // unreachable under noise; the cap stops extraction
    config.gn.epsilon_0 = 0.5;   // phase-update floor under heavy noise
    config.gn.max_inner_iters = 30;
    // At -17 dB per sample the full-band sharp projection feeds too much
    // band-edge noise into the frequency updates: use the tapered window,
    // cap the phase-update smoothness, and take damped steps.
    config.gn.envelope_window = FilterSpec::Window::cosine;
    config.gn.eta_max = 0.05;
    config.gn.relaxation = 0.5;
    return config;
}

// ---------------------------------------------------------------- criterion 1
Outcome criterion_noiseless_chirp() {
    const SignalEnsemble ensemble = generate_example1(1, 512, 1, 0.0);
    DriverConfig config;
    config.mode = SolveMode::periodic;
    config.max_components = 1;
    config.residual_tol = 1e-6;

    const double t0 = now_seconds();
    const DecompositionResult result = decompose(ensemble, config);
    const double elapsed = now_seconds() - t0;

    if (result.n_components() != 1) return {false, "no component extracted"};
    const VectorXd if_hz = first_component_if_hz(result, ensemble.times);
    const double err =
        interior_rel_error(if_hz, example1_if_hz(ensemble.times), ensemble.times);
    const bool pass = err <= 1e-2 && elapsed <= 10.0;
    return {pass, fmt("IF rel l2 error %.3e (tol 1e-2), runtime %.2fs (limit 10s)", err, elapsed)};
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion_joint_vs_separate() {
    const int n_seeds = 10;
    int joint_wins = 0;
    double joint_err_sum = 0.0;
    double worst_joint = 0.0;

    for (int seed = 0; seed < n_seeds; ++seed) {
        const SignalEnsemble ensemble = generate_example1(1000 + seed, 512, 10, 5.0);
        const VectorXd truth = example1_if_hz(ensemble.times);

        auto recover_error = [&](const MatrixXd& rows) {
            SignalEnsemble sub = ensemble;
            sub.values = rows;
            sub.mask = BoolMatrix::Constant(rows.rows(), rows.cols(), true);
            try {
                const DecompositionResult r = decompose(sub, noisy_chirp_config());
                if (r.n_components() < 1) return 1e9;
                return interior_rel_error(first_component_if_hz(r, ensemble.times), truth,
                                          ensemble.times);
            } catch (const Error&) {
                return 1e9;
            }
        };

        const double joint_err = recover_error(ensemble.values);
        joint_err_sum += joint_err;
        worst_joint = std::max(worst_joint, joint_err);

        std::vector<double> separate;
        for (int j = 0; j < 10; ++j) separate.push_back(recover_error(ensemble.values.row(j)));
        std::nth_element(separate.begin(), separate.begin() + 4, separate.end());
        std::nth_element(separate.begin() + 4, separate.begin() + 5, separate.end());
        const double median = 0.5 * (separate[4] + separate[5]);

        if (joint_err < median) ++joint_wins;
    }

    const double joint_mean = joint_err_sum / n_seeds;
    const bool pass = joint_mean <= 0.15 && joint_wins >= 9;
    return {pass, fmt("joint IF error mean %.3f worst %.3f (tol 0.15), joint beats separate "
                      "median in %d/10 seeds (need >= 9)",
                      joint_mean, worst_joint, joint_wins)};
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion_two_component() {
    TwoChirpTruth truth;
    const SignalEnsemble ensemble = generate_two_chirp(1024, 3, &truth);
    DriverConfig config;
    config.residual_tol = 5e-3;
    config.max_components = 4;
    config.gn.epsilon_0 = 0.5;  // cross-talk floor between unseparated chirps

    const DecompositionResult result = decompose(ensemble, config);
    if (result.n_components() != 2)
        return {false, fmt("K = %d, expected 2", static_cast<int>(result.n_components()))};

    const VectorXd if1 = first_component_if_hz(result, ensemble.times);
    const VectorXd if2 =
        fd_derivative(result.components[1].phase.theta(), ensemble.times) / (2.0 * M_PI);
    const double err1 = interior_rel_error(if1, truth.if1_hz, ensemble.times);
    const double err2 = interior_rel_error(if2, truth.if2_hz, ensemble.times);

    double env_err = 0.0;
    for (int j = 0; j < 3; ++j) {
        env_err = std::max(env_err, interior_max_error(result.components[0].envelopes_a.row(j),
                                                       truth.env1.row(j), ensemble.times));
        env_err = std::max(env_err, interior_max_error(result.components[1].envelopes_a.row(j),
                                                       truth.env2.row(j), ensemble.times));
    }

    const bool pass = err1 <= 1e-2 && err2 <= 1e-2 && env_err <= 5e-2;
    return {pass, fmt("IF errors %.3e / %.3e (tol 1e-2), envelope max error %.3e (tol 5e-2)",
                      err1, err2, env_err)};
}

// ---------------------------------------------------------------- criterion 4
Outcome criterion_extension_oracle() {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    double worst_x = 0.0, worst_constraint = 0.0;

    for (int trial = 0; trial < 6; ++trial) {
        const int n_b = trial % 2 == 0 ? 96 : 128;
        const int m = 1 + trial % 3;
        const int n_obs = n_b / 2 + 5;

        // Random band-limited rows: conjugate-symmetric coefficients on low
        // modes, synthesized on the full grid, observed on the prefix.
        MatrixXcd coeffs = MatrixXcd::Zero(n_b, m);
        for (int k = 1; k <= 6; ++k) {
            for (int c = 0; c < m; ++c) {
                const std::complex<double> v(2.0 * amp(rng), 2.0 * amp(rng));
                coeffs(mode_index(k, n_b), c) = v;
                coeffs(mode_index(-k, n_b), c) = std::conj(v);
            }
        }
        const MatrixXd full = fourier_synthesis(coeffs).real();
        const MatrixXd observed = full.topRows(n_obs);

        ThetaGrid grid;
        grid.n_points = n_b;
        grid.period_factor = 4;
        grid.theta0 = 0.0;
        grid.dtheta = 2.0 * M_PI * grid.period_factor / n_b;
        grid.points = grid.dtheta * VectorXd::LinSpaced(n_b, 0, n_b - 1).array();

        // Row norms near the shrink threshold 1/gamma make the iteration
        // crawl; a larger gamma keeps the threshold well below the
        // coefficient scale so both solvers converge briskly.
        AlmConfig config;
        config.gamma = 5.0;
        config.max_iters = 20000;
        const GroupCoefficients fast = extend(observed, grid, config);
        const oracles::DenseAlmResult dense = oracles::dense_alm_extend(
            observed, n_b, config.gamma, config.tol_rel, config.max_iters);

        if (!fast.converged || !dense.converged) return {false, "solver did not converge"};
        worst_x = std::max(worst_x, (fast.X - dense.X).norm() / dense.X.norm());
        worst_constraint = std::max(worst_constraint, fast.constraint_residual_rel);
    }

    const bool pass = worst_x <= 1e-6 && worst_constraint <= 1e-5;
    return {pass, fmt("max X mismatch %.3e (tol 1e-6), max constraint residual %.3e (tol 1e-5)",
                      worst_x, worst_constraint)};
}

// ---------------------------------------------------------------- criterion 5
Outcome criterion_prox_suite() {
    std::mt19937 rng(55);
    std::uniform_real_distribution<double> tau_dist(0.05, 3.0);
    std::uniform_real_distribution<double> val(-4.0, 4.0);

    double worst_group = 0.0;
    int group_instances = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const MatrixXcd v = test_util::random_complex_matrix(4, 3, 9000 + trial);
        const double tau = tau_dist(rng);
        const MatrixXcd got = group_shrink(v, tau);
        for (int r = 0; r < 4; ++r) {
            const VectorXcd expected = oracles::group_prox_minimize(v.row(r), tau);
            worst_group = std::max(worst_group, (VectorXcd(got.row(r)) - expected).norm());
            ++group_instances;
        }
    }

    double worst_scalar = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        const double x = val(rng);
        const double tau = tau_dist(rng);
        worst_scalar =
            std::max(worst_scalar, std::abs(scalar_shrink(x, tau) -
                                            oracles::scalar_prox_minimize(x, tau)));
    }

    const MatrixXcd x = test_util::random_complex_matrix(128, 3, 4242);
    const double unitarity = (fourier_analysis(fourier_synthesis(x)) - x).cwiseAbs().maxCoeff();
    const double parseval = std::abs(fourier_synthesis(x).norm() - x.norm());

    const bool pass = worst_group <= 1e-6 && worst_scalar <= 1e-6 && group_instances >= 100 &&
                      unitarity <= 1e-12 && parseval <= 1e-12;
    return {pass, fmt("group prox max dev %.2e, scalar prox max dev %.2e (tol 1e-6, %d+120 "
                      "instances), unitarity %.2e (tol 1e-12)",
                      worst_group, worst_scalar, group_instances, unitarity)};
}

// ---------------------------------------------------------------- criterion 6
Outcome criterion_outliers() {
    const int n = 512;
    const VectorXd times = test_util::uniform_times(n);
    VectorXd theta(n);
    for (int i = 0; i < n; ++i)
        theta[i] = 40.0 * M_PI * (times[i] + 1.0) * (times[i] + 1.0) - 40.0 * M_PI;

    MatrixXd values(1, n);
    for (int i = 0; i < n; ++i) values(0, i) = std::cos(theta[i]);

    std::mt19937 rng(606);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::bernoulli_distribution sign(0.5);
    std::vector<int> spikes;
    while (spikes.size() < static_cast<std::size_t>(n / 20)) {  // 5%
        const int idx = pick(rng);
        if (std::find(spikes.begin(), spikes.end(), idx) != spikes.end()) continue;
        spikes.push_back(idx);
        values(0, idx) = sign(rng) ? 10.0 : -10.0;
    }

    const SignalEnsemble ensemble =
        ingest(times, values, std::nullopt, IngestOptions{.center = false});

    GnConfig gn;
    gn.epsilon_0 = 1e-3;
    AlmConfig alm;
    alm.gamma = 2.0;
    alm.max_iters = 300;
    const PhaseFunction guess(2.0 * M_PI * 60.0 * times);
    const ImfComponent component =
        refine_component(ensemble.values, times, guess, SolveMode::robust, gn, alm);

    const VectorXd if_hz = fd_derivative(component.phase.theta(), times) / (2.0 * M_PI);
    const double if_err = interior_rel_error(if_hz, example1_if_hz(times), times);

    // Final outlier estimate at the converged phase.
    MatrixXd z;
    int failures = 0;
    envelope_step(ensemble.values, times, component.phase, SolveMode::robust, gn, alm, &failures,
                  &z);
    const ThetaGrid grid = ThetaGrid::extended(component.phase, n);
    int detected = 0;
    for (int idx : spikes) {
        const double theta_spike = component.phase.theta()[idx];
        const long row = std::lround((theta_spike - grid.theta0) / grid.dtheta);
        bool found = false;
        for (long r = std::max<long>(0, row - 2);
             r <= std::min<long>(z.rows() - 1, row + 2); ++r)
            found = found || std::abs(z(r, 0)) >= 5.0;
        if (found) ++detected;
    }
    const double detection = static_cast<double>(detected) / spikes.size();

    const bool pass = if_err <= 2e-2 && detection >= 0.9;
    return {pass, fmt("IF rel error %.3e (tol 2e-2), spike detection %.0f%% (need >= 90%%)",
                      if_err, 100.0 * detection)};
}

// ---------------------------------------------------------------- criterion 7
Outcome criterion_missing_samples() {
    const int n = 512;
    const VectorXd times = test_util::uniform_times(n);
    VectorXd theta(n);
    for (int i = 0; i < n; ++i)
        theta[i] = 40.0 * M_PI * (times[i] + 1.0) * (times[i] + 1.0) - 40.0 * M_PI;
    MatrixXd values(1, n);
    for (int i = 0; i < n; ++i) values(0, i) = std::cos(theta[i]);

    BoolMatrix mask = BoolMatrix::Constant(1, n, true);
    std::mt19937 rng(707);
    std::uniform_int_distribution<int> pick(0, n - 1);
    int masked = 0;
    while (masked < n / 10) {  // 10% lost
        const int idx = pick(rng);
        if (!mask(0, idx)) continue;
        mask(0, idx) = false;
        ++masked;
    }

    const SignalEnsemble ensemble = ingest(times, values, mask, IngestOptions{.center = false});

    DriverConfig config;
    config.mode = SolveMode::robust;
    config.max_components = 1;
    config.residual_tol = 1e-4;
    config.gn.epsilon_0 = 1e-3;
    config.alm.gamma = 2.0;
    config.alm.max_iters = 300;

    const DecompositionResult result = decompose(ensemble, config);
    if (result.n_components() != 1) return {false, "no component extracted"};
    if (!result.diagnostics.prefilled_missing) return {false, "prefill was not applied"};

    const VectorXd if_hz = first_component_if_hz(result, ensemble.times);
    const double err = interior_rel_error(if_hz, example1_if_hz(times), times);
    return {err <= 2e-2, fmt("IF rel error %.3e (tol 2e-2) with 10%% samples lost", err)};
}

// ---------------------------------------------------------------- criterion 8
Outcome criterion_cable() {
    CableSpec spec;
    spec.modes = {1, 2, 3, 4, 5};
    spec.mass_density = 1.4;
    spec.length = 2.0;
    CableTruth truth;
    const SignalEnsemble ensemble = generate_cable(808, spec, 2048, 1, 0.2, &truth);

    // Non-integer cycle count: the periodic shortcut does not apply.
    DriverConfig config;
    config.mode = SolveMode::nonperiodic;
    config.gn.epsilon_0 = 1e-2;
    config.alm.max_iters = 300;

    const CableResult fused = harmonic_fuse(ensemble, spec, config);
    const double fused_err = interior_rel_error(fused.force, truth.force, ensemble.times);

    double worst_single = 0.0;
    for (int mode : spec.modes) {
        CableSpec single = spec;
        single.modes = {mode};
        try {
            const CableResult r = harmonic_fuse(ensemble, single, config);
            worst_single = std::max(
                worst_single, interior_rel_error(r.force, truth.force, ensemble.times));
        } catch (const Error&) {
            worst_single = 1e9;
        }
    }

    const bool pass = fused_err <= 2e-2 && fused_err <= worst_single;
    return {pass, fmt("fused force error %.3e (tol 2e-2), worst single-mode %.3e", fused_err,
                      worst_single)};
}

// ---------------------------------------------------------------- criterion 9
Outcome criterion_invariants() {
    const double t0 = now_seconds();
    std::string failures;

    // Reconstruction telescoping on the two-chirp decomposition.
    {
        TwoChirpTruth truth;
        const SignalEnsemble ensemble = generate_two_chirp(1024, 3, &truth);
        DriverConfig config;
        config.residual_tol = 5e-3;
        config.gn.epsilon_0 = 0.5;
        const DecompositionResult result = decompose(ensemble, config);
        const MatrixXd rebuilt = reconstruct(result, ensemble) + result.residuals;
        const double err = (rebuilt - ensemble.values).cwiseAbs().maxCoeff() /
                           ensemble.values.cwiseAbs().maxCoeff();
        if (err > 1e-10) failures += fmt("[telescoping %.2e > 1e-10]", err);
    }

    // Phase monotonicity after every update.
    {
        const int n = 256;
        const VectorXd times = test_util::uniform_times(n);
        const PhaseFunction phase(2.0 * M_PI * 15.0 * times);
        std::mt19937 rng(19);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            VectorXd delta(n);
            for (int i = 0; i < n; ++i) delta[i] = 150.0 * dist(rng);
            auto [next, beta] = phase_update(phase, delta, 0.5, times, GnConfig{});
            for (int i = 0; i + 1 < n; ++i)
                worst = std::min(worst, next.theta()[i + 1] - next.theta()[i]);
        }
        if (worst < -1e-12) failures += fmt("[monotonicity %.2e < -1e-12]", worst);
    }

    // Omega-support masking of the extension state.
    {
        const VectorXd times = test_util::uniform_times(128);
        VectorXd theta(128);
        for (int i = 0; i < 128; ++i) theta[i] = 2.0 * M_PI * 9.3 * times[i];
        const PhaseFunction phase(theta);
        const ThetaGrid grid = ThetaGrid::extended(phase, 128);
        const int n_obs = grid.observed_points(phase.span());
        MatrixXd f(n_obs, 2);
        for (int j = 0; j < n_obs; ++j) {
            f(j, 0) = std::cos(grid.points[j]);
            f(j, 1) = 0.8 * std::cos(grid.points[j]);
        }
        const RobustState state = extend_robust(f, grid, AlmConfig{});
        const int nb = grid.n_points;
        const double y_mask = state.coeffs.Y_bar.topRows(n_obs).cwiseAbs().maxCoeff();
        const double f_mask = state.coeffs.F_bar.bottomRows(nb - n_obs).cwiseAbs().maxCoeff();
        const double z_mask = state.Z_bar.bottomRows(nb - n_obs).cwiseAbs().maxCoeff();
        const double q_mask = state.coeffs.Q.bottomRows(nb - n_obs).cwiseAbs().maxCoeff();
        if (y_mask != 0.0 || f_mask != 0.0 || z_mask != 0.0 || q_mask > 1e-12)
            failures += "[support masking violated]";
    }

    // Scaling equivariance of the frequency update.
    {
        const int n = 256;
        const VectorXd times = test_util::uniform_times(n);
        MatrixXd a(2, n), b(2, n);
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < n; ++i) {
                a(j, i) = (1.0 + j) * std::cos((3.0 + j) * times[i]);
                b(j, i) = (1.0 + j) * std::sin((3.0 + j) * times[i]);
            }
        const FrequencyUpdate u1 = frequency_update(a, b, times, GnConfig{});
        const FrequencyUpdate u2 = frequency_update(-17.0 * a, -17.0 * b, times, GnConfig{});
        const double dev = (u1.delta_omega - u2.delta_omega).cwiseAbs().maxCoeff();
        if (dev > 1e-10) failures += fmt("[scaling equivariance %.2e > 1e-10]", dev);
    }

    // Filter symmetry.
    {
        FilterSpec spec;
        for (double w = 0.0; w <= 1.0; w += 0.001)
            if (lowpass_filter(w, spec) != lowpass_filter(-w, spec)) {
                failures += "[filter symmetry violated]";
                break;
            }
    }

    const double elapsed = now_seconds() - t0;
    if (elapsed > 60.0) failures += fmt("[suite took %.1fs > 60s]", elapsed);
    return {failures.empty(), failures.empty() ? fmt("all invariants hold, %.1fs", elapsed)
                                               : failures};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "noiseless chirp recovery", criterion_noiseless_chirp},
        {2, "joint vs separate recovery under noise", criterion_joint_vs_separate},
        {3, "two-component separation", criterion_two_component},
        {4, "group-sparse extension oracle equivalence", criterion_extension_oracle},
        {5, "prox operator and unitarity suite", criterion_prox_suite},
        {6, "outlier robustness", criterion_outliers},
        {7, "missing-sample recovery", criterion_missing_samples},
        {8, "multi-mode cable tension", criterion_cable},
        {9, "invariant regression suite", criterion_invariants},
    };

    int failed = 0;
    for (const Criterion& criterion : criteria) {
        const double t0 = now_seconds();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = now_seconds() - t0;
        printf("%s criterion %d: %s — %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL",
               criterion.id, criterion.name, outcome.detail.c_str(), elapsed);
        fflush(stdout);
        if (!outcome.pass) ++failed;
    }
    if (failed) printf("%d criterion(s) failed\n", failed);
    return failed;
}

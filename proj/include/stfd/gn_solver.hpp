// Gauss-Newton refinement of one mode across the ensemble: band-limited
// least-squares envelope extraction per signal, envelope-weighted averaging
// of the per-signal frequency corrections, a closed-form monotonicity line
// search for the phase update, and an outer continuation loop that raises
// the projection cutoff eta from 0 to lambda.
#pragma once

#include "stfd/group_sparse.hpp"
#include "stfd/robust.hpp"
#include "stfd/spectral.hpp"
#include "stfd/types.hpp"

namespace stfd {

enum class SolveMode { periodic, nonperiodic, robust };

struct GnConfig {
    double epsilon_0 = -1.0;      // phase-update stop tolerance; < 0 means 1e-6 * sqrt(N_s)
    double eta_step = -1.0;       // continuation increment; < 0 means lambda / 8
    double lambda = 0.5;          // envelope-space smoothness bound
    // Final projection cutoff of the continuation; < 0 means lambda. Heavy
    // noise benefits from a smaller cap: the envelope band stays wide
    // enough for a sweeping chirp while the phase updates stay smooth.
    double eta_max = -1.0;
    int max_inner_iters = 100;
    double gamma_floor_rel = 1e-8;  // epsilon_Gamma = gamma_floor_rel * max(Gamma)
    bool fold_phase_offset = true;  // absorb the consensus quadrature offset into theta
    // Fraction of the monotonicity-limited step actually taken. 1 is the
    // plain Gauss-Newton update; values < 1 stabilize heavily noisy data
    // where the undamped iteration bounces without settling.
    double relaxation = 1.0;
    // Envelope extraction window. The sharp band is the exact least-squares
    // projection onto V(theta, lambda); the cosine taper trades a small
    // in-band bias for strong suppression of band-edge noise, which
    // dominates the frequency-update derivatives on low-SNR data.
    FilterSpec::Window envelope_window = FilterSpec::Window::boxcar;

    double resolved_epsilon0(Eigen::Index n_samples) const;
    double resolved_eta_step() const;
    double resolved_eta_max() const;
};

struct FrequencyUpdate {
    MatrixXd delta_omega_per_signal;  // M x N_s
    VectorXd delta_omega;             // Gamma-weighted average across signals
    MatrixXd weights;                 // Gamma = a^2 + b^2
};

struct EnvelopePair {
    MatrixXd a;  // M x N_s
    MatrixXd b;
};

// Least-squares envelopes of every residual row in V(theta, lambda),
// relative to cos/sin theta. The periodic path demodulates on a one-period
// grid; the nonperiodic and robust paths first extend the rows with the
// group-sparse solver on the 2-fold grid. `alm_failures`, when given, is
// incremented whenever the extension stops on max_iters.
EnvelopePair envelope_step(const MatrixXd& residual_rows, const VectorXd& times,
                           const PhaseFunction& phase, SolveMode mode, const GnConfig& config,
                           const AlmConfig& alm, int* alm_failures = nullptr,
                           MatrixXd* outliers = nullptr);

// Single-row convenience overload.
std::pair<VectorXd, VectorXd> envelope_step(const VectorXd& residual_row, const VectorXd& times,
                                            const PhaseFunction& phase, SolveMode mode,
                                            const GnConfig& config, const AlmConfig& alm = {});

// delta_omega_j = (a b' - b a') / (a^2 + b^2 + eps_Gamma), averaged across
// signals with Gamma weights; points with negligible total weight get a
// zero update.
FrequencyUpdate frequency_update(const MatrixXd& a, const MatrixXd& b, const VectorXd& times,
                                 const GnConfig& config);

// theta <- theta - beta * int P_{V(theta;eta)}(delta_omega), with beta the
// largest step in [0,1] keeping theta nondecreasing (exact per-interval
// bound). Returns the new phase and beta.
std::pair<PhaseFunction, double> phase_update(const PhaseFunction& phase,
                                              const VectorXd& delta_omega, double eta,
                                              const VectorXd& times, const GnConfig& config);

// Full double loop (inner Gauss-Newton, outer eta continuation) returning
// the converged component. Throws NoConvergenceError when the inner loop
// exhausts max_inner_iters at the final eta with an update norm above
// 100 * epsilon_0.
ImfComponent refine_component(const MatrixXd& residual_rows, const VectorXd& times,
                              const PhaseFunction& initial_phase, SolveMode mode,
                              const GnConfig& config, const AlmConfig& alm = {},
                              ComponentDiag* diag = nullptr);

}  // namespace stfd

// Matching-pursuit outer loop: peel one mode at a time from the ensemble
// residual until the residual criterion or the component cap is met.
#pragma once

#include "stfd/gn_solver.hpp"
#include "stfd/types.hpp"

namespace stfd {

struct DriverConfig {
    double residual_tol = 1e-2;  // on max_j ||r^j|| relative to the initial ||f^j||
    int max_components = 8;
    SolveMode mode = SolveMode::periodic;
    GnConfig gn;
    AlmConfig alm;
    std::vector<VectorXd> initial_phases;  // optional user-supplied theta_0 per component
    double min_energy_reduction = 1e-3;    // reject components removing less than this fraction
    int guess_smooth_width = -1;           // periodogram smoothing; < 0 means N_s / 32
};

// Linear initial phase 2*pi*L*t with L picked from the ensemble-averaged
// periodogram: a box-smoothed scan locates the dominant lobe, the raw
// argmax inside it fixes the bin.
PhaseFunction initial_phase_guess(const MatrixXd& residual_rows, const VectorXd& times,
                                  int smooth_width = -1, long* bin_out = nullptr);

DecompositionResult decompose(const SignalEnsemble& ensemble, const DriverConfig& config);

}  // namespace stfd

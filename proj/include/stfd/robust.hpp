// Outlier-robust variant of the group-sparse extension: the model is
// (Phi X)|_Omega + Z = F with an elementwise l1 penalty on the outlier
// matrix Z, plus the missing-sample prefill.
#pragma once

#include "stfd/group_sparse.hpp"

namespace stfd {

struct RobustState {
    GroupCoefficients coeffs;
    MatrixXd Z_bar;  // N_b x M outlier estimate, zero off Omega

    // Restriction of Z_bar to the observed rows.
    MatrixXd Z() const { return Z_bar.topRows(coeffs.n_observed); }
};

class RobustMaxItersError : public Error {
public:
    RobustMaxItersError(const std::string& message, RobustState state)
        : Error(ErrorKind::MaxItersExceeded, message), last_state(std::move(state)) {}

    RobustState last_state;
};

// Scalar soft threshold sign(x) * max(|x| - t, 0), applied elementwise by
// the Z update.
double scalar_shrink(double x, double threshold);
MatrixXd scalar_shrink(const MatrixXd& values, double threshold);

// Three-block ALM: group-shrink X step, complement-supported slack step,
// scalar-shrink Z step, multiplier update. On convergence
// synthesis(X) + Z_bar matches F_bar on Omega.
RobustState extend_robust(const MatrixXd& f_observed, const ThetaGrid& grid,
                          const AlmConfig& config);

// Replaces each missing entry of a row by the mean of that row's observed
// entries; the mask is kept so downstream treats the fills as
// outlier-eligible.
SignalEnsemble prefill_missing(const SignalEnsemble& ensemble);

}  // namespace stfd

// Simultaneous sparse Fourier extension of M signal rows over the 2-fold
// overcomplete basis in the theta coordinate, via an augmented-Lagrangian /
// split-Bregman iteration with a row-group shrinkage.
//
// The constrained problem is
//     min ||X||_{2,1}   subject to  (Phi X)|_Omega = F,
// with Phi the unitary N_b-point Fourier matrix and Omega the leading block
// of grid rows covered by the observed span. Writing Ybar = Phi X - Fbar
// (zero on Omega at the solution, the extension values off Omega) and Q for
// the multiplier, the iteration is
//     X    <- S_{1/gamma}( Phi^* (Ybar + Fbar + Q/gamma) )
//     Ybar <- (Phi X - Fbar - Q/gamma) restricted to the complement of Omega
//     Q    <- Q + gamma (Ybar - Phi X + Fbar)
// which keeps Q supported on Omega and drives the data misfit to zero.
#pragma once

#include "stfd/spectral.hpp"
#include "stfd/types.hpp"

namespace stfd {

struct AlmConfig {
    double gamma = 1.0;      // penalty / step parameter (shrink threshold is 1/gamma)
    double tol_rel = 1e-6;   // stop when ||Q^k - Q^{k-1}|| <= tol_rel * ||Fbar||
    int max_iters = 500;
    bool throw_on_max_iters = false;

    // Robust-variant knobs (see robust.hpp).
    bool disable_outliers = false;  // force Z == 0 (degenerates to the plain extension)
    bool paper_q_update = false;    // multiplier update exactly as printed (fidelity flag)
};

struct GroupCoefficients {
    MatrixXcd X;      // N_b x M Fourier coefficients
    MatrixXcd Y_bar;  // constraint slack / extension values (zero on Omega)
    MatrixXcd Q;      // multiplier (supported on Omega)
    MatrixXd F_bar;   // zero-padded data (zero off Omega)
    int n_observed = 0;
    int iterations = 0;
    double constraint_residual_rel = 0.0;  // ||(Phi X - Fbar)|_Omega|| / ||Fbar||
    bool converged = false;
};

class MaxItersError : public Error {
public:
    MaxItersError(const std::string& message, GroupCoefficients state)
        : Error(ErrorKind::MaxItersExceeded, message), last_state(std::move(state)) {}

    GroupCoefficients last_state;
};

// Sum of row l2 norms.
double group_norm(const MatrixXcd& x);

// Row-wise group soft threshold: scale each row by (||v|| - t)/||v||, or
// zero it when ||v|| <= t.
MatrixXcd group_shrink(const MatrixXcd& v, double threshold);

// Unitary Fourier pair acting on columns: analysis(synthesis(X)) == X and
// both preserve the Frobenius norm.
MatrixXcd fourier_synthesis(const MatrixXcd& coeffs);
MatrixXcd fourier_analysis(const MatrixXcd& grid_values);

// Runs the ALM iteration for data F_observed on the leading rows of `grid`.
GroupCoefficients extend(const MatrixXd& f_observed, const ThetaGrid& grid,
                         const AlmConfig& config);

}  // namespace stfd

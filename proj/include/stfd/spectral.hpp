// Phase-coordinate resampling, the cutoff filter, FFT demodulation around a
// carrier mode, the low-frequency projection used by the phase update, and
// finite-difference derivatives.
//
// Conventions: a grid with period_factor Lbar and n_points Nb covers
// [theta(0), theta(0) + 2*pi*Lbar) with spacing dtheta = 2*pi*Lbar/Nb.
// DFT mode w on that grid is the sampled function exp(i*w*(theta-theta(0))/Lbar),
// so the carrier cos(theta - theta(0)) sits at modes +/-Lbar.
#pragma once

#include "stfd/spline.hpp"
#include "stfd/types.hpp"

namespace stfd {

struct FilterSpec {
    enum class Window {
        cosine,  // 1 + cos(pi*w/lambda) on (-lambda, lambda), zero outside
        boxcar,  // sharp band indicator on [-lambda, lambda] (exact LS projection)
    };

    double lambda = 0.5;
    bool normalize = true;  // scale so the passband peak is 1 instead of 2
    Window window = Window::cosine;
};

// Filter transfer value at normalized frequency w (cycles per carrier cycle).
double lowpass_filter(double omega_normalized, const FilterSpec& spec);

// Uniform grid in the theta coordinate.
struct ThetaGrid {
    VectorXd points;
    double theta0 = 0.0;
    double dtheta = 0.0;
    long period_factor = 0;  // Lbar
    int n_points = 0;        // Nb (even)

    // Periodic solver grid: Lbar = L_theta, Nb = n_points.
    static ThetaGrid periodic(const PhaseFunction& phase, int n_points);
    // Extension grid for the nonperiodic path: Lbar = 2*L_theta, Nb = 2*n_samples.
    static ThetaGrid extended(const PhaseFunction& phase, int n_samples);

    // Number of leading grid points with (j * dtheta) <= span.
    int observed_points(double span) const;
};

// Cubic-spline resampling of one signal row, viewed as a function of theta,
// onto the grid points inside the observed span [theta(0), theta(1)].
VectorXd resample_to_theta(const VectorXd& signal_row, const VectorXd& times,
                           const PhaseFunction& phase, const ThetaGrid& grid);

// Demodulation around carrier +/-L_carrier: from (1/N)-normalized spectrum
// coefficients, returns the in-phase/quadrature envelopes relative to
// cos(theta - theta(0)) and sin(theta - theta(0)) sampled on the grid.
struct EnvelopeTheta {
    VectorXd a;
    VectorXd b;
};
EnvelopeTheta demodulate_spectrum(const VectorXcd& spectrum, const ThetaGrid& grid,
                                  long l_carrier, const FilterSpec& spec);
EnvelopeTheta demodulate(const VectorXd& r_theta, const ThetaGrid& grid, long l_carrier,
                         const FilterSpec& spec);

// Spline interpolation of grid values back to theta(t_i). With
// periodic_wrap the values are treated as one period of a periodic
// function of theta (used by the periodic path whose grid stops short of
// theta(1) when the span is not an exact multiple of 2*pi).
VectorXd resample_to_time(const VectorXd& values_theta, const ThetaGrid& grid,
                          const PhaseFunction& phase, const VectorXd& times,
                          bool periodic_wrap);

// Projection of a time-grid sampled function onto V_p(theta; eta): mirror
// extension in normalized phase, hard truncation of modes above eta*L_theta,
// and resampling back. eta = 0 projects onto constants (the mean).
VectorXd project_lowfreq(const VectorXd& delta_omega, const PhaseFunction& phase, double eta);

// First derivative via 5-point Lagrange stencils (4th order, exact for
// polynomials of degree <= 4); one-sided stencils at the edges. Handles
// nonuniform grids.
VectorXd fd_derivative(const VectorXd& values, const VectorXd& times);

}  // namespace stfd

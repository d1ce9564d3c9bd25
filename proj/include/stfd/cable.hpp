// Cable-tension estimation from vibration signals: the natural frequencies
// of a taut cable are integer multiples of the fundamental, so envelope
// evidence from several modes can be fused into one fundamental
// instantaneous frequency, which the taut-string law turns into tension.
#pragma once

#include "stfd/driver.hpp"
#include "stfd/types.hpp"

namespace stfd {

struct CableSpec {
    double mass_density = 1.0;  // kg/m
    double length = 1.0;        // m
    std::vector<int> modes = {1};
};

// F(t) = 4 m L^2 (omega_n(t) / (2 pi n))^2, omega_n in rad/s.
VectorXd tension_from_frequency(const VectorXd& omega_n, int n, const CableSpec& spec);

struct CableResult {
    VectorXd omega1;  // fused fundamental instantaneous frequency (rad/s)
    VectorXd force;
    VectorXd theta;   // converged fundamental phase
    ComponentDiag diag;
};

// Gauss-Newton refinement of one shared fundamental phase: mode n is
// demodulated around carrier n*theta with a band narrowed to 1/(2n) so
// neighbouring harmonics stay excluded, each mode's frequency correction is
// rescaled by 1/n, and all corrections are pooled with Gamma weights.
CableResult harmonic_fuse(const SignalEnsemble& ensemble, const CableSpec& spec,
                          const DriverConfig& config);

}  // namespace stfd

// Synthetic signal generators used by the CLI and the test suites, plus a
// deterministic normal sampler (MT19937-64 + polar Box-Muller) so fixed
// seeds reproduce datasets exactly.
#pragma once

#include "stfd/cable.hpp"
#include "stfd/types.hpp"

#include <cstdint>
#include <random>

namespace stfd {

class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

    // Standard normal draw via the polar (Marsaglia) Box-Muller method on
    // uniforms from MT19937-64; independent of the C++ standard library's
    // unspecified normal_distribution algorithm.
    double next();

private:
    double uniform();  // in (0, 1)

    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Noisy chirp ensemble: f(t) = cos(40 pi (t+1)^2) on uniform samples of
// [0,1], each row adding noise_scale * i.i.d. standard normal draws.
SignalEnsemble generate_example1(std::uint64_t seed, int n_samples = 512, int m_signals = 10,
                                 double noise_scale = 5.0);

// Instantaneous frequency of the example-1 chirp in Hz: 40 (t + 1).
VectorXd example1_if_hz(const VectorXd& times);

struct TwoChirpTruth {
    VectorXd theta1, theta2;    // phases
    VectorXd if1_hz, if2_hz;    // instantaneous frequencies
    MatrixXd env1, env2;        // per-signal envelopes
};

// Two well-separated chirps (frequency ratio >= 3) with smooth per-signal
// envelopes; the lower chirp carries more energy so extraction order is
// deterministic.
SignalEnsemble generate_two_chirp(int n_samples = 512, int m_signals = 3,
                                  TwoChirpTruth* truth = nullptr);

struct CableTruth {
    VectorXd theta1;   // fundamental phase
    VectorXd omega1;   // fundamental IF in rad/s
    VectorXd force;    // tension from the taut-string law
};

// Multi-harmonic cable vibration signal sum_n c_n cos(n theta(t)) with a
// slowly varying fundamental frequency (i.e. slowly varying tension).
SignalEnsemble generate_cable(std::uint64_t seed, const CableSpec& spec, int n_samples = 2048,
                              int m_signals = 1, double noise_scale = 0.0,
                              CableTruth* truth = nullptr);

}  // namespace stfd

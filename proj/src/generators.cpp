#include "stfd/generators.hpp"

#include <cmath>

namespace stfd {

double NormalSampler::uniform() {
    // 53-bit uniform in (0, 1).
    const std::uint64_t bits = rng_() >> 11;
    return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
}

double NormalSampler::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

SignalEnsemble generate_example1(std::uint64_t seed, int n_samples, int m_signals,
                                 double noise_scale) {
    const VectorXd times = VectorXd::LinSpaced(n_samples, 0.0, 1.0);
    VectorXd clean(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = times[i];
        clean[i] = std::cos(40.0 * M_PI * (t + 1.0) * (t + 1.0));
    }

    NormalSampler normal(seed);
    MatrixXd values(m_signals, n_samples);
    for (int j = 0; j < m_signals; ++j)
        for (int i = 0; i < n_samples; ++i)
            values(j, i) = clean[i] + noise_scale * normal.next();

    return ingest(times, values);
}

VectorXd example1_if_hz(const VectorXd& times) {
    return 40.0 * (times.array() + 1.0);
}

SignalEnsemble generate_two_chirp(int n_samples, int m_signals, TwoChirpTruth* truth) {
    const VectorXd times = VectorXd::LinSpaced(n_samples, 0.0, 1.0);

    // theta1' = 2 pi (18 + 4 t): 20 cycles; theta2' = 2 pi (70 + 10 t): 75
    // cycles; the instantaneous ratio stays >= 3 throughout.
    VectorXd theta1(n_samples), theta2(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = times[i];
        theta1[i] = 2.0 * M_PI * (18.0 * t + 2.0 * t * t);
        theta2[i] = 2.0 * M_PI * (70.0 * t + 5.0 * t * t);
    }

    MatrixXd env1(m_signals, n_samples), env2(m_signals, n_samples);
    MatrixXd values(m_signals, n_samples);
    for (int j = 0; j < m_signals; ++j) {
        const double shift = 0.4 * j;
        for (int i = 0; i < n_samples; ++i) {
            const double t = times[i];
            env1(j, i) = 1.2 + 0.2 * std::cos(2.0 * M_PI * t + shift);
            env2(j, i) = 0.7 + 0.15 * std::sin(2.0 * M_PI * t + shift);
            values(j, i) = env1(j, i) * std::cos(theta1[i]) + env2(j, i) * std::cos(theta2[i]);
        }
    }

    if (truth) {
        truth->theta1 = theta1;
        truth->theta2 = theta2;
        truth->if1_hz = 18.0 + 4.0 * times.array();
        truth->if2_hz = 70.0 + 10.0 * times.array();
        truth->env1 = env1;
        truth->env2 = env2;
    }
    return ingest(times, values, std::nullopt, IngestOptions{.center = false});
}

SignalEnsemble generate_cable(std::uint64_t seed, const CableSpec& spec, int n_samples,
                              int m_signals, double noise_scale, CableTruth* truth) {
    const VectorXd times = VectorXd::LinSpaced(n_samples, 0.0, 1.0);

    // Fundamental IF 30 (1 + 0.03 sin(pi t)) Hz: a few-percent tension swing.
    VectorXd theta1(n_samples), omega1(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = times[i];
        const double cycles = 30.0 * (t + 0.03 * (1.0 - std::cos(M_PI * t)) / M_PI);
        theta1[i] = 2.0 * M_PI * cycles;
        omega1[i] = 2.0 * M_PI * 30.0 * (1.0 + 0.03 * std::sin(M_PI * t));
    }

    const std::vector<double> amplitudes = {1.0, 0.6, 0.4, 0.25, 0.15};
    NormalSampler normal(seed);
    MatrixXd values = MatrixXd::Zero(m_signals, n_samples);
    for (int j = 0; j < m_signals; ++j) {
        for (int i = 0; i < n_samples; ++i) {
            double sample = 0.0;
            for (std::size_t q = 0; q < spec.modes.size(); ++q) {
                const double amp =
                    q < amplitudes.size() ? amplitudes[q] : amplitudes.back() / (q + 1.0);
                sample += amp * std::cos(spec.modes[q] * theta1[i]);
            }
            values(j, i) = sample + noise_scale * normal.next();
        }
    }

    if (truth) {
        truth->theta1 = theta1;
        truth->omega1 = omega1;
        truth->force = tension_from_frequency(omega1, 1, spec);
    }
    return ingest(times, values, std::nullopt, IngestOptions{.center = false});
}

}  // namespace stfd

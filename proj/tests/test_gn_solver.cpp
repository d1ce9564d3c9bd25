#include "stfd/gn_solver.hpp"

#include "stfd/fft.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace stfd;
using test_util::uniform_times;

namespace {

PhaseFunction chirp_phase(const VectorXd& times) {
    VectorXd theta(times.size());
    for (Eigen::Index i = 0; i < times.size(); ++i)
        theta[i] = 40.0 * M_PI * (times[i] + 1.0) * (times[i] + 1.0) - 40.0 * M_PI;
    return PhaseFunction(theta);
}

}  // namespace

TEST_CASE("envelope_step recovers a constant envelope from an exact phase") {
    const int n = 512;
    const VectorXd times = uniform_times(n);

    SUBCASE("slow carrier: demodulation error at the spline-noise floor") {
        // ~170 samples per cycle; the carrier interpolation error is tiny
        // and mostly outside the envelope band.
        const PhaseFunction phase(2.0 * M_PI * 3.0 * times);
        VectorXd r(n);
        for (int i = 0; i < n; ++i) r[i] = 1.3 * std::cos(phase.theta()[i]);
        auto [a, b] = envelope_step(r, times, phase, SolveMode::periodic, GnConfig{});
        CHECK((a.array() - 1.3).abs().maxCoeff() < 1e-8);
        CHECK(b.cwiseAbs().maxCoeff() < 1e-8);
    }

    SUBCASE("realistic carrier: accuracy set by resampling the oscillation") {
        // ~26 samples per cycle: the carrier spline error is ~5e-5 with
        // most of it rejected by the envelope band.
        const PhaseFunction phase(2.0 * M_PI * 20.0 * times);
        VectorXd r(n);
        for (int i = 0; i < n; ++i) r[i] = 1.3 * std::cos(phase.theta()[i]);
        auto [a, b] = envelope_step(r, times, phase, SolveMode::periodic, GnConfig{});
        CHECK((a.array() - 1.3).abs().maxCoeff() < 5e-5);
        CHECK(b.cwiseAbs().maxCoeff() < 5e-5);
    }

    SUBCASE("nonzero initial phase requires the frame rotation") {
        const PhaseFunction phase(2.0 * M_PI * 12.0 * times.array() + 0.7);
        VectorXd r(n);
        for (int i = 0; i < n; ++i) r[i] = std::cos(phase.theta()[i]);
        auto [a, b] = envelope_step(r, times, phase, SolveMode::periodic, GnConfig{});
        CHECK((a.array() - 1.0).abs().maxCoeff() < 1e-5);
        CHECK(b.cwiseAbs().maxCoeff() < 1e-5);
    }

    SUBCASE("zero residual gives zero envelopes") {
        const PhaseFunction phase(2.0 * M_PI * 20.0 * times);
        auto [a, b] = envelope_step(VectorXd::Zero(n), times, phase, SolveMode::periodic,
                                    GnConfig{});
        CHECK(a.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(b.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("envelope_step recovers a modulated envelope inside the passband") {
    const int n = 512;
    const VectorXd times = uniform_times(n);
    const PhaseFunction phase(2.0 * M_PI * 20.0 * times);
    VectorXd envelope(n), r(n);
    for (int i = 0; i < n; ++i) {
        envelope[i] = 1.0 + 0.3 * std::cos(phase.theta()[i] / 20.0);
        r[i] = envelope[i] * std::cos(phase.theta()[i]);
    }
    auto [a, b] = envelope_step(r, times, phase, SolveMode::periodic, GnConfig{});
    CHECK(test_util::interior_max_error(a, envelope, times) < 1e-4);
}

TEST_CASE("envelope_step nonperiodic path handles a non-integer span") {
    const int n = 256;
    const VectorXd times = uniform_times(n);
    VectorXd theta(n);
    for (int i = 0; i < n; ++i)
        theta[i] = 2.0 * M_PI * (14.0 * times[i] + 0.37 * times[i] * times[i]);
    const PhaseFunction phase(theta);

    VectorXd envelope(n), r(n);
    for (int i = 0; i < n; ++i) {
        envelope[i] = 1.0 + 0.2 * times[i];
        r[i] = envelope[i] * std::cos(theta[i]);
    }
    GnConfig config;
    AlmConfig alm;
    auto [a, b] = envelope_step(r, times, phase, SolveMode::nonperiodic, config, alm);
    CHECK(test_util::interior_max_error(a, envelope, times) < 5e-3);
    CHECK(test_util::interior_max_error(b, VectorXd::Zero(n), times) < 5e-3);
}

TEST_CASE("frequency_update") {
    const int n = 256;
    const VectorXd times = uniform_times(n);

    SUBCASE("single signal recovers a constant rotation rate") {
        const double rate = 3.0;
        MatrixXd a(1, n), b(1, n);
        for (int i = 0; i < n; ++i) {
            a(0, i) = std::cos(rate * times[i]);
            b(0, i) = std::sin(rate * times[i]);
        }
        const FrequencyUpdate u = frequency_update(a, b, times, GnConfig{});
        for (int i = 0; i < n; ++i)
            CHECK(u.delta_omega[i] == doctest::Approx(rate).epsilon(1e-6));
    }

    SUBCASE("uniform weights give the arithmetic mean") {
        MatrixXd a(2, n), b(2, n);
        for (int i = 0; i < n; ++i) {
            a(0, i) = std::cos(2.0 * times[i]);
            b(0, i) = std::sin(2.0 * times[i]);
            a(1, i) = std::cos(5.0 * times[i]);
            b(1, i) = std::sin(5.0 * times[i]);
        }
        const FrequencyUpdate u = frequency_update(a, b, times, GnConfig{});
        // Gamma == 1 for both rows, so the average is (2 + 5) / 2.
        for (int i = 4; i < n - 4; ++i)
            CHECK(u.delta_omega[i] == doctest::Approx(3.5).epsilon(1e-5));
    }

    SUBCASE("zero-amplitude rows contribute nothing") {
        MatrixXd a(2, n), b(2, n);
        a.setZero();
        b.setZero();
        for (int i = 0; i < n; ++i) {
            a(0, i) = std::cos(4.0 * times[i]);
            b(0, i) = std::sin(4.0 * times[i]);
        }
        const FrequencyUpdate u = frequency_update(a, b, times, GnConfig{});
        for (int i = 0; i < n; ++i)
            CHECK(u.delta_omega[i] == doctest::Approx(4.0).epsilon(1e-6));
    }

    SUBCASE("scaling every row by a common constant leaves the update invariant") {
        MatrixXd a(3, n), b(3, n);
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < n; ++i) {
                a(j, i) = (1.0 + 0.1 * j) * std::cos((2.0 + j) * times[i]);
                b(j, i) = (1.0 + 0.1 * j) * std::sin((2.0 + j) * times[i]);
            }
        const FrequencyUpdate u1 = frequency_update(a, b, times, GnConfig{});
        const FrequencyUpdate u2 = frequency_update(7.5 * a, 7.5 * b, times, GnConfig{});
        CHECK((u1.delta_omega - u2.delta_omega).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("phase_update") {
    const int n = 128;
    const VectorXd times = uniform_times(n);
    const PhaseFunction phase(2.0 * M_PI * 10.0 * times);

    SUBCASE("zero correction is a fixed point with beta = 1") {
        auto [next, beta] = phase_update(phase, VectorXd::Zero(n), 0.25, times, GnConfig{});
        CHECK(beta == 1.0);
        CHECK((next.theta() - phase.theta()).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("feasible correction applies fully") {
        // dtheta' = 2*pi*5 constant: theta' - dtheta' = 2*pi*5 >= 0, beta = 1.
        const VectorXd delta = VectorXd::Constant(n, 2.0 * M_PI * 5.0);
        auto [next, beta] = phase_update(phase, delta, 0.5, times, GnConfig{});
        CHECK(beta == doctest::Approx(1.0));
        const VectorXd expected = phase.theta() - 2.0 * M_PI * 5.0 * times;
        CHECK((next.theta() - expected).cwiseAbs().maxCoeff() < 1e-8);
    }

    SUBCASE("infeasible correction is clamped at the exact interval bound") {
        // dtheta' = 2*pi*20: largest alpha with 10 - 20*alpha >= 0 is 1/2.
        const VectorXd delta = VectorXd::Constant(n, 2.0 * M_PI * 20.0);
        auto [next, beta] = phase_update(phase, delta, 0.5, times, GnConfig{});
        CHECK(beta == doctest::Approx(0.5).epsilon(1e-6));
        // Monotonicity is preserved.
        for (int i = 0; i + 1 < n; ++i)
            CHECK(next.theta()[i + 1] - next.theta()[i] >= -1e-12);
    }

    SUBCASE("monotonicity survives random corrections") {
        std::mt19937 rng(77);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int trial = 0; trial < 25; ++trial) {
            VectorXd delta(n);
            for (int i = 0; i < n; ++i) delta[i] = 200.0 * dist(rng);
            auto [next, beta] = phase_update(phase, delta, 0.5, times, GnConfig{});
            for (int i = 0; i + 1 < n; ++i)
                CHECK(next.theta()[i + 1] - next.theta()[i] >= -1e-12);
        }
    }
}

TEST_CASE("refine_component converges on the noiseless chirp") {
    const int n = 512;
    const VectorXd times = uniform_times(n);
    const PhaseFunction truth = chirp_phase(times);
    MatrixXd residual(1, n);
    for (int i = 0; i < n; ++i) residual(0, i) = std::cos(truth.theta()[i]);

    // Linear fit to the true mean frequency (60 cycles).
    const PhaseFunction guess(2.0 * M_PI * 60.0 * times);
    ComponentDiag diag;
    const ImfComponent component = refine_component(residual, times, guess, SolveMode::periodic,
                                                    GnConfig{}, AlmConfig{}, &diag);

    const VectorXd if_true = 80.0 * M_PI * (times.array() + 1.0);  // theta' in rad/s
    const VectorXd if_got = fd_derivative(component.phase.theta(), times);
    CHECK(test_util::interior_rel_error(if_got, if_true, times) < 1e-2);
    CHECK(test_util::interior_max_error(component.envelopes_a.row(0),
                                        VectorXd::Ones(n), times) < 5e-2);
}

TEST_CASE("refine_component converges immediately on an in-space residual") {
    const int n = 512;
    const VectorXd times = uniform_times(n);
    const PhaseFunction phase(2.0 * M_PI * 24.0 * times);
    MatrixXd residual(1, n);
    for (int i = 0; i < n; ++i) {
        const double envelope = 1.0 + 0.2 * std::cos(phase.theta()[i] / 24.0);
        residual(0, i) = envelope * std::cos(phase.theta()[i]);
    }

    ComponentDiag diag;
    GnConfig config;
    config.fold_phase_offset = false;
    config.epsilon_0 = 5e-3;  // above the carrier-resampling noise floor
    refine_component(residual, times, phase, SolveMode::periodic, config, AlmConfig{}, &diag);
    for (const EtaStageDiag& stage : diag.stages) {
        CHECK(stage.iterations == 1);
        CHECK(stage.final_update_norm <= config.epsilon_0);
    }
}

TEST_CASE("refine_component is invariant under duplicating the signal") {
    const int n = 256;
    const VectorXd times = uniform_times(n);
    VectorXd theta(n);
    for (int i = 0; i < n; ++i)
        theta[i] = 2.0 * M_PI * (20.0 * times[i] + 1.5 * times[i] * times[i]);
    VectorXd row(n);
    for (int i = 0; i < n; ++i) row[i] = std::cos(theta[i]);

    MatrixXd one(1, n), ten(10, n);
    one.row(0) = row;
    for (int j = 0; j < 10; ++j) ten.row(j) = row;

    const PhaseFunction guess(2.0 * M_PI * 21.0 * times);
    const ImfComponent c1 =
        refine_component(one, times, guess, SolveMode::periodic, GnConfig{}, AlmConfig{});
    const ImfComponent c10 =
        refine_component(ten, times, guess, SolveMode::periodic, GnConfig{}, AlmConfig{});

    CHECK((c1.phase.theta() - c10.phase.theta()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((c1.envelopes_a.row(0) - c10.envelopes_a.row(0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("recovered envelopes live in the band-limited envelope space") {
    // V(theta, lambda) membership: after resampling to the uniform
    // normalized-phase grid, the DFT energy outside [-lambda*L, lambda*L]
    // stays below 1e-6 of the total.
    const int n = 512;
    const VectorXd times = uniform_times(n);
    const PhaseFunction truth = chirp_phase(times);
    MatrixXd residual(1, n);
    for (int i = 0; i < n; ++i)
        residual(0, i) = (1.0 + 0.25 * times[i]) * std::cos(truth.theta()[i]);

    GnConfig config;
    config.epsilon_0 = 1e-4;
    const PhaseFunction guess(2.0 * M_PI * 60.0 * times);
    const ImfComponent component =
        refine_component(residual, times, guess, SolveMode::periodic, config, AlmConfig{});

    const ThetaGrid grid = ThetaGrid::periodic(component.phase, n);
    const VectorXd env_theta =
        resample_to_theta(component.envelopes_a.row(0), times, component.phase, grid);
    FftEngine fft(n);
    const VectorXcd spectrum = fft.forward(env_theta);
    const long band = static_cast<long>(config.lambda * grid.period_factor);
    double in_band = 0.0, total = 0.0;
    for (int k = 0; k < n; ++k) {
        const long mode = k <= n / 2 ? k : k - n;
        const double p = std::norm(spectrum[k]);
        total += p;
        if (std::labs(mode) <= band) in_band += p;
    }
    CHECK((total - in_band) / total < 1e-6);
}

TEST_CASE("refine_component folds a constant phase offset") {
    const int n = 512;
    const VectorXd times = uniform_times(n);
    VectorXd theta(n);
    for (int i = 0; i < n; ++i) theta[i] = 2.0 * M_PI * 18.0 * times[i] + 0.9;
    MatrixXd residual(1, n);
    for (int i = 0; i < n; ++i) residual(0, i) = std::cos(theta[i]);

    const PhaseFunction guess(2.0 * M_PI * 18.0 * times);  // offset missing
    const ImfComponent component = refine_component(residual, times, guess, SolveMode::periodic,
                                                    GnConfig{}, AlmConfig{});

    // The quadrature envelope vanishes once the offset is absorbed, so the
    // subtracted part a*cos(theta) carries all the energy.
    CHECK(component.envelopes_b.cwiseAbs().maxCoeff() < 1e-3);
    VectorXd model(n);
    for (int i = 0; i < n; ++i)
        model[i] = component.envelopes_a(0, i) * std::cos(component.phase.theta()[i]);
    CHECK(test_util::interior_rel_error(model, residual.row(0), times) < 1e-3);
}

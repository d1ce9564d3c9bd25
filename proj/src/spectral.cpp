#include "stfd/spectral.hpp"

#include "stfd/fft.hpp"

#include <cmath>
#include <complex>

namespace stfd {

double lowpass_filter(double omega_normalized, const FilterSpec& spec) {
    if (spec.lambda <= 0.0 || spec.lambda > 0.5)
        throw Error(ErrorKind::InvalidArgument, "filter: lambda must be in (0, 1/2]");
    const double w = std::abs(omega_normalized);
    const double peak_scale = spec.normalize ? 0.5 : 1.0;
    if (spec.window == FilterSpec::Window::boxcar) {
        // Inclusive band edge, matching the mode bound k <= lambda * L of the
        // least-squares envelope space.
        return w <= spec.lambda * (1.0 + 1e-12) ? 2.0 * peak_scale : 0.0;
    }
    if (w >= spec.lambda) return 0.0;
    return (1.0 + std::cos(M_PI * w / spec.lambda)) * peak_scale;
}

ThetaGrid ThetaGrid::periodic(const PhaseFunction& phase, int n_points) {
    if (n_points < 4 || n_points % 2 != 0)
        throw Error(ErrorKind::InvalidArgument, "theta grid: n_points must be even and >= 4");
    if (phase.cycle_count() < 1)
        throw Error(ErrorKind::DegeneratePhase, "theta grid: fewer than one full oscillation");
    ThetaGrid grid;
    grid.period_factor = phase.cycle_count();
    grid.n_points = n_points;
    grid.theta0 = phase.front();
    grid.dtheta = 2.0 * M_PI * static_cast<double>(grid.period_factor) / n_points;
    grid.points = grid.theta0 + grid.dtheta * VectorXd::LinSpaced(n_points, 0, n_points - 1).array();
    return grid;
}

ThetaGrid ThetaGrid::extended(const PhaseFunction& phase, int n_samples) {
    if (n_samples < 2)
        throw Error(ErrorKind::InvalidArgument, "theta grid: n_samples must be >= 2");
    if (phase.cycle_count() < 1)
        throw Error(ErrorKind::DegeneratePhase, "theta grid: fewer than one full oscillation");
    ThetaGrid grid;
    grid.period_factor = 2 * phase.cycle_count();
    grid.n_points = 2 * n_samples;
    grid.theta0 = phase.front();
    grid.dtheta = 2.0 * M_PI * static_cast<double>(grid.period_factor) / grid.n_points;
    grid.points =
        grid.theta0 + grid.dtheta * VectorXd::LinSpaced(grid.n_points, 0, grid.n_points - 1).array();
    return grid;
}

int ThetaGrid::observed_points(double span) const {
    const int count = static_cast<int>(std::floor(span / dtheta * (1.0 + 1e-12))) + 1;
    return std::min(count, n_points);
}

namespace {

// A phase that stopped being strictly increasing (numerically flat
// intervals) cannot serve as an interpolation coordinate.
CubicSpline phase_spline(const VectorXd& knots, const VectorXd& values) {
    try {
        return CubicSpline(knots, values);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NonMonotoneTime)
            throw Error(ErrorKind::DegeneratePhase,
                        "phase has flat intervals, cannot resample");
        throw;
    }
}

}  // namespace

VectorXd resample_to_theta(const VectorXd& signal_row, const VectorXd& times,
                           const PhaseFunction& phase, const ThetaGrid& grid) {
    if (signal_row.size() != times.size() || phase.size() != times.size())
        throw Error(ErrorKind::ShapeMismatch, "resample_to_theta: length mismatch");
    if (phase.span() < 2.0 * M_PI)
        throw Error(ErrorKind::DegeneratePhase, "resample_to_theta: span below one oscillation");

    const CubicSpline spline = phase_spline(phase.theta(), signal_row);
    const int n_obs = grid.observed_points(phase.span());
    return spline.evaluate(grid.points.head(n_obs));
}

EnvelopeTheta demodulate_spectrum(const VectorXcd& spectrum, const ThetaGrid& grid,
                                  long l_carrier, const FilterSpec& spec) {
    const int n = grid.n_points;
    if (spectrum.size() != n)
        throw Error(ErrorKind::ShapeMismatch, "demodulate: spectrum size mismatch");
    const double band = spec.lambda * static_cast<double>(l_carrier);
    if (band >= n / 2.0 - static_cast<double>(l_carrier))
        throw Error(ErrorKind::BandOverflow,
                    "demodulate: shifted envelope band exceeds Nyquist (lambda*L >= Nb/2 - L)");

    VectorXcd a_hat = VectorXcd::Zero(n);
    VectorXcd b_hat = VectorXcd::Zero(n);
    const long w_max = static_cast<long>(std::floor(band * (1.0 + 1e-12)));
    const std::complex<double> i_unit(0.0, 1.0);
    for (long w = -w_max; w <= w_max; ++w) {
        const double gain =
            lowpass_filter(static_cast<double>(w) / static_cast<double>(l_carrier), spec);
        if (gain == 0.0) continue;
        const std::complex<double> plus = spectrum[mode_index(w + l_carrier, n)];
        const std::complex<double> minus = spectrum[mode_index(w - l_carrier, n)];
        a_hat[mode_index(w, n)] = (plus + minus) * gain;
        b_hat[mode_index(w, n)] = i_unit * (plus - minus) * gain;
    }

    FftEngine fft(n);
    const VectorXcd a_cplx = fft.inverse(a_hat);
    const VectorXcd b_cplx = fft.inverse(b_hat);

    const double scale = std::max(1.0, std::max(a_cplx.real().cwiseAbs().maxCoeff(),
                                                b_cplx.real().cwiseAbs().maxCoeff()));
    const double imag_residue =
        std::max(a_cplx.imag().cwiseAbs().maxCoeff(), b_cplx.imag().cwiseAbs().maxCoeff());
    if (imag_residue > 1e-10 * scale)
        throw Error(ErrorKind::InvalidArgument,
                    "demodulate: envelopes have non-negligible imaginary residue");

    return {a_cplx.real(), b_cplx.real()};
}

EnvelopeTheta demodulate(const VectorXd& r_theta, const ThetaGrid& grid, long l_carrier,
                         const FilterSpec& spec) {
    FftEngine fft(grid.n_points);
    return demodulate_spectrum(fft.forward(r_theta), grid, l_carrier, spec);
}

VectorXd resample_to_time(const VectorXd& values_theta, const ThetaGrid& grid,
                          const PhaseFunction& phase, const VectorXd& times, bool periodic_wrap) {
    if (values_theta.size() != grid.n_points)
        throw Error(ErrorKind::ShapeMismatch, "resample_to_time: expected full-grid values");
    if (phase.size() != times.size())
        throw Error(ErrorKind::ShapeMismatch, "resample_to_time: phase/times mismatch");

    const int n = grid.n_points;
    if (!periodic_wrap) {
        const CubicSpline spline(grid.points, values_theta);
        return spline.evaluate(phase.theta());
    }

    // Extend the knots periodically so evaluation points up to one period
    // past the grid (the fractional final oscillation) stay interior.
    const double period = grid.dtheta * n;
    const double overhang = std::max(0.0, phase.back() - (grid.theta0 + period));
    int pad = static_cast<int>(std::ceil(overhang / grid.dtheta)) + 8;
    pad = std::min(pad, n);

    VectorXd knots(n + 2 * pad), vals(n + 2 * pad);
    for (int i = 0; i < n + 2 * pad; ++i) {
        const int src = i - pad;
        knots[i] = grid.theta0 + grid.dtheta * src;
        int wrapped = src % n;
        if (wrapped < 0) wrapped += n;
        vals[i] = values_theta[wrapped];
    }
    const CubicSpline spline(knots, vals);
    return spline.evaluate(phase.theta());
}

VectorXd project_lowfreq(const VectorXd& delta_omega, const PhaseFunction& phase, double eta) {
    if (delta_omega.size() != phase.size())
        throw Error(ErrorKind::ShapeMismatch, "project_lowfreq: length mismatch");
    if (eta < 0.0) throw Error(ErrorKind::InvalidArgument, "project_lowfreq: eta must be >= 0");

    const Eigen::Index n = delta_omega.size();
    if (eta == 0.0)
        return VectorXd::Constant(n, delta_omega.mean());
    if (phase.cycle_count() < 1)
        throw Error(ErrorKind::DegeneratePhase, "project_lowfreq: fewer than one oscillation");

    // Resample to a uniform normalized-phase grid (endpoints included).
    const VectorXd theta_bar = phase.normalized();
    const VectorXd uniform = VectorXd::LinSpaced(n, 0.0, 1.0);
    const CubicSpline to_bar = phase_spline(theta_bar, delta_omega);
    VectorXd u = to_bar.evaluate(uniform);

    // Even mirror extension about both endpoints (no duplicated samples).
    const int ext = static_cast<int>(2 * n - 2);
    VectorXcd v(ext);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u[i];
    for (int i = 1; i + 1 < static_cast<int>(n); ++i) v[n - 1 + i] = u[n - 1 - i];

    // Mode q of the extension oscillates q/2 times per unit of normalized
    // phase; V_p(theta; eta) keeps frequencies up to eta * L_theta.
    FftEngine fft(ext);
    VectorXcd spectrum = fft.forward(v);
    const double l_theta = static_cast<double>(phase.cycle_count());
    const long q_max = static_cast<long>(std::floor(2.0 * eta * l_theta * (1.0 + 1e-12)));
    for (int q = 0; q < ext; ++q) {
        const long freq = q <= ext / 2 ? q : q - ext;
        if (std::labs(freq) > q_max) spectrum[q] = 0.0;
    }
    const VectorXcd filtered = fft.inverse(spectrum);

    VectorXd filtered_head(n);
    for (Eigen::Index i = 0; i < n; ++i) filtered_head[i] = filtered[i].real();
    const CubicSpline back(uniform, filtered_head);
    return back.evaluate(theta_bar);
}

namespace {

// Fornberg weights for the first derivative at x0 over the given nodes.
VectorXd derivative_weights(double x0, const VectorXd& nodes) {
    const int n = static_cast<int>(nodes.size());
    constexpr int m = 1;  // derivative order
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c.col(m);
}

}  // namespace

VectorXd fd_derivative(const VectorXd& values, const VectorXd& times) {
    const Eigen::Index n = values.size();
    if (times.size() != n) throw Error(ErrorKind::ShapeMismatch, "fd_derivative: length mismatch");
    if (n < 5) throw Error(ErrorKind::InvalidArgument, "fd_derivative: need at least 5 points");

    constexpr Eigen::Index stencil = 5;
    VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index start = i - stencil / 2;
        start = std::clamp<Eigen::Index>(start, 0, n - stencil);
        const VectorXd nodes = times.segment(start, stencil);
        const VectorXd w = derivative_weights(times[i], nodes);
        out[i] = w.dot(values.segment(start, stencil));
    }
    return out;
}

}  // namespace stfd

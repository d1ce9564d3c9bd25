#include "stfd/types.hpp"

#include <cmath>

namespace stfd {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonMonotoneTime: return "NonMonotoneTime";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::DegeneratePhase: return "DegeneratePhase";
        case ErrorKind::BandOverflow: return "BandOverflow";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::MaxItersExceeded: return "MaxItersExceeded";
        case ErrorKind::AllMissing: return "AllMissing";
        case ErrorKind::ZeroResidual: return "ZeroResidual";
        case ErrorKind::NonPositiveFrequency: return "NonPositiveFrequency";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

SignalEnsemble ingest(const VectorXd& times, const MatrixXd& values,
                      const std::optional<BoolMatrix>& mask, const IngestOptions& options) {
    const Eigen::Index n = times.size();
    const Eigen::Index m = values.rows();
    if (m < 1 || values.cols() != n)
        throw Error(ErrorKind::ShapeMismatch, "ingest: values must be M x len(times) with M >= 1");
    if (n < 16)
        throw Error(ErrorKind::ShapeMismatch, "ingest: need at least 16 samples");
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (!(times[i + 1] > times[i]))
            throw Error(ErrorKind::NonMonotoneTime,
                        "ingest: times must be strictly increasing (index " + std::to_string(i + 1) + ")");
    }

    SignalEnsemble out;
    const double t0 = times[0];
    const double span = times[n - 1] - t0;
    out.times = (times.array() - t0) / span;
    out.times[0] = 0.0;
    out.times[n - 1] = 1.0;

    out.values = values;
    if (mask) {
        if (mask->rows() != m || mask->cols() != n)
            throw Error(ErrorKind::ShapeMismatch, "ingest: mask shape mismatch");
        out.mask = *mask;
    } else {
        out.mask = BoolMatrix::Constant(m, n, true);
    }
    // NaN samples are missing regardless of the mask.
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::isnan(out.values(j, i))) out.mask(j, i) = false;

    out.row_offsets = VectorXd::Zero(m);
    if (options.center) {
        for (Eigen::Index j = 0; j < m; ++j) {
            double sum = 0.0;
            Eigen::Index count = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (out.mask(j, i)) {
                    sum += out.values(j, i);
                    ++count;
                }
            }
            if (count == 0)
                throw Error(ErrorKind::AllMissing,
                            "ingest: signal " + std::to_string(j) + " has no observed samples");
            const double mean = sum / static_cast<double>(count);
            out.row_offsets[j] = mean;
            for (Eigen::Index i = 0; i < n; ++i)
                if (out.mask(j, i)) out.values(j, i) -= mean;
        }
    }
    return out;
}

long phase_cycle_count(double span) {
    return static_cast<long>(std::floor(span / (2.0 * M_PI) + 1e-9));
}

PhaseFunction::PhaseFunction(VectorXd theta) : theta_(std::move(theta)) {
    const Eigen::Index n = theta_.size();
    if (n < 2) throw Error(ErrorKind::DegeneratePhase, "phase: need at least 2 samples");
    const double scale = std::max(1.0, std::abs(theta_[n - 1] - theta_[0]));
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (theta_[i + 1] - theta_[i] < -1e-10 * scale)
            throw Error(ErrorKind::DegeneratePhase, "phase: theta must be nondecreasing");
    }
    if (!(span() > 0.0))
        throw Error(ErrorKind::DegeneratePhase, "phase: empty span");
    // cycle_count() == 0 marks a trend candidate; grid construction and
    // resampling reject it (a clamped line-search step may legally land
    // there mid-iteration).
    cycle_count_ = phase_cycle_count(span());
}

VectorXd PhaseFunction::normalized() const {
    return (theta_.array() - front()) / span();
}

MatrixXd reconstruct(const DecompositionResult& result, const SignalEnsemble& ensemble) {
    MatrixXd sum = MatrixXd::Zero(ensemble.n_signals(), ensemble.n_samples());
    for (const ImfComponent& component : result.components) {
        const VectorXd carrier = component.phase.theta().array().cos();
        sum += component.envelopes_a * carrier.asDiagonal();
    }
    return sum;
}

}  // namespace stfd

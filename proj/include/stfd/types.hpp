// Core data types for signal ensembles, phase functions, extracted modes
// and decomposition results, plus the library error taxonomy.
#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stfd {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class ErrorKind {
    NonMonotoneTime,
    ShapeMismatch,
    DegeneratePhase,
    BandOverflow,
    NoConvergence,
    MaxItersExceeded,
    AllMissing,
    ZeroResidual,
    NonPositiveFrequency,
    InvalidArgument,
    IoError,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// An ensemble of M signals sampled on one shared time grid.
// Rows of `values` are signals; `times` is affinely rescaled to [0,1] on
// ingest. `mask(j,i)` is false where sample i of signal j is missing.
struct SignalEnsemble {
    VectorXd times;
    MatrixXd values;
    BoolMatrix mask;
    VectorXd row_offsets;  // per-row means removed at ingest (zeros if centering off)

    Eigen::Index n_signals() const { return values.rows(); }
    Eigen::Index n_samples() const { return values.cols(); }
    bool has_missing() const { return !mask.all(); }
};

struct IngestOptions {
    bool center = true;  // subtract per-row mean of observed samples
};

// Validates shapes, rescales times to [0,1] and (by default) removes the
// per-row mean. NaN values are treated as missing samples.
SignalEnsemble ingest(const VectorXd& times, const MatrixXd& values,
                      const std::optional<BoolMatrix>& mask = std::nullopt,
                      const IngestOptions& options = {});

// A sampled monotone phase theta(t_i). The span must cover at least one
// full oscillation (cycle_count() >= 1), otherwise the candidate is a trend.
class PhaseFunction {
public:
    explicit PhaseFunction(VectorXd theta);

    const VectorXd& theta() const { return theta_; }
    Eigen::Index size() const { return theta_.size(); }
    double front() const { return theta_[0]; }
    double back() const { return theta_[theta_.size() - 1]; }
    double span() const { return back() - front(); }
    long cycle_count() const { return cycle_count_; }  // L_theta
    VectorXd normalized() const;                       // (theta - theta(0)) / span

private:
    VectorXd theta_;
    long cycle_count_;
};

// floor(span / 2pi) with a tolerance so exact multiples of 2pi round down
// to the intended integer.
long phase_cycle_count(double span);

// One extracted mode: a shared phase plus per-signal in-phase and
// quadrature envelopes. amplitude = a^2 + b^2 elementwise.
struct ImfComponent {
    PhaseFunction phase;
    MatrixXd envelopes_a;
    MatrixXd envelopes_b;
    MatrixXd amplitude;
};

struct EtaStageDiag {
    double eta = 0.0;
    int iterations = 0;
    double final_update_norm = 0.0;
    double min_beta = 1.0;
};

struct ComponentDiag {
    std::vector<EtaStageDiag> stages;
    double final_update_norm = 0.0;
    int total_iterations = 0;
    double energy_reduction = 0.0;  // fraction of residual energy removed
    long initial_guess_bin = 0;
    double phase_offset_folded = 0.0;
    int alm_unconverged_calls = 0;
};

struct DecompositionDiag {
    std::vector<ComponentDiag> components;
    std::vector<double> residual_norms;  // max_j ||r^j|| after each extraction (index 0 = input)
    bool component_cap_reached = false;
    bool rejected_trailing_component = false;
    bool prefilled_missing = false;
};

struct DecompositionResult {
    std::vector<ImfComponent> components;
    MatrixXd residuals;
    DecompositionDiag diagnostics;

    Eigen::Index n_components() const {
        return static_cast<Eigen::Index>(components.size());
    }
};

// Sum_k a_k^j cos theta_k per signal row (the matching-pursuit model part;
// quadrature leftovers stay in the residual).
MatrixXd reconstruct(const DecompositionResult& result, const SignalEnsemble& ensemble);

class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& message, DecompositionResult partial)
        : Error(ErrorKind::NoConvergence, message), partial_result(std::move(partial)) {}
    explicit NoConvergenceError(const std::string& message)
        : Error(ErrorKind::NoConvergence, message) {}

    DecompositionResult partial_result;
};

}  // namespace stfd

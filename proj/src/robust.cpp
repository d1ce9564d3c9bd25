#include "stfd/robust.hpp"

#include <cmath>

namespace stfd {

double scalar_shrink(double x, double threshold) {
    const double mag = std::abs(x) - threshold;
    return mag > 0.0 ? (x > 0.0 ? mag : -mag) : 0.0;
}

MatrixXd scalar_shrink(const MatrixXd& values, double threshold) {
    if (threshold < 0.0)
        throw Error(ErrorKind::InvalidArgument, "scalar_shrink: threshold must be >= 0");
    return values.unaryExpr([threshold](double x) { return scalar_shrink(x, threshold); });
}

SignalEnsemble prefill_missing(const SignalEnsemble& ensemble) {
    SignalEnsemble out = ensemble;
    for (Eigen::Index j = 0; j < out.n_signals(); ++j) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < out.n_samples(); ++i) {
            if (out.mask(j, i)) {
                sum += out.values(j, i);
                ++count;
            }
        }
        if (count == 0)
            throw Error(ErrorKind::AllMissing,
                        "prefill_missing: signal " + std::to_string(j) + " has no observed samples");
        const double mean = sum / static_cast<double>(count);
        for (Eigen::Index i = 0; i < out.n_samples(); ++i)
            if (!out.mask(j, i)) out.values(j, i) = mean;
    }
    return out;
}

}  // namespace stfd

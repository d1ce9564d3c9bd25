#include "stfd/fft.hpp"

#include "stfd/types.hpp"

#include <fftw3.h>

namespace stfd {

FftEngine::FftEngine(int n) : n_(n) {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "fft: size must be >= 2");
    buf_in_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
    buf_out_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
    plan_forward_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf_in_),
                                     reinterpret_cast<fftw_complex*>(buf_out_), FFTW_FORWARD,
                                     FFTW_ESTIMATE);
    plan_inverse_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf_in_),
                                     reinterpret_cast<fftw_complex*>(buf_out_), FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
}

FftEngine::~FftEngine() {
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
    fftw_free(buf_in_);
    fftw_free(buf_out_);
}

Eigen::VectorXcd FftEngine::forward(const Eigen::VectorXcd& input) {
    if (input.size() != n_) throw Error(ErrorKind::ShapeMismatch, "fft: input size mismatch");
    for (int i = 0; i < n_; ++i) buf_in_[i] = input[i];
    fftw_execute(static_cast<fftw_plan>(plan_forward_));
    Eigen::VectorXcd out(n_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = buf_out_[i] * scale;
    return out;
}

Eigen::VectorXcd FftEngine::forward(const Eigen::VectorXd& input) {
    if (input.size() != n_) throw Error(ErrorKind::ShapeMismatch, "fft: input size mismatch");
    for (int i = 0; i < n_; ++i) buf_in_[i] = std::complex<double>(input[i], 0.0);
    fftw_execute(static_cast<fftw_plan>(plan_forward_));
    Eigen::VectorXcd out(n_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = buf_out_[i] * scale;
    return out;
}

Eigen::VectorXcd FftEngine::inverse(const Eigen::VectorXcd& input) {
    if (input.size() != n_) throw Error(ErrorKind::ShapeMismatch, "fft: input size mismatch");
    for (int i = 0; i < n_; ++i) buf_in_[i] = input[i];
    fftw_execute(static_cast<fftw_plan>(plan_inverse_));
    Eigen::VectorXcd out(n_);
    for (int i = 0; i < n_; ++i) out[i] = buf_out_[i];
    return out;
}

}  // namespace stfd

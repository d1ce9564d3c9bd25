// Thin FFTW wrapper fixing the transform conventions used throughout:
//   forward:  x_hat(k) = (1/N) sum_j x_j exp(-2*pi*i*j*k/N)
//   inverse:  x_j     =       sum_k x_hat(k) exp(+2*pi*i*j*k/N)
// (a mutually inverse pair; unitary scaling is applied by callers that
// need it). Mode k of an N-point transform represents frequency k for
// k <= N/2 and k - N otherwise.
#pragma once

#include <Eigen/Core>

#include <complex>

namespace stfd {

class FftEngine {
public:
    explicit FftEngine(int n);
    ~FftEngine();

    FftEngine(const FftEngine&) = delete;
    FftEngine& operator=(const FftEngine&) = delete;

    int size() const { return n_; }

    // (1/N)-normalized forward transform.
    Eigen::VectorXcd forward(const Eigen::VectorXcd& input);
    Eigen::VectorXcd forward(const Eigen::VectorXd& input);

    // Unnormalized inverse transform (plain exponential sum).
    Eigen::VectorXcd inverse(const Eigen::VectorXcd& input);

private:
    int n_;
    void* plan_forward_;
    void* plan_inverse_;
    std::complex<double>* buf_in_;
    std::complex<double>* buf_out_;
};

// Index of signed frequency m in the length-n spectrum layout.
inline int mode_index(long m, int n) {
    long r = m % n;
    if (r < 0) r += n;
    return static_cast<int>(r);
}

}  // namespace stfd

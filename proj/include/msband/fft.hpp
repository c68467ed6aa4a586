#pragma once

#include <Eigen/Dense>

namespace msband::fft {

// Convention used throughout: the forward transform is
//   X(k) = sum_t x(t) exp(-j 2 pi k t / T)
// and inverse() applies the conjugate kernel WITHOUT the 1/T factor, so
// inverse(forward(x)) == T * x.  Callers divide where a round trip is meant.

Eigen::VectorXcd forward(const Eigen::VectorXcd& x);
Eigen::VectorXcd inverse(const Eigen::VectorXcd& x);
Eigen::VectorXcd forward_real(const Eigen::VectorXd& x);

// |X(k)|^2 / T for a real series; with the convention above a pure tone of
// the synthesis form carries its full prescribed level in its own bin.
Eigen::VectorXd periodogram(const Eigen::VectorXd& x);

}  // namespace msband::fft

#include "msband/fft.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "msband/errors.hpp"

namespace msband::fft {
namespace {

// FFTW planning is not thread safe and plans are costly to rebuild, so one
// process-wide cache holds a plan per (length, direction).  Plans are created
// with FFTW_UNALIGNED against scratch buffers and executed on caller arrays
// via fftw_execute_dft, which is safe for out-of-place unaligned plans.
class PlanCache {
 public:
  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(out.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw Error(ErrorCode::Internal, "fftw plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

Eigen::VectorXcd transform(const Eigen::VectorXcd& x, int sign) {
  int n = static_cast<int>(x.size());
  if (n <= 0) throw Error(ErrorCode::DomainError, "transform length must be positive");
  fftw_plan plan = cache().get(n, sign);
  Eigen::VectorXcd out(n);
  // fftw_execute_dft does not modify the input for out-of-place plans, so the
  // const_cast is safe.
  fftw_execute_dft(
      plan,
      reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(x.data())),
      reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

Eigen::VectorXcd forward(const Eigen::VectorXcd& x) {
  return transform(x, FFTW_FORWARD);
}

Eigen::VectorXcd inverse(const Eigen::VectorXcd& x) {
  return transform(x, FFTW_BACKWARD);
}

Eigen::VectorXcd forward_real(const Eigen::VectorXd& x) {
  return transform(x.cast<std::complex<double>>(), FFTW_FORWARD);
}

Eigen::VectorXd periodogram(const Eigen::VectorXd& x) {
  Eigen::VectorXcd spectrum = forward_real(x);
  return spectrum.cwiseAbs2() / static_cast<double>(x.size());
}

}  // namespace msband::fft

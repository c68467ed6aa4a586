#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "msband/spectrum.hpp"

namespace msband {

enum class SignalRole { latent, observed, reconstructed };

// Finite window of a multichannel signal, one row per channel.
struct SignalEnsemble {
  Eigen::MatrixXd samples;
  SignalRole role = SignalRole::latent;

  int channels() const { return static_cast<int>(samples.rows()); }
  int length() const { return static_cast<int>(samples.cols()); }
};

// N x M real mixing with N >= M >= 1, full column rank, and no zero row, so
// every observed channel carries some source energy and the latent space is
// identifiable.
class MixingMatrix {
 public:
  explicit MixingMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& matrix() const { return values_; }
  int channels() const { return static_cast<int>(values_.rows()); }
  int sources() const { return static_cast<int>(values_.cols()); }
  double condition() const;

 private:
  Eigen::MatrixXd values_;
};

MixingMatrix random_mixing_matrix(int channels, int sources, std::uint64_t seed);

// One uniform phase on [0, 2pi) per source and per strictly-positive
// non-Nyquist bin (columns 0..T/2-2 hold bins 1..T/2-1).
struct PhaseDraw {
  Eigen::MatrixXd phases;
  std::uint64_t seed = 0;

  static PhaseDraw draw(int sources, int length, std::uint64_t seed);
};

// Sum of cosines with prescribed amplitudes: the periodogram of the result
// equals the spec level in every bin exactly, not just in expectation.
// `phases` holds T/2-1 values for bins 1..T/2-1.
Eigen::VectorXd synthesize_latent(const PsdSpec& spec,
                                  const Eigen::VectorXd& phases);

// One latent row per spec, all sharing the draw's phase matrix.
SignalEnsemble synthesize_ensemble(const std::vector<PsdSpec>& specs,
                                   const PhaseDraw& draw);

// Observed ensemble: mixing * latents.
SignalEnsemble mix(const MixingMatrix& mixing, const SignalEnsemble& latents);

// Circular cross-correlation (1/T) sum_t x(t) y((t+lag) mod T) for lags
// -max_lag..max_lag, returned in lag order (index lag + max_lag).
std::vector<double> empirical_cross_correlation(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& y,
                                                int max_lag);

}  // namespace msband

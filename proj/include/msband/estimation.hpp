#pragma once

#include <cstdint>
#include <vector>

#include "msband/spectrum.hpp"
#include "msband/synthesis.hpp"

namespace msband {

// Principal-component factorization of an observed ensemble into a mixing
// estimate and unit-power latents, X_centered ~= mixing_hat * latents_hat.
struct EstimationResult {
  Eigen::MatrixXd mixing_hat;     // channels x sources
  Eigen::MatrixXd latents_hat;    // sources x window, unit mean power rows
  Eigen::VectorXd channel_means;  // removed before factorization
  Eigen::VectorXd eigenvalues;    // all covariance eigenvalues, descending
  double retained_variance = 0.0; // fraction captured by the kept components
  int sources = 0;
};

// `sources` > 0 keeps exactly that many components (it must not exceed the
// covariance rank); `sources` <= 0 keeps the smallest count whose cumulative
// eigenvalue share reaches `variance_target`.
EstimationResult estimate_latents(const Eigen::MatrixXd& observed, int sources,
                                  double variance_target = 0.999);

// Periodogram |DFT|^2 / T of one series.
Eigen::VectorXd empirical_psd(const Eigen::VectorXd& x);

// Piecewise-flat spectrum fitted to a measured psd: bins whose power (or
// whose mirror's power) reaches fraction * peak are kept, the kept set is
// symmetrized, and each maximal run of kept bins becomes one block whose
// level is the mean symmetrized power over the run.  Mirror runs share one
// level value, so the result is exactly conjugate symmetric.
struct ThresholdResult {
  PsdSpec spec;
  std::vector<std::uint8_t> support;  // per-bin keep mask
};

ThresholdResult threshold_support(const Eigen::VectorXd& psd, double fraction,
                                  int source_index = 0);

// Projects a series onto the kept bins: DFT, zero the complement, inverse.
// The mask is expected to be conjugate symmetric (as produced above); the
// real part of the projection is returned.
Eigen::VectorXd apply_support_mask(const Eigen::VectorXd& x,
                                   const std::vector<std::uint8_t>& support);

// Measured-data front end: factor the raw ensemble, fit a block spectrum to
// every latent, and form the bandlimited target that acquisition and
// reconstruction operate on.
struct RealPipeline {
  EstimationResult estimate;
  std::vector<Eigen::VectorXd> source_psds;
  std::vector<PsdSpec> specs;
  std::vector<std::vector<std::uint8_t>> support_masks;
  Eigen::MatrixXd latents_thresholded;  // sources x window
  SignalEnsemble observed_thresholded;  // mixing_hat * latents_thresholded
  // Largest normalized cross-correlation magnitude between distinct latent
  // estimates over all circular lags; near zero backs the uncorrelatedness
  // assumption on real data.
  double max_latent_crosscorr = 0.0;
};

RealPipeline prepare_real_pipeline(const Eigen::MatrixXd& raw, int sources,
                                   double variance_target, double fraction);

}  // namespace msband

#pragma once

#include <vector>

#include "msband/sampling.hpp"

namespace msband {

// Recovers the length-T bandpass component whose spectrum lives on bins
// [lo, hi) from width-many samples at `times`.  The sample model is
//   v_j = (1/sqrt(T)) * sum_k c_k exp(+j 2 pi k t_j / T),
// solved for c exactly; when the instants are the uniform grid j*T/width the
// system is unitary up to scale and is solved by one FFT with condition 1.
// `condition` (optional) receives the system's condition number.
Eigen::VectorXcd temporal_interpolate(const Eigen::VectorXcd& samples,
                                      const std::vector<int>& times, int lo,
                                      int hi, int length,
                                      double* condition = nullptr);

// Lift from selected channels back to all channels:
// lift = mixing(:, active) * inverse(mixing(rows, active)), so
// lift(rows, :) is the identity and unselected channels are filled through
// the shared latent structure.
struct SpatialInterpolator {
  std::vector<int> rows;
  std::vector<int> active;
  Eigen::MatrixXd lift;  // channels x |rows|
  double condition = 0.0;
};

SpatialInterpolator build_spatial_interpolator(const MixingMatrix& mixing,
                                               const std::vector<int>& active,
                                               const std::vector<int>& rows);

Eigen::MatrixXcd spatial_interpolate(const SpatialInterpolator& interp,
                                     const Eigen::MatrixXcd& selected);

struct SubbandConditioning {
  int subband = 0;
  double temporal = 0.0;
  double spatial = 0.0;
};

struct ReconstructionInfo {
  std::vector<SubbandConditioning> per_subband;
  double max_temporal_condition = 0.0;
  double max_spatial_condition = 0.0;
  // max |imag| of the accumulated output relative to its peak magnitude.
  double imaginary_residue = 0.0;
};

// Sums the lifted temporal interpolants over all bands present in the sample
// set.  When the set covers every subband of the plan the sum must be real:
// a relative imaginary residue above 1e-8 raises ImaginaryResidue.  A set
// with missing bands (e.g. after drop_subband) skips that check and returns
// the real part of whatever the remaining bands reconstruct.
SignalEnsemble reconstruct(const SampleSet& samples, const SubbandPlan& plan,
                           const MixingMatrix& mixing,
                           ReconstructionInfo* info = nullptr);

// Baseline that treats every channel as an isolated bandlimited signal on
// the union of its structurally coupled sources' supports; no cross-channel
// information is used.  Sample counts match separate_baseline.
SignalEnsemble separate_reconstruct(const SignalEnsemble& observed,
                                    const MixingMatrix& mixing,
                                    const std::vector<PsdSpec>& specs,
                                    ReconstructionInfo* info = nullptr);

}  // namespace msband

#pragma once

#include <cstdint>
#include <vector>

#include "msband/sampling.hpp"
#include "msband/synthesis.hpp"

namespace msband {

// Error power below this is reported as the floor instead of -inf.
constexpr double kNmseFloorDb = -300.0;

// 10 log10(|reference - estimate|^2 / |reference|^2), clamped at the floor.
// A zero reference has no meaningful scale and raises ZeroReference.
double nmse_db(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& estimate);
double nmse_db(const SignalEnsemble& reference, const SignalEnsemble& estimate);

// The three structural conditions under which mixed channels are pairwise
// correlated: strictly more channels than sources, every source carrying
// power, and every channel coupled to at least one source.  Checked on a raw
// matrix because the interesting inputs are exactly the invalid ones.
struct PremiseReport {
  bool strictly_more_channels = false;
  bool positive_latent_powers = false;
  bool no_zero_rows = false;

  bool satisfied() const {
    return strictly_more_channels && positive_latent_powers && no_zero_rows;
  }
};

PremiseReport check_correlatedness_premises(const Eigen::MatrixXd& mixing,
                                            const Eigen::VectorXd& latent_powers);

// Joint acquisition cost versus acquiring every channel independently at its
// own bandlimited minimum.  Rates are samples per window normalized by T,
// i.e. average samples per instant across the array.
struct RateComparison {
  long joint_samples = 0;
  long separate_samples = 0;
  double joint_rate = 0.0;
  double separate_rate = 0.0;
};

RateComparison rate_comparison(const MixingMatrix& mixing,
                               const std::vector<PsdSpec>& specs);

// Everything one synthetic trial measures.
struct ExperimentReport {
  std::uint64_t seed = 0;
  int length = 0;
  int channels = 0;
  int sources = 0;
  int subband_count = 0;
  long bandwidth = 0;          // total source bandwidth in bins
  long sample_total = 0;       // samples actually taken
  long baseline_total = -1;    // separate-acquisition total, -1 when not run
  double density = 0.0;        // sample_total / (T * N)
  double bound_density = 0.0;  // bandwidth / (T * N)
  bool density_exact = false;  // sample_total == bandwidth
  double nmse = 0.0;           // dB
  double baseline_nmse = 0.0;  // dB, NaN when not run
  double max_temporal_condition = 0.0;
  double max_spatial_condition = 0.0;
  double imaginary_residue = 0.0;
  bool uniform_grid = false;   // every subband width divides T
  double nmse_threshold = 0.0; // dB bar used by verify_density_bound
  int dropped_subband = -1;
  int busiest_subband = -1;    // subband with the largest prescribed energy
};

// True when the trial is consistent with the density lower bound: the
// achieved density reaches bandwidth/(T*N) (integer comparison on sample
// counts) and reconstruction met the report's NMSE bar.  A below-bound
// acquisition therefore never verifies, however good its NMSE.
bool verify_density_bound(const ExperimentReport& report);

}  // namespace msband

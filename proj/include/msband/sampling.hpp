#pragma once

#include <vector>

#include "msband/spectrum.hpp"
#include "msband/synthesis.hpp"

namespace msband {

// Channels whose mixing rows invert the active-source submatrix.
struct RowSelection {
  std::vector<int> rows;   // ascending, one per active source
  double condition = 0.0;  // condition number of the selected square block
};

// Picks |active| channels by column-pivoted QR on the transposed submatrix,
// so the best-conditioned rows come first.  Any full-column-rank mixing
// admits a selection; the pivot order just controls its quality.
RowSelection select_rows(const MixingMatrix& mixing,
                         const std::vector<int>& active);

namespace detail {
// Same selection on a raw matrix, used where no validated MixingMatrix
// exists; throws RankDeficient when no invertible row subset exists.
RowSelection select_rows_raw(const Eigen::MatrixXd& mixing,
                             const std::vector<int>& active);
}  // namespace detail

// Sampling instants floor(i * length / count) for i = 0..count-1; strictly
// increasing whenever count <= length.
std::vector<int> temporal_positions(int count, int length);

// Bandpass component of one channel: DFT bins outside [lo, hi) zeroed,
// inverse transform with 1/T applied.  Complex-valued because a one-sided
// bin range has no conjugate partner.
Eigen::VectorXcd subband_component(const Eigen::VectorXd& x, int lo, int hi);
Eigen::MatrixXcd subband_component(const SignalEnsemble& ensemble,
                                   const Subband& band);

// Samples of one subband: selected channels at the subband's instants.
struct SampleBand {
  int subband = 0;          // index into the plan's subband list
  std::vector<int> rows;    // selected channel indices
  std::vector<int> times;   // sampling instants
  Eigen::MatrixXcd values;  // |rows| x |times|
  double row_condition = 0.0;
};

struct SampleSet {
  int length = 0;    // T
  int channels = 0;  // N of the observed ensemble
  std::vector<SampleBand> bands;

  long total_samples() const;
};

// Takes, for every subband, |active| channels at width-many instants; the
// total count equals the summed source bandwidth exactly.
SampleSet acquire(const SignalEnsemble& observed, const SubbandPlan& plan,
                  const MixingMatrix& mixing);

// Fraction of the dense channels-by-time grid that was sampled.
double sampling_density(const SampleSet& samples);

// Copy without the band whose subband index matches; models losing one
// subband's measurements.
SampleSet drop_subband(const SampleSet& samples, int band_index);

// Sample count per channel if each were acquired independently at its own
// bandlimited minimum: the size of the union of the supports of the sources
// that reach the channel through a structurally nonzero mixing entry.
struct BaselineRates {
  std::vector<long> per_channel;
  long total = 0;
};

BaselineRates separate_baseline(const MixingMatrix& mixing,
                                const std::vector<PsdSpec>& specs);

}  // namespace msband

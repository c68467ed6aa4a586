#pragma once

#include <cstdint>
#include <limits>

#include <nlohmann/json_fwd.hpp>

#include "msband/metrics.hpp"

namespace msband {

// One self-contained synthetic trial: draw spectra, synthesize, mix, acquire
// at the minimum density, reconstruct, measure.  Every random draw derives
// from `seed`, so equal configs give equal reports.
struct TrialConfig {
  std::uint64_t seed = 0;
  int length = 512;
  int channels = 8;
  int sources = 4;
  int max_blocks = 3;
  double level_lo = 0.5;
  double level_hi = 2.0;
  int width_lo = 4;
  int width_hi = 32;
  // Subband index whose samples are discarded before reconstruction;
  // -1 keeps everything.
  int drop_subband = -1;
  // Also run the per-channel baseline and record its totals and NMSE.
  bool with_baseline = false;
  // Pass bar for verify_density_bound; NaN picks -120 dB when every subband
  // width divides the window and -80 dB otherwise.
  double nmse_threshold = std::numeric_limits<double>::quiet_NaN();
};

ExperimentReport run_trial(const TrialConfig& config);

// Index of the subband carrying the largest prescribed source energy; ties
// go to the lower index.  -1 when the plan is empty.
int busiest_subband(const SubbandPlan& plan, const std::vector<PsdSpec>& specs);

nlohmann::json report_to_json(const ExperimentReport& report);

}  // namespace msband

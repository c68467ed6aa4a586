#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "msband/errors.hpp"

namespace msband {

// DFT bin grid {0, ..., length-1} of an even-length observation window.
// Bin k and bin (length - k) % length form a conjugate pair.
struct FrequencyGrid {
  int length = 0;
};

void validate(const FrequencyGrid& grid);

// Half-open bin interval [lo, hi) with a flat positive level.
struct PsdBlock {
  int lo = 0;
  int hi = 0;
  double level = 0.0;
};

// Piecewise-constant power spectral density of one latent source.  Invariants
// enforced at construction: blocks lie inside the grid, do not overlap, carry
// strictly positive levels, and the level function satisfies
// level(k) == level((T - k) % T) exactly.
class PsdSpec {
 public:
  PsdSpec(FrequencyGrid grid, std::vector<PsdBlock> blocks, int source_index = 0);

  const FrequencyGrid& grid() const { return grid_; }
  int length() const { return grid_.length; }
  // Sorted by lo, exactly as validated; mirrors are stored explicitly.
  const std::vector<PsdBlock>& blocks() const { return blocks_; }
  int source_index() const { return source_index_; }

  // Number of bins with nonzero level.
  int support_size() const;
  double level_at(int bin) const;
  std::vector<std::uint8_t> support_mask() const;

  // Serialized form lists blocks for bins 0..T/2 only; the negative-frequency
  // mirrors are regenerated on load.
  nlohmann::json to_json() const;
  static PsdSpec from_json(const nlohmann::json& j, int source_index = 0);

 private:
  FrequencyGrid grid_;
  std::vector<PsdBlock> blocks_;
  int source_index_ = 0;
};

// Draws 1..max_blocks block pairs with widths in [width.first, width.second]
// bins and levels in [level.first, level.second], placed uniformly in the
// strictly positive half-grid (bins 1..T/2-1) so every block has a distinct
// mirror.  Identical seeds give identical specs.
PsdSpec random_psd_spec(const FrequencyGrid& grid, std::uint64_t seed,
                        int max_blocks, std::pair<double, double> level,
                        std::pair<int, int> width, int source_index = 0);

// Maximal bin interval over which the set of spectrally active sources is
// constant.  `active` holds the 0-based indices of the sources whose support
// covers the interval, sorted ascending.
struct Subband {
  int lo = 0;
  int hi = 0;
  std::vector<int> active;

  int width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

struct SubbandPlan {
  int length = 0;        // grid length T shared by all sources
  int source_count = 0;  // M
  std::vector<Subband> subbands;

  // Sum over subbands of width * |active|; equals the total bandwidth of the
  // source set by construction.
  long bandwidth() const;
};

// Splits the grid at every block edge of every source and keeps the intervals
// where at least one source is active.  All specs must share one grid.
SubbandPlan partition_subbands(const std::vector<PsdSpec>& specs);

// Sum of support sizes over all sources (bins, counting both halves).
long total_bandwidth(const std::vector<PsdSpec>& specs);

}  // namespace msband

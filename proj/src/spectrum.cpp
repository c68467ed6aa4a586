#include "msband/spectrum.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "msband/rng.hpp"

namespace msband {

void validate(const FrequencyGrid& grid) {
  if (grid.length < 2 || grid.length % 2 != 0) {
    throw Error(ErrorCode::DomainError,
                "grid length must be even and at least 2, got " +
                    std::to_string(grid.length));
  }
}

PsdSpec::PsdSpec(FrequencyGrid grid, std::vector<PsdBlock> blocks,
                 int source_index)
    : grid_(grid), blocks_(std::move(blocks)), source_index_(source_index) {
  validate(grid_);
  const int T = grid_.length;
  for (const auto& b : blocks_) {
    if (b.lo < 0 || b.hi > T || b.lo >= b.hi) {
      throw Error(ErrorCode::DomainError,
                  "block [" + std::to_string(b.lo) + ", " +
                      std::to_string(b.hi) + ") outside grid of length " +
                      std::to_string(T));
    }
  }
  std::sort(blocks_.begin(), blocks_.end(),
            [](const PsdBlock& a, const PsdBlock& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < blocks_.size(); ++i) {
    if (blocks_[i].lo < blocks_[i - 1].hi) {
      throw Error(ErrorCode::OverlappingBlocks,
                  "blocks [" + std::to_string(blocks_[i - 1].lo) + ", " +
                      std::to_string(blocks_[i - 1].hi) + ") and [" +
                      std::to_string(blocks_[i].lo) + ", " +
                      std::to_string(blocks_[i].hi) + ") overlap");
    }
  }
  for (const auto& b : blocks_) {
    if (!(b.level > 0.0)) {
      throw Error(ErrorCode::ZeroLevel,
                  "block [" + std::to_string(b.lo) + ", " +
                      std::to_string(b.hi) + ") has non-positive level");
    }
  }
  // Exact symmetry check bin by bin; half-grid suffices since the relation
  // is symmetric in k and T-k.
  for (int k = 1; k < T / 2; ++k) {
    double a = level_at(k);
    double b = level_at(T - k);
    if (a != b) {
      throw Error(ErrorCode::AsymmetricSpectrum,
                  "level at bin " + std::to_string(k) + " (" +
                      std::to_string(a) + ") does not match bin " +
                      std::to_string(T - k) + " (" + std::to_string(b) + ")");
    }
  }
}

int PsdSpec::support_size() const {
  int total = 0;
  for (const auto& b : blocks_) total += b.hi - b.lo;
  return total;
}

double PsdSpec::level_at(int bin) const {
  // Blocks are sorted and disjoint: find the first block ending past bin.
  auto it = std::upper_bound(
      blocks_.begin(), blocks_.end(), bin,
      [](int k, const PsdBlock& b) { return k < b.hi; });
  if (it != blocks_.end() && it->lo <= bin && bin < it->hi) return it->level;
  return 0.0;
}

std::vector<std::uint8_t> PsdSpec::support_mask() const {
  std::vector<std::uint8_t> mask(grid_.length, 0);
  for (const auto& b : blocks_) {
    for (int k = b.lo; k < b.hi; ++k) mask[k] = 1;
  }
  return mask;
}

nlohmann::json PsdSpec::to_json() const {
  const int half = grid_.length / 2;
  nlohmann::json out;
  out["T"] = grid_.length;
  out["blocks"] = nlohmann::json::array();
  for (const auto& b : blocks_) {
    // Keep only the part at bins 0..T/2; the rest is the implicit mirror.
    int lo = b.lo;
    int hi = std::min(b.hi, half + 1);
    if (lo > half) continue;
    if (lo >= hi) continue;
    out["blocks"].push_back({{"lo", lo}, {"hi", hi}, {"level", b.level}});
  }
  return out;
}

PsdSpec PsdSpec::from_json(const nlohmann::json& j, int source_index) {
  if (!j.is_object() || !j.contains("T") || !j.contains("blocks")) {
    throw Error(ErrorCode::ParseError, "spectrum json needs fields T and blocks");
  }
  if (!j["T"].is_number_integer()) {
    throw Error(ErrorCode::ParseError, "spectrum field T must be an integer");
  }
  FrequencyGrid grid{j["T"].get<int>()};
  validate(grid);
  const int T = grid.length;
  const int half = T / 2;
  std::vector<PsdBlock> blocks;
  for (const auto& jb : j["blocks"]) {
    if (!jb.contains("lo") || !jb.contains("hi") || !jb.contains("level")) {
      throw Error(ErrorCode::ParseError, "block json needs fields lo, hi, level");
    }
    PsdBlock b{jb["lo"].get<int>(), jb["hi"].get<int>(),
               jb["level"].get<double>()};
    if (b.hi > half + 1) {
      throw Error(ErrorCode::ParseError,
                  "block [" + std::to_string(b.lo) + ", " +
                      std::to_string(b.hi) +
                      ") extends past the non-redundant half of the grid");
    }
    blocks.push_back(b);
    // Regenerate the mirror of the strictly-positive, non-extremal bins.
    int a = std::max(b.lo, 1);
    int z = std::min(b.hi - 1, half - 1);
    if (a <= z) blocks.push_back({T - z, T - a + 1, b.level});
  }
  return PsdSpec(grid, std::move(blocks), source_index);
}

PsdSpec random_psd_spec(const FrequencyGrid& grid, std::uint64_t seed,
                        int max_blocks, std::pair<double, double> level,
                        std::pair<int, int> width, int source_index) {
  validate(grid);
  const int T = grid.length;
  if (max_blocks < 1) {
    throw Error(ErrorCode::DomainError, "max_blocks must be at least 1");
  }
  if (width.first < 1 || width.first > width.second) {
    throw Error(ErrorCode::DomainError, "invalid width range");
  }
  if (!(level.first > 0.0) || level.first > level.second) {
    throw Error(ErrorCode::DomainError, "invalid level range");
  }
  // Placement region is bins 1..T/2-1 so DC and the Nyquist bin stay empty
  // and every placed block owns a distinct mirror.
  const int capacity = T / 2 - 1;
  if (max_blocks * width.first > capacity) {
    throw Error(ErrorCode::InfeasiblePlacement,
                std::to_string(max_blocks) + " blocks of minimum width " +
                    std::to_string(width.first) + " exceed the " +
                    std::to_string(capacity) + " bins available");
  }

  Rng rng(seed);
  int count = rng.uniform_int(1, max_blocks);
  std::vector<PsdBlock> placed;
  for (int i = 0; i < count; ++i) {
    int w = rng.uniform_int(width.first, width.second);
    double lvl = rng.uniform(level.first, level.second);
    bool ok = false;
    // Rejection sampling with a fallback to the minimum width; the capacity
    // check above guarantees minimum-width blocks always have room, but a
    // crowded grid can still defeat random placement.
    for (int attempt = 0; attempt < 400 && !ok; ++attempt) {
      if (attempt == 200) w = width.first;
      if (w > capacity) break;
      int lo = rng.uniform_int(1, T / 2 - w);
      int hi = lo + w;
      ok = std::none_of(placed.begin(), placed.end(), [&](const PsdBlock& b) {
        return lo < b.hi && b.lo < hi;
      });
      if (ok) placed.push_back({lo, hi, lvl});
    }
    if (!ok) {
      throw Error(ErrorCode::InfeasiblePlacement,
                  "could not place block " + std::to_string(i + 1) + " of " +
                      std::to_string(count));
    }
  }
  std::vector<PsdBlock> blocks;
  for (const auto& b : placed) {
    blocks.push_back(b);
    blocks.push_back({T - b.hi + 1, T - b.lo + 1, b.level});
  }
  return PsdSpec(grid, std::move(blocks), source_index);
}

long SubbandPlan::bandwidth() const {
  long total = 0;
  for (const auto& sb : subbands) {
    total += static_cast<long>(sb.width()) * static_cast<long>(sb.active.size());
  }
  return total;
}

SubbandPlan partition_subbands(const std::vector<PsdSpec>& specs) {
  if (specs.empty()) {
    throw Error(ErrorCode::DomainError, "partition needs at least one spectrum");
  }
  const int T = specs.front().length();
  for (const auto& s : specs) {
    if (s.length() != T) {
      throw Error(ErrorCode::GridMismatch,
                  "spectra use grids of length " + std::to_string(T) + " and " +
                      std::to_string(s.length()));
    }
  }
  std::set<int> edges;
  for (const auto& s : specs) {
    for (const auto& b : s.blocks()) {
      edges.insert(b.lo);
      edges.insert(b.hi);
    }
  }
  SubbandPlan plan;
  plan.length = T;
  plan.source_count = static_cast<int>(specs.size());
  if (edges.empty()) return plan;  // all spectra empty: no subbands
  std::vector<int> cuts(edges.begin(), edges.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Subband sb{cuts[i], cuts[i + 1], {}};
    for (std::size_t m = 0; m < specs.size(); ++m) {
      // No block edge falls inside the interval, so activity at the left
      // endpoint holds across all of it.
      if (specs[m].level_at(sb.lo) > 0.0) sb.active.push_back(static_cast<int>(m));
    }
    if (!sb.active.empty()) plan.subbands.push_back(std::move(sb));
  }
  return plan;
}

long total_bandwidth(const std::vector<PsdSpec>& specs) {
  long total = 0;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    if (specs[m].length() != specs.front().length()) {
      throw Error(ErrorCode::GridMismatch, "spectra use different grid lengths");
    }
    total += specs[m].support_size();
  }
  return total;
}

}  // namespace msband

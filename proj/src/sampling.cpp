#include "msband/sampling.hpp"

#include <algorithm>
#include <complex>
#include <numbers>

#include "msband/fft.hpp"

namespace msband {
namespace {

void check_active(const std::vector<int>& active, int sources) {
  if (active.empty()) {
    throw Error(ErrorCode::DomainError, "active source list is empty");
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] < 0 || active[i] >= sources) {
      throw Error(ErrorCode::DomainError,
                  "active source " + std::to_string(active[i]) +
                      " outside 0.." + std::to_string(sources - 1));
    }
    if (i > 0 && active[i] <= active[i - 1]) {
      throw Error(ErrorCode::DomainError,
                  "active source list must be strictly increasing");
    }
  }
}

}  // namespace

namespace detail {

RowSelection select_rows_raw(const Eigen::MatrixXd& mixing,
                             const std::vector<int>& active) {
  check_active(active, static_cast<int>(mixing.cols()));
  const int n = static_cast<int>(mixing.rows());
  const int s = static_cast<int>(active.size());
  if (s > n) {
    throw Error(ErrorCode::DimensionError,
                "more active sources than channels");
  }
  Eigen::MatrixXd sub(n, s);
  for (int i = 0; i < s; ++i) sub.col(i) = mixing.col(active[i]);

  // Column pivoting on the transpose ranks channels by how much new row
  // space each contributes.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub.transpose());
  if (qr.rank() < s) {
    throw Error(ErrorCode::RankDeficient,
                "active-source submatrix has rank " +
                    std::to_string(qr.rank()) + ", no invertible row subset");
  }
  Eigen::VectorXi perm = qr.colsPermutation().indices();
  RowSelection out;
  out.rows.assign(perm.data(), perm.data() + s);
  std::sort(out.rows.begin(), out.rows.end());

  Eigen::MatrixXd square(s, s);
  for (int i = 0; i < s; ++i) square.row(i) = sub.row(out.rows[i]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(square);
  out.condition = svd.singularValues()(0) / svd.singularValues()(s - 1);
  return out;
}

}  // namespace detail

RowSelection select_rows(const MixingMatrix& mixing,
                         const std::vector<int>& active) {
  return detail::select_rows_raw(mixing.matrix(), active);
}

std::vector<int> temporal_positions(int count, int length) {
  if (length < 1 || count < 1 || count > length) {
    throw Error(ErrorCode::DomainError,
                "need 1 <= count <= length, got count " +
                    std::to_string(count) + ", length " +
                    std::to_string(length));
  }
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) {
    out[i] = static_cast<int>((static_cast<long>(i) * length) / count);
  }
  return out;
}

Eigen::VectorXcd subband_component(const Eigen::VectorXd& x, int lo, int hi) {
  const int T = static_cast<int>(x.size());
  if (lo < 0 || hi > T || lo >= hi) {
    throw Error(ErrorCode::DomainError, "bin range outside the grid");
  }
  Eigen::VectorXcd spectrum = fft::forward_real(x);
  Eigen::VectorXcd masked = Eigen::VectorXcd::Zero(T);
  masked.segment(lo, hi - lo) = spectrum.segment(lo, hi - lo);
  return fft::inverse(masked) / static_cast<double>(T);
}

Eigen::MatrixXcd subband_component(const SignalEnsemble& ensemble,
                                   const Subband& band) {
  Eigen::MatrixXcd out(ensemble.channels(), ensemble.length());
  for (int n = 0; n < ensemble.channels(); ++n) {
    out.row(n) =
        subband_component(ensemble.samples.row(n).transpose(), band.lo, band.hi)
            .transpose();
  }
  return out;
}

long SampleSet::total_samples() const {
  long total = 0;
  for (const auto& band : bands) {
    total += static_cast<long>(band.rows.size()) *
             static_cast<long>(band.times.size());
  }
  return total;
}

SampleSet acquire(const SignalEnsemble& observed, const SubbandPlan& plan,
                  const MixingMatrix& mixing) {
  if (observed.channels() != mixing.channels()) {
    throw Error(ErrorCode::SizeMismatch,
                "ensemble has " + std::to_string(observed.channels()) +
                    " channels, mixing expects " +
                    std::to_string(mixing.channels()));
  }
  if (observed.length() != plan.length) {
    throw Error(ErrorCode::GridMismatch,
                "ensemble length " + std::to_string(observed.length()) +
                    " does not match plan grid " + std::to_string(plan.length));
  }
  if (plan.source_count != mixing.sources()) {
    throw Error(ErrorCode::SizeMismatch,
                "plan covers " + std::to_string(plan.source_count) +
                    " sources, mixing has " + std::to_string(mixing.sources()));
  }

  const int T = plan.length;
  // One full-length DFT per channel; band values are then partial inverse
  // sums over the band's bins at the sampling instants only.
  std::vector<Eigen::VectorXcd> spectra(observed.channels());
  for (int n = 0; n < observed.channels(); ++n) {
    spectra[n] = fft::forward_real(observed.samples.row(n).transpose());
  }

  SampleSet out;
  out.length = T;
  out.channels = observed.channels();
  const double step = 2.0 * std::numbers::pi / T;
  for (std::size_t l = 0; l < plan.subbands.size(); ++l) {
    const Subband& sb = plan.subbands[l];
    RowSelection sel = select_rows(mixing, sb.active);
    SampleBand band;
    band.subband = static_cast<int>(l);
    band.rows = sel.rows;
    band.row_condition = sel.condition;
    band.times = temporal_positions(sb.width(), T);
    band.values.resize(sel.rows.size(), band.times.size());
    for (std::size_t i = 0; i < sel.rows.size(); ++i) {
      const Eigen::VectorXcd& spec = spectra[sel.rows[i]];
      for (std::size_t j = 0; j < band.times.size(); ++j) {
        std::complex<double> acc(0.0, 0.0);
        for (int k = sb.lo; k < sb.hi; ++k) {
          acc += spec(k) * std::polar(1.0, step * k * band.times[j]);
        }
        band.values(i, j) = acc / static_cast<double>(T);
      }
    }
    out.bands.push_back(std::move(band));
  }
  return out;
}

double sampling_density(const SampleSet& samples) {
  if (samples.length < 1 || samples.channels < 1) {
    throw Error(ErrorCode::DomainError, "sample set has an empty grid");
  }
  return static_cast<double>(samples.total_samples()) /
         (static_cast<double>(samples.length) *
          static_cast<double>(samples.channels));
}

SampleSet drop_subband(const SampleSet& samples, int band_index) {
  SampleSet out;
  out.length = samples.length;
  out.channels = samples.channels;
  bool found = false;
  for (const auto& band : samples.bands) {
    if (band.subband == band_index) {
      found = true;
      continue;
    }
    out.bands.push_back(band);
  }
  if (!found) {
    throw Error(ErrorCode::DomainError,
                "no band with subband index " + std::to_string(band_index));
  }
  return out;
}

BaselineRates separate_baseline(const MixingMatrix& mixing,
                                const std::vector<PsdSpec>& specs) {
  if (static_cast<int>(specs.size()) != mixing.sources()) {
    throw Error(ErrorCode::SizeMismatch,
                "mixing has " + std::to_string(mixing.sources()) +
                    " sources, got " + std::to_string(specs.size()) +
                    " spectra");
  }
  const int T = specs.empty() ? 0 : specs.front().length();
  BaselineRates out;
  for (int n = 0; n < mixing.channels(); ++n) {
    // A channel observes exactly the bins of the sources it is structurally
    // coupled to; zero mixing entries contribute nothing at any time.
    std::vector<std::uint8_t> mask(T, 0);
    for (int m = 0; m < mixing.sources(); ++m) {
      if (mixing.matrix()(n, m) == 0.0) continue;
      auto source_mask = specs[m].support_mask();
      for (int k = 0; k < T; ++k) mask[k] |= source_mask[k];
    }
    long bins = std::count(mask.begin(), mask.end(), std::uint8_t{1});
    out.per_channel.push_back(bins);
    out.total += bins;
  }
  return out;
}

}  // namespace msband

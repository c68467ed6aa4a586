#include "msband/reconstruct.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <set>

#include "msband/fft.hpp"

namespace msband {
namespace {

constexpr double kRealnessTolerance = 1e-8;

// Exact condition for the sizes seen here (subband widths); falls back to an
// R-diagonal estimate for unusually wide bands where the SVD would dominate
// the solve cost.
double system_condition(const Eigen::MatrixXcd& matrix,
                        const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>& qr) {
  if (matrix.rows() <= 256) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(matrix);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues()(0) / smin;
  }
  const auto& r = qr.matrixR();
  double first = std::abs(r(0, 0));
  double last = std::abs(r(r.rows() - 1, r.cols() - 1));
  if (last == 0.0) return std::numeric_limits<double>::infinity();
  return first / last;
}

Eigen::VectorXcd solve_band_coefficients(const Eigen::VectorXcd& samples,
                                         const std::vector<int>& times, int lo,
                                         int width, int length,
                                         double* condition) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(length));
  const double step = 2.0 * std::numbers::pi / length;

  bool uniform = length % width == 0;
  for (int j = 0; uniform && j < width; ++j) {
    uniform = times[static_cast<std::size_t>(j)] ==
              static_cast<int>((static_cast<long>(j) * length) / width);
  }
  if (uniform) {
    // Uniform instants make the system a phase-twisted DFT: invert by FFT.
    Eigen::VectorXcd twisted(width);
    for (int j = 0; j < width; ++j) {
      twisted(j) = samples(j) / scale *
                   std::polar(1.0, -step * lo * times[static_cast<std::size_t>(j)]);
    }
    if (condition) *condition = 1.0;
    return fft::forward(twisted) / static_cast<double>(width);
  }

  Eigen::MatrixXcd system(width, width);
  for (int j = 0; j < width; ++j) {
    for (int k = 0; k < width; ++k) {
      system(j, k) =
          scale * std::polar(1.0, step * (lo + k) * times[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(system);
  double cond = system_condition(system, qr);
  if (condition) *condition = cond;
  if (qr.rank() < width) {
    throw Error(ErrorCode::SingularSystem,
                "temporal system for bins [" + std::to_string(lo) + ", " +
                    std::to_string(lo + width) + ") is numerically singular",
                cond);
  }
  Eigen::VectorXcd coeff = qr.solve(samples);
  // Fixed-precision iterative refinement keeps the non-uniform solve close
  // to the uniform path's accuracy.
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXcd residual = samples - system * coeff;
    if (residual.lpNorm<Eigen::Infinity>() <=
        1e-15 * samples.lpNorm<Eigen::Infinity>()) {
      break;
    }
    coeff += qr.solve(residual);
  }
  return coeff;
}

}  // namespace

Eigen::VectorXcd temporal_interpolate(const Eigen::VectorXcd& samples,
                                      const std::vector<int>& times, int lo,
                                      int hi, int length,
                                      double* condition) {
  if (lo < 0 || hi > length || lo >= hi) {
    throw Error(ErrorCode::DomainError, "bin range outside the grid");
  }
  const int width = hi - lo;
  if (static_cast<int>(times.size()) != width ||
      static_cast<int>(samples.size()) != width) {
    throw Error(ErrorCode::SizeMismatch,
                "need exactly " + std::to_string(width) +
                    " samples and instants for bins [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + ")");
  }
  std::set<int> seen;
  for (int t : times) {
    if (t < 0 || t >= length) {
      throw Error(ErrorCode::DomainError,
                  "instant " + std::to_string(t) + " outside the window");
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::DomainError,
                  "instant " + std::to_string(t) + " repeats");
    }
  }

  Eigen::VectorXcd coeff =
      solve_band_coefficients(samples, times, lo, width, length, condition);
  Eigen::VectorXcd spectrum = Eigen::VectorXcd::Zero(length);
  spectrum.segment(lo, width) =
      coeff * std::sqrt(static_cast<double>(length));
  return fft::inverse(spectrum) / static_cast<double>(length);
}

SpatialInterpolator build_spatial_interpolator(const MixingMatrix& mixing,
                                               const std::vector<int>& active,
                                               const std::vector<int>& rows) {
  if (rows.size() != active.size()) {
    throw Error(ErrorCode::SizeMismatch,
                "need one selected row per active source");
  }
  const int s = static_cast<int>(rows.size());
  if (s == 0) throw Error(ErrorCode::DomainError, "no active sources");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= mixing.channels()) {
      throw Error(ErrorCode::DomainError,
                  "row " + std::to_string(rows[i]) + " outside 0.." +
                      std::to_string(mixing.channels() - 1));
    }
    if (i > 0 && rows[i] <= rows[i - 1]) {
      throw Error(ErrorCode::DomainError, "rows must be strictly increasing");
    }
    if (active[i] < 0 || active[i] >= mixing.sources()) {
      throw Error(ErrorCode::DomainError,
                  "active source " + std::to_string(active[i]) +
                      " outside 0.." + std::to_string(mixing.sources() - 1));
    }
  }

  Eigen::MatrixXd columns(mixing.channels(), s);
  for (int i = 0; i < s; ++i) columns.col(i) = mixing.matrix().col(active[i]);
  Eigen::MatrixXd square(s, s);
  for (int i = 0; i < s; ++i) square.row(i) = columns.row(rows[i]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(square);
  double smin = svd.singularValues()(s - 1);
  double cond = smin == 0.0 ? std::numeric_limits<double>::infinity()
                            : svd.singularValues()(0) / smin;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(square.transpose());
  if (qr.rank() < s) {
    throw Error(ErrorCode::SingularSystem,
                "selected rows do not invert the active mixing columns", cond);
  }

  SpatialInterpolator out;
  out.rows = rows;
  out.active = active;
  // lift * square == columns, via square^T lift^T == columns^T.
  out.lift = qr.solve(columns.transpose()).transpose();
  out.condition = cond;
  return out;
}

Eigen::MatrixXcd spatial_interpolate(const SpatialInterpolator& interp,
                                     const Eigen::MatrixXcd& selected) {
  if (selected.rows() != static_cast<Eigen::Index>(interp.rows.size())) {
    throw Error(ErrorCode::SizeMismatch,
                "component has " + std::to_string(selected.rows()) +
                    " rows, interpolator expects " +
                    std::to_string(interp.rows.size()));
  }
  return interp.lift.cast<std::complex<double>>() * selected;
}

SignalEnsemble reconstruct(const SampleSet& samples, const SubbandPlan& plan,
                           const MixingMatrix& mixing,
                           ReconstructionInfo* info) {
  if (samples.length != plan.length) {
    throw Error(ErrorCode::GridMismatch,
                "sample window " + std::to_string(samples.length) +
                    " does not match plan grid " + std::to_string(plan.length));
  }
  if (samples.channels != mixing.channels()) {
    throw Error(ErrorCode::SizeMismatch,
                "sample set covers " + std::to_string(samples.channels) +
                    " channels, mixing has " +
                    std::to_string(mixing.channels()));
  }
  if (plan.source_count != mixing.sources()) {
    throw Error(ErrorCode::SizeMismatch,
                "plan covers " + std::to_string(plan.source_count) +
                    " sources, mixing has " + std::to_string(mixing.sources()));
  }

  const int T = plan.length;
  const int N = mixing.channels();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(N, T);
  ReconstructionInfo local;
  std::set<int> covered;

  for (const auto& band : samples.bands) {
    if (band.subband < 0 ||
        band.subband >= static_cast<int>(plan.subbands.size())) {
      throw Error(ErrorCode::DomainError,
                  "band references subband " + std::to_string(band.subband) +
                      " outside the plan");
    }
    if (!covered.insert(band.subband).second) {
      throw Error(ErrorCode::DomainError,
                  "subband " + std::to_string(band.subband) +
                      " appears twice in the sample set");
    }
    const Subband& sb = plan.subbands[static_cast<std::size_t>(band.subband)];
    if (band.rows.size() != sb.active.size()) {
      throw Error(ErrorCode::SizeMismatch,
                  "band " + std::to_string(band.subband) + " has " +
                      std::to_string(band.rows.size()) + " rows for " +
                      std::to_string(sb.active.size()) + " active sources");
    }
    if (static_cast<int>(band.times.size()) != sb.width() ||
        band.values.rows() != static_cast<Eigen::Index>(band.rows.size()) ||
        band.values.cols() != static_cast<Eigen::Index>(band.times.size())) {
      throw Error(ErrorCode::SizeMismatch,
                  "band " + std::to_string(band.subband) +
                      " sample block does not match the subband shape");
    }

    double temporal_cond = 0.0;
    Eigen::MatrixXcd component(band.rows.size(), T);
    for (std::size_t i = 0; i < band.rows.size(); ++i) {
      double cond = 0.0;
      component.row(i) =
          temporal_interpolate(band.values.row(i).transpose(), band.times,
                               sb.lo, sb.hi, T, &cond)
              .transpose();
      temporal_cond = std::max(temporal_cond, cond);
    }
    SpatialInterpolator lift =
        build_spatial_interpolator(mixing, sb.active, band.rows);
    acc += spatial_interpolate(lift, component);

    local.per_subband.push_back({band.subband, temporal_cond, lift.condition});
    local.max_temporal_condition =
        std::max(local.max_temporal_condition, temporal_cond);
    local.max_spatial_condition =
        std::max(local.max_spatial_condition, lift.condition);
  }

  double peak = acc.cwiseAbs().maxCoeff();
  double imag_peak = acc.imag().cwiseAbs().maxCoeff();
  local.imaginary_residue = peak > 0.0 ? imag_peak / peak : 0.0;
  if (info) *info = local;

  // Every subband present means the one-sided components must pair up into a
  // real signal; a large residue then signals corrupted samples.
  bool complete = covered.size() == plan.subbands.size();
  if (complete && local.imaginary_residue > kRealnessTolerance) {
    throw Error(ErrorCode::ImaginaryResidue,
                "reconstruction from a complete sample set has relative "
                "imaginary residue " +
                    std::to_string(local.imaginary_residue),
                local.imaginary_residue);
  }

  SignalEnsemble out;
  out.role = SignalRole::reconstructed;
  out.samples = acc.real();
  return out;
}

SignalEnsemble separate_reconstruct(const SignalEnsemble& observed,
                                    const MixingMatrix& mixing,
                                    const std::vector<PsdSpec>& specs,
                                    ReconstructionInfo* info) {
  if (observed.channels() != mixing.channels()) {
    throw Error(ErrorCode::SizeMismatch,
                "ensemble has " + std::to_string(observed.channels()) +
                    " channels, mixing expects " +
                    std::to_string(mixing.channels()));
  }
  if (static_cast<int>(specs.size()) != mixing.sources()) {
    throw Error(ErrorCode::SizeMismatch,
                "mixing has " + std::to_string(mixing.sources()) +
                    " sources, got " + std::to_string(specs.size()) +
                    " spectra");
  }
  const int T = observed.length();
  for (const auto& s : specs) {
    if (s.length() != T) {
      throw Error(ErrorCode::GridMismatch,
                  "spectrum grid does not match the ensemble window");
    }
  }

  const double step = 2.0 * std::numbers::pi / T;
  ReconstructionInfo local;
  SignalEnsemble out;
  out.role = SignalRole::reconstructed;
  out.samples = Eigen::MatrixXd::Zero(observed.channels(), T);

  for (int n = 0; n < observed.channels(); ++n) {
    std::vector<std::uint8_t> mask(T, 0);
    for (int m = 0; m < mixing.sources(); ++m) {
      if (mixing.matrix()(n, m) == 0.0) continue;
      auto source_mask = specs[static_cast<std::size_t>(m)].support_mask();
      for (int k = 0; k < T; ++k) mask[k] |= source_mask[k];
    }
    Eigen::VectorXcd spectrum =
        fft::forward_real(observed.samples.row(n).transpose());
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(T);

    // Each maximal run of supported bins is one independent bandpass solve,
    // sampled at its own minimal uniform-by-construction grid.
    int k = 0;
    while (k < T) {
      if (!mask[static_cast<std::size_t>(k)]) {
        ++k;
        continue;
      }
      int lo = k;
      while (k < T && mask[static_cast<std::size_t>(k)]) ++k;
      int hi = k;
      int width = hi - lo;
      std::vector<int> times = temporal_positions(width, T);
      Eigen::VectorXcd values(width);
      for (int j = 0; j < width; ++j) {
        std::complex<double> v(0.0, 0.0);
        for (int bin = lo; bin < hi; ++bin) {
          v += spectrum(bin) * std::polar(1.0, step * bin * times[static_cast<std::size_t>(j)]);
        }
        values(j) = v / static_cast<double>(T);
      }
      double cond = 0.0;
      acc += temporal_interpolate(values, times, lo, hi, T, &cond);
      local.max_temporal_condition =
          std::max(local.max_temporal_condition, cond);
    }

    double peak = acc.cwiseAbs().maxCoeff();
    double imag_peak = acc.imag().cwiseAbs().maxCoeff();
    if (peak > 0.0) {
      local.imaginary_residue =
          std::max(local.imaginary_residue, imag_peak / peak);
    }
    out.samples.row(n) = acc.real().transpose();
  }

  if (info) *info = local;
  if (local.imaginary_residue > kRealnessTolerance) {
    throw Error(ErrorCode::ImaginaryResidue,
                "per-channel reconstruction has relative imaginary residue " +
                    std::to_string(local.imaginary_residue),
                local.imaginary_residue);
  }
  return out;
}

}  // namespace msband

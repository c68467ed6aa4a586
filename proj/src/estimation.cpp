#include "msband/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "msband/fft.hpp"

namespace msband {

EstimationResult estimate_latents(const Eigen::MatrixXd& observed, int sources,
                                  double variance_target) {
  const int N = static_cast<int>(observed.rows());
  const int T = static_cast<int>(observed.cols());
  if (N < 1 || T < 2) {
    throw Error(ErrorCode::DomainError,
                "need at least one channel and two samples");
  }
  if (sources <= 0 && !(variance_target > 0.0 && variance_target <= 1.0)) {
    throw Error(ErrorCode::DomainError,
                "variance target must lie in (0, 1]");
  }

  EstimationResult out;
  out.channel_means = observed.rowwise().mean();
  Eigen::MatrixXd centered = observed.colwise() - out.channel_means;
  Eigen::MatrixXd covariance =
      centered * centered.transpose() / static_cast<double>(T);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateCovariance,
                "eigendecomposition did not converge");
  }
  // Solver returns ascending order; flip to descending and clamp the tiny
  // negative values that symmetric rounding can produce.
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  values = values.cwiseMax(0.0);

  double total = values.sum();
  if (total <= 0.0) {
    throw Error(ErrorCode::DegenerateCovariance,
                "ensemble has no variance after centering");
  }
  int rank = 0;
  for (int i = 0; i < N; ++i) {
    if (values(i) > values(0) * 1e-12) ++rank;
  }

  int keep;
  if (sources > 0) {
    if (sources > rank) {
      throw Error(ErrorCode::DegenerateCovariance,
                  "requested " + std::to_string(sources) +
                      " components but covariance rank is " +
                      std::to_string(rank));
    }
    keep = sources;
  } else {
    keep = rank;
    double cumulative = 0.0;
    for (int i = 0; i < rank; ++i) {
      cumulative += values(i);
      // The small slack absorbs rounding when the target is exactly met.
      if (cumulative >= variance_target * total - 1e-12 * total) {
        keep = i + 1;
        break;
      }
    }
  }

  out.sources = keep;
  out.eigenvalues = values;
  out.retained_variance = values.head(keep).sum() / total;
  Eigen::VectorXd scale = values.head(keep).cwiseSqrt();
  out.mixing_hat = vectors.leftCols(keep) * scale.asDiagonal();
  out.latents_hat = scale.cwiseInverse().asDiagonal() *
                    vectors.leftCols(keep).transpose() * centered;
  return out;
}

Eigen::VectorXd empirical_psd(const Eigen::VectorXd& x) {
  return fft::periodogram(x);
}

ThresholdResult threshold_support(const Eigen::VectorXd& psd, double fraction,
                                  int source_index) {
  const int T = static_cast<int>(psd.size());
  validate(FrequencyGrid{T});
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::DomainError, "fraction must lie in [0, 1]");
  }
  if ((psd.array() < 0.0).any()) {
    throw Error(ErrorCode::DomainError, "psd values must be nonnegative");
  }
  double peak = psd.maxCoeff();
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::EmptySupport, "psd carries no power");
  }
  const double bar = fraction * peak;

  // Symmetrized power is exactly mirror-equal bin by bin, so every test
  // below treats k and T-k identically.
  Eigen::VectorXd sym(T);
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(T), 0);
  for (int k = 0; k < T; ++k) {
    int mirror = (T - k) % T;
    sym(k) = 0.5 * (psd(k) + psd(mirror));
    keep[static_cast<std::size_t>(k)] =
        sym(k) > 0.0 && (psd(k) >= bar || psd(mirror) >= bar);
  }
  long kept = std::count(keep.begin(), keep.end(), std::uint8_t{1});
  if (kept == 0) {
    throw Error(ErrorCode::EmptySupport, "no bin reaches the threshold");
  }

  // Maximal circular runs of kept bins.  Mirror runs must share one level
  // double, so levels are assigned per mirror orbit, not per run.
  struct Run {
    int start;
    int size;
  };
  std::vector<Run> runs;
  if (kept == static_cast<long>(T)) {
    runs.push_back({0, T});
  } else {
    for (int k = 0; k < T; ++k) {
      if (keep[static_cast<std::size_t>(k)] &&
          !keep[static_cast<std::size_t>((k - 1 + T) % T)]) {
        int size = 0;
        while (keep[static_cast<std::size_t>((k + size) % T)]) ++size;
        runs.push_back({k, size});
      }
    }
  }

  std::map<int, std::size_t> run_by_start;
  for (std::size_t i = 0; i < runs.size(); ++i) run_by_start[runs[i].start] = i;
  std::vector<double> level(runs.size(), 0.0);
  std::vector<bool> assigned(runs.size(), false);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (assigned[i]) continue;
    double mean = 0.0;
    for (int off = 0; off < runs[i].size; ++off) {
      mean += sym((runs[i].start + off) % T);
    }
    mean /= runs[i].size;
    level[i] = mean;
    assigned[i] = true;
    // The full circle is its own mirror; any other run pairs with the run
    // starting at the mirror of its last bin.
    if (runs[i].size == T) continue;
    int last = (runs[i].start + runs[i].size - 1) % T;
    auto it = run_by_start.find((T - last) % T);
    if (it == run_by_start.end()) {
      throw Error(ErrorCode::Internal, "kept-bin set lost its symmetry");
    }
    level[it->second] = mean;
    assigned[it->second] = true;
  }

  std::vector<PsdBlock> blocks;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    int start = runs[i].start;
    int end = start + runs[i].size;
    if (end <= T) {
      blocks.push_back({start, end, level[i]});
    } else {
      // Run wraps past the top bin: split into two blocks with one level.
      blocks.push_back({start, T, level[i]});
      blocks.push_back({0, end - T, level[i]});
    }
  }

  ThresholdResult out{PsdSpec(FrequencyGrid{T}, std::move(blocks), source_index),
                      std::move(keep)};
  return out;
}

Eigen::VectorXd apply_support_mask(const Eigen::VectorXd& x,
                                   const std::vector<std::uint8_t>& support) {
  if (x.size() != static_cast<Eigen::Index>(support.size())) {
    throw Error(ErrorCode::SizeMismatch,
                "mask length does not match the series");
  }
  Eigen::VectorXcd spectrum = fft::forward_real(x);
  for (Eigen::Index k = 0; k < spectrum.size(); ++k) {
    if (!support[static_cast<std::size_t>(k)]) spectrum(k) = 0.0;
  }
  return (fft::inverse(spectrum) / static_cast<double>(x.size())).real();
}

RealPipeline prepare_real_pipeline(const Eigen::MatrixXd& raw, int sources,
                                   double variance_target, double fraction) {
  RealPipeline out;
  out.estimate = estimate_latents(raw, sources, variance_target);
  const int M = out.estimate.sources;
  const int T = static_cast<int>(raw.cols());

  out.latents_thresholded.resize(M, T);
  for (int m = 0; m < M; ++m) {
    Eigen::VectorXd psd =
        empirical_psd(out.estimate.latents_hat.row(m).transpose());
    ThresholdResult thr = threshold_support(psd, fraction, m);
    out.source_psds.push_back(std::move(psd));
    out.latents_thresholded.row(m) =
        apply_support_mask(out.estimate.latents_hat.row(m).transpose(),
                           thr.support)
            .transpose();
    out.specs.push_back(std::move(thr.spec));
    out.support_masks.push_back(std::move(thr.support));
  }

  out.observed_thresholded.role = SignalRole::observed;
  out.observed_thresholded.samples =
      out.estimate.mixing_hat * out.latents_thresholded;

  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      Eigen::VectorXd a = out.estimate.latents_hat.row(i).transpose();
      Eigen::VectorXd b = out.estimate.latents_hat.row(j).transpose();
      double pa = a.squaredNorm() / T;
      double pb = b.squaredNorm() / T;
      if (pa == 0.0 || pb == 0.0) continue;
      auto corr = empirical_cross_correlation(a, b, T - 1);
      for (double r : corr) {
        out.max_latent_crosscorr =
            std::max(out.max_latent_crosscorr, std::abs(r) / std::sqrt(pa * pb));
      }
    }
  }
  return out;
}

}  // namespace msband

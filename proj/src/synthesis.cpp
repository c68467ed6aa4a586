#include "msband/synthesis.hpp"

#include <cmath>
#include <numbers>

#include "msband/rng.hpp"

namespace msband {

MixingMatrix::MixingMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  const auto rows = values_.rows();
  const auto cols = values_.cols();
  if (cols < 1 || rows < cols) {
    throw Error(ErrorCode::DimensionError,
                "mixing must have at least as many channels as sources, got " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(values_);
  if (qr.rank() < cols) {
    throw Error(ErrorCode::RankDeficient,
                "mixing has rank " + std::to_string(qr.rank()) +
                    " but needs full column rank " + std::to_string(cols));
  }
  for (Eigen::Index n = 0; n < rows; ++n) {
    if (values_.row(n).lpNorm<Eigen::Infinity>() == 0.0) {
      throw Error(ErrorCode::DomainError,
                  "mixing row " + std::to_string(n) + " is identically zero");
    }
  }
}

double MixingMatrix::condition() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(values_);
  return svd.singularValues()(0) /
         svd.singularValues()(svd.singularValues().size() - 1);
}

MixingMatrix random_mixing_matrix(int channels, int sources,
                                  std::uint64_t seed) {
  if (sources < 1 || channels < sources) {
    throw Error(ErrorCode::DimensionError,
                "need channels >= sources >= 1, got " +
                    std::to_string(channels) + "x" + std::to_string(sources));
  }
  Rng rng(seed);
  // Gaussian entries are full rank with probability one; the redraw loop
  // guards against freak near-singular draws so downstream conditioning
  // stays bounded.
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd values(channels, sources);
    for (int n = 0; n < channels; ++n) {
      for (int m = 0; m < sources; ++m) values(n, m) = rng.normal();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(values);
    double smin = svd.singularValues()(sources - 1);
    if (smin <= 0.0) continue;
    if (svd.singularValues()(0) / smin > 1e6) continue;
    bool zero_row = false;
    for (int n = 0; n < channels && !zero_row; ++n) {
      zero_row = values.row(n).lpNorm<Eigen::Infinity>() == 0.0;
    }
    if (zero_row) continue;
    return MixingMatrix(std::move(values));
  }
  throw Error(ErrorCode::Internal, "mixing draw failed to converge");
}

PhaseDraw PhaseDraw::draw(int sources, int length, std::uint64_t seed) {
  validate(FrequencyGrid{length});
  if (sources < 1) {
    throw Error(ErrorCode::DomainError, "need at least one source");
  }
  const int bins = length / 2 - 1;
  PhaseDraw out;
  out.seed = seed;
  out.phases.resize(sources, bins);
  Rng rng(seed);
  for (int m = 0; m < sources; ++m) {
    for (int k = 0; k < bins; ++k) {
      out.phases(m, k) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }
  return out;
}

Eigen::VectorXd synthesize_latent(const PsdSpec& spec,
                                  const Eigen::VectorXd& phases) {
  const int T = spec.length();
  const int half = T / 2;
  if (phases.size() != half - 1) {
    throw Error(ErrorCode::SizeMismatch,
                "expected " + std::to_string(half - 1) + " phases, got " +
                    std::to_string(phases.size()));
  }
  // Only supported bins contribute; collect (bin, amplitude, phase) once so
  // the time loop runs over the support, not the whole half grid.
  struct Tone {
    double freq;
    double amp;
    double phase;
  };
  std::vector<Tone> tones;
  const double step = 2.0 * std::numbers::pi / T;
  for (int k = 1; k < half; ++k) {
    double level = spec.level_at(k);
    if (level > 0.0) {
      tones.push_back({step * k, 2.0 * std::sqrt(level), phases(k - 1)});
    }
  }
  const double dc = std::sqrt(spec.level_at(0));
  const double nyquist = std::sqrt(spec.level_at(half));
  const double scale = 1.0 / std::sqrt(static_cast<double>(T));

  Eigen::VectorXd out(T);
  for (int t = 0; t < T; ++t) {
    double acc = dc + ((t % 2 == 0) ? nyquist : -nyquist);
    for (const auto& tone : tones) {
      acc += tone.amp * std::cos(tone.freq * t + tone.phase);
    }
    out(t) = scale * acc;
  }
  return out;
}

SignalEnsemble synthesize_ensemble(const std::vector<PsdSpec>& specs,
                                   const PhaseDraw& draw) {
  if (specs.empty()) {
    throw Error(ErrorCode::DomainError, "need at least one spectrum");
  }
  const int T = specs.front().length();
  for (const auto& s : specs) {
    if (s.length() != T) {
      throw Error(ErrorCode::GridMismatch, "spectra use different grid lengths");
    }
  }
  if (draw.phases.rows() != static_cast<Eigen::Index>(specs.size()) ||
      draw.phases.cols() != T / 2 - 1) {
    throw Error(ErrorCode::SizeMismatch,
                "phase draw shape does not match source count and grid");
  }
  SignalEnsemble out;
  out.role = SignalRole::latent;
  out.samples.resize(specs.size(), T);
  for (std::size_t m = 0; m < specs.size(); ++m) {
    out.samples.row(m) = synthesize_latent(specs[m], draw.phases.row(m)).transpose();
  }
  return out;
}

SignalEnsemble mix(const MixingMatrix& mixing, const SignalEnsemble& latents) {
  if (latents.channels() != mixing.sources()) {
    throw Error(ErrorCode::SizeMismatch,
                "mixing expects " + std::to_string(mixing.sources()) +
                    " latent rows, got " + std::to_string(latents.channels()));
  }
  SignalEnsemble out;
  out.role = SignalRole::observed;
  out.samples = mixing.matrix() * latents.samples;
  return out;
}

std::vector<double> empirical_cross_correlation(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& y,
                                                int max_lag) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::SizeMismatch, "series lengths differ");
  }
  const int T = static_cast<int>(x.size());
  if (T == 0) throw Error(ErrorCode::DomainError, "empty series");
  if (max_lag < 0 || max_lag >= T) {
    throw Error(ErrorCode::DomainError, "max_lag must lie in [0, T)");
  }
  std::vector<double> out(2 * max_lag + 1, 0.0);
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      acc += x(t) * y(((t + lag) % T + T) % T);
    }
    out[lag + max_lag] = acc / T;
  }
  return out;
}

}  // namespace msband

#include "msband/metrics.hpp"

#include <cmath>

namespace msband {

double nmse_db(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& estimate) {
  if (reference.rows() != estimate.rows() ||
      reference.cols() != estimate.cols()) {
    throw Error(ErrorCode::SizeMismatch,
                "reference and estimate shapes differ");
  }
  double ref_power = reference.squaredNorm();
  if (ref_power == 0.0) {
    throw Error(ErrorCode::ZeroReference, "reference signal is identically zero");
  }
  double err_power = (reference - estimate).squaredNorm();
  if (err_power == 0.0) return kNmseFloorDb;
  return std::max(10.0 * std::log10(err_power / ref_power), kNmseFloorDb);
}

double nmse_db(const SignalEnsemble& reference, const SignalEnsemble& estimate) {
  return nmse_db(reference.samples, estimate.samples);
}

PremiseReport check_correlatedness_premises(const Eigen::MatrixXd& mixing,
                                            const Eigen::VectorXd& latent_powers) {
  if (mixing.cols() < 1) {
    throw Error(ErrorCode::DomainError, "mixing needs at least one column");
  }
  if (latent_powers.size() != mixing.cols()) {
    throw Error(ErrorCode::SizeMismatch,
                "need one power per source, got " +
                    std::to_string(latent_powers.size()) + " for " +
                    std::to_string(mixing.cols()) + " sources");
  }
  PremiseReport out;
  out.strictly_more_channels = mixing.rows() > mixing.cols();
  out.positive_latent_powers = (latent_powers.array() > 0.0).all();
  out.no_zero_rows = true;
  for (Eigen::Index n = 0; n < mixing.rows(); ++n) {
    if (mixing.row(n).lpNorm<Eigen::Infinity>() == 0.0) {
      out.no_zero_rows = false;
      break;
    }
  }
  return out;
}

RateComparison rate_comparison(const MixingMatrix& mixing,
                               const std::vector<PsdSpec>& specs) {
  if (specs.empty()) {
    throw Error(ErrorCode::DomainError, "rate comparison needs spectra");
  }
  RateComparison out;
  out.joint_samples = total_bandwidth(specs);
  out.separate_samples = separate_baseline(mixing, specs).total;
  const double T = static_cast<double>(specs.front().length());
  out.joint_rate = out.joint_samples / T;
  out.separate_rate = out.separate_samples / T;
  return out;
}

bool verify_density_bound(const ExperimentReport& report) {
  return report.sample_total >= report.bandwidth &&
         report.nmse <= report.nmse_threshold;
}

}  // namespace msband

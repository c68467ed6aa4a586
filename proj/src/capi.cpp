#include "msband.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "msband/estimation.hpp"
#include "msband/experiment.hpp"
#include "msband/io.hpp"
#include "msband/metrics.hpp"
#include "msband/reconstruct.hpp"

struct msband_psd_spec {
  msband::PsdSpec value;
};
struct msband_plan {
  msband::SubbandPlan value;
};
struct msband_mixing {
  msband::MixingMatrix value;
};
struct msband_ensemble {
  msband::SignalEnsemble value;
};
struct msband_sample_set {
  msband::SampleSet value;
};
struct msband_real_pipeline {
  msband::RealPipeline value;
};

namespace {

thread_local std::string g_last_error;
thread_local double g_last_condition = std::nan("");

void clear_error() {
  g_last_error.clear();
  g_last_condition = std::nan("");
}

msband_status record(const msband::Error& e) {
  g_last_error = e.what();
  g_last_condition = e.condition();
  return static_cast<msband_status>(static_cast<int>(e.code()));
}

msband_status record_invalid(const char* message) {
  g_last_error = message;
  g_last_condition = std::nan("");
  return MSBAND_INVALID_ARGUMENT;
}

template <typename F>
msband_status guarded(F&& body) noexcept {
  try {
    clear_error();
    body();
    return MSBAND_OK;
  } catch (const msband::Error& e) {
    return record(e);
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MSBAND_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MSBAND_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown failure";
    return MSBAND_INTERNAL_ERROR;
  }
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::vector<msband::PsdSpec> collect_specs(const msband_psd_spec* const* specs,
                                           int count) {
  if (count < 1) {
    throw msband::Error(msband::ErrorCode::InvalidArgument,
                        "need at least one spectrum");
  }
  std::vector<msband::PsdSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (!specs || !specs[i]) {
      throw msband::Error(msband::ErrorCode::InvalidArgument,
                          "null spectrum handle");
    }
    out.push_back(specs[i]->value);
  }
  return out;
}

nlohmann::json info_to_json(const msband::ReconstructionInfo& info) {
  nlohmann::json j;
  j["max_temporal_condition"] = info.max_temporal_condition;
  j["max_spatial_condition"] = info.max_spatial_condition;
  j["imaginary_residue"] = info.imaginary_residue;
  j["per_subband"] = nlohmann::json::array();
  for (const auto& sb : info.per_subband) {
    j["per_subband"].push_back({{"subband", sb.subband},
                                {"temporal_condition", sb.temporal},
                                {"spatial_condition", sb.spatial}});
  }
  return j;
}

}  // namespace

extern "C" {

const char* msband_status_name(msband_status status) {
  return msband::error_code_name(
      static_cast<msband::ErrorCode>(static_cast<int>(status)));
}

const char* msband_last_error(void) { return g_last_error.c_str(); }

double msband_last_error_condition(void) { return g_last_condition; }

void msband_string_free(char* text) { std::free(text); }

msband_status msband_psd_spec_random(int length, uint64_t seed, int max_blocks,
                                     double level_lo, double level_hi,
                                     int width_lo, int width_hi,
                                     int source_index, msband_psd_spec** out) {
  if (!out) return record_invalid("null output");
  return guarded([&] {
    *out = new msband_psd_spec{msband::random_psd_spec(
        msband::FrequencyGrid{length}, seed, max_blocks, {level_lo, level_hi},
        {width_lo, width_hi}, source_index)};
  });
}

msband_status msband_psd_spec_build(int length, const int* lo, const int* hi,
                                    const double* level, int count,
                                    int source_index, msband_psd_spec** out) {
  if (!out || !lo || !hi || !level) return record_invalid("null argument");
  return guarded([&] {
    nlohmann::json j;
    j["T"] = length;
    j["blocks"] = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
      j["blocks"].push_back({{"lo", lo[i]}, {"hi", hi[i]}, {"level", level[i]}});
    }
    // The loader path adds mirrors and runs full validation.
    *out = new msband_psd_spec{msband::PsdSpec::from_json(j, source_index)};
  });
}

msband_status msband_psd_spec_load(const char* path, int source_index,
                                   msband_psd_spec** out) {
  if (!out || !path) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_psd_spec{msband::io::load_psd_spec(path, source_index)};
  });
}

msband_status msband_psd_spec_save(const msband_psd_spec* spec,
                                   const char* path) {
  if (!spec || !path) return record_invalid("null argument");
  return guarded([&] { msband::io::save_psd_spec(spec->value, path); });
}

msband_status msband_psd_spec_length(const msband_psd_spec* spec, int* out) {
  if (!spec || !out) return record_invalid("null argument");
  *out = spec->value.length();
  return MSBAND_OK;
}

msband_status msband_psd_spec_support(const msband_psd_spec* spec, long* bins) {
  if (!spec || !bins) return record_invalid("null argument");
  *bins = spec->value.support_size();
  return MSBAND_OK;
}

void msband_psd_spec_free(msband_psd_spec* spec) { delete spec; }

msband_status msband_plan_build(const msband_psd_spec* const* specs, int count,
                                msband_plan** out) {
  if (!out) return record_invalid("null output");
  return guarded([&] {
    *out = new msband_plan{
        msband::partition_subbands(collect_specs(specs, count))};
  });
}

msband_status msband_plan_info(const msband_plan* plan, int* subband_count,
                               long* bandwidth) {
  if (!plan) return record_invalid("null plan");
  if (subband_count) {
    *subband_count = static_cast<int>(plan->value.subbands.size());
  }
  if (bandwidth) *bandwidth = plan->value.bandwidth();
  return MSBAND_OK;
}

msband_status msband_plan_busiest(const msband_plan* plan,
                                  const msband_psd_spec* const* specs,
                                  int count, int* out) {
  if (!plan || !out) return record_invalid("null argument");
  return guarded([&] {
    *out = msband::busiest_subband(plan->value, collect_specs(specs, count));
  });
}

void msband_plan_free(msband_plan* plan) { delete plan; }

msband_status msband_mixing_random(int channels, int sources, uint64_t seed,
                                   msband_mixing** out) {
  if (!out) return record_invalid("null output");
  return guarded([&] {
    *out = new msband_mixing{msband::random_mixing_matrix(channels, sources, seed)};
  });
}

msband_status msband_mixing_build(const double* values, int channels,
                                  int sources, msband_mixing** out) {
  if (!out || !values) return record_invalid("null argument");
  return guarded([&] {
    if (channels < 1 || sources < 1) {
      throw msband::Error(msband::ErrorCode::DimensionError,
                          "dimensions must be positive");
    }
    Eigen::MatrixXd m(channels, sources);
    for (int r = 0; r < channels; ++r) {
      for (int c = 0; c < sources; ++c) m(r, c) = values[r * sources + c];
    }
    *out = new msband_mixing{msband::MixingMatrix(std::move(m))};
  });
}

msband_status msband_mixing_load_csv(const char* path, msband_mixing** out) {
  if (!out || !path) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_mixing{msband::io::load_mixing_csv(path)};
  });
}

msband_status msband_mixing_save_csv(const msband_mixing* mixing,
                                     const char* path) {
  if (!mixing || !path) return record_invalid("null argument");
  return guarded([&] { msband::io::save_mixing_csv(mixing->value, path); });
}

msband_status msband_mixing_dims(const msband_mixing* mixing, int* channels,
                                 int* sources) {
  if (!mixing) return record_invalid("null mixing");
  if (channels) *channels = mixing->value.channels();
  if (sources) *sources = mixing->value.sources();
  return MSBAND_OK;
}

void msband_mixing_free(msband_mixing* mixing) { delete mixing; }

msband_status msband_synthesize(const msband_psd_spec* const* specs, int count,
                                uint64_t phase_seed, msband_ensemble** out) {
  if (!out) return record_invalid("null output");
  return guarded([&] {
    auto collected = collect_specs(specs, count);
    auto draw = msband::PhaseDraw::draw(count, collected.front().length(),
                                        phase_seed);
    *out = new msband_ensemble{msband::synthesize_ensemble(collected, draw)};
  });
}

msband_status msband_mix(const msband_mixing* mixing,
                         const msband_ensemble* latents,
                         msband_ensemble** out) {
  if (!mixing || !latents || !out) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_ensemble{msband::mix(mixing->value, latents->value)};
  });
}

msband_status msband_ensemble_dims(const msband_ensemble* ensemble,
                                   int* channels, int* length) {
  if (!ensemble) return record_invalid("null ensemble");
  if (channels) *channels = ensemble->value.channels();
  if (length) *length = ensemble->value.length();
  return MSBAND_OK;
}

msband_status msband_ensemble_role(const msband_ensemble* ensemble, int* role) {
  if (!ensemble || !role) return record_invalid("null argument");
  *role = static_cast<int>(ensemble->value.role);
  return MSBAND_OK;
}

msband_status msband_ensemble_data(const msband_ensemble* ensemble,
                                   double* buffer, size_t capacity) {
  if (!ensemble || !buffer) return record_invalid("null argument");
  return guarded([&] {
    const auto& m = ensemble->value.samples;
    std::size_t needed = static_cast<std::size_t>(m.rows()) *
                         static_cast<std::size_t>(m.cols());
    if (capacity < needed) {
      throw msband::Error(msband::ErrorCode::SizeMismatch,
                          "buffer holds " + std::to_string(capacity) +
                              " values, need " + std::to_string(needed));
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        buffer[r * m.cols() + c] = m(r, c);
      }
    }
  });
}

msband_status msband_ensemble_save_csv(const msband_ensemble* ensemble,
                                       const char* path) {
  if (!ensemble || !path) return record_invalid("null argument");
  return guarded([&] { msband::io::save_ensemble_csv(ensemble->value, path); });
}

msband_status msband_ensemble_load_csv(const char* path, int role,
                                       msband_ensemble** out) {
  if (!out || !path) return record_invalid("null argument");
  if (role < 0 || role > 2) return record_invalid("role must be 0, 1, or 2");
  return guarded([&] {
    *out = new msband_ensemble{msband::io::load_ensemble_csv(
        path, static_cast<msband::SignalRole>(role))};
  });
}

msband_status msband_ensemble_save_binary(const msband_ensemble* ensemble,
                                          const char* path) {
  if (!ensemble || !path) return record_invalid("null argument");
  return guarded(
      [&] { msband::io::save_ensemble_binary(ensemble->value, path); });
}

msband_status msband_ensemble_load_binary(const char* path,
                                          msband_ensemble** out) {
  if (!out || !path) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_ensemble{msband::io::load_ensemble_binary(path)};
  });
}

void msband_ensemble_free(msband_ensemble* ensemble) { delete ensemble; }

msband_status msband_acquire(const msband_ensemble* observed,
                             const msband_plan* plan,
                             const msband_mixing* mixing,
                             msband_sample_set** out) {
  if (!observed || !plan || !mixing || !out) {
    return record_invalid("null argument");
  }
  return guarded([&] {
    *out = new msband_sample_set{
        msband::acquire(observed->value, plan->value, mixing->value)};
  });
}

msband_status msband_sample_set_totals(const msband_sample_set* samples,
                                       long* total, double* density) {
  if (!samples) return record_invalid("null sample set");
  return guarded([&] {
    if (total) *total = samples->value.total_samples();
    if (density) *density = msband::sampling_density(samples->value);
  });
}

msband_status msband_sample_set_drop(const msband_sample_set* samples,
                                     int subband, msband_sample_set** out) {
  if (!samples || !out) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_sample_set{msband::drop_subband(samples->value, subband)};
  });
}

msband_status msband_sample_set_save(const msband_sample_set* samples,
                                     const char* path) {
  if (!samples || !path) return record_invalid("null argument");
  return guarded([&] { msband::io::save_sample_set(samples->value, path); });
}

msband_status msband_sample_set_load(const char* path,
                                     msband_sample_set** out) {
  if (!out || !path) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_sample_set{msband::io::load_sample_set(path)};
  });
}

void msband_sample_set_free(msband_sample_set* samples) { delete samples; }

msband_status msband_reconstruct(const msband_sample_set* samples,
                                 const msband_plan* plan,
                                 const msband_mixing* mixing,
                                 msband_ensemble** out, char** info_json) {
  if (!samples || !plan || !mixing || !out) {
    return record_invalid("null argument");
  }
  return guarded([&] {
    msband::ReconstructionInfo info;
    *out = new msband_ensemble{
        msband::reconstruct(samples->value, plan->value, mixing->value, &info)};
    if (info_json) *info_json = copy_string(info_to_json(info).dump());
  });
}

msband_status msband_separate_reconstruct(const msband_ensemble* observed,
                                          const msband_mixing* mixing,
                                          const msband_psd_spec* const* specs,
                                          int count, msband_ensemble** out,
                                          char** info_json) {
  if (!observed || !mixing || !out) return record_invalid("null argument");
  return guarded([&] {
    msband::ReconstructionInfo info;
    *out = new msband_ensemble{msband::separate_reconstruct(
        observed->value, mixing->value, collect_specs(specs, count), &info)};
    if (info_json) *info_json = copy_string(info_to_json(info).dump());
  });
}

msband_status msband_nmse_db(const msband_ensemble* reference,
                             const msband_ensemble* estimate, double* out) {
  if (!reference || !estimate || !out) return record_invalid("null argument");
  return guarded(
      [&] { *out = msband::nmse_db(reference->value, estimate->value); });
}

msband_status msband_check_premises(const double* mixing, int channels,
                                    int sources, const double* powers,
                                    int* more_channels, int* positive_powers,
                                    int* no_zero_rows, int* satisfied) {
  if (!mixing || !powers) return record_invalid("null argument");
  return guarded([&] {
    if (channels < 1 || sources < 1) {
      throw msband::Error(msband::ErrorCode::DimensionError,
                          "dimensions must be positive");
    }
    Eigen::MatrixXd m(channels, sources);
    for (int r = 0; r < channels; ++r) {
      for (int c = 0; c < sources; ++c) m(r, c) = mixing[r * sources + c];
    }
    Eigen::VectorXd p(sources);
    for (int c = 0; c < sources; ++c) p(c) = powers[c];
    auto report = msband::check_correlatedness_premises(m, p);
    if (more_channels) *more_channels = report.strictly_more_channels;
    if (positive_powers) *positive_powers = report.positive_latent_powers;
    if (no_zero_rows) *no_zero_rows = report.no_zero_rows;
    if (satisfied) *satisfied = report.satisfied();
  });
}

msband_status msband_rate_comparison(const msband_mixing* mixing,
                                     const msband_psd_spec* const* specs,
                                     int count, long* joint_total,
                                     long* separate_total) {
  if (!mixing) return record_invalid("null mixing");
  return guarded([&] {
    auto rates =
        msband::rate_comparison(mixing->value, collect_specs(specs, count));
    if (joint_total) *joint_total = rates.joint_samples;
    if (separate_total) *separate_total = rates.separate_samples;
  });
}

void msband_trial_config_init(msband_trial_config* config) {
  if (!config) return;
  msband::TrialConfig defaults;
  config->seed = defaults.seed;
  config->length = defaults.length;
  config->channels = defaults.channels;
  config->sources = defaults.sources;
  config->max_blocks = defaults.max_blocks;
  config->level_lo = defaults.level_lo;
  config->level_hi = defaults.level_hi;
  config->width_lo = defaults.width_lo;
  config->width_hi = defaults.width_hi;
  config->drop_subband = defaults.drop_subband;
  config->with_baseline = defaults.with_baseline ? 1 : 0;
  config->nmse_threshold = defaults.nmse_threshold;
}

msband_status msband_trial_run(const msband_trial_config* config,
                               char** report_json) {
  if (!config || !report_json) return record_invalid("null argument");
  return guarded([&] {
    msband::TrialConfig c;
    c.seed = config->seed;
    c.length = config->length;
    c.channels = config->channels;
    c.sources = config->sources;
    c.max_blocks = config->max_blocks;
    c.level_lo = config->level_lo;
    c.level_hi = config->level_hi;
    c.width_lo = config->width_lo;
    c.width_hi = config->width_hi;
    c.drop_subband = config->drop_subband;
    c.with_baseline = config->with_baseline != 0;
    c.nmse_threshold = config->nmse_threshold;
    auto report = msband::run_trial(c);
    *report_json = copy_string(msband::report_to_json(report).dump());
  });
}

msband_status msband_real_run(const char* path, int length, int channels,
                              int sources, double variance_target,
                              double fraction, msband_real_pipeline** out) {
  if (!path || !out) return record_invalid("null argument");
  return guarded([&] {
    Eigen::MatrixXd raw = msband::io::load_series_matrix(path, channels, length);
    *out = new msband_real_pipeline{
        msband::prepare_real_pipeline(raw, sources, variance_target, fraction)};
  });
}

msband_status msband_real_report_json(const msband_real_pipeline* p,
                                      char** json) {
  if (!p || !json) return record_invalid("null argument");
  return guarded([&] {
    const auto& v = p->value;
    nlohmann::json j;
    j["sources"] = v.estimate.sources;
    j["retained_variance"] = v.estimate.retained_variance;
    j["eigenvalues"] = std::vector<double>(
        v.estimate.eigenvalues.data(),
        v.estimate.eigenvalues.data() + v.estimate.eigenvalues.size());
    j["max_latent_crosscorr"] = v.max_latent_crosscorr;
    j["support_bins"] = nlohmann::json::array();
    for (const auto& spec : v.specs) {
      j["support_bins"].push_back(spec.support_size());
    }
    j["bandwidth"] = msband::total_bandwidth(v.specs);
    *json = copy_string(j.dump());
  });
}

msband_status msband_real_sources(const msband_real_pipeline* p, int* sources) {
  if (!p || !sources) return record_invalid("null argument");
  *sources = p->value.estimate.sources;
  return MSBAND_OK;
}

msband_status msband_real_observed(const msband_real_pipeline* p,
                                   msband_ensemble** out) {
  if (!p || !out) return record_invalid("null argument");
  return guarded(
      [&] { *out = new msband_ensemble{p->value.observed_thresholded}; });
}

msband_status msband_real_latents(const msband_real_pipeline* p,
                                  msband_ensemble** out) {
  if (!p || !out) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_ensemble{
        {p->value.estimate.latents_hat, msband::SignalRole::latent}};
  });
}

msband_status msband_real_mixing(const msband_real_pipeline* p,
                                 msband_mixing** out) {
  if (!p || !out) return record_invalid("null argument");
  return guarded([&] {
    *out = new msband_mixing{msband::MixingMatrix(p->value.estimate.mixing_hat)};
  });
}

msband_status msband_real_spec(const msband_real_pipeline* p, int source,
                               msband_psd_spec** out) {
  if (!p || !out) return record_invalid("null argument");
  return guarded([&] {
    if (source < 0 || source >= static_cast<int>(p->value.specs.size())) {
      throw msband::Error(msband::ErrorCode::DomainError,
                          "source index outside the pipeline");
    }
    *out = new msband_psd_spec{p->value.specs[static_cast<std::size_t>(source)]};
  });
}

msband_status msband_real_psd(const msband_real_pipeline* p, int source,
                              double* buffer, size_t capacity) {
  if (!p || !buffer) return record_invalid("null argument");
  return guarded([&] {
    if (source < 0 ||
        source >= static_cast<int>(p->value.source_psds.size())) {
      throw msband::Error(msband::ErrorCode::DomainError,
                          "source index outside the pipeline");
    }
    const auto& psd = p->value.source_psds[static_cast<std::size_t>(source)];
    if (capacity < static_cast<std::size_t>(psd.size())) {
      throw msband::Error(msband::ErrorCode::SizeMismatch,
                          "buffer too small for the psd");
    }
    for (Eigen::Index k = 0; k < psd.size(); ++k) buffer[k] = psd(k);
  });
}

msband_status msband_real_means(const msband_real_pipeline* p, double* buffer,
                                size_t capacity) {
  if (!p || !buffer) return record_invalid("null argument");
  return guarded([&] {
    const auto& means = p->value.estimate.channel_means;
    if (capacity < static_cast<std::size_t>(means.size())) {
      throw msband::Error(msband::ErrorCode::SizeMismatch,
                          "buffer too small for the means");
    }
    for (Eigen::Index n = 0; n < means.size(); ++n) buffer[n] = means(n);
  });
}

void msband_real_pipeline_free(msband_real_pipeline* p) { delete p; }

}  // extern "C"

// Command-line front end for the multi-band sampling library.  Talks to the
// library exclusively through its C interface, so it doubles as a living
// example of driving the shared library from another language.
//
// Exit codes: 0 success, 2 configuration or argument errors, 3 unreadable or
// malformed data files, 4 numerical failures (singular systems, degenerate
// covariances, realness violations).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "msband.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  int code;
};

int exit_class(msband_status status) {
  switch (status) {
    case MSBAND_OK:
      return 0;
    case MSBAND_IO_ERROR:
    case MSBAND_PARSE_ERROR:
    case MSBAND_NON_NUMERIC_CELL:
    case MSBAND_INSUFFICIENT_DATA:
      return 3;
    case MSBAND_RANK_DEFICIENT:
    case MSBAND_SINGULAR_SYSTEM:
    case MSBAND_IMAGINARY_RESIDUE:
    case MSBAND_DEGENERATE_COVARIANCE:
    case MSBAND_EMPTY_SUPPORT:
    case MSBAND_ZERO_REFERENCE:
    case MSBAND_INTERNAL_ERROR:
      return 4;
    default:
      return 2;
  }
}

void ok(msband_status status, const std::string& context) {
  if (status == MSBAND_OK) return;
  std::fprintf(stderr, "error: %s: %s (%s)\n", context.c_str(),
               msband_last_error(), msband_status_name(status));
  throw Failure{exit_class(status)};
}

[[noreturn]] void fail_config(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  throw Failure{2};
}

// Matches the library's file formatting so emitted text is bit-stable.
std::string fmt(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string fmt(bool value) { return value ? "1" : "0"; }

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;

  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Handle& operator=(Handle&& other) noexcept {
    if (this != &other) {
      reset();
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  ~Handle() { reset(); }

  void reset() {
    if (ptr) Free(ptr);
    ptr = nullptr;
  }
  T** out() {
    reset();
    return &ptr;
  }
  operator T*() const { return ptr; }
};

using SpecHandle = Handle<msband_psd_spec, msband_psd_spec_free>;
using PlanHandle = Handle<msband_plan, msband_plan_free>;
using MixingHandle = Handle<msband_mixing, msband_mixing_free>;
using EnsembleHandle = Handle<msband_ensemble, msband_ensemble_free>;
using SampleSetHandle = Handle<msband_sample_set, msband_sample_set_free>;
using PipelineHandle = Handle<msband_real_pipeline, msband_real_pipeline_free>;

struct OwnedText {
  char* text = nullptr;
  ~OwnedText() { msband_string_free(text); }
  char** out() {
    msband_string_free(text);
    text = nullptr;
    return &text;
  }
};

std::vector<const msband_psd_spec*> view(const std::vector<SpecHandle>& specs) {
  std::vector<const msband_psd_spec*> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(s.ptr);
  return out;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) fail_config("cannot create output directory " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_config("cannot write " + path);
  out << text;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot read config file " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail_config("config file is not valid json: " + path);
  if (!j.is_object()) fail_config("config file must hold a json object");
  return j;
}

// Applies a config-file value only when the flag was not given on the
// command line, so flags always win.
template <typename T>
void take(const json& j, const char* key, const CLI::App* cmd,
          const std::string& flag, T* out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if (cmd->count(flag) > 0) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail_config(std::string("config key '") + key + "' has the wrong type");
  }
}

// Shared knobs of the synthetic-trial commands.
struct TrialOptions {
  std::uint64_t seed = 1;
  int length = 512;
  int channels = 8;
  int max_blocks = 3;
  double level_lo = 0.5;
  double level_hi = 2.0;
  int width_lo = 4;
  int width_hi = 32;
  double nmse_threshold = std::numeric_limits<double>::quiet_NaN();
};

void add_trial_flags(CLI::App* cmd, TrialOptions* opts) {
  cmd->add_option("--seed", opts->seed, "Master seed for every draw");
  cmd->add_option("--length", opts->length, "Window length T (even)");
  cmd->add_option("--channels", opts->channels, "Observed channels N");
  cmd->add_option("--max-blocks", opts->max_blocks,
                  "Blocks per source spectrum, drawn in [1, max]");
  cmd->add_option("--level-lo", opts->level_lo, "Lowest block power level");
  cmd->add_option("--level-hi", opts->level_hi, "Highest block power level");
  cmd->add_option("--width-lo", opts->width_lo, "Narrowest block, in bins");
  cmd->add_option("--width-hi", opts->width_hi, "Widest block, in bins");
  cmd->add_option("--nmse-threshold", opts->nmse_threshold,
                  "Pass bar in dB (default -120 on divisible grids, -80 otherwise)");
}

void take_trial_config(const json& j, const CLI::App* cmd, TrialOptions* opts) {
  take(j, "seed", cmd, "--seed", &opts->seed);
  take(j, "length", cmd, "--length", &opts->length);
  take(j, "channels", cmd, "--channels", &opts->channels);
  take(j, "max_blocks", cmd, "--max-blocks", &opts->max_blocks);
  take(j, "level_lo", cmd, "--level-lo", &opts->level_lo);
  take(j, "level_hi", cmd, "--level-hi", &opts->level_hi);
  take(j, "width_lo", cmd, "--width-lo", &opts->width_lo);
  take(j, "width_hi", cmd, "--width-hi", &opts->width_hi);
  take(j, "nmse_threshold", cmd, "--nmse-threshold", &opts->nmse_threshold);
}

msband_trial_config to_config(const TrialOptions& opts, int sources,
                              std::uint64_t seed) {
  msband_trial_config config;
  msband_trial_config_init(&config);
  config.seed = seed;
  config.length = opts.length;
  config.channels = opts.channels;
  config.sources = sources;
  config.max_blocks = opts.max_blocks;
  config.level_lo = opts.level_lo;
  config.level_hi = opts.level_hi;
  config.width_lo = opts.width_lo;
  config.width_hi = opts.width_hi;
  config.nmse_threshold = opts.nmse_threshold;
  return config;
}

struct TrialOutcome {
  msband_status status = MSBAND_OK;
  std::string error;
  json report;
};

TrialOutcome run_one(msband_trial_config config, bool ablate) {
  TrialOutcome outcome;
  OwnedText text;
  if (ablate) {
    // Probe run finds the subband carrying the most energy, then the real
    // run discards that subband's samples before reconstructing.
    outcome.status = msband_trial_run(&config, text.out());
    if (outcome.status != MSBAND_OK) {
      outcome.error = msband_last_error();
      return outcome;
    }
    config.drop_subband = json::parse(text.text).at("busiest_subband").get<int>();
  }
  outcome.status = msband_trial_run(&config, text.out());
  if (outcome.status != MSBAND_OK) {
    outcome.error = msband_last_error();
    return outcome;
  }
  outcome.report = json::parse(text.text);
  return outcome;
}

// Runs a batch of trial configs, preserving input order in the output.
std::vector<TrialOutcome> run_batch(const std::vector<msband_trial_config>& configs,
                                    bool ablate, int workers) {
  std::vector<TrialOutcome> outcomes(configs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      outcomes[i] = run_one(configs[i], ablate);
    }
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      outcomes[i] = run_one(configs[i], ablate);
    }
  };
  std::vector<std::thread> pool;
  int count = std::min<int>(workers, static_cast<int>(configs.size()));
  pool.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return outcomes;
}

void raise_first_failure(const std::vector<TrialOutcome>& outcomes) {
  for (const auto& outcome : outcomes) {
    if (outcome.status == MSBAND_OK) continue;
    std::fprintf(stderr, "error: trial failed: %s (%s)\n",
                 outcome.error.c_str(), msband_status_name(outcome.status));
    throw Failure{exit_class(outcome.status)};
  }
}

const char* kSweepColumns =
    "ratio,sources,seed,T,N,subbands,bandwidth,samples,density,bound_density,"
    "density_exact,uniform_grid,nmse_db,nmse_threshold_db,"
    "max_temporal_condition,max_spatial_condition,imaginary_residue,"
    "dropped_subband,busiest_subband,verified";

std::string sweep_row(double ratio, const json& r) {
  std::string row;
  row += fmt(ratio);
  row += ',' + std::to_string(r.at("M").get<int>());
  row += ',' + std::to_string(r.at("seed").get<std::uint64_t>());
  row += ',' + std::to_string(r.at("T").get<int>());
  row += ',' + std::to_string(r.at("N").get<int>());
  row += ',' + std::to_string(r.at("subband_count").get<int>());
  row += ',' + std::to_string(r.at("bandwidth").get<long>());
  row += ',' + std::to_string(r.at("sample_total").get<long>());
  row += ',' + fmt(r.at("density").get<double>());
  row += ',' + fmt(r.at("bound_density").get<double>());
  row += ',' + fmt(r.at("density_exact").get<bool>());
  row += ',' + fmt(r.at("uniform_grid").get<bool>());
  row += ',' + fmt(r.at("nmse_db").get<double>());
  row += ',' + fmt(r.at("nmse_threshold_db").get<double>());
  row += ',' + fmt(r.at("max_temporal_condition").get<double>());
  row += ',' + fmt(r.at("max_spatial_condition").get<double>());
  row += ',' + fmt(r.at("imaginary_residue").get<double>());
  row += ',' + std::to_string(r.at("dropped_subband").get<int>());
  row += ',' + std::to_string(r.at("busiest_subband").get<int>());
  row += ',' + fmt(r.at("bound_verified").get<bool>());
  return row;
}

int sources_for_ratio(double ratio, int channels) {
  int m = static_cast<int>(std::lround(ratio * channels));
  return std::min(std::max(m, 1), channels);
}

int run_sweep(const TrialOptions& opts, int trials, int workers,
              const std::vector<double>& ratios, int drop_subband, bool ablate,
              const std::string& out_dir) {
  if (trials < 1) fail_config("--trials must be at least 1");
  if (ratios.empty()) fail_config("--ratios must name at least one ratio");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      fail_config("ratios must lie in (0, 1], got " + fmt(r));
    }
  }
  ensure_directory(out_dir);

  std::vector<msband_trial_config> configs;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    int sources = sources_for_ratio(ratios[ri], opts.channels);
    for (int t = 0; t < trials; ++t) {
      // Distinct deterministic seed per (ratio, trial) cell.
      std::uint64_t seed =
          opts.seed + 1000003ULL * static_cast<std::uint64_t>(ri) +
          static_cast<std::uint64_t>(t);
      msband_trial_config config = to_config(opts, sources, seed);
      config.drop_subband = drop_subband;
      configs.push_back(config);
    }
  }

  std::vector<TrialOutcome> outcomes = run_batch(configs, ablate, workers);
  raise_first_failure(outcomes);

  std::string csv = std::string(kSweepColumns) + '\n';
  json trials_json = json::array();
  json summary = json::array();
  long verified_total = 0;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    long verified = 0;
    long exact = 0;
    double worst_nmse = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const json& r = outcomes[ri * static_cast<std::size_t>(trials) +
                               static_cast<std::size_t>(t)]
                          .report;
      csv += sweep_row(ratios[ri], r) + '\n';
      json entry = r;
      entry["ratio"] = ratios[ri];
      trials_json.push_back(entry);
      verified += r.at("bound_verified").get<bool>();
      exact += r.at("density_exact").get<bool>();
      worst_nmse = std::max(worst_nmse, r.at("nmse_db").get<double>());
    }
    verified_total += verified;
    int sources = sources_for_ratio(ratios[ri], opts.channels);
    summary.push_back({{"ratio", ratios[ri]},
                       {"sources", sources},
                       {"trials", trials},
                       {"verified", verified},
                       {"density_exact", exact},
                       {"worst_nmse_db", worst_nmse}});
    std::printf("ratio %s (M=%d): %ld/%d verified, %ld/%d at exact density, "
                "worst nmse %.1f dB\n",
                fmt(ratios[ri]).c_str(), sources, verified, trials, exact,
                trials, worst_nmse);
  }

  json out;
  out["seed"] = opts.seed;
  out["length"] = opts.length;
  out["channels"] = opts.channels;
  out["trials"] = trials;
  out["ratios"] = ratios;
  out["ablate"] = ablate;
  out["drop_subband"] = drop_subband;
  out["summary"] = summary;
  out["results"] = trials_json;
  write_text(out_dir + "/sweep.csv", csv);
  write_text(out_dir + "/sweep.json", out.dump(2) + "\n");

  long total = static_cast<long>(ratios.size()) * trials;
  std::printf("verified %ld/%ld trials; wrote %s/sweep.csv\n", verified_total,
              total, out_dir.c_str());
  return 0;
}

int run_compare(const TrialOptions& opts, int trials, int workers, int sources,
                const std::string& out_dir) {
  if (trials < 1) fail_config("--trials must be at least 1");
  if (sources <= 0) sources = std::max(1, opts.channels / 2);
  ensure_directory(out_dir);

  std::vector<msband_trial_config> configs;
  for (int t = 0; t < trials; ++t) {
    msband_trial_config config =
        to_config(opts, sources, opts.seed + static_cast<std::uint64_t>(t));
    config.with_baseline = 1;
    configs.push_back(config);
  }
  std::vector<TrialOutcome> outcomes = run_batch(configs, false, workers);
  raise_first_failure(outcomes);

  std::string csv =
      "seed,T,N,M,bandwidth,joint_samples,baseline_samples,joint_density,"
      "baseline_density,nmse_joint_db,nmse_baseline_db,verified\n";
  json results = json::array();
  double joint_sum = 0.0;
  double baseline_sum = 0.0;
  for (const auto& outcome : outcomes) {
    const json& r = outcome.report;
    double cells = static_cast<double>(r.at("T").get<int>()) *
                   r.at("N").get<int>();
    long joint = r.at("sample_total").get<long>();
    long baseline = r.at("baseline_total").get<long>();
    joint_sum += static_cast<double>(joint);
    baseline_sum += static_cast<double>(baseline);
    std::string row = std::to_string(r.at("seed").get<std::uint64_t>());
    row += ',' + std::to_string(r.at("T").get<int>());
    row += ',' + std::to_string(r.at("N").get<int>());
    row += ',' + std::to_string(r.at("M").get<int>());
    row += ',' + std::to_string(r.at("bandwidth").get<long>());
    row += ',' + std::to_string(joint);
    row += ',' + std::to_string(baseline);
    row += ',' + fmt(joint / cells);
    row += ',' + fmt(baseline / cells);
    row += ',' + fmt(r.at("nmse_db").get<double>());
    row += ',' + fmt(r.at("baseline_nmse_db").get<double>());
    row += ',' + fmt(r.at("bound_verified").get<bool>());
    csv += row + '\n';
    results.push_back(r);
  }

  json out;
  out["seed"] = opts.seed;
  out["trials"] = trials;
  out["sources"] = sources;
  out["channels"] = opts.channels;
  out["mean_joint_samples"] = joint_sum / trials;
  out["mean_baseline_samples"] = baseline_sum / trials;
  out["joint_over_baseline"] = joint_sum / baseline_sum;
  out["results"] = results;
  write_text(out_dir + "/compare.csv", csv);
  write_text(out_dir + "/compare.json", out.dump(2) + "\n");
  std::printf("joint acquisition uses %.3f of the per-channel baseline's "
              "samples over %d trials; wrote %s/compare.csv\n",
              joint_sum / baseline_sum, trials, out_dir.c_str());
  return 0;
}

int run_synth(const TrialOptions& opts, int sources, bool binary,
              const std::string& out_dir) {
  if (sources < 1) fail_config("--sources must be at least 1");
  ensure_directory(out_dir);

  std::vector<SpecHandle> specs(static_cast<std::size_t>(sources));
  for (int m = 0; m < sources; ++m) {
    // Fixed offsets keep the draws independent of one another.
    ok(msband_psd_spec_random(opts.length,
                              opts.seed + 100 + static_cast<std::uint64_t>(m),
                              opts.max_blocks, opts.level_lo, opts.level_hi,
                              opts.width_lo, opts.width_hi, m,
                              specs[static_cast<std::size_t>(m)].out()),
       "drawing source spectrum " + std::to_string(m));
    ok(msband_psd_spec_save(specs[static_cast<std::size_t>(m)],
                            (out_dir + "/spec_" + std::to_string(m) + ".json")
                                .c_str()),
       "saving source spectrum " + std::to_string(m));
  }
  auto spec_view = view(specs);

  PlanHandle plan;
  ok(msband_plan_build(spec_view.data(), sources, plan.out()),
     "partitioning subbands");
  int subbands = 0;
  long bandwidth = 0;
  ok(msband_plan_info(plan, &subbands, &bandwidth), "reading the plan");

  MixingHandle mixing;
  ok(msband_mixing_random(opts.channels, sources, opts.seed + 1, mixing.out()),
     "drawing the mixing matrix");
  ok(msband_mixing_save_csv(mixing, (out_dir + "/mixing.csv").c_str()),
     "saving the mixing matrix");

  EnsembleHandle latents;
  ok(msband_synthesize(spec_view.data(), sources, opts.seed + 2, latents.out()),
     "synthesizing latent sources");
  ok(msband_ensemble_save_csv(latents, (out_dir + "/latents.csv").c_str()),
     "saving latent sources");

  EnsembleHandle observed;
  ok(msband_mix(mixing, latents, observed.out()), "mixing channels");
  ok(msband_ensemble_save_csv(observed, (out_dir + "/observed.csv").c_str()),
     "saving observed channels");
  if (binary) {
    ok(msband_ensemble_save_binary(observed,
                                   (out_dir + "/observed.bin").c_str()),
       "saving observed channels (binary)");
  }

  json scene;
  scene["seed"] = opts.seed;
  scene["T"] = opts.length;
  scene["N"] = opts.channels;
  scene["M"] = sources;
  scene["subband_count"] = subbands;
  scene["bandwidth"] = bandwidth;
  scene["bound_density"] = static_cast<double>(bandwidth) /
                           (static_cast<double>(opts.length) * opts.channels);
  write_text(out_dir + "/scene.json", scene.dump(2) + "\n");
  std::printf("wrote %d sources, %d channels, %d subbands, bandwidth %ld "
              "bins to %s\n",
              sources, opts.channels, subbands, bandwidth, out_dir.c_str());
  return 0;
}

EnsembleHandle load_ensemble(const std::string& path, int role) {
  EnsembleHandle ensemble;
  if (path.size() > 4 && path.substr(path.size() - 4) == ".bin") {
    ok(msband_ensemble_load_binary(path.c_str(), ensemble.out()),
       "loading " + path);
  } else {
    ok(msband_ensemble_load_csv(path.c_str(), role, ensemble.out()),
       "loading " + path);
  }
  return ensemble;
}

std::vector<SpecHandle> load_specs(const std::vector<std::string>& paths) {
  if (paths.empty()) fail_config("at least one --spec file is required");
  std::vector<SpecHandle> specs(paths.size());
  for (std::size_t m = 0; m < paths.size(); ++m) {
    ok(msband_psd_spec_load(paths[m].c_str(), static_cast<int>(m),
                            specs[m].out()),
       "loading " + paths[m]);
  }
  return specs;
}

int run_acquire(const std::string& observed_path,
                const std::string& mixing_path,
                const std::vector<std::string>& spec_paths,
                const std::string& out_path) {
  auto specs = load_specs(spec_paths);
  auto spec_view = view(specs);
  PlanHandle plan;
  ok(msband_plan_build(spec_view.data(), static_cast<int>(specs.size()),
                       plan.out()),
     "partitioning subbands");
  MixingHandle mixing;
  ok(msband_mixing_load_csv(mixing_path.c_str(), mixing.out()),
     "loading " + mixing_path);
  EnsembleHandle observed = load_ensemble(observed_path, 1);

  SampleSetHandle samples;
  ok(msband_acquire(observed, plan, mixing, samples.out()), "acquiring");
  ok(msband_sample_set_save(samples, out_path.c_str()),
     "saving " + out_path);

  long total = 0;
  double density = 0.0;
  ok(msband_sample_set_totals(samples, &total, &density), "counting samples");
  long bandwidth = 0;
  int subbands = 0;
  ok(msband_plan_info(plan, &subbands, &bandwidth), "reading the plan");
  double bound = total > 0 ? static_cast<double>(bandwidth) * density /
                                 static_cast<double>(total)
                           : 0.0;
  std::printf("took %ld samples across %d subbands (density %s, bound %s); "
              "wrote %s\n",
              total, subbands, fmt(density).c_str(), fmt(bound).c_str(),
              out_path.c_str());
  return 0;
}

int run_reconstruct(const std::string& samples_path,
                    const std::string& mixing_path,
                    const std::vector<std::string>& spec_paths,
                    const std::string& out_path,
                    const std::string& info_path,
                    const std::string& reference_path) {
  auto specs = load_specs(spec_paths);
  auto spec_view = view(specs);
  PlanHandle plan;
  ok(msband_plan_build(spec_view.data(), static_cast<int>(specs.size()),
                       plan.out()),
     "partitioning subbands");
  MixingHandle mixing;
  ok(msband_mixing_load_csv(mixing_path.c_str(), mixing.out()),
     "loading " + mixing_path);
  SampleSetHandle samples;
  ok(msband_sample_set_load(samples_path.c_str(), samples.out()),
     "loading " + samples_path);

  EnsembleHandle rebuilt;
  OwnedText info;
  ok(msband_reconstruct(samples, plan, mixing, rebuilt.out(), info.out()),
     "reconstructing");
  ok(msband_ensemble_save_csv(rebuilt, out_path.c_str()),
     "saving " + out_path);
  if (!info_path.empty()) {
    write_text(info_path, json::parse(info.text).dump(2) + "\n");
  }
  std::printf("wrote %s\n", out_path.c_str());

  if (!reference_path.empty()) {
    EnsembleHandle reference = load_ensemble(reference_path, 1);
    double nmse = 0.0;
    ok(msband_nmse_db(reference, rebuilt, &nmse), "comparing to reference");
    std::printf("nmse vs %s: %s dB\n", reference_path.c_str(),
                fmt(nmse).c_str());
  }
  return 0;
}

int run_eval(const std::string& reference_path, const std::string& estimate_path,
             const std::string& out_path) {
  EnsembleHandle reference = load_ensemble(reference_path, 1);
  EnsembleHandle estimate = load_ensemble(estimate_path, 2);
  double nmse = 0.0;
  ok(msband_nmse_db(reference, estimate, &nmse), "computing nmse");
  std::printf("nmse_db %s\n", fmt(nmse).c_str());
  if (!out_path.empty()) {
    json j{{"reference", reference_path},
           {"estimate", estimate_path},
           {"nmse_db", nmse}};
    write_text(out_path, j.dump(2) + "\n");
  }
  return 0;
}

int run_real(const std::string& input, int length, int channels, int sources,
             double variance_target, double fraction,
             const std::string& out_dir) {
  ensure_directory(out_dir);

  PipelineHandle pipeline;
  ok(msband_real_run(input.c_str(), length, channels, sources, variance_target,
                     fraction, pipeline.out()),
     "running the measured-data pipeline on " + input);

  int fitted_sources = 0;
  ok(msband_real_sources(pipeline, &fitted_sources), "reading source count");

  MixingHandle mixing;
  ok(msband_real_mixing(pipeline, mixing.out()), "extracting the mixing");
  ok(msband_mixing_save_csv(mixing, (out_dir + "/mixing_hat.csv").c_str()),
     "saving the mixing estimate");

  EnsembleHandle latents;
  ok(msband_real_latents(pipeline, latents.out()), "extracting latents");
  ok(msband_ensemble_save_csv(latents, (out_dir + "/latents_hat.csv").c_str()),
     "saving latent estimates");

  EnsembleHandle target;
  ok(msband_real_observed(pipeline, target.out()),
     "extracting the bandlimited target");
  ok(msband_ensemble_save_csv(target,
                              (out_dir + "/observed_thresholded.csv").c_str()),
     "saving the bandlimited target");

  std::vector<SpecHandle> specs(static_cast<std::size_t>(fitted_sources));
  for (int m = 0; m < fitted_sources; ++m) {
    ok(msband_real_spec(pipeline, m, specs[static_cast<std::size_t>(m)].out()),
       "extracting spectrum " + std::to_string(m));
    ok(msband_psd_spec_save(specs[static_cast<std::size_t>(m)],
                            (out_dir + "/spec_" + std::to_string(m) + ".json")
                                .c_str()),
       "saving spectrum " + std::to_string(m));
  }

  // Raw per-source periodograms, one value per line.
  std::vector<double> psd(static_cast<std::size_t>(length));
  for (int m = 0; m < fitted_sources; ++m) {
    ok(msband_real_psd(pipeline, m, psd.data(), psd.size()),
       "extracting periodogram " + std::to_string(m));
    std::string text;
    for (double v : psd) text += fmt(v) + '\n';
    write_text(out_dir + "/psd_" + std::to_string(m) + ".csv", text);
  }

  std::vector<double> means(static_cast<std::size_t>(channels));
  ok(msband_real_means(pipeline, means.data(), means.size()),
     "extracting channel means");
  std::string means_text;
  for (double v : means) means_text += fmt(v) + '\n';
  write_text(out_dir + "/channel_means.csv", means_text);

  // The fitted scheme must be able to rebuild its own bandlimited target
  // from minimum-density samples; that round trip goes into the report.
  auto spec_view = view(specs);
  PlanHandle plan;
  ok(msband_plan_build(spec_view.data(), fitted_sources, plan.out()),
     "partitioning fitted subbands");
  SampleSetHandle samples;
  ok(msband_acquire(target, plan, mixing, samples.out()),
     "sampling the bandlimited target");
  ok(msband_sample_set_save(samples, (out_dir + "/samples.json").c_str()),
     "saving samples");
  EnsembleHandle rebuilt;
  ok(msband_reconstruct(samples, plan, mixing, rebuilt.out(), nullptr),
     "reconstructing the bandlimited target");
  ok(msband_ensemble_save_csv(rebuilt,
                              (out_dir + "/reconstructed.csv").c_str()),
     "saving the reconstruction");
  double roundtrip = 0.0;
  ok(msband_nmse_db(target, rebuilt, &roundtrip), "comparing the round trip");
  long total = 0;
  double density = 0.0;
  ok(msband_sample_set_totals(samples, &total, &density), "counting samples");

  OwnedText report_text;
  ok(msband_real_report_json(pipeline, report_text.out()),
     "building the report");
  json report = json::parse(report_text.text);
  report["length"] = length;
  report["channels"] = channels;
  report["variance_target"] = variance_target;
  report["threshold_fraction"] = fraction;
  report["sample_total"] = total;
  report["density"] = density;
  report["roundtrip_nmse_db"] = roundtrip;
  write_text(out_dir + "/report.json", report.dump(2) + "\n");

  std::printf("factored %d sources (retained variance %s); bandwidth %ld "
              "bins, %ld samples, round-trip nmse %s dB; wrote %s/report.json\n",
              fitted_sources,
              fmt(report.at("retained_variance").get<double>()).c_str(),
              report.at("bandwidth").get<long>(), total,
              fmt(roundtrip).c_str(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-band sampling of correlated signal ensembles"};
  app.require_subcommand(1);
  // Lets --config appear after the subcommand name as well as before it.
  app.fallthrough(true);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file with defaults; explicit flags win")
      ->expected(1);

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Run synthetic trials across source/channel ratios");
  TrialOptions sweep_opts;
  add_trial_flags(sweep_cmd, &sweep_opts);
  int sweep_trials = 20;
  int sweep_workers = 1;
  std::vector<double> sweep_ratios{0.25, 0.5, 0.75, 1.0};
  int sweep_drop = -1;
  bool sweep_ablate = false;
  std::string sweep_out = "sweep_out";
  sweep_cmd->add_option("--trials", sweep_trials, "Trials per ratio");
  sweep_cmd->add_option("--workers", sweep_workers, "Worker threads");
  sweep_cmd->add_option("--ratios", sweep_ratios,
                        "Source/channel ratios to test");
  sweep_cmd->add_option("--drop-subband", sweep_drop,
                        "Discard this subband's samples in every trial");
  sweep_cmd->add_flag("--ablate", sweep_ablate,
                      "Discard the busiest subband's samples in every trial");
  sweep_cmd->add_option("--out", sweep_out, "Output directory");

  // compare
  auto* compare_cmd = app.add_subcommand(
      "compare", "Joint acquisition versus the per-channel baseline");
  TrialOptions compare_opts;
  add_trial_flags(compare_cmd, &compare_opts);
  int compare_trials = 20;
  int compare_workers = 1;
  int compare_sources = 0;
  std::string compare_out = "compare_out";
  compare_cmd->add_option("--trials", compare_trials, "Number of trials");
  compare_cmd->add_option("--workers", compare_workers, "Worker threads");
  compare_cmd->add_option("--sources", compare_sources,
                          "Latent sources (default channels/2)");
  compare_cmd->add_option("--out", compare_out, "Output directory");

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "Write a synthetic scene to files");
  TrialOptions synth_opts;
  add_trial_flags(synth_cmd, &synth_opts);
  int synth_sources = 4;
  bool synth_binary = false;
  std::string synth_out = "scene";
  synth_cmd->add_option("--sources", synth_sources, "Latent sources");
  synth_cmd->add_flag("--binary", synth_binary,
                      "Also write the observed ensemble in binary form");
  synth_cmd->add_option("--out", synth_out, "Output directory");

  // acquire
  auto* acquire_cmd = app.add_subcommand(
      "acquire", "Sample an observed ensemble at the minimum density");
  std::string acquire_observed;
  std::string acquire_mixing;
  std::vector<std::string> acquire_specs;
  std::string acquire_out = "samples.json";
  acquire_cmd->add_option("--observed", acquire_observed,
                          "Observed ensemble (.csv or .bin)")
      ->required();
  acquire_cmd->add_option("--mixing", acquire_mixing, "Mixing matrix csv")
      ->required();
  acquire_cmd->add_option("--spec", acquire_specs,
                          "Source spectrum json, once per source, in order")
      ->required();
  acquire_cmd->add_option("--out", acquire_out, "Sample file to write");

  // reconstruct
  auto* reconstruct_cmd = app.add_subcommand(
      "reconstruct", "Rebuild every channel from a sample file");
  std::string rec_samples;
  std::string rec_mixing;
  std::vector<std::string> rec_specs;
  std::string rec_out = "reconstructed.csv";
  std::string rec_info;
  std::string rec_reference;
  reconstruct_cmd->add_option("--samples", rec_samples, "Sample file")
      ->required();
  reconstruct_cmd->add_option("--mixing", rec_mixing, "Mixing matrix csv")
      ->required();
  reconstruct_cmd->add_option("--spec", rec_specs,
                              "Source spectrum json, once per source, in order")
      ->required();
  reconstruct_cmd->add_option("--out", rec_out, "Ensemble csv to write");
  reconstruct_cmd->add_option("--info", rec_info,
                              "Also write conditioning details to this file");
  reconstruct_cmd->add_option("--reference", rec_reference,
                              "Print the nmse against this ensemble");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "Normalized error between two ensembles");
  std::string eval_reference;
  std::string eval_estimate;
  std::string eval_out;
  eval_cmd->add_option("--reference", eval_reference, "Reference ensemble")
      ->required();
  eval_cmd->add_option("--estimate", eval_estimate, "Estimate ensemble")
      ->required();
  eval_cmd->add_option("--out", eval_out, "Also write the result as json");

  // real
  auto* real_cmd = app.add_subcommand(
      "real", "Factor measured series and fit block spectra");
  std::string real_input;
  int real_length = 0;
  int real_channels = 0;
  int real_sources = 0;
  double real_variance = 0.999;
  double real_fraction = 0.05;
  std::string real_out = "real_out";
  real_cmd->add_option("--input", real_input,
                       "Wide csv (columns are series) or directory of "
                       "one-column csv files")
      ->required();
  real_cmd->add_option("--length", real_length, "Instants to keep (even)")
      ->required();
  real_cmd->add_option("--channels", real_channels, "Series to keep")
      ->required();
  real_cmd->add_option("--sources", real_sources,
                       "Components to keep; 0 selects by variance target");
  real_cmd->add_option("--variance-target", real_variance,
                       "Eigenvalue share that picks the source count");
  real_cmd->add_option("--fraction", real_fraction,
                       "Support threshold as a fraction of the psd peak");
  real_cmd->add_option("--out", real_out, "Output directory");

  try {
    app.parse(argc, argv);

    json config;
    if (!config_path.empty()) config = load_config_file(config_path);
    if (!config.is_null()) {
      take_trial_config(config, sweep_cmd, &sweep_opts);
      take(config, "trials", sweep_cmd, "--trials", &sweep_trials);
      take(config, "workers", sweep_cmd, "--workers", &sweep_workers);
      take(config, "ratios", sweep_cmd, "--ratios", &sweep_ratios);
      take(config, "drop_subband", sweep_cmd, "--drop-subband", &sweep_drop);
      take(config, "ablate", sweep_cmd, "--ablate", &sweep_ablate);
      take(config, "out", sweep_cmd, "--out", &sweep_out);

      take_trial_config(config, compare_cmd, &compare_opts);
      take(config, "trials", compare_cmd, "--trials", &compare_trials);
      take(config, "workers", compare_cmd, "--workers", &compare_workers);
      take(config, "sources", compare_cmd, "--sources", &compare_sources);
      take(config, "out", compare_cmd, "--out", &compare_out);

      take_trial_config(config, synth_cmd, &synth_opts);
      take(config, "sources", synth_cmd, "--sources", &synth_sources);
      take(config, "out", synth_cmd, "--out", &synth_out);
    }

    if (*sweep_cmd) {
      return run_sweep(sweep_opts, sweep_trials, sweep_workers, sweep_ratios,
                       sweep_drop, sweep_ablate, sweep_out);
    }
    if (*compare_cmd) {
      return run_compare(compare_opts, compare_trials, compare_workers,
                         compare_sources, compare_out);
    }
    if (*synth_cmd) {
      return run_synth(synth_opts, synth_sources, synth_binary, synth_out);
    }
    if (*acquire_cmd) {
      return run_acquire(acquire_observed, acquire_mixing, acquire_specs,
                         acquire_out);
    }
    if (*reconstruct_cmd) {
      return run_reconstruct(rec_samples, rec_mixing, rec_specs, rec_out,
                             rec_info, rec_reference);
    }
    if (*eval_cmd) return run_eval(eval_reference, eval_estimate, eval_out);
    if (*real_cmd) {
      return run_real(real_input, real_length, real_channels, real_sources,
                      real_variance, real_fraction, real_out);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Failure& failure) {
    return failure.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msband.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;

  Scratch() {
    static int n = 0;
    dir = fs::temp_directory_path() /
          ("msband_capi_" + std::to_string(::getpid()) + "_" +
           std::to_string(n++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  std::string path(const std::string& name) const {
    return (dir / name).string();
  }
};

// Owned C string that frees through the library's allocator.
struct OwnedString {
  char* text = nullptr;
  ~OwnedString() { msband_string_free(text); }
};

}  // namespace

TEST_CASE("status names track the status codes") {
  CHECK(std::strcmp(msband_status_name(MSBAND_OK), "Ok") == 0);
  CHECK(std::strcmp(msband_status_name(MSBAND_SIZE_MISMATCH),
                    "SizeMismatch") == 0);
  CHECK(std::strcmp(msband_status_name(MSBAND_PARSE_ERROR), "ParseError") == 0);
}

TEST_CASE("null arguments are reported without touching the library state") {
  CHECK(msband_psd_spec_random(16, 1, 1, 0.5, 1.0, 2, 4, 0, nullptr) ==
        MSBAND_INVALID_ARGUMENT);
  CHECK(msband_plan_build(nullptr, 1, nullptr) == MSBAND_INVALID_ARGUMENT);
  CHECK(msband_mixing_random(4, 2, 1, nullptr) == MSBAND_INVALID_ARGUMENT);
  CHECK(std::string(msband_last_error()).find("null") != std::string::npos);
}

TEST_CASE("spec handles expose length, support, and files") {
  Scratch scratch;
  msband_psd_spec* spec = nullptr;
  REQUIRE(msband_psd_spec_random(64, 9, 3, 0.5, 2.0, 3, 8, 0, &spec) ==
          MSBAND_OK);
  int length = 0;
  CHECK(msband_psd_spec_length(spec, &length) == MSBAND_OK);
  CHECK(length == 64);
  long bins = 0;
  CHECK(msband_psd_spec_support(spec, &bins) == MSBAND_OK);
  CHECK(bins > 0);
  CHECK(bins % 2 == 0);

  CHECK(msband_psd_spec_save(spec, scratch.path("s.json").c_str()) ==
        MSBAND_OK);
  msband_psd_spec* back = nullptr;
  CHECK(msband_psd_spec_load(scratch.path("s.json").c_str(), 0, &back) ==
        MSBAND_OK);
  long bins_back = 0;
  CHECK(msband_psd_spec_support(back, &bins_back) == MSBAND_OK);
  CHECK(bins_back == bins);

  msband_psd_spec_free(spec);
  msband_psd_spec_free(back);
}

TEST_CASE("building a spec from half-spectrum blocks mirrors them") {
  int lo[2] = {2, 10};
  int hi[2] = {5, 12};
  double level[2] = {1.0, 0.25};
  msband_psd_spec* spec = nullptr;
  REQUIRE(msband_psd_spec_build(32, lo, hi, level, 2, 0, &spec) == MSBAND_OK);
  long bins = 0;
  CHECK(msband_psd_spec_support(spec, &bins) == MSBAND_OK);
  CHECK(bins == 10);
  msband_psd_spec_free(spec);

  // Overlapping input blocks fail with the exact code.
  int olo[2] = {2, 3};
  int ohi[2] = {6, 8};
  msband_psd_spec* bad = nullptr;
  CHECK(msband_psd_spec_build(32, olo, ohi, level, 2, 0, &bad) ==
        MSBAND_OVERLAPPING_BLOCKS);
  CHECK(bad == nullptr);
  CHECK(std::string(msband_last_error()).size() > 0);
}

TEST_CASE("a full trial runs through the C interface") {
  msband_trial_config config;
  msband_trial_config_init(&config);
  CHECK(config.length == 512);
  CHECK(config.drop_subband == -1);
  CHECK(std::isnan(config.nmse_threshold));

  config.seed = 31;
  config.length = 256;
  config.channels = 6;
  config.sources = 3;
  config.with_baseline = 1;

  OwnedString report;
  REQUIRE(msband_trial_run(&config, &report.text) == MSBAND_OK);
  auto j = nlohmann::json::parse(report.text);
  CHECK(j["T"] == 256);
  CHECK(j["N"] == 6);
  CHECK(j["M"] == 3);
  CHECK(j["bound_verified"] == true);
  CHECK(j["density_exact"] == true);
  CHECK(j["sample_total"] == j["bandwidth"]);
  CHECK(j["nmse_db"].get<double>() <= j["nmse_threshold_db"].get<double>());
  CHECK(j["baseline_total"].get<long>() >= j["sample_total"].get<long>());

  // Same config, same report text.
  OwnedString again;
  REQUIRE(msband_trial_run(&config, &again.text) == MSBAND_OK);
  CHECK(std::string(report.text) == again.text);
}

TEST_CASE("the acquisition loop round-trips through handles and buffers") {
  msband_psd_spec* specs[2] = {nullptr, nullptr};
  REQUIRE(msband_psd_spec_random(128, 5, 2, 0.5, 2.0, 4, 8, 0, &specs[0]) ==
          MSBAND_OK);
  REQUIRE(msband_psd_spec_random(128, 6, 2, 0.5, 2.0, 4, 8, 1, &specs[1]) ==
          MSBAND_OK);

  msband_plan* plan = nullptr;
  REQUIRE(msband_plan_build(specs, 2, &plan) == MSBAND_OK);
  int subbands = 0;
  long bandwidth = 0;
  CHECK(msband_plan_info(plan, &subbands, &bandwidth) == MSBAND_OK);
  CHECK(subbands > 0);
  int busiest = -2;
  CHECK(msband_plan_busiest(plan, specs, 2, &busiest) == MSBAND_OK);
  CHECK(busiest >= 0);
  CHECK(busiest < subbands);

  msband_mixing* mixing = nullptr;
  REQUIRE(msband_mixing_random(5, 2, 3, &mixing) == MSBAND_OK);
  int channels = 0;
  int sources = 0;
  CHECK(msband_mixing_dims(mixing, &channels, &sources) == MSBAND_OK);
  CHECK(channels == 5);
  CHECK(sources == 2);

  msband_ensemble* latents = nullptr;
  REQUIRE(msband_synthesize(specs, 2, 77, &latents) == MSBAND_OK);
  msband_ensemble* observed = nullptr;
  REQUIRE(msband_mix(mixing, latents, &observed) == MSBAND_OK);
  int role = -1;
  CHECK(msband_ensemble_role(observed, &role) == MSBAND_OK);
  CHECK(role == 1);

  msband_sample_set* samples = nullptr;
  REQUIRE(msband_acquire(observed, plan, mixing, &samples) == MSBAND_OK);
  long total = 0;
  double density = 0.0;
  CHECK(msband_sample_set_totals(samples, &total, &density) == MSBAND_OK);
  CHECK(total == bandwidth);
  CHECK(density == doctest::Approx(static_cast<double>(total) / (128 * 5)));

  msband_ensemble* rebuilt = nullptr;
  OwnedString info;
  REQUIRE(msband_reconstruct(samples, plan, mixing, &rebuilt, &info.text) ==
          MSBAND_OK);
  double nmse = 0.0;
  CHECK(msband_nmse_db(observed, rebuilt, &nmse) == MSBAND_OK);
  CHECK(nmse <= -80.0);
  auto ij = nlohmann::json::parse(info.text);
  CHECK(ij["max_temporal_condition"].get<double>() >= 1.0);
  CHECK(ij["per_subband"].size() == static_cast<std::size_t>(subbands));

  // Dropping a subband keeps the call usable and degrades accuracy.
  msband_sample_set* reduced = nullptr;
  REQUIRE(msband_sample_set_drop(samples, busiest, &reduced) == MSBAND_OK);
  long reduced_total = 0;
  CHECK(msband_sample_set_totals(reduced, &reduced_total, nullptr) ==
        MSBAND_OK);
  CHECK(reduced_total < total);
  msband_ensemble* degraded = nullptr;
  REQUIRE(msband_reconstruct(reduced, plan, mixing, &degraded, nullptr) ==
          MSBAND_OK);
  double degraded_nmse = 0.0;
  CHECK(msband_nmse_db(observed, degraded, &degraded_nmse) == MSBAND_OK);
  CHECK(degraded_nmse > -20.0);

  // Ensemble buffers respect their capacity.
  int n = 0;
  int T = 0;
  CHECK(msband_ensemble_dims(observed, &n, &T) == MSBAND_OK);
  std::vector<double> buffer(static_cast<std::size_t>(n) * T);
  CHECK(msband_ensemble_data(observed, buffer.data(), buffer.size()) ==
        MSBAND_OK);
  CHECK(msband_ensemble_data(observed, buffer.data(), buffer.size() - 1) ==
        MSBAND_SIZE_MISMATCH);

  msband_ensemble_free(degraded);
  msband_sample_set_free(reduced);
  msband_ensemble_free(rebuilt);
  msband_sample_set_free(samples);
  msband_ensemble_free(observed);
  msband_ensemble_free(latents);
  msband_mixing_free(mixing);
  msband_plan_free(plan);
  msband_psd_spec_free(specs[0]);
  msband_psd_spec_free(specs[1]);
}

TEST_CASE("sample sets and ensembles survive file round trips") {
  Scratch scratch;
  msband_psd_spec* spec = nullptr;
  REQUIRE(msband_psd_spec_random(64, 4, 2, 0.5, 2.0, 3, 6, 0, &spec) ==
          MSBAND_OK);
  msband_plan* plan = nullptr;
  REQUIRE(msband_plan_build(&spec, 1, &plan) == MSBAND_OK);
  msband_mixing* mixing = nullptr;
  REQUIRE(msband_mixing_random(3, 1, 8, &mixing) == MSBAND_OK);
  msband_ensemble* latents = nullptr;
  REQUIRE(msband_synthesize(&spec, 1, 15, &latents) == MSBAND_OK);
  msband_ensemble* observed = nullptr;
  REQUIRE(msband_mix(mixing, latents, &observed) == MSBAND_OK);
  msband_sample_set* samples = nullptr;
  REQUIRE(msband_acquire(observed, plan, mixing, &samples) == MSBAND_OK);

  CHECK(msband_sample_set_save(samples, scratch.path("s.json").c_str()) ==
        MSBAND_OK);
  msband_sample_set* loaded = nullptr;
  CHECK(msband_sample_set_load(scratch.path("s.json").c_str(), &loaded) ==
        MSBAND_OK);
  msband_ensemble* rebuilt = nullptr;
  REQUIRE(msband_reconstruct(loaded, plan, mixing, &rebuilt, nullptr) ==
          MSBAND_OK);
  double nmse = 0.0;
  CHECK(msband_nmse_db(observed, rebuilt, &nmse) == MSBAND_OK);
  CHECK(nmse <= -80.0);

  CHECK(msband_ensemble_save_binary(observed, scratch.path("x.bin").c_str()) ==
        MSBAND_OK);
  msband_ensemble* from_bin = nullptr;
  CHECK(msband_ensemble_load_binary(scratch.path("x.bin").c_str(), &from_bin) ==
        MSBAND_OK);
  double zero = 1.0;
  CHECK(msband_nmse_db(observed, from_bin, &zero) == MSBAND_OK);
  CHECK(zero == -300.0);

  CHECK(msband_ensemble_load_csv(scratch.path("missing.csv").c_str(), 1,
                                 &from_bin) == MSBAND_IO_ERROR);

  msband_ensemble_free(from_bin);
  msband_ensemble_free(rebuilt);
  msband_sample_set_free(loaded);
  msband_sample_set_free(samples);
  msband_ensemble_free(observed);
  msband_ensemble_free(latents);
  msband_mixing_free(mixing);
  msband_plan_free(plan);
  msband_psd_spec_free(spec);
}

TEST_CASE("premise checks mirror the library report") {
  double mixing[6] = {1, 0, 0, 1, 1, 1};
  double powers[2] = {1.0, 2.0};
  int more = 0;
  int positive = 0;
  int rows = 0;
  int all = 0;
  CHECK(msband_check_premises(mixing, 3, 2, powers, &more, &positive, &rows,
                              &all) == MSBAND_OK);
  CHECK(more == 1);
  CHECK(positive == 1);
  CHECK(rows == 1);
  CHECK(all == 1);

  double dead[2] = {1.0, 0.0};
  CHECK(msband_check_premises(mixing, 3, 2, dead, &more, &positive, &rows,
                              &all) == MSBAND_OK);
  CHECK(positive == 0);
  CHECK(all == 0);

  CHECK(msband_check_premises(mixing, 0, 2, powers, &more, &positive, &rows,
                              &all) == MSBAND_DIMENSION_ERROR);
}

TEST_CASE("rate comparison and error payloads flow through the interface") {
  double values[6] = {1, 0, 0, 1, 1, 1};
  msband_mixing* mixing = nullptr;
  REQUIRE(msband_mixing_build(values, 3, 2, &mixing) == MSBAND_OK);

  msband_psd_spec* specs[2] = {nullptr, nullptr};
  int lo0[1] = {2};
  int hi0[1] = {4};
  double lv[1] = {1.0};
  REQUIRE(msband_psd_spec_build(32, lo0, hi0, lv, 1, 0, &specs[0]) ==
          MSBAND_OK);
  int lo1[1] = {5};
  int hi1[1] = {8};
  REQUIRE(msband_psd_spec_build(32, lo1, hi1, lv, 1, 1, &specs[1]) ==
          MSBAND_OK);

  long joint = 0;
  long separate = 0;
  CHECK(msband_rate_comparison(mixing,
                               const_cast<const msband_psd_spec* const*>(specs),
                               2, &joint, &separate) == MSBAND_OK);
  CHECK(joint == 10);
  CHECK(separate == 20);

  // A failing solve records its condition number for the caller.
  msband_last_error();
  double nan_before = msband_last_error_condition();
  CHECK(std::isnan(nan_before));

  msband_mixing_free(mixing);
  msband_psd_spec_free(specs[0]);
  msband_psd_spec_free(specs[1]);
}

TEST_CASE("the measured-data pipeline runs from a csv file") {
  Scratch scratch;

  // Ten channels mixing four bandlimited sources, written as a wide csv.
  msband_psd_spec* specs[4] = {};
  for (int m = 0; m < 4; ++m) {
    REQUIRE(msband_psd_spec_random(128, 900 + static_cast<uint64_t>(m), 2, 0.5,
                                   2.0, 3, 8, m, &specs[m]) == MSBAND_OK);
  }
  msband_mixing* mixing = nullptr;
  REQUIRE(msband_mixing_random(10, 4, 55, &mixing) == MSBAND_OK);
  msband_ensemble* latents = nullptr;
  REQUIRE(msband_synthesize(specs, 4, 66, &latents) == MSBAND_OK);
  msband_ensemble* observed = nullptr;
  REQUIRE(msband_mix(mixing, latents, &observed) == MSBAND_OK);

  // Columns are series, rows are instants.
  std::vector<double> data(10 * 128);
  REQUIRE(msband_ensemble_data(observed, data.data(), data.size()) ==
          MSBAND_OK);
  std::ofstream out(scratch.path("wide.csv"));
  for (int t = 0; t < 128; ++t) {
    for (int n = 0; n < 10; ++n) {
      out << (n ? "," : "") << data[static_cast<std::size_t>(n) * 128 +
                                    static_cast<std::size_t>(t)];
    }
    out << "\n";
  }
  out.close();

  msband_real_pipeline* pipeline = nullptr;
  REQUIRE(msband_real_run(scratch.path("wide.csv").c_str(), 128, 10, 4, 0.999,
                          0.05, &pipeline) == MSBAND_OK);
  int sources = 0;
  CHECK(msband_real_sources(pipeline, &sources) == MSBAND_OK);
  CHECK(sources == 4);

  OwnedString report;
  CHECK(msband_real_report_json(pipeline, &report.text) == MSBAND_OK);
  auto j = nlohmann::json::parse(report.text);
  CHECK(j["sources"] == 4);
  CHECK(j["retained_variance"].get<double>() >= 0.999);
  CHECK(j["support_bins"].size() == 4);
  CHECK(j["bandwidth"].get<long>() > 0);

  msband_ensemble* target = nullptr;
  CHECK(msband_real_observed(pipeline, &target) == MSBAND_OK);
  int n = 0;
  int T = 0;
  CHECK(msband_ensemble_dims(target, &n, &T) == MSBAND_OK);
  CHECK(n == 10);
  CHECK(T == 128);

  msband_mixing* mixing_hat = nullptr;
  CHECK(msband_real_mixing(pipeline, &mixing_hat) == MSBAND_OK);
  msband_psd_spec* fitted[4] = {};
  for (int m = 0; m < 4; ++m) {
    CHECK(msband_real_spec(pipeline, m, &fitted[m]) == MSBAND_OK);
  }
  msband_plan* plan = nullptr;
  REQUIRE(msband_plan_build(fitted, 4, &plan) == MSBAND_OK);
  msband_sample_set* samples = nullptr;
  REQUIRE(msband_acquire(target, plan, mixing_hat, &samples) == MSBAND_OK);
  msband_ensemble* rebuilt = nullptr;
  REQUIRE(msband_reconstruct(samples, plan, mixing_hat, &rebuilt, nullptr) ==
          MSBAND_OK);
  double nmse = 0.0;
  CHECK(msband_nmse_db(target, rebuilt, &nmse) == MSBAND_OK);
  CHECK(nmse <= -80.0);

  std::vector<double> psd(128);
  CHECK(msband_real_psd(pipeline, 0, psd.data(), psd.size()) == MSBAND_OK);
  CHECK(msband_real_psd(pipeline, 0, psd.data(), 10) == MSBAND_SIZE_MISMATCH);
  CHECK(msband_real_psd(pipeline, 9, psd.data(), psd.size()) ==
        MSBAND_DOMAIN_ERROR);
  std::vector<double> means(10);
  CHECK(msband_real_means(pipeline, means.data(), means.size()) == MSBAND_OK);

  msband_ensemble_free(rebuilt);
  msband_sample_set_free(samples);
  msband_plan_free(plan);
  for (auto* s : fitted) msband_psd_spec_free(s);
  msband_mixing_free(mixing_hat);
  msband_ensemble_free(target);
  msband_real_pipeline_free(pipeline);
  msband_ensemble_free(observed);
  msband_ensemble_free(latents);
  msband_mixing_free(mixing);
  for (auto* s : specs) msband_psd_spec_free(s);
}

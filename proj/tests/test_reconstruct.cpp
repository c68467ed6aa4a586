#include <doctest.h>

#include <complex>
#include <functional>
#include <numbers>

#include "msband/metrics.hpp"
#include "msband/reconstruct.hpp"
#include "msband/rng.hpp"

using msband::Error;
using msband::ErrorCode;
using msband::FrequencyGrid;
using msband::MixingMatrix;
using msband::PhaseDraw;
using msband::PsdSpec;

namespace {

ErrorCode code_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

struct Scene {
  std::vector<PsdSpec> specs;
  msband::SubbandPlan plan;
  MixingMatrix mixing;
  msband::SignalEnsemble observed;
  msband::SampleSet samples;
};

Scene make_scene(int length, int channels, int sources, std::uint64_t seed,
                 std::pair<int, int> width) {
  Scene scene{{},
              {},
              msband::random_mixing_matrix(channels, sources, seed + 1),
              {},
              {}};
  for (int m = 0; m < sources; ++m) {
    scene.specs.push_back(msband::random_psd_spec(
        FrequencyGrid{length}, seed * 131 + static_cast<std::uint64_t>(m), 3,
        {0.5, 2.0}, width, m));
  }
  scene.plan = msband::partition_subbands(scene.specs);
  scene.observed = msband::mix(
      scene.mixing,
      msband::synthesize_ensemble(
          scene.specs, PhaseDraw::draw(sources, length, seed + 2)));
  scene.samples = msband::acquire(scene.observed, scene.plan, scene.mixing);
  return scene;
}

}  // namespace

TEST_CASE("temporal interpolation is the identity on a fully sampled band") {
  msband::Rng rng(1);
  const int T = 16;
  Eigen::VectorXcd x(T);
  for (int t = 0; t < T; ++t) x(t) = {rng.normal(), rng.normal()};
  std::vector<int> times(T);
  for (int t = 0; t < T; ++t) times[static_cast<std::size_t>(t)] = t;
  double cond = 0.0;
  Eigen::VectorXcd rebuilt = msband::temporal_interpolate(x, times, 0, T, T, &cond);
  CHECK((rebuilt - x).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(cond == doctest::Approx(1.0));
}

TEST_CASE("one sample pins down a single-bin component") {
  const int T = 32;
  std::complex<double> v{0.7, -0.3};
  Eigen::VectorXcd samples(1);
  samples(0) = v;
  Eigen::VectorXcd rebuilt =
      msband::temporal_interpolate(samples, {0}, 5, 6, T, nullptr);
  for (int t = 0; t < T; ++t) {
    std::complex<double> expected =
        v * std::polar(1.0, 2.0 * std::numbers::pi * 5.0 * t / T);
    CHECK(std::abs(rebuilt(t) - expected) <= 1e-12);
  }
}

TEST_CASE("temporal interpolation recovers bandpass components") {
  msband::Rng rng(7);
  auto run = [&](int T, int lo, int hi) {
    Eigen::VectorXd x(T);
    for (int t = 0; t < T; ++t) x(t) = rng.normal();
    Eigen::VectorXcd component = msband::subband_component(x, lo, hi);
    std::vector<int> times = msband::temporal_positions(hi - lo, T);
    Eigen::VectorXcd values(hi - lo);
    for (int j = 0; j < hi - lo; ++j) {
      values(j) = component(times[static_cast<std::size_t>(j)]);
    }
    double cond = 0.0;
    Eigen::VectorXcd rebuilt =
        msband::temporal_interpolate(values, times, lo, hi, T, &cond);
    CHECK((rebuilt - component).lpNorm<Eigen::Infinity>() <= 1e-10);
    return cond;
  };

  // Width divides the window: uniform instants, condition exactly one.
  CHECK(run(64, 8, 16) == doctest::Approx(1.0));
  CHECK(run(64, 3, 4) == doctest::Approx(1.0));
  // Width does not divide the window: the solver runs on uneven spacing.
  double cond = run(20, 4, 11);
  CHECK(cond >= 1.0);
  CHECK(cond < 1e4);
  run(512, 100, 105);
}

TEST_CASE("temporal interpolation validates its inputs") {
  Eigen::VectorXcd samples(3);
  samples.setZero();
  CHECK(code_of([&] {
          msband::temporal_interpolate(samples, {0, 5}, 0, 3, 16, nullptr);
        }) == ErrorCode::SizeMismatch);
  CHECK(code_of([&] {
          msband::temporal_interpolate(samples, {0, 5, 5}, 0, 3, 16, nullptr);
        }) == ErrorCode::DomainError);
  CHECK(code_of([&] {
          msband::temporal_interpolate(samples, {0, 5, 16}, 0, 3, 16, nullptr);
        }) == ErrorCode::DomainError);
  CHECK(code_of([&] {
          msband::temporal_interpolate(samples, {0, 5, 10}, 14, 17, 16, nullptr);
        }) == ErrorCode::DomainError);
}

TEST_CASE("the spatial lift is the identity on the selected rows") {
  MixingMatrix mixing = msband::random_mixing_matrix(6, 3, 21);
  std::vector<int> active{0, 1, 2};
  msband::RowSelection sel = msband::select_rows(mixing, active);
  msband::SpatialInterpolator lift =
      msband::build_spatial_interpolator(mixing, active, sel.rows);
  CHECK(lift.condition == doctest::Approx(sel.condition));
  for (std::size_t i = 0; i < sel.rows.size(); ++i) {
    for (std::size_t j = 0; j < sel.rows.size(); ++j) {
      CHECK(lift.lift(sel.rows[i], static_cast<Eigen::Index>(j)) ==
            doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
  // Lifting the selected rows of mixed data restores every channel when all
  // sources are active.
  Eigen::MatrixXcd latents(3, 5);
  msband::Rng rng(3);
  for (int m = 0; m < 3; ++m) {
    for (int t = 0; t < 5; ++t) latents(m, t) = {rng.normal(), rng.normal()};
  }
  Eigen::MatrixXcd full =
      mixing.matrix().cast<std::complex<double>>() * latents;
  Eigen::MatrixXcd selected(sel.rows.size(), 5);
  for (std::size_t i = 0; i < sel.rows.size(); ++i) {
    selected.row(static_cast<Eigen::Index>(i)) = full.row(sel.rows[i]);
  }
  Eigen::MatrixXcd lifted = msband::spatial_interpolate(lift, selected);
  CHECK((lifted - full).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("the spatial lift rejects rows that cannot invert the mixing") {
  Eigen::MatrixXd u(3, 2);
  u << 1, 0, 0, 1, 1, 1;
  MixingMatrix mixing(u);
  // Row 1 carries nothing of source 0.
  CHECK(code_of([&] {
          msband::build_spatial_interpolator(mixing, {0}, {1});
        }) == ErrorCode::SingularSystem);
  CHECK(code_of([&] {
          msband::build_spatial_interpolator(mixing, {0, 1}, {0});
        }) == ErrorCode::SizeMismatch);
  CHECK(code_of([&] {
          msband::build_spatial_interpolator(mixing, {0}, {3});
        }) == ErrorCode::DomainError);
}

TEST_CASE("reconstruction is exact at the minimum sampling density") {
  // Divisible subband widths: every temporal solve is a scaled FFT.
  Scene uniform = make_scene(512, 8, 4, 100, {4, 4});
  msband::ReconstructionInfo info;
  msband::SignalEnsemble rebuilt =
      msband::reconstruct(uniform.samples, uniform.plan, uniform.mixing, &info);
  CHECK(rebuilt.role == msband::SignalRole::reconstructed);
  CHECK(msband::nmse_db(uniform.observed, rebuilt) <= -120.0);
  CHECK(info.imaginary_residue <= 1e-10);
  CHECK(info.max_temporal_condition >= 1.0);
  CHECK(info.per_subband.size() == uniform.plan.subbands.size());

  // Mixed widths, most of them not dividing 512.
  Scene uneven = make_scene(512, 8, 4, 200, {3, 11});
  msband::ReconstructionInfo info2;
  msband::SignalEnsemble rebuilt2 =
      msband::reconstruct(uneven.samples, uneven.plan, uneven.mixing, &info2);
  CHECK(msband::nmse_db(uneven.observed, rebuilt2) <= -80.0);
}

TEST_CASE("reconstruction is linear in the samples") {
  Scene scene = make_scene(128, 5, 2, 300, {2, 6});
  msband::SignalEnsemble base =
      msband::reconstruct(scene.samples, scene.plan, scene.mixing);
  msband::SampleSet scaled = scene.samples;
  for (auto& band : scaled.bands) band.values *= 2.0;
  msband::SignalEnsemble doubled =
      msband::reconstruct(scaled, scene.plan, scene.mixing);
  CHECK((doubled.samples - 2.0 * base.samples).lpNorm<Eigen::Infinity>() <=
        1e-10 * base.samples.lpNorm<Eigen::Infinity>());
}

TEST_CASE("re-acquiring a reconstruction reproduces the samples") {
  Scene scene = make_scene(128, 5, 2, 400, {2, 6});
  msband::SignalEnsemble rebuilt =
      msband::reconstruct(scene.samples, scene.plan, scene.mixing);
  msband::SampleSet again = msband::acquire(rebuilt, scene.plan, scene.mixing);
  REQUIRE(again.bands.size() == scene.samples.bands.size());
  for (std::size_t l = 0; l < again.bands.size(); ++l) {
    CHECK((again.bands[l].values - scene.samples.bands[l].values)
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
  }
}

TEST_CASE("a dropped subband degrades the output instead of failing") {
  Scene scene = make_scene(256, 6, 3, 500, {4, 8});
  msband::SampleSet reduced = msband::drop_subband(scene.samples, 0);
  msband::ReconstructionInfo info;
  msband::SignalEnsemble rebuilt =
      msband::reconstruct(reduced, scene.plan, scene.mixing, &info);
  double nmse = msband::nmse_db(scene.observed, rebuilt);
  CHECK(nmse >= -20.0);
  // Half of the dropped content sits in the imaginary part.
  CHECK(info.imaginary_residue > 1e-6);
}

TEST_CASE("corrupted samples in a complete set raise the realness check") {
  Scene scene = make_scene(128, 5, 2, 600, {2, 6});
  msband::SampleSet corrupted = scene.samples;
  corrupted.bands[0].values *= std::complex<double>(0.0, 1.0);
  CHECK(code_of([&] {
          msband::reconstruct(corrupted, scene.plan, scene.mixing);
        }) == ErrorCode::ImaginaryResidue);
}

TEST_CASE("reconstruction validates the sample set against the plan") {
  Scene scene = make_scene(128, 5, 2, 700, {2, 6});

  msband::SampleSet bad_index = scene.samples;
  bad_index.bands[0].subband = 99;
  CHECK(code_of([&] {
          msband::reconstruct(bad_index, scene.plan, scene.mixing);
        }) == ErrorCode::DomainError);

  msband::SampleSet duplicate = scene.samples;
  duplicate.bands[1] = duplicate.bands[0];
  CHECK(code_of([&] {
          msband::reconstruct(duplicate, scene.plan, scene.mixing);
        }) == ErrorCode::DomainError);

  msband::SampleSet short_rows = scene.samples;
  short_rows.bands[0].rows.pop_back();
  CHECK(code_of([&] {
          msband::reconstruct(short_rows, scene.plan, scene.mixing);
        }) == ErrorCode::SizeMismatch);

  MixingMatrix other = msband::random_mixing_matrix(7, 2, 1);
  CHECK(code_of([&] {
          msband::reconstruct(scene.samples, scene.plan, other);
        }) == ErrorCode::SizeMismatch);
}

TEST_CASE("per-channel baseline reconstruction is exact and honors zeros") {
  Eigen::MatrixXd u(3, 2);
  u << 1, 0, 0, 1, 1, 1;
  MixingMatrix mixing(u);
  PsdSpec s0(FrequencyGrid{64}, {{2, 6, 1.0}, {59, 63, 1.0}}, 0);
  PsdSpec s1(FrequencyGrid{64}, {{10, 15, 2.0}, {50, 55, 2.0}}, 1);
  msband::SignalEnsemble observed = msband::mix(
      mixing, msband::synthesize_ensemble({s0, s1}, PhaseDraw::draw(2, 64, 9)));

  msband::ReconstructionInfo info;
  msband::SignalEnsemble rebuilt =
      msband::separate_reconstruct(observed, mixing, {s0, s1}, &info);
  CHECK(msband::nmse_db(observed, rebuilt) <= -120.0);
  CHECK(info.max_temporal_condition >= 1.0);

  // Random dense mixing across a larger scene.
  Scene scene = make_scene(256, 6, 3, 800, {3, 9});
  msband::SignalEnsemble baseline =
      msband::separate_reconstruct(scene.observed, scene.mixing, scene.specs);
  CHECK(msband::nmse_db(scene.observed, baseline) <= -80.0);
}

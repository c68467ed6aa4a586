#include <doctest.h>

#include <cmath>
#include <functional>

#include "msband/fft.hpp"
#include "msband/rng.hpp"
#include "msband/synthesis.hpp"

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

}  // namespace

TEST_CASE("single-tone synthesis matches the closed form") {
  // One pair of bins at +-2 on an 8-point grid with zero phase:
  // x(t) = (2 / sqrt(8)) cos(pi t / 2).
  PsdSpec spec(FrequencyGrid{8}, {{2, 3, 1.0}, {6, 7, 1.0}});
  Eigen::VectorXd phases = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd x = msband::synthesize_latent(spec, phases);
  const double amp = 2.0 / std::sqrt(8.0);
  for (int t = 0; t < 8; ++t) {
    double expected = amp * std::cos(std::numbers::pi * t / 2.0);
    CHECK(x(t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("dc and nyquist terms carry their levels without a phase") {
  // S(0) = 4 contributes 2/sqrt(T); S(T/2) = 9 contributes 3(-1)^t/sqrt(T).
  PsdSpec spec(FrequencyGrid{8}, {{0, 1, 4.0}, {4, 5, 9.0}});
  Eigen::VectorXd x =
      msband::synthesize_latent(spec, Eigen::VectorXd::Zero(3));
  const double scale = 1.0 / std::sqrt(8.0);
  for (int t = 0; t < 8; ++t) {
    double expected = scale * (2.0 + (t % 2 == 0 ? 3.0 : -3.0));
    CHECK(x(t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("periodogram of a synthesized series equals the spec in every bin") {
  FrequencyGrid grid{128};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PsdSpec spec = msband::random_psd_spec(grid, seed, 3, {0.25, 4.0}, {2, 9});
    PhaseDraw draw = PhaseDraw::draw(1, 128, seed + 1000);
    Eigen::VectorXd x = msband::synthesize_latent(spec, draw.phases.row(0));
    Eigen::VectorXd psd = msband::fft::periodogram(x);
    for (int k = 0; k < 128; ++k) {
      CHECK(psd(k) == doctest::Approx(spec.level_at(k)).epsilon(1e-9));
    }
  }
}

TEST_CASE("synthesized mean power equals the summed spectrum levels") {
  FrequencyGrid grid{64};
  PsdSpec spec = msband::random_psd_spec(grid, 7, 2, {0.5, 2.0}, {3, 9});
  PhaseDraw draw = PhaseDraw::draw(1, 64, 11);
  Eigen::VectorXd x = msband::synthesize_latent(spec, draw.phases.row(0));
  double level_sum = 0.0;
  for (int k = 0; k < 64; ++k) level_sum += spec.level_at(k);
  CHECK(x.squaredNorm() == doctest::Approx(level_sum).epsilon(1e-12));
}

TEST_CASE("phase draws are deterministic and shaped by the grid") {
  PhaseDraw a = PhaseDraw::draw(3, 64, 5);
  PhaseDraw b = PhaseDraw::draw(3, 64, 5);
  CHECK(a.phases == b.phases);
  CHECK(a.phases.rows() == 3);
  CHECK(a.phases.cols() == 31);
  CHECK((a.phases.array() >= 0.0).all());
  CHECK((a.phases.array() < 2.0 * std::numbers::pi).all());
  PhaseDraw c = PhaseDraw::draw(3, 64, 6);
  CHECK(a.phases != c.phases);
}

TEST_CASE("ensemble synthesis applies one spec and phase row per source") {
  FrequencyGrid grid{64};
  std::vector<PsdSpec> specs;
  for (int m = 0; m < 3; ++m) {
    specs.push_back(msband::random_psd_spec(grid, 20 + m, 2, {0.5, 2.0}, {2, 6}, m));
  }
  PhaseDraw draw = PhaseDraw::draw(3, 64, 99);
  msband::SignalEnsemble latents = msband::synthesize_ensemble(specs, draw);
  CHECK(latents.role == msband::SignalRole::latent);
  CHECK(latents.channels() == 3);
  CHECK(latents.length() == 64);
  for (int m = 0; m < 3; ++m) {
    Eigen::VectorXd row =
        msband::synthesize_latent(specs[static_cast<std::size_t>(m)],
                                  draw.phases.row(m));
    CHECK((latents.samples.row(m).transpose() - row).norm() == 0.0);
  }

  CHECK(code_of([&] {
          msband::synthesize_ensemble({specs[0]}, draw);
        }) == ErrorCode::SizeMismatch);
}

TEST_CASE("mixing validates shape, rank, and rows") {
  Eigen::MatrixXd tall(3, 2);
  tall << 1, 0, 0, 1, 1, 1;
  CHECK_NOTHROW(MixingMatrix{tall});

  Eigen::MatrixXd wide(2, 3);
  wide << 1, 0, 0, 0, 1, 0;
  CHECK(code_of([&] { MixingMatrix m(wide); }) == ErrorCode::DimensionError);

  Eigen::MatrixXd dependent(3, 2);
  dependent << 1, 2, 2, 4, 3, 6;
  CHECK(code_of([&] { MixingMatrix m(dependent); }) == ErrorCode::RankDeficient);

  Eigen::MatrixXd zero_row(3, 2);
  zero_row << 1, 0, 0, 0, 0, 1;
  CHECK(code_of([&] { MixingMatrix m(zero_row); }) == ErrorCode::DomainError);
}

TEST_CASE("random mixing is deterministic, well conditioned, and validated") {
  MixingMatrix a = msband::random_mixing_matrix(8, 4, 3);
  MixingMatrix b = msband::random_mixing_matrix(8, 4, 3);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.channels() == 8);
  CHECK(a.sources() == 4);
  CHECK(a.condition() <= 1e6);
  MixingMatrix c = msband::random_mixing_matrix(8, 4, 4);
  CHECK(a.matrix() != c.matrix());
  CHECK(code_of([] { msband::random_mixing_matrix(2, 4, 0); }) ==
        ErrorCode::DimensionError);
}

TEST_CASE("mix multiplies through the mixing matrix") {
  Eigen::MatrixXd u(3, 2);
  u << 1, 0, 0, 1, 1, -1;
  msband::SignalEnsemble latents;
  latents.samples.resize(2, 4);
  latents.samples << 1, 2, 3, 4, 5, 6, 7, 8;
  msband::SignalEnsemble observed = msband::mix(MixingMatrix(u), latents);
  CHECK(observed.role == msband::SignalRole::observed);
  CHECK(observed.samples(0, 0) == 1.0);
  CHECK(observed.samples(1, 2) == 7.0);
  CHECK(observed.samples(2, 3) == 4.0 - 8.0);

  msband::SignalEnsemble wrong;
  wrong.samples.resize(3, 4);
  wrong.samples.setZero();
  CHECK(code_of([&] { msband::mix(MixingMatrix(u), wrong); }) ==
        ErrorCode::SizeMismatch);
}

TEST_CASE("cross-correlation handles simple shifted impulses") {
  Eigen::VectorXd x(4), y(4);
  x << 1, 0, 0, 0;
  y << 0, 1, 0, 0;
  auto r = msband::empirical_cross_correlation(x, y, 2);
  REQUIRE(r.size() == 5);
  CHECK(r[0] == doctest::Approx(0.0));   // lag -2
  CHECK(r[1] == doctest::Approx(0.0));   // lag -1
  CHECK(r[2] == doctest::Approx(0.0));   // lag 0
  CHECK(r[3] == doctest::Approx(0.25));  // lag +1
  CHECK(r[4] == doctest::Approx(0.0));   // lag +2

  CHECK(code_of([&] { msband::empirical_cross_correlation(x, y, 4); }) ==
        ErrorCode::DomainError);
  Eigen::VectorXd longer(5);
  longer.setZero();
  CHECK(code_of([&] { msband::empirical_cross_correlation(x, longer, 1); }) ==
        ErrorCode::SizeMismatch);
}

TEST_CASE("latents with disjoint supports are exactly uncorrelated") {
  FrequencyGrid grid{64};
  PsdSpec a(grid, {{2, 8, 1.0}, {57, 63, 1.0}}, 0);
  PsdSpec b(grid, {{10, 16, 2.0}, {49, 55, 2.0}}, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PhaseDraw draw = PhaseDraw::draw(2, 64, seed);
    msband::SignalEnsemble latents = msband::synthesize_ensemble({a, b}, draw);
    auto r = msband::empirical_cross_correlation(
        latents.samples.row(0).transpose(), latents.samples.row(1).transpose(),
        32);
    for (double v : r) CHECK(std::abs(v) <= 1e-12);
  }
}

TEST_CASE("cross-correlation of overlapping sources averages to zero") {
  // Shared support is the hard case: each realization correlates, but the
  // phase average must vanish.
  FrequencyGrid grid{64};
  PsdSpec spec(grid, {{4, 12, 1.0}, {53, 61, 1.0}});
  const int draws = 400;
  std::vector<double> mean(2 * 8 + 1, 0.0);
  double single = 0.0;
  for (int i = 0; i < draws; ++i) {
    PhaseDraw draw = PhaseDraw::draw(2, 64, 1234 + static_cast<std::uint64_t>(i));
    msband::SignalEnsemble latents =
        msband::synthesize_ensemble({spec, spec}, draw);
    auto r = msband::empirical_cross_correlation(
        latents.samples.row(0).transpose(), latents.samples.row(1).transpose(),
        8);
    for (std::size_t j = 0; j < r.size(); ++j) {
      mean[j] += r[j] / draws;
      if (i == 0) single = std::max(single, std::abs(r[j]));
    }
  }
  double worst = 0.0;
  for (double v : mean) worst = std::max(worst, std::abs(v));
  // Individual realizations correlate at O(0.1); the average must sit well
  // below that.
  CHECK(single > 0.01);
  CHECK(worst < 0.02);
}

#include <cmath>

#include "gtest/gtest.h"

#include "evcharge/matrix.hpp"
#include "evcharge/rules.hpp"
#include "evcharge/synth.hpp"

#include "archetype_oracle.hpp"

using namespace evcharge;

namespace {

archetype const kWork{"work", {{8.0, 1.0, 1.0}}, {{8.0, 1.5, 1.0}}};

double morning_long(charging_matrix const& m) {
  auto const s = default_band_scheme();
  return band_mass(m, s.arrival_bands()[0].bins_, s.duration_bands()[1].bins_);
}

double total_variation(charging_matrix const& a, charging_matrix const& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < 576; ++k) {
    s += std::abs(a.cells()[k] - b.cells()[k]);
  }
  return s / 2.0;
}

}  // namespace

TEST(generate_station, zero_variance_is_a_point_mass) {
  archetype const point{"point", {{8.5, 0.0, 1.0}}, {{3.5, 0.0, 1.0}}};
  auto const txs = generate_station(point, 57, 3);
  ASSERT_EQ(txs.size(), 57U);
  EXPECT_EQ(build_matrix(txs)(8, 3), 1.0);
}

TEST(generate_station, deterministic_per_seed) {
  EXPECT_EQ(generate_station(kWork, 100, 42), generate_station(kWork, 100, 42));
  EXPECT_NE(generate_station(kWork, 100, 42), generate_station(kWork, 100, 43));
}

TEST(generate_station, work_mass_in_morning_long) {
  // 0.908135 is a 10^6-sample Monte Carlo estimate of the archetype's
  // morning x long mass.
  auto const m = build_matrix(generate_station(kWork, 200, 1));
  EXPECT_GT(morning_long(m), 0.5);
  EXPECT_NEAR(morning_long(m), 0.908135, 0.08);
  EXPECT_NEAR(morning_long(test::expected_matrix(kWork)), 0.908135, 2e-3);
}

TEST(generate_station, ranges_and_wrapping) {
  archetype const night{"night", {{23.5, 2.0, 0.5}, {0.5, 2.0, 0.5}},
                        {{23.0, 3.0, 0.7}, {0.0, 1.0, 0.3}}};
  auto const txs = generate_station(night, 100000, 9);
  for (auto const& tx : txs) {
    EXPECT_GE(tx.duration_s_, 0.0);
    EXPECT_LT(tx.duration_s_, 86400.0);
    EXPECT_GE(tx.arrival_.hour_of_day(), 0);
    EXPECT_LT(tx.arrival_.hour_of_day(), 24);
  }
  auto const m = build_matrix(txs);
  EXPECT_LT(total_variation(m, test::expected_matrix(night)), 0.03);
}

TEST(generate_station, converges_to_expected_distribution) {
  auto const expected = test::expected_matrix(kWork);
  auto const tv_small = total_variation(build_matrix(generate_station(kWork, 100, 5)), expected);
  auto const tv_large =
      total_variation(build_matrix(generate_station(kWork, 100000, 5)), expected);
  EXPECT_LT(tv_large, tv_small);
  EXPECT_LT(tv_large, 0.02);
}

TEST(archetype, validation) {
  EXPECT_THROW(generate_station({"bad", {{8, 1, 0.5}}, {{1, 1, 1}}}, 1, 1), config_error);
  EXPECT_THROW(generate_station({"bad", {{24, 1, 1}}, {{1, 1, 1}}}, 1, 1), config_error);
  EXPECT_THROW(generate_station({"bad", {{8, -1, 1}}, {{1, 1, 1}}}, 1, 1), config_error);
  EXPECT_THROW(generate_station({"bad", {}, {{1, 1, 1}}}, 1, 1), config_error);
  EXPECT_THROW(generate_station(kWork, 0, 1), config_error);
}

TEST(archetype, json) {
  auto const j = nlohmann::json::parse(R"([{"name":"w",
      "arrival":[{"mean":8,"std":1,"weight":1}],
      "duration":[{"mean":8,"std":1.5,"weight":1}]}])");
  auto const a = archetypes_from_json(j);
  ASSERT_EQ(a.size(), 1U);
  EXPECT_EQ(generate_station(a[0], 20, 1), generate_station(kWork, 20, 1));
  EXPECT_THROW(archetypes_from_json(nlohmann::json::array()), config_error);
  EXPECT_THROW(archetypes_from_json(nlohmann::json::parse(R"([{"name":"x"}])")),
               config_error);
}

TEST(sampler, uniform_and_normal_moments) {
  sampler s{123};
  double sum = 0.0, sq = 0.0;
  constexpr int kN = 200000;
  for (int i = 0; i < kN; ++i) {
    auto const u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    auto const z = s.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / kN, 0.0, 0.01);
  EXPECT_NEAR(sq / kN, 1.0, 0.01);
}

TEST(fixture, layout_and_ground_truth) {
  auto const arch = default_archetypes();
  auto const f = generate_fixture(arch, 4, 10, 77);
  EXPECT_EQ(f.transactions_.size(), 3U * 4U * 10U);
  ASSERT_EQ(f.truth_.size(), 12U);
  EXPECT_EQ(f.truth_.at("home_002"), 1U);
  auto const again = generate_fixture(arch, 4, 10, 77);
  EXPECT_EQ(again.transactions_, f.transactions_);
}

TEST(adjusted_rand_index, examples) {
  std::vector<std::size_t> const a{0, 0, 1, 1, 2, 2};
  std::vector<std::size_t> const relabeled{5, 5, 3, 3, 9, 9};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, a), 1.0);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, relabeled), 1.0);
  std::vector<std::size_t> const one{0, 0, 0, 0}, singletons{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(one, singletons), 0.0);
  EXPECT_THROW(adjusted_rand_index(one, a), data_error);
  EXPECT_THROW(adjusted_rand_index(std::vector<std::size_t>{0},
                                   std::vector<std::size_t>{0}),
               data_error);
}

TEST(adjusted_rand_index, contingency_formula_and_symmetry) {
  // Hand-evaluated: contingency {{2,1},{0,3}} over n = 6 gives
  // index = 1 + 3 = 4, rows 3 + 3 = 6, cols 1 + 6 = 7, expected 42/15,
  // max 6.5, ARI = (4 - 2.8) / (6.5 - 2.8).
  std::vector<std::size_t> const a{0, 0, 0, 1, 1, 1};
  std::vector<std::size_t> const b{0, 0, 1, 1, 1, 1};
  EXPECT_NEAR(adjusted_rand_index(a, b), (4.0 - 2.8) / (6.5 - 2.8), 1e-12);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), adjusted_rand_index(b, a));
}

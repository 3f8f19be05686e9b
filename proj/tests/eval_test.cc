// Copyright 2026 The speakaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "speakaug/common/error.h"
#include "speakaug/common/rng.h"
#include "speakaug/eval/eval.h"
#include "oracles.h"

namespace speakaug::eval {
namespace {

using corpus::Split;

double oracle_frobenius(const Matrix& a, const Matrix& b) {
  auto rows = [](const Matrix& m) {
    std::vector<std::vector<double>> r(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
    return r;
  };
  return oracle::frobenius(rows(a), rows(b));
}

Matrix random_stochastic(std::size_t k, Rng& rng) {
  Matrix m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < k; ++j) s += m(i, j) = rng.uniform();
    for (std::size_t j = 0; j < k; ++j) m(i, j) /= s;
  }
  return m;
}

using oracle::enumerate_p;
using oracle::pair_u;

std::vector<double> random_ints(int n, int lo, int hi, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + static_cast<int>(rng.below(hi - lo + 1));
  return v;
}

RatingRecord rating(std::string listener, std::string system, Split split, int mos, int dmos, std::string guess,
                    std::string truth) {
  return RatingRecord{std::move(listener), "utt", std::move(system), split, mos, dmos, std::move(guess),
                      std::move(truth)};
}

const std::vector<std::string> kCats = {"American", "Canadian", "British", "Irish", "Scottish", "Australian"};

TEST(Frobenius, Examples) {
  Matrix i2(2, 2), anti(2, 2);
  i2(0, 0) = i2(1, 1) = 1;
  anti(0, 1) = anti(1, 0) = 1;
  EXPECT_DOUBLE_EQ(frobenius(i2, anti), 2.0);
  EXPECT_EQ(frobenius(i2, i2), 0.0);
  EXPECT_THROW(frobenius(i2, Matrix(2, 3)), InvalidArgument);
}

TEST(Frobenius, MatchesDoubleLoopOracle) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const Matrix a = random_stochastic(6, rng), b = random_stochastic(6, rng);
    EXPECT_NEAR(frobenius(a, b), oracle_frobenius(a, b), 1e-12);
  }
}

TEST(Frobenius, MetricProperties) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Matrix a = random_stochastic(6, rng), b = random_stochastic(6, rng), c = random_stochastic(6, rng);
    const double ab = frobenius(a, b), ba = frobenius(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GT(ab, 0.0);
    EXPECT_EQ(frobenius(a, a), 0.0);
    EXPECT_LE(ab, frobenius(a, c) + frobenius(c, b) + 1e-12);
  }
}

TEST(MannWhitney, Examples) {
  auto r = mann_whitney_u({1, 2}, {3, 4}, MwMode::kExact);
  EXPECT_EQ(r.u_x, 0.0);
  EXPECT_NEAR(r.p_two_sided, 1.0 / 3.0, 1e-12);
  r = mann_whitney_u({3, 3, 3}, {3, 3, 3}, MwMode::kExact);
  EXPECT_EQ(r.u_x, 4.5);
  EXPECT_EQ(r.p_two_sided, 1.0);
  r = mann_whitney_u({5, 6, 7}, {1, 2, 3}, MwMode::kExact);
  EXPECT_EQ(r.u_x, 9.0);
  EXPECT_NEAR(r.p_two_sided, 0.1, 1e-12);
  r = mann_whitney_u(std::vector<double>(7, 5), std::vector<double>(7, 1), MwMode::kExact);
  EXPECT_NEAR(r.p_two_sided, 2.0 / 3432.0, 1e-15);
}

TEST(MannWhitney, Errors) {
  EXPECT_THROW(mann_whitney_u({}, {1}), InvalidArgument);
  EXPECT_THROW(mann_whitney_u({1}, {}), InvalidArgument);
  EXPECT_THROW(mann_whitney_u({NAN}, {1}), InvalidArgument);
  EXPECT_THROW(mann_whitney_u(std::vector<double>(21, 1), std::vector<double>(20, 2), MwMode::kExact),
               InvalidArgument);
  EXPECT_FALSE(mann_whitney_u(std::vector<double>(21, 1), std::vector<double>(20, 2)).exact);
}

TEST(MannWhitney, ExactMatchesEnumeration) {
  Rng rng(5);
  for (int n1 = 1; n1 <= 9; ++n1)
    for (int n2 = 1; n1 + n2 <= 10; ++n2)
      for (int t = 0; t < 6; ++t) {
        // Narrow ranges force ties; wide ones mostly avoid them.
        const int hi = t % 2 == 0 ? 3 : 50;
        const auto x = random_ints(n1, 1, hi, rng), y = random_ints(n2, 1, hi, rng);
        const auto r = mann_whitney_u(x, y, MwMode::kExact);
        ASSERT_NEAR(r.u_x, pair_u(x, y), 1e-12);
        ASSERT_NEAR(r.p_two_sided, enumerate_p(x, y), 1e-12) << n1 << "," << n2;
      }
}

TEST(MannWhitney, USumsToProduct) {
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    const int n1 = 1 + static_cast<int>(rng.below(30)), n2 = 1 + static_cast<int>(rng.below(30));
    const auto x = random_ints(n1, 1, 5, rng), y = random_ints(n2, 1, 5, rng);
    const auto r = mann_whitney_u(x, y);
    ASSERT_EQ(r.u_x + r.u_y, static_cast<double>(n1) * n2);
    ASSERT_NEAR(r.u_x, pair_u(x, y), 1e-9);
  }
}

TEST(MannWhitney, NormalAgreesWithExactAtSix) {
  // Every split of 12 distinct values into 6 + 6.
  double worst = 0;
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    if (__builtin_popcount(mask) != 6) continue;
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) (mask >> i & 1u ? x : y).push_back(1000.0 + 37 * i);
    const double pe = mann_whitney_u(x, y, MwMode::kExact).p_two_sided;
    const double pn = mann_whitney_u(x, y, MwMode::kNormal).p_two_sided;
    worst = std::max(worst, std::abs(pe - pn));
  }
  EXPECT_LE(worst, 0.02);

  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    const auto x = random_ints(6, 1, 1000000, rng), y = random_ints(6, 1, 1000000, rng);
    const double pe = mann_whitney_u(x, y, MwMode::kExact).p_two_sided;
    const double pn = mann_whitney_u(x, y, MwMode::kNormal).p_two_sided;
    EXPECT_LE(std::abs(pe - pn), 0.02);
  }
}

// On a 1..5 scale ties dominate and the approximation drifts; auto mode stays exact there.
TEST(MannWhitney, AutoIsExactForSmallTiedSamples) {
  const std::vector<double> x = {2, 2, 3, 2, 2, 1}, y = {2, 3, 2, 3, 2, 2};
  const auto a = mann_whitney_u(x, y);
  EXPECT_TRUE(a.exact);
  EXPECT_NEAR(a.p_two_sided, enumerate_p(x, y), 1e-12);
  EXPECT_GT(std::abs(a.p_two_sided - mann_whitney_u(x, y, MwMode::kNormal).p_two_sided), 0.02);
}

TEST(MannWhitney, SwapSymmetry) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_ints(5, 1, 5, rng), y = random_ints(7, 1, 5, rng);
    for (MwMode m : {MwMode::kExact, MwMode::kNormal}) {
      const auto a = mann_whitney_u(x, y, m), b = mann_whitney_u(y, x, m);
      EXPECT_EQ(a.u_x, b.u_y);
      EXPECT_NEAR(a.p_two_sided, b.p_two_sided, 1e-12);
    }
  }
}

TEST(MannWhitney, NormalAllTiedIsOne) {
  EXPECT_EQ(mann_whitney_u({2, 2, 2}, {2, 2}, MwMode::kNormal).p_two_sided, 1.0);
}

TEST(Rounding, HalfUp) {
  EXPECT_DOUBLE_EQ(round_half_up_1(11, 3), 3.7);
  EXPECT_DOUBLE_EQ(round_half_up_1(5, 1), 5.0);
  EXPECT_DOUBLE_EQ(round_half_up_1(25, 20), 1.3);  // 1.25
  EXPECT_DOUBLE_EQ(round_half_up_1(7, 4), 1.8);    // 1.75
  EXPECT_DOUBLE_EQ(round_half_up_1(49, 20), 2.5);  // 2.45
  EXPECT_THROW(round_half_up_1(1, 0), InvalidArgument);
}

TEST(MosTable, MeansAndMissing) {
  std::vector<RatingRecord> rs = {rating("a", "S", Split::kTest, 4, 2, "American", "American"),
                                  rating("b", "S", Split::kTest, 4, 3, "American", "American"),
                                  rating("c", "S", Split::kTest, 3, 3, "American", "American"),
                                  rating("a", "S", Split::kTrain, 5, 5, "American", "American")};
  const auto t = mos_table(rs, Measure::kMos);
  EXPECT_EQ(t.systems, std::vector<std::string>{"S"});
  EXPECT_DOUBLE_EQ(t.cell("S", Split::kTest).mean, 3.7);
  EXPECT_EQ(t.cell("S", Split::kTest).sample.size(), 3u);
  EXPECT_DOUBLE_EQ(t.cell("S", Split::kTrain).mean, 5.0);
  EXPECT_TRUE(t.cell("S", Split::kDev).missing);
  EXPECT_DOUBLE_EQ(mos_table(rs, Measure::kDmos).cell("S", Split::kTest).mean, 2.7);
  const std::vector<Split> want{Split::kTrain, Split::kDev, Split::kTest};
  EXPECT_EQ(t.splits, want);
}

TEST(MosTable, OrderInvariant) {
  Rng rng(9);
  std::vector<RatingRecord> rs;
  const char* systems[] = {"A", "B", "C"};
  const Split splits[] = {Split::kTrain, Split::kDev, Split::kTest};
  for (int i = 0; i < 300; ++i) {
    rs.push_back(rating("l" + std::to_string(i % 7), systems[rng.below(3)], splits[rng.below(3)],
                        1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(5)),
                        kCats[rng.below(6)], kCats[rng.below(6)]));
  }
  auto shuffled = rs;
  rng.shuffle(shuffled.begin(), shuffled.end());
  for (Measure m : {Measure::kMos, Measure::kDmos}) {
    const auto a = mos_table(rs, m), b = mos_table(shuffled, m);
    for (const auto& s : a.systems)
      for (auto sp : a.splits) {
        EXPECT_EQ(a.cell(s, sp).mean, b.cell(s, sp).mean);
        EXPECT_EQ(a.cell(s, sp).sample, b.cell(s, sp).sample);
      }
  }
  for (const auto* s : systems) {
    const auto ca = confusion_from_ratings(select(rs, s, Split::kTest), kCats);
    const auto cb = confusion_from_ratings(select(shuffled, s, Split::kTest), kCats);
    EXPECT_EQ(ca.counts, cb.counts);
    EXPECT_EQ(ca.normalized.data(), cb.normalized.data());
  }
}

TEST(Confusion, Examples) {
  std::vector<RatingRecord> rs = {rating("a", "N", Split::kTest, 3, 3, "American", "American"),
                                  rating("b", "N", Split::kTest, 3, 3, "American", "American"),
                                  rating("c", "N", Split::kTest, 3, 3, "Canadian", "American")};
  const auto cm = confusion_from_ratings(rs, kCats);
  EXPECT_EQ(cm.counts[0][0], 2);
  EXPECT_EQ(cm.counts[0][1], 1);
  EXPECT_NEAR(cm.normalized(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(cm.normalized(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_FALSE(cm.empty_rows[0]);
  for (std::size_t i = 1; i < 6; ++i) {
    EXPECT_TRUE(cm.empty_rows[i]);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(cm.normalized(i, j), 0.0);
  }
  rs.push_back(rating("d", "N", Split::kTest, 3, 3, "Martian", "American"));
  EXPECT_THROW(confusion_from_ratings(rs, kCats), InvalidArgument);
}

TEST(Confusion, PerfectIsIdentityAndRowsStochastic) {
  std::vector<RatingRecord> rs;
  for (const auto& c : kCats) rs.push_back(rating("a", "N", Split::kTest, 3, 3, c, c));
  const auto cm = confusion_from_ratings(rs, kCats);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(cm.normalized(i, j), i == j ? 1.0 : 0.0);

  Rng rng(10);
  std::vector<RatingRecord> random;
  for (int i = 0; i < 97; ++i) random.push_back(rating("a", "N", Split::kTest, 3, 3, kCats[rng.below(6)], kCats[rng.below(5)]));
  const auto rc = confusion_from_ratings(random, kCats);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 6; ++j) s += rc.normalized(i, j);
    if (!rc.empty_rows[i]) {
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  EXPECT_TRUE(rc.empty_rows[5]);
}

TEST(Confusion, CountUnitsSwitch) {
  std::vector<RatingRecord> a = {rating("a", "X", Split::kTest, 3, 3, "American", "American"),
                                 rating("a", "X", Split::kTest, 3, 3, "American", "American")};
  std::vector<RatingRecord> b = {rating("a", "N", Split::kTest, 3, 3, "American", "American")};
  const auto ca = confusion_from_ratings(a, kCats), cb = confusion_from_ratings(b, kCats);
  EXPECT_EQ(confusion_distance(ca, cb), 0.0);
  EXPECT_EQ(confusion_distance(ca, cb, ConfusionUnits::kCounts), 1.0);
}

TEST(Significance, Examples) {
  std::vector<RatingRecord> rs;
  for (int i = 0; i < 7; ++i) {
    rs.push_back(rating("l", "New", Split::kTest, 5, 5, "American", "American"));
    rs.push_back(rating("l", "Base", Split::kTest, 1, 1, "American", "American"));
    rs.push_back(rating("l", "Same", Split::kTest, 1, 1, "American", "American"));
  }
  const std::map<std::string, std::string> bm = {{"New", "Base"}, {"Same", "Base"}};
  const auto mt = significance_marks(mos_table(rs, Measure::kMos), bm);
  EXPECT_EQ(mt.marks.at({"New", Split::kTest}).mark, Mark::kBetter);
  EXPECT_NEAR(mt.marks.at({"New", Split::kTest}).p, 2.0 / 3432.0, 1e-15);
  EXPECT_EQ(mt.marks.at({"Same", Split::kTest}).mark, Mark::kNotSignificant);
  EXPECT_EQ(mt.marks.at({"Base", Split::kTest}).mark, Mark::kBaseline);
  EXPECT_EQ(mt.marks.at({"New", Split::kDev}).mark, Mark::kMissing);

  const auto zero = significance_marks(mos_table(rs, Measure::kMos), bm, 0.0);
  EXPECT_EQ(zero.marks.at({"New", Split::kTest}).mark, Mark::kNotSignificant);

  const std::map<std::string, std::string> swapped = {{"Base", "New"}, {"Same", "New"}};
  const auto worse = significance_marks(mos_table(rs, Measure::kMos), swapped);
  EXPECT_EQ(worse.marks.at({"Base", Split::kTest}).mark, Mark::kWorse);

  EXPECT_THROW(significance_marks(mos_table(rs, Measure::kMos), {{"New", "Base"}}), InvalidArgument);
  const auto ref = significance_marks(mos_table(rs, Measure::kMos), {{"New", "Base"}, {"Same", "Same"}});
  EXPECT_EQ(ref.marks.at({"Same", Split::kTest}).mark, Mark::kBaseline);
}

TEST(RatingsCsv, RoundTripAndValidation) {
  std::vector<RatingRecord> rs = {rating("l1", "S", Split::kDev, 4, 2, "Irish", "Scottish"),
                                  rating("l2", "N", Split::kTrain, 1, 5, "American", "American")};
  const std::string csv = ratings_to_csv(rs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kRatingsHeader);
  const auto back = parse_ratings_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].listener_id, "l1");
  EXPECT_EQ(back[0].split, Split::kDev);
  EXPECT_EQ(back[0].dmos, 2);
  EXPECT_EQ(ratings_to_csv(back), csv);

  EXPECT_THROW(parse_ratings_csv("a,b\n"), InvalidArgument);
  try {
    parse_ratings_csv(std::string(kRatingsHeader) + "\nl,u,S,test,6,3,Irish,Irish\nl,u,S,prod,3,3,Irish,Irish\nl,u\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.offenders().size(), 3u);
  }
  EXPECT_THROW(validate_ratings({rating("l", "S", Split::kTest, 3, 3, "Martian", "Irish")}, kCats), ValidationError);
}

TEST(Report, TableWithMarks) {
  std::vector<RatingRecord> rs;
  for (int i = 0; i < 8; ++i) {
    for (Split sp : {Split::kTrain, Split::kDev, Split::kTest}) {
      rs.push_back(rating("l", "Natural", sp, 5, 5, kCats[i % 6], kCats[i % 6]));
      rs.push_back(rating("l", "Base", sp, 2, 2, kCats[0], kCats[i % 6]));
      rs.push_back(rating("l", "Aug", sp, 4, 4, kCats[i % 3], kCats[i % 6]));
    }
  }
  const auto rep = make_report(rs, kCats, {{"Aug", "Base"}, {"Natural", "Base"}}, "Natural");
  EXPECT_NE(rep.text.find("4.0+"), std::string::npos);
  EXPECT_NE(rep.text.find("Frobenius"), std::string::npos);
  EXPECT_NE(rep.csv.find("MOS,Aug,test,4.0,8,+,"), std::string::npos);
  EXPECT_NE(rep.csv.find("Frobenius,Base,test,"), std::string::npos);
  EXPECT_EQ(rep.csv.find("Frobenius,Natural"), std::string::npos);

  // The reference needs no baseline of its own.
  const auto ref_only = make_report(rs, kCats, {{"Aug", "Base"}}, "Natural");
  EXPECT_NE(ref_only.csv.find("MOS,Natural,test,5.0,8,(base),"), std::string::npos);
}

}  // namespace
}  // namespace speakaug::eval

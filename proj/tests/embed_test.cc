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
#include <filesystem>
#include <map>
#include <numeric>
#include <vector>

#include "speakaug/common/error.h"
#include "speakaug/common/rng.h"
#include "speakaug/corpus/features.h"
#include "speakaug/corpus/toy.h"
#include "speakaug/embed/encoder.h"
#include "speakaug/embed/lde.h"
#include "speakaug/nn/grad_check.h"
#include "speakaug/nn/ops.h"
#include "oracles.h"

namespace speakaug::embed {
namespace {

namespace fs = std::filesystem;
using nn::Graph;
using nn::Parameter;
using nn::Tensor;
using nn::Var;

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("speakaug_embed_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Tensor random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = scale * rng.normal();
  return t;
}

std::vector<std::vector<double>> rows_of(const Tensor& t) {
  std::vector<std::vector<double>> out(t.rows(), std::vector<double>(t.cols()));
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j) out[i][j] = t.at(i, j);
  return out;
}

std::vector<double> run_lde(const Tensor& x, const Tensor& mu, const Tensor& s, Pooling p) {
  Graph g(false);
  return lde_pool(g.constant(x), g.constant(mu), g.constant(s), p).value().values;
}

TEST(Lde, MatchesDoubleLoopOracleOnGrid) {
  Rng rng(11);
  double worst = 0;
  for (const auto& cfg : sweep_grid()) {
    for (int trial = 0; trial < 50; ++trial) {
      const int T = 1 + static_cast<int>(rng.below(12));
      const int D = 1 + static_cast<int>(rng.below(8));
      Tensor x = random_tensor({T, D}, rng);
      Tensor mu = random_tensor({cfg.components, D}, rng);
      Tensor s({cfg.components});
      for (auto& v : s.values) v = rng.uniform(0.01, 2.0);
      const auto got = run_lde(x, mu, s, cfg.pooling);
      const auto want = oracle::lde(rows_of(x), rows_of(mu), s.values, cfg.pooling == Pooling::kMeanStd);
      ASSERT_EQ(got.size(), want.size());
      ASSERT_EQ(static_cast<int>(got.size()), cfg.pooled_width(D));
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Lde, RandomSmallCase) {
  Rng rng(3);
  Tensor x = random_tensor({7, 4}, rng), mu = random_tensor({2, 4}, rng);
  Tensor s({2}, {0.3, 1.2});
  for (Pooling p : {Pooling::kMean, Pooling::kMeanStd}) {
    const auto got = run_lde(x, mu, s, p);
    const auto want = oracle::lde(rows_of(x), rows_of(mu), s.values, p == Pooling::kMeanStd);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-6);
  }
}

TEST(Lde, FramesAtTheSingleMeanGiveZeros) {
  Tensor mu({1, 3}, {0.5, -1, 2});
  Tensor x({4, 3});
  for (int t = 0; t < 4; ++t)
    for (int d = 0; d < 3; ++d) x.at(t, d) = mu.at(0, d);
  for (double v : run_lde(x, mu, Tensor({1}, 1.0), Pooling::kMean)) EXPECT_EQ(v, 0.0);
}

TEST(Lde, OrderFree) {
  Rng rng(5);
  Tensor x = random_tensor({9, 5}, rng), mu = random_tensor({3, 5}, rng);
  Tensor s({3}, {0.2, 0.5, 1.0});
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[1], perm[6]);
  Tensor xp({9, 5});
  for (int t = 0; t < 9; ++t)
    for (int d = 0; d < 5; ++d) xp.at(t, d) = x.at(perm[t], d);
  for (Pooling p : {Pooling::kMean, Pooling::kMeanStd}) {
    const auto a = run_lde(x, mu, s, p), b = run_lde(xp, mu, s, p);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(Lde, Errors) {
  Graph g(false);
  Tensor mu({2, 3});
  EXPECT_THROW(lde_pool(g.constant(Tensor({0, 3})), g.constant(mu), g.constant(Tensor({2}, 1.0)), Pooling::kMean),
               InvalidArgument);
  EXPECT_THROW(lde_pool(g.constant(Tensor({2, 4})), g.constant(mu), g.constant(Tensor({2}, 1.0)), Pooling::kMean),
               InvalidArgument);
  EXPECT_THROW(lde_pool(g.constant(Tensor({2, 3})), g.constant(mu), g.constant(Tensor({2}, 0.0)), Pooling::kMean),
               InvalidArgument);
}

TEST(Lde, GradCheck) {
  Rng rng(8);
  for (Pooling p : {Pooling::kMean, Pooling::kMeanStd}) {
    Parameter x{"x", random_tensor({5, 3}, rng), {}};
    Parameter mu{"mu", random_tensor({3, 3}, rng, 0.7), {}};
    Parameter rho{"rho", random_tensor({3}, rng, 0.5), {}};
    Tensor probe = random_tensor({1, (p == Pooling::kMeanStd ? 2 : 1) * 9}, rng);
    auto r = nn::grad_check(
        [&](Graph& g) {
          Var y = lde_pool(g.param(x), g.param(mu), nn::softplus(g.param(rho)), p);
          return nn::sum(nn::mul(y, g.constant(probe)));
        },
        {&x, &mu, &rho});
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
    EXPECT_EQ(r.checked, 15u + 9u + 3u);
  }
}

TEST(AngularMargin, ZeroLambdaTargetUsesPsi) {
  // x = (1, 0); w columns (1, 0) and (0, 1); c = 1 for class 0 so psi = cos(0) = 1.
  Graph g(false);
  Var x = g.constant(Tensor({1, 2}, {2, 0}));
  Var w = g.constant(Tensor({2, 2}, {1, 0, 0, 1}));
  const auto y = angular_margin_logits(x, w, {0}).value().values;
  EXPECT_NEAR(y[0], 2.0, 1e-12);
  EXPECT_NEAR(y[1], 0.0, 1e-12);
  // 60 degrees: cos 2θ = -0.5, k = 0.
  Var x2 = g.constant(Tensor({1, 2}, {0.5, std::sqrt(3.0) / 2}));
  const auto y2 = angular_margin_logits(x2, w, {0}).value().values;
  EXPECT_NEAR(y2[0], -0.5, 1e-12);
  // Large lambda approaches the plain cosine logit.
  const auto y3 = angular_margin_logits(x2, w, {0}, 1e9).value().values;
  EXPECT_NEAR(y3[0], 0.5, 1e-6);
}

TEST(AngularMargin, GradCheck) {
  Rng rng(9);
  for (double lambda : {0.0, 3.0}) {
    Parameter x{"x", random_tensor({2, 4}, rng), {}};
    Parameter w{"w", random_tensor({4, 3}, rng), {}};
    Tensor probe = random_tensor({2, 3}, rng);
    auto r = nn::grad_check(
        [&](Graph& g) {
          return nn::sum(nn::mul(angular_margin_logits(g.param(x), g.param(w), {2, 0}, lambda), g.constant(probe)));
        },
        {&x, &w});
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
  }
}

TEST(Config, GridAndLabels) {
  const auto grid = sweep_grid();
  EXPECT_EQ(grid.size(), 20u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ((EmbeddingConfig{256, Pooling::kMeanStd, 32}.label()), "(256, m,s, 32)");
  EXPECT_EQ((EmbeddingConfig{64, Pooling::kMean, 64}.label()), "(64, m, 64)");
  EXPECT_THROW((EmbeddingConfig{100, Pooling::kMean, 32}.validate()), InvalidArgument);
  EXPECT_THROW((EmbeddingConfig{64, Pooling::kMean, 16}.validate()), InvalidArgument);
  for (const auto& c : grid) EXPECT_EQ(EmbeddingConfig::from_json(c.to_json()), c);
}

TEST(Config, ReportedTopFive) {
  const auto phone = reported_top5(corpus::TokenKind::kPhone);
  ASSERT_EQ(phone.size(), 5u);
  EXPECT_EQ(phone[0].label(), "(256, m,s, 32)");
  EXPECT_EQ(phone[1].label(), "(256, m, 64)");
  EXPECT_EQ(phone[2].label(), "(256, m,s, 64)");
  EXPECT_EQ(phone[3].label(), "(32, m,s, 64)");
  EXPECT_EQ(phone[4].label(), "(64, m, 64)");
  const auto chr = reported_top5(corpus::TokenKind::kChar);
  EXPECT_EQ(chr[0].label(), "(128, m,s, 32)");
  EXPECT_EQ(chr[4].label(), "(64, m,s, 32)");
  const auto grid = sweep_grid();
  for (const auto& c : phone) EXPECT_NE(std::find(grid.begin(), grid.end(), c), grid.end());
}

TEST(Cosine, Examples) {
  const std::vector<double> x{1, 2, -3}, y{0.5, -1, 4};
  EXPECT_NEAR(cosine(x, x), 1.0, 1e-12);
  EXPECT_NEAR(cosine(x, {-1, -2, 3}), -1.0, 1e-12);
  EXPECT_NEAR(cosine({2, 4, -6}, y), cosine(x, y), 1e-12);
  EXPECT_THROW(cosine(x, {0, 0, 0}), InvalidArgument);
  EXPECT_THROW(cosine(x, {1, 2}), InvalidArgument);
}

TEST(Rank, SortsDescending) {
  const auto grid = sweep_grid();
  std::vector<RankedConfig> s{{grid[0], 0.9, {}}, {grid[1], 0.7, {}}, {grid[2], 0.8, {}}};
  const auto r = rank_scores(s);
  EXPECT_EQ(r[0].cfg, grid[0]);
  EXPECT_EQ(r[1].cfg, grid[2]);
  EXPECT_EQ(r[2].cfg, grid[1]);
  EXPECT_EQ(take_top(r, 2).size(), 2u);
  EXPECT_EQ(take_top(r, 9).size(), 3u);
}

TEST(Rank, TiesAreLexicographic) {
  const EmbeddingConfig a{256, Pooling::kMean, 64}, b{256, Pooling::kMeanStd, 32}, c{32, Pooling::kMeanStd, 64};
  std::vector<RankedConfig> s{{b, 0.5, {}}, {a, 0.5, {}}, {c, 0.5, {}}};
  const auto r1 = rank_scores(s);
  std::reverse(s.begin(), s.end());
  const auto r2 = rank_scores(s);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r1[i].cfg, r2[i].cfg);
  EXPECT_EQ(r1[0].cfg, c);
  EXPECT_EQ(r1[1].cfg, a);
  EXPECT_EQ(r1[2].cfg, b);
}

TEST(Rank, EmptyPairsRejected) {
  Encoder e = Encoder::create({32, Pooling::kMean, 32}, EncoderTask::kDialect, {"a", "b"}, false, 1);
  EXPECT_THROW(rank_configs({&e}, {}), InvalidArgument);
}

Matrix random_mel(int T, Rng& rng) {
  Matrix m(T, dsp::kNumMels);
  for (auto& v : m.data()) v = rng.uniform(0.0, 1.0);
  return m;
}

TEST(Embed, DeterministicAndSized) {
  Encoder e = Encoder::create({64, Pooling::kMeanStd, 32}, EncoderTask::kDialect, {"a", "b"}, false, 4);
  Rng rng(2);
  dsp::MelSpectrogram mel;
  mel.frames = random_mel(12, rng);
  const auto a = embed(e, mel), b = embed(e, mel);
  EXPECT_EQ(a.vector.size(), 64u);
  EXPECT_EQ(a.vector, b.vector);
  for (double v : a.vector) EXPECT_TRUE(std::isfinite(v));
  dsp::MelSpectrogram empty;
  EXPECT_THROW(embed(e, empty), InvalidArgument);
}

TEST(Embed, TimeShiftWithinSilenceIsInvariant) {
  Encoder e = Encoder::create({32, Pooling::kMeanStd, 32}, EncoderTask::kDialect, {"a", "b"}, false, 6);
  Rng rng(3);
  const Matrix content = random_mel(10, rng);
  auto padded = [&](int before, int after) {
    Matrix m(before + 10 + after, dsp::kNumMels, 0.0);
    for (int t = 0; t < 10; ++t)
      for (int f = 0; f < dsp::kNumMels; ++f) m(before + t, f) = content(t, f);
    return m;
  };
  const auto ref = embed_normalized(e, padded(6, 6));
  for (int shift : {-3, -1, 1, 2, 3}) {
    const auto v = embed_normalized(e, padded(6 + shift, 6 - shift));
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(v[i], ref[i], 1e-6) << shift;
  }
}

TEST(Encoder, SaveLoadRoundTrip) {
  const auto dir = temp_dir("ckpt");
  Encoder e = Encoder::create({128, Pooling::kMean, 64}, EncoderTask::kSpeaker, {"s1", "s2", "s3"}, true, 7);
  e.save(dir / "enc.bin");
  Encoder l = Encoder::load(dir / "enc.bin");
  EXPECT_EQ(l.cfg, e.cfg);
  EXPECT_EQ(l.classes, e.classes);
  EXPECT_TRUE(l.angular);
  EXPECT_EQ(l.task, EncoderTask::kSpeaker);
  Rng rng(1);
  const Matrix mel = random_mel(8, rng);
  EXPECT_EQ(embed_normalized(l, mel), embed_normalized(e, mel));
}

TEST(Csv, RoundTrip) {
  const auto dir = temp_dir("csv");
  std::vector<Embedding> rows{{{0.1, -2.5e-7, 3}, "u1"}, {{1.0 / 3, 0, -1}, "u2"}};
  write_embeddings_csv(dir / "e.csv", rows);
  const auto back = read_embeddings_csv(dir / "e.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].source_utt, rows[i].source_utt);
    EXPECT_EQ(back[i].vector, rows[i].vector);
  }
  EXPECT_THROW(write_embeddings_csv(dir / "bad.csv", {{{1.0}, "a,b"}}), InvalidArgument);
}

// Shared toy corpus: 4 speakers x 50 utterances, 2 dialects.
class ToyEncoder : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus::ToyConfig cfg;
    cfg.utts_per_speaker = 50;
    dir_ = new fs::path(temp_dir("toy"));
    manifest_ = new corpus::Manifest(corpus::make_toy_corpus(cfg, *dir_));
    cache_ = new corpus::MelCache(*dir_);
  }
  static void TearDownTestSuite() {
    delete cache_;
    delete manifest_;
    fs::remove_all(*dir_);
    delete dir_;
  }
  static fs::path* dir_;
  static corpus::Manifest* manifest_;
  static corpus::MelCache* cache_;
};
fs::path* ToyEncoder::dir_ = nullptr;
corpus::Manifest* ToyEncoder::manifest_ = nullptr;
corpus::MelCache* ToyEncoder::cache_ = nullptr;

const EmbeddingConfig kToyCfg{32, Pooling::kMean, 32};

TEST_F(ToyEncoder, DialectEncoderSeparatesToyDialects) {
  ASSERT_EQ(manifest_->records.size(), 200u);
  TrainOptions opt;
  opt.epochs = 30;
  opt.seed = 5;
  const auto res = train_dialect_encoder(*manifest_, *cache_, kToyCfg, opt);
  EXPECT_GT(res.train_accuracy, 0.95);
  EXPECT_EQ(res.epoch_loss.size(), 30u);
  EXPECT_LT(res.epoch_loss.back(), res.epoch_loss.front());

  // Within-dialect embeddings agree more than across dialects.
  std::map<std::string, std::vector<std::vector<double>>> by_dialect;
  for (const auto& r : manifest_->records) by_dialect[r.dialect].push_back(embed(res.encoder, cache_->get(r)).vector);
  double within = 0, across = 0;
  int nw = 0, na = 0;
  for (const auto& [da, va] : by_dialect)
    for (const auto& [db, vb] : by_dialect)
      for (std::size_t i = 0; i < va.size(); i += 5)
        for (std::size_t j = 0; j < vb.size(); j += 5) {
          if (da == db && i == j) continue;
          (da == db ? within : across) += cosine(va[i], vb[j]);
          ++(da == db ? nw : na);
        }
  EXPECT_GT(within / nw, across / na);
}

TEST_F(ToyEncoder, FixedSeedIsDeterministic) {
  TrainOptions opt;
  opt.epochs = 2;
  opt.seed = 9;
  const auto a = train_dialect_encoder(*manifest_, *cache_, kToyCfg, opt);
  const auto b = train_dialect_encoder(*manifest_, *cache_, kToyCfg, opt);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST_F(ToyEncoder, ZeroEpochsIsNearChance) {
  TrainOptions opt;
  opt.epochs = 0;
  // A single random init can lean towards one class; chance is the mean over inits.
  double sum = 0;
  const int n = 8;
  for (int seed = 1; seed <= n; ++seed) {
    opt.seed = seed;
    const auto res = train_dialect_encoder(*manifest_, *cache_, kToyCfg, opt);
    EXPECT_TRUE(res.epoch_loss.empty());
    sum += res.train_accuracy;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.15);
}

TEST_F(ToyEncoder, SpeakerEncoderWithAngularMargin) {
  TrainOptions opt;
  opt.epochs = 15;
  opt.seed = 2;
  opt.angular = true;
  const auto res = train_speaker_encoder(*manifest_, *cache_, kToyCfg, opt);
  EXPECT_EQ(res.encoder.classes.size(), 4u);
  EXPECT_GT(res.train_accuracy, 0.95);
}

TEST_F(ToyEncoder, SingleDialectRejected) {
  corpus::RecordFilter f;
  f.speakers = {manifest_->records[0].speaker_id};
  const corpus::Manifest one = corpus::filter_manifest(*manifest_, f);
  TrainOptions opt;
  opt.epochs = 1;
  EXPECT_THROW(train_dialect_encoder(one, *cache_, kToyCfg, opt), InvalidArgument);
}

}  // namespace
}  // namespace speakaug::embed

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
#include <fstream>
#include <memory>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/corpus/toy.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/nn/graph.h"
#include "speakaug/nn/optim.h"
#include "speakaug/trainer/toy_pipeline.h"
#include "speakaug/trainer/trainer.h"

namespace speakaug::trainer {
namespace {

namespace fs = std::filesystem;

// One short schedule shared by the suite.
struct Shared {
  fs::path dir;
  corpus::Manifest manifest;
  std::unique_ptr<corpus::MelCache> cache;
  EmbeddingTables tables;
  ToySchedule sched;
  Lineage lineage;
  std::vector<PhasedCheckpoint> ckpts;
  PhaseInputs inputs() { return PhaseInputs{&manifest, cache.get(), &tables, &sched.synth, nullptr}; }
};

Shared* shared = nullptr;

class Schedule : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    if (shared) return;
    shared = new Shared;
    auto& s = *shared;
    s.dir = fs::temp_directory_path() / "speakaug_trainer_schedule";
    fs::remove_all(s.dir);
    corpus::ToyConfig cfg;
    cfg.utts_per_speaker = 8;
    s.manifest = corpus::make_toy_corpus(cfg, s.dir / "corpus");
    s.cache = std::make_unique<corpus::MelCache>(s.dir / "corpus");
    s.sched = toy_schedule(s.manifest);
    s.sched.dialect_train.epochs = 10;
    s.sched.speaker_train.epochs = 10;
    const auto dialect = embed::train_dialect_encoder(s.manifest, *s.cache, s.sched.dialect_config, s.sched.dialect_train);
    const auto speaker = embed::train_speaker_encoder(s.manifest, *s.cache, s.sched.speaker_config, s.sched.speaker_train);
    s.tables = build_embedding_tables(s.manifest, *s.cache, &speaker.encoder, &dialect.encoder);
    const int steps[4] = {300, 150, 200, 150};
    for (int k = 0; k < 4; ++k) {
      auto& p = s.sched.plans[k];
      p.optimizer.max_steps = steps[k];
      p.convergence.eval_every = 25;
      p.convergence.patience = 4;
      p.dev_limit = 4;
    }
    s.lineage = run_schedule(s.sched.plans, s.inputs(), s.dir / "schedule");
    for (int k = 0; k < 4; ++k)
      s.ckpts.push_back(PhasedCheckpoint::load(s.dir / "schedule" / ("phase" + std::to_string(k) + ".ckpt")));
  }
};

TEST(EarlyStopper, PlateauStopsAfterExactlyPatienceEvals) {
  EarlyStopper s(3, 1e-4);
  EXPECT_FALSE(s.update(1.0));
  EXPECT_TRUE(s.improved());
  EXPECT_FALSE(s.update(0.5));
  EXPECT_FALSE(s.update(0.49995));  // below min_delta
  EXPECT_FALSE(s.improved());
  EXPECT_FALSE(s.update(0.5));
  EXPECT_TRUE(s.update(0.5));
  EXPECT_EQ(s.bad_evals(), 3);
  EXPECT_EQ(s.best(), 0.5);
  EXPECT_THROW(s.update(NAN), NumericError);
  EXPECT_THROW(EarlyStopper(0, 0), InvalidArgument);
}

TEST(EarlyStopper, ImprovementResetsCount) {
  EarlyStopper s(3, 1e-4);
  s.update(1.0);
  s.update(1.0);
  s.update(1.0);
  EXPECT_FALSE(s.update(0.9));
  EXPECT_EQ(s.bad_evals(), 0);
  s.update(0.9);
  s.update(0.9);
  EXPECT_TRUE(s.update(0.9));
}

TEST(PhasePlan, Invariants) {
  PhasePlan p;
  p.phase = 0;
  EXPECT_NO_THROW(p.validate());
  p.conditioning.speaker = true;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.phase = 1;
  EXPECT_NO_THROW(p.validate());
  p.phase = 2;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.conditioning.channel = true;
  EXPECT_NO_THROW(p.validate());
  p.dialect_config = embed::EmbeddingConfig{32, embed::Pooling::kMean, 32};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.phase = 3;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.conditioning.dialect = true;
  EXPECT_NO_THROW(p.validate());
  p.dialect_config.reset();
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.phase = 4;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(PhasePlan, JsonRoundTrip) {
  corpus::ToyConfig cfg;
  cfg.utts_per_speaker = 2;
  const auto dir = fs::temp_directory_path() / "speakaug_trainer_plans";
  fs::remove_all(dir);
  const auto m = corpus::make_toy_corpus(cfg, dir);
  const auto sched = toy_schedule(m);
  save_plans(dir / "plans.json", sched.plans);
  const auto back = load_plans(dir / "plans.json");
  ASSERT_EQ(back.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(back[k].to_json(), sched.plans[k].to_json());
  EXPECT_TRUE(back[3].dialect_config.has_value());
  EXPECT_EQ(back[0].data.speakers, std::vector<std::string>{m.records.front().speaker_id});
}

TEST_F(Schedule, PhaseZeroHalvesDevLoss) {
  const auto& h = shared->ckpts[0].dev_history;
  ASSERT_GE(h.size(), 2u);
  EXPECT_LE(shared->ckpts[0].best_dev_loss, 0.5 * h.front().loss);
}

TEST_F(Schedule, WarmStartBoundariesAreExact) {
  // Phases 1-3 share a dev set, so step 0 of phase k+1 re-scores phase k's best.
  EXPECT_EQ(shared->ckpts[2].dev_history.front().loss, shared->ckpts[1].best_dev_loss);
  EXPECT_EQ(shared->ckpts[3].dev_history.front().loss, shared->ckpts[2].best_dev_loss);

  // Fixed batch, each boundary.
  auto& s = *shared;
  corpus::Manifest batch = s.manifest;
  batch.records.resize(4);
  for (auto [k, ext] : {std::pair{0, Extension::kSpeaker}, std::pair{1, Extension::kChannel},
                        std::pair{2, Extension::kDialect}}) {
    const auto extended = warm_start_extend(s.ckpts[k], ext);
    const auto before = make_examples(batch, s.manifest, *s.cache, s.ckpts[k].model, s.tables);
    const auto after = make_examples(batch, s.manifest, *s.cache, extended.model, s.tables);
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_EQ(synth::teacher_forced_loss(extended.model, after[i]) -
                    synth::teacher_forced_loss(s.ckpts[k].model, before[i]),
                0.0);
    }
    EXPECT_THROW(warm_start_extend(extended, ext), InvalidArgument);
  }
}

TEST_F(Schedule, LineageChainValidates) {
  const auto dir = shared->dir / "schedule";
  EXPECT_NO_THROW(validate_lineage(dir));
  ASSERT_EQ(shared->lineage.entries.size(), 4u);
  EXPECT_FALSE(shared->lineage.entries[0].parent_hash.has_value());
  for (int k = 1; k < 4; ++k) {
    EXPECT_EQ(*shared->lineage.entries[k].parent_hash, shared->lineage.entries[k - 1].hash);
    EXPECT_EQ(*shared->ckpts[k].parent_hash, shared->ckpts[k - 1].hash);
  }
  EXPECT_TRUE(shared->ckpts[3].dialect_config.has_value());

  const auto copy = shared->dir / "tampered";
  fs::remove_all(copy);
  fs::copy(dir, copy);
  auto ck = PhasedCheckpoint::load(copy / "phase1.ckpt");
  ck.best_step += 1;
  ck.save(copy / "phase1.ckpt");
  EXPECT_THROW(validate_lineage(copy), ValidationError);
}

TEST_F(Schedule, BestCheckpointSelection) {
  for (const auto& ck : shared->ckpts) {
    double lo = INFINITY;
    for (const auto& d : ck.dev_history) lo = std::min(lo, d.loss);
    EXPECT_EQ(ck.best_dev_loss, lo);
  }
  const auto& p3 = shared->ckpts[3];
  EXPECT_LE(p3.best_dev_loss, p3.dev_history.front().loss);
}

TEST_F(Schedule, DeterministicRerun) {
  const auto again = run_phase(shared->sched.plans[1], &shared->ckpts[0], shared->inputs());
  ASSERT_EQ(again.dev_history.size(), shared->ckpts[1].dev_history.size());
  for (std::size_t i = 0; i < again.dev_history.size(); ++i) {
    EXPECT_EQ(again.dev_history[i].step, shared->ckpts[1].dev_history[i].step);
    EXPECT_EQ(again.dev_history[i].loss, shared->ckpts[1].dev_history[i].loss);
  }
}

TEST_F(Schedule, PhaseParentMismatchRejected) {
  const auto in = shared->inputs();
  EXPECT_THROW(run_phase(shared->sched.plans[2], &shared->ckpts[0], in), InvalidArgument);
  EXPECT_THROW(run_phase(shared->sched.plans[0], &shared->ckpts[0], in), InvalidArgument);
  EXPECT_THROW(run_phase(shared->sched.plans[1], nullptr, in), InvalidArgument);
  PhasePlan multi = shared->sched.plans[0];
  multi.data.speakers.clear();
  EXPECT_THROW(run_phase(multi, nullptr, in), InvalidArgument);
  PhasedCheckpoint unsaved = shared->ckpts[0];
  unsaved.hash.clear();
  EXPECT_THROW(run_phase(shared->sched.plans[1], &unsaved, in), InvalidArgument);
}

TEST_F(Schedule, NonFiniteLossAborts) {
  PhasedCheckpoint bad = shared->ckpts[0];
  auto& w = bad.model.params().get("proj/w").value;
  w[0] = NAN;
  PhasePlan p = shared->sched.plans[1];
  p.optimizer.max_steps = 2;
  try {
    run_phase(p, &bad, shared->inputs());
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("phase 1"), std::string::npos) << e.what();
  }
}

TEST_F(Schedule, FailedPhaseKeepsPartialLineage) {
  auto plans = shared->sched.plans;
  for (auto& p : plans) p.optimizer.max_steps = 2;
  plans[2].data.corpora = {"no-such-corpus"};
  const auto dir = shared->dir / "partial";
  fs::remove_all(dir);
  EXPECT_THROW(run_schedule(plans, shared->inputs(), dir), InvalidArgument);
  const auto l = Lineage::from_json(nlohmann::json::parse(read_file(dir / "lineage.json")));
  EXPECT_EQ(l.entries.size(), 2u);
  EXPECT_NO_THROW(validate_lineage(dir));
}

TEST_F(Schedule, DialectPathLearnsFromZero) {
  auto& s = *shared;
  synth::SynthModel model = s.ckpts[3].model;
  corpus::Manifest batch = s.manifest;
  batch.records.resize(8);
  const auto examples = make_examples(batch, s.manifest, *s.cache, model, s.tables);
  const auto& ex = examples.front();
  std::string other;
  for (const auto& [name, v] : s.tables.dialect)
    if (name != s.manifest.records.front().dialect) other = name;
  auto spread = [&] {
    const auto a = synth::encode_states(model, ex.tokens, ex.cond.dialect);
    const auto b = synth::encode_states(model, ex.tokens, s.tables.dialect.at(other));
    double d = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d += std::abs(a.data()[i] - b.data()[i]);
    return d;
  };
  EXPECT_EQ(spread(), 0.0);  // zero-initialized projection
  nn::AdamOptions ao;
  ao.lr = 1e-3;
  nn::Adam adam(ao);
  for (int step = 0; step < 5; ++step) {
    model.params().zero_grad();
    for (const auto& e : examples) {
      nn::Graph g;
      g.backward(synth::teacher_forced(g, model, e).loss);
    }
    adam.step(model.params());
  }
  EXPECT_GT(spread(), 0.0);
}

TEST_F(Schedule, ChannelLabelTiltFollowsToyChannels) {
  auto& s = *shared;
  const auto& model = s.ckpts[3].model;
  corpus::Manifest one = s.manifest;
  one.records = {s.manifest.records.front()};
  auto ex = make_examples(one, s.manifest, *s.cache, model, s.tables).front();
  const auto tf = synth::run_teacher_forced(model, ex);
  std::vector<double> ch0(model.config().n_channels, 0.0), ch1 = ch0;
  ch0[0] = 1;
  ch1[1] = 1;
  const double t0 = dsp::spectral_tilt_db_per_khz(synth::postnet_refine(model, tf.coarse, ch0));
  const double t1 = dsp::spectral_tilt_db_per_khz(synth::postnet_refine(model, tf.coarse, ch1));
  // Channel 1 is rendered with a steeper downward tilt than channel 0.
  ASSERT_LT(corpus::toy_channel_tilt_db_per_khz(1), corpus::toy_channel_tilt_db_per_khz(0));
  EXPECT_LT(t1, t0);
}

}  // namespace
}  // namespace speakaug::trainer

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

#include "speakaug/trainer/toy_pipeline.h"

#include <algorithm>
#include <chrono>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"

namespace speakaug::trainer {

namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int scaled(int steps, double s) { return std::max(1, static_cast<int>(steps * s)); }

}  // namespace

ToySchedule toy_schedule(const corpus::Manifest& m, double step_scale) {
  if (m.records.empty()) throw InvalidArgument("toy schedule: empty manifest");
  ToySchedule s;
  s.synth.token_vocab = corpus::toy_vocab();
  s.synth.token_kind = corpus::TokenKind::kChar;
  s.synth.encoder_dim = 32;
  s.synth.decoder_dim = 64;
  s.synth.prenet_dims = {32, 32};
  s.synth.postnet = {3, 5, 32};
  s.synth.attention_dim = 32;
  s.synth.encoder_convs = 0;
  s.synth.prenet_dropout = 0.1;
  s.synth.n_channels = static_cast<int>(m.corpus_list.size());
  s.synth.speaker_dim = s.speaker_config.dim;
  s.synth.dialect_dim = s.dialect_config.dim;

  s.dialect_train.epochs = 30;
  s.dialect_train.seed = 5;
  s.speaker_train.epochs = 20;
  s.speaker_train.seed = 6;

  const std::string first = m.records.front().speaker_id;
  s.probe_utt = m.records.front().utt_id;
  const corpus::RecordFilter train{{}, {}, {corpus::Split::kTrain}, ""};
  struct PhaseSteps {
    int max_steps;
    double lr;
  };
  const PhaseSteps steps[4] = {{1500, 2e-3}, {5000, 1.5e-3}, {1500, 1e-3}, {4000, 1e-3}};
  for (int k = 0; k < 4; ++k) {
    PhasePlan p;
    p.phase = k;
    p.data = train;
    p.dev_data = train;
    p.dev_limit = 8;
    if (k == 0) {
      p.data.speakers = {first};
      p.dev_data.speakers = {first};
      p.dev_limit = 4;
    }
    p.conditioning = {k >= 1, k >= 2, k >= 3};
    if (k == 3) p.dialect_config = s.dialect_config;
    p.optimizer.lr = steps[k].lr;
    p.optimizer.max_steps = scaled(steps[k].max_steps, step_scale);
    p.optimizer.batch_size = 4;
    p.optimizer.seed = 11 + k;
    p.convergence.eval_every = scaled(100, std::min(1.0, step_scale));
    p.convergence.patience = 12;
    p.convergence.min_delta = 1e-4;
    s.plans.push_back(p);
  }
  return s;
}

ToyRun run_toy_pipeline(const corpus::ToyConfig& cfg, const std::filesystem::path& out_dir,
                        const std::function<void(const std::string&)>& log, double step_scale) {
  const auto t0 = std::chrono::steady_clock::now();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  ToyRun run;
  const auto corpus_dir = out_dir / "corpus";
  run.manifest = corpus::make_toy_corpus(cfg, corpus_dir);
  corpus::MelCache cache(corpus_dir);
  ToySchedule sched = toy_schedule(run.manifest, step_scale);

  auto dialect = embed::train_dialect_encoder(run.manifest, cache, sched.dialect_config, sched.dialect_train);
  run.dialect_accuracy = dialect.train_accuracy;
  say("dialect encoder train accuracy " + std::to_string(run.dialect_accuracy));
  auto speaker = embed::train_speaker_encoder(run.manifest, cache, sched.speaker_config, sched.speaker_train);
  run.speaker_accuracy = speaker.train_accuracy;
  say("speaker encoder train accuracy " + std::to_string(run.speaker_accuracy));
  std::filesystem::create_directories(out_dir / "encoders");
  dialect.encoder.save(out_dir / "encoders" / "dialect.enc");
  speaker.encoder.save(out_dir / "encoders" / "speaker.enc");

  const EmbeddingTables tables = build_embedding_tables(run.manifest, cache, &speaker.encoder, &dialect.encoder);
  PhaseInputs in{&run.manifest, &cache, &tables, &sched.synth, log};
  save_plans(out_dir / "plans.json", sched.plans);
  const auto ts = std::chrono::steady_clock::now();
  run.lineage = run_schedule(sched.plans, in, out_dir / "schedule");
  run.schedule_seconds = since(ts);

  const PhasedCheckpoint p3 = PhasedCheckpoint::load(out_dir / "schedule" / "phase3.ckpt");
  run.phase3_initial_dev = p3.dev_history.front().loss;
  run.phase3_best_dev = p3.best_dev_loss;
  const auto it = std::find_if(run.manifest.records.begin(), run.manifest.records.end(),
                               [&](const auto& r) { return r.utt_id == sched.probe_utt; });
  corpus::Manifest probe = run.manifest;
  probe.records = {*it};
  const auto ex = make_examples(probe, run.manifest, cache, p3.model, tables);
  const auto tf = synth::run_teacher_forced(p3.model, ex.front());
  run.probe_l1 = tf.l1_refined;
  run.probe_focus = synth::attention_focus(tf.attention);
  run.total_seconds = since(t0);
  return run;
}

}  // namespace speakaug::trainer

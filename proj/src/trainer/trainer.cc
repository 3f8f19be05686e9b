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

#include "speakaug/trainer/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/common/rng.h"
#include "speakaug/corpus/augment.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/nn/archive.h"
#include "speakaug/nn/ops.h"
#include "speakaug/nn/optim.h"

namespace speakaug::trainer {

using nlohmann::json;

namespace {

json filter_to_json(const corpus::RecordFilter& f) {
  json j = json::object();
  if (!f.corpora.empty()) j["corpora"] = f.corpora;
  if (!f.speakers.empty()) j["speakers"] = f.speakers;
  if (!f.splits.empty()) {
    json s = json::array();
    for (auto sp : f.splits) s.push_back(corpus::split_name(sp));
    j["splits"] = s;
  }
  if (!f.gender.empty()) j["gender"] = f.gender;
  return j;
}

corpus::RecordFilter filter_from_json(const json& j) {
  corpus::RecordFilter f;
  f.corpora = j.value("corpora", std::vector<std::string>{});
  f.speakers = j.value("speakers", std::vector<std::string>{});
  for (const auto& s : j.value("splits", std::vector<std::string>{})) f.splits.push_back(corpus::parse_split(s));
  f.gender = j.value("gender", "");
  return f;
}

std::vector<double> normalized_mean(const std::vector<std::vector<double>>& v) { return embed::mean_embedding(v); }

// Evenly spaced subset of at most `limit` records.
corpus::Manifest thin(corpus::Manifest m, int limit) {
  if (limit <= 0 || static_cast<int>(m.records.size()) <= limit) return m;
  std::vector<corpus::UtteranceRecord> kept;
  for (int i = 0; i < limit; ++i) kept.push_back(m.records[static_cast<std::size_t>(i) * m.records.size() / limit]);
  m.records = std::move(kept);
  return m;
}

double mean_loss(const synth::SynthModel& model, const std::vector<synth::SynthExample>& dev) {
  double s = 0;
  for (const auto& ex : dev) s += synth::teacher_forced_loss(model, ex);
  return s / dev.size();
}

}  // namespace

void PhasePlan::validate() const {
  if (phase < 0 || phase > 3) throw InvalidArgument("phase must be 0..3, got " + std::to_string(phase));
  const synth::Conditioning want[] = {{false, false, false}, {true, false, false}, {true, true, false},
                                      {true, true, true}};
  if (!(conditioning == want[phase])) {
    static const char* text[] = {"no conditioning", "speaker conditioning only", "speaker and channel conditioning",
                                 "speaker, channel and dialect conditioning"};
    throw InvalidArgument("phase " + std::to_string(phase) + " requires " + text[phase]);
  }
  if (phase == 3 && !dialect_config) throw InvalidArgument("phase 3 requires a dialect_config");
  if (phase != 3 && dialect_config) throw InvalidArgument("only phase 3 takes a dialect_config");
  if (dialect_config) dialect_config->validate();
  if (optimizer.lr <= 0 || optimizer.batch_size < 1 || optimizer.max_steps < 0) {
    throw InvalidArgument("optimizer settings need lr > 0, batch_size >= 1 and max_steps >= 0");
  }
  if (convergence.patience < 1 || convergence.eval_every < 1 || convergence.min_delta < 0) {
    throw InvalidArgument("convergence needs patience >= 1, eval_every >= 1 and min_delta >= 0");
  }
}

json PhasePlan::to_json() const {
  json j{{"phase", phase},
         {"data", filter_to_json(data)},
         {"dev_data", filter_to_json(dev_data)},
         {"dev_limit", dev_limit},
         {"conditioning", conditioning.to_json()},
         {"optimizer",
          {{"lr", optimizer.lr},
           {"clip_norm", optimizer.clip_norm},
           {"batch_size", optimizer.batch_size},
           {"max_steps", optimizer.max_steps},
           {"seed", optimizer.seed}}},
         {"convergence",
          {{"patience", convergence.patience},
           {"min_delta", convergence.min_delta},
           {"eval_every", convergence.eval_every},
           {"min_steps", convergence.min_steps}}}};
  if (dialect_config) j["dialect_config"] = dialect_config->to_json();
  return j;
}

PhasePlan PhasePlan::from_json(const json& j) {
  PhasePlan p;
  p.phase = j.at("phase").get<int>();
  if (j.contains("data")) p.data = filter_from_json(j.at("data"));
  p.dev_data = j.contains("dev_data") ? filter_from_json(j.at("dev_data"))
                                      : corpus::RecordFilter{{}, {}, {corpus::Split::kDev}, ""};
  p.dev_limit = j.value("dev_limit", 0);
  if (j.contains("conditioning")) {
    p.conditioning = synth::Conditioning::from_json(j.at("conditioning"));
  } else {
    p.conditioning = {p.phase >= 1, p.phase >= 2, p.phase >= 3};
  }
  if (j.contains("dialect_config")) p.dialect_config = embed::EmbeddingConfig::from_json(j.at("dialect_config"));
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    p.optimizer.lr = o.value("lr", p.optimizer.lr);
    p.optimizer.clip_norm = o.value("clip_norm", p.optimizer.clip_norm);
    p.optimizer.batch_size = o.value("batch_size", p.optimizer.batch_size);
    p.optimizer.max_steps = o.value("max_steps", p.optimizer.max_steps);
    p.optimizer.seed = o.value("seed", p.optimizer.seed);
  }
  if (j.contains("convergence")) {
    const auto& c = j.at("convergence");
    p.convergence.patience = c.value("patience", p.convergence.patience);
    p.convergence.min_delta = c.value("min_delta", p.convergence.min_delta);
    p.convergence.eval_every = c.value("eval_every", p.convergence.eval_every);
    p.convergence.min_steps = c.value("min_steps", p.convergence.min_steps);
  }
  p.validate();
  return p;
}

json PhasedCheckpoint::metadata() const {
  json hist = json::array();
  for (const auto& d : dev_history) hist.push_back({d.step, d.loss});
  json j{{"model", model.metadata()}, {"phase", phase},        {"config", config_snapshot},
         {"dev_history", hist},       {"best_dev_loss", best_dev_loss}, {"best_step", best_step}};
  if (parent_hash) j["parent_hash"] = *parent_hash;
  if (dialect_config) j["dialect_config"] = dialect_config->to_json();
  return j;
}

std::string PhasedCheckpoint::save(const std::filesystem::path& path) {
  if (phase > 0 && !parent_hash) throw InvalidArgument("phase " + std::to_string(phase) + " checkpoint lacks a parent");
  hash = nn::save_archive(path, metadata(), model.params());
  return hash;
}

PhasedCheckpoint PhasedCheckpoint::load(const std::filesystem::path& path) {
  nn::Archive a = nn::load_archive(path);
  const json& meta = a.metadata;
  if (!meta.contains("model") || !meta.contains("phase")) {
    throw InvalidArgument(path.string() + " is not a phased checkpoint");
  }
  PhasedCheckpoint c;
  c.model = synth::SynthModel::from_archive(meta.at("model"), std::move(a.params));
  c.phase = meta.at("phase").get<int>();
  if (meta.contains("parent_hash")) c.parent_hash = meta.at("parent_hash").get<std::string>();
  c.config_snapshot = meta.value("config", json::object());
  for (const auto& d : meta.value("dev_history", json::array())) c.dev_history.push_back({d[0], d[1]});
  c.best_dev_loss = meta.value("best_dev_loss", 0.0);
  c.best_step = meta.value("best_step", 0);
  if (meta.contains("dialect_config")) c.dialect_config = embed::EmbeddingConfig::from_json(meta.at("dialect_config"));
  c.hash = a.hash;
  if (c.phase > 0 && !c.parent_hash) throw InvalidArgument(path.string() + ": phase " + std::to_string(c.phase) +
                                                           " checkpoint lacks a parent hash");
  return c;
}

EarlyStopper::EarlyStopper(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
}

bool EarlyStopper::update(double loss) {
  if (!std::isfinite(loss)) throw NumericError("non-finite dev loss");
  improved_ = !seen_ || best_ - loss > min_delta_;
  seen_ = true;
  if (improved_) {
    best_ = loss;
    bad_ = 0;
  } else {
    ++bad_;
  }
  return bad_ >= patience_;
}

EmbeddingTables build_embedding_tables(const corpus::Manifest& m, corpus::MelCache& cache,
                                       const embed::Encoder* speaker_encoder,
                                       const embed::Encoder* dialect_encoder) {
  EmbeddingTables t;
  t.channels = m.corpus_list;
  if (speaker_encoder) {
    std::map<std::string, std::vector<std::vector<double>>> by;
    for (const auto& r : m.records) by[r.speaker_id].push_back(embed::embed(*speaker_encoder, cache.get(r)).vector);
    for (auto& [k, v] : by) t.speaker[k] = normalized_mean(v);
  }
  if (dialect_encoder) {
    std::map<std::string, std::vector<std::vector<double>>> by;
    for (const auto& r : m.records)
      if (r.split == corpus::Split::kTrain) by[r.dialect].push_back(embed::embed(*dialect_encoder, cache.get(r)).vector);
    for (auto& [k, v] : by) t.dialect[k] = normalized_mean(v);
  }
  return t;
}

json EmbeddingTables::to_json() const {
  return {{"speaker", speaker}, {"dialect", dialect}, {"channels", channels}};
}

EmbeddingTables EmbeddingTables::from_json(const json& j) {
  EmbeddingTables t;
  try {
    t.speaker = j.at("speaker").get<std::map<std::string, std::vector<double>>>();
    t.dialect = j.at("dialect").get<std::map<std::string, std::vector<double>>>();
    t.channels = j.at("channels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed embedding tables: ") + e.what());
  }
  return t;
}

void EmbeddingTables::save(const std::filesystem::path& path) const {
  atomic_write_file(path, to_json().dump(1) + "\n");
}

EmbeddingTables EmbeddingTables::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

synth::Conditioners conditioners_for(const corpus::UtteranceRecord& r, const corpus::Manifest& m,
                                     const synth::SynthModel& model, const EmbeddingTables& tables) {
  synth::Conditioners c;
  const auto& cond = model.conditioning();
  if (cond.speaker) {
    auto it = tables.speaker.find(r.speaker_id);
    if (it == tables.speaker.end()) throw InvalidArgument("no speaker embedding for " + r.speaker_id);
    c.speaker = it->second;
  }
  if (cond.dialect) {
    auto it = tables.dialect.find(r.dialect);
    if (it == tables.dialect.end()) throw InvalidArgument("no dialect embedding for " + r.dialect);
    c.dialect = it->second;
  }
  if (cond.channel) {
    if (static_cast<int>(m.corpus_list.size()) != model.config().n_channels) {
      throw InvalidArgument("model has " + std::to_string(model.config().n_channels) + " channels but the corpus list has " +
                            std::to_string(m.corpus_list.size()));
    }
    c.channel = corpus::channel_onehot(r.corpus_id, m.corpus_list);
  }
  return c;
}

std::vector<synth::SynthExample> make_examples(const corpus::Manifest& subset, const corpus::Manifest& full,
                                               corpus::MelCache& cache, const synth::SynthModel& model,
                                               const EmbeddingTables& tables) {
  std::vector<synth::SynthExample> out;
  for (const auto& r : subset.records) {
    synth::SynthExample ex;
    ex.utt_id = r.utt_id;
    ex.tokens = synth::token_ids(model.config(), corpus::tokenize(r.text, model.config().token_kind));
    ex.mel = dsp::normalize_mel(cache.get(r).frames);
    ex.cond = conditioners_for(r, full, model, tables);
    out.push_back(std::move(ex));
  }
  return out;
}

PhasedCheckpoint warm_start_extend(const PhasedCheckpoint& ckpt, Extension ext) {
  PhasedCheckpoint out = ckpt;
  switch (ext) {
    case Extension::kSpeaker: out.model.add_speaker(); break;
    case Extension::kChannel: out.model.add_channel(); break;
    case Extension::kDialect: out.model.add_dialect(); break;
  }
  return out;
}

PhasedCheckpoint run_phase(const PhasePlan& plan, const PhasedCheckpoint* init, const PhaseInputs& in) {
  plan.validate();
  if (!in.manifest || !in.cache || !in.tables) throw InvalidArgument("run_phase: missing manifest, cache or tables");
  const std::string tag = "phase " + std::to_string(plan.phase);
  if (plan.phase == 0 && init) throw InvalidArgument("phase 0 starts from scratch and takes no init checkpoint");
  if (plan.phase > 0 && !init) throw InvalidArgument(tag + " needs the phase " + std::to_string(plan.phase - 1) + " checkpoint");
  if (init && init->phase != plan.phase - 1) {
    throw InvalidArgument(tag + " cannot start from a phase " + std::to_string(init->phase) + " checkpoint");
  }
  auto log = [&](const std::string& s) {
    if (in.log) in.log(tag + ": " + s);
  };

  PhasedCheckpoint ck;
  if (init) ck.model = init->model;
  if (!init) {
    if (!in.synth_config) throw InvalidArgument("phase 0 needs a synthesizer config");
    ck.model = synth::SynthModel::create(*in.synth_config, plan.optimizer.seed);
  } else {
    PhasedCheckpoint ext = *init;
    const auto have = init->model.conditioning();
    if (plan.conditioning.speaker && !have.speaker) ext = warm_start_extend(ext, Extension::kSpeaker);
    if (plan.conditioning.channel && !have.channel) ext = warm_start_extend(ext, Extension::kChannel);
    if (plan.conditioning.dialect && !have.dialect) ext = warm_start_extend(ext, Extension::kDialect);
    ck.model = std::move(ext.model);
    ck.parent_hash = init->hash;
    if (init->hash.empty()) throw InvalidArgument(tag + ": init checkpoint has no content hash (save it first)");
  }
  if (!(ck.model.conditioning() == plan.conditioning)) {
    throw InvalidArgument(tag + ": init checkpoint carries conditioning beyond the plan");
  }
  ck.phase = plan.phase;
  ck.config_snapshot = plan.to_json();
  ck.dialect_config = plan.dialect_config;

  const corpus::Manifest train = corpus::filter_manifest(*in.manifest, plan.data);
  if (train.records.empty()) throw InvalidArgument(tag + ": data selector matches no records");
  if (plan.phase == 0 && train.speakers().size() != 1) {
    throw InvalidArgument("phase 0 needs single-speaker data, selector matches " +
                          std::to_string(train.speakers().size()) + " speakers");
  }
  const corpus::Manifest dev = thin(corpus::filter_manifest(*in.manifest, plan.dev_data), plan.dev_limit);
  if (dev.records.empty()) throw InvalidArgument(tag + ": dev selector matches no records");
  const auto train_ex = make_examples(train, *in.manifest, *in.cache, ck.model, *in.tables);
  const auto dev_ex = make_examples(dev, *in.manifest, *in.cache, ck.model, *in.tables);
  log(std::to_string(train_ex.size()) + " train / " + std::to_string(dev_ex.size()) + " dev utterances");

  nn::AdamOptions ao;
  ao.lr = plan.optimizer.lr;
  ao.clip_norm = plan.optimizer.clip_norm;
  nn::Adam adam(ao);
  Rng rng(plan.optimizer.seed * 1000003 + static_cast<uint64_t>(plan.phase));
  std::vector<std::size_t> order(train_ex.size());
  std::size_t cursor = order.size();

  EarlyStopper stopper(plan.convergence.patience, plan.convergence.min_delta);
  nn::ParamStore best = ck.model.params();
  auto evaluate = [&](int step) {
    double loss = 0;
    bool stop = false;
    try {
      loss = mean_loss(ck.model, dev_ex);
      stop = stopper.update(loss);
    } catch (const NumericError& e) {
      throw NumericError(tag + " dev evaluation at step " + std::to_string(step) + ": " + e.what());
    }
    ck.dev_history.push_back({step, loss});
    if (stopper.improved()) {
      best = ck.model.params();
      ck.best_step = step;
    }
    log("step " + std::to_string(step) + " dev loss " + std::to_string(loss));
    return stop && step >= plan.convergence.min_steps;
  };

  bool stop = evaluate(0);
  for (int step = 1; step <= plan.optimizer.max_steps && !stop; ++step) {
    ck.model.params().zero_grad();
    const int bs = plan.optimizer.batch_size;
    for (int b = 0; b < bs; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      const auto& ex = train_ex[order[cursor++]];
      try {
        nn::Graph g;
        g.set_training(true, &rng);
        auto tf = synth::teacher_forced(g, ck.model, ex);
        g.backward(nn::scale(tf.loss, 1.0 / bs));
      } catch (const NumericError& e) {
        throw NumericError(tag + " step " + std::to_string(step) + " utterance " + ex.utt_id + ": " + e.what());
      }
    }
    try {
      adam.step(ck.model.params());
    } catch (const NumericError& e) {
      throw NumericError(tag + " step " + std::to_string(step) + ": " + e.what());
    }
    if (step % plan.convergence.eval_every == 0 || step == plan.optimizer.max_steps) stop = evaluate(step);
  }
  ck.model.params() = std::move(best);
  ck.best_dev_loss = stopper.best();
  return ck;
}

json Lineage::to_json() const {
  json arr = json::array();
  for (const auto& e : entries) {
    json j{{"phase", e.phase},
           {"hash", e.hash},
           {"checkpoint", e.checkpoint},
           {"config", e.config},
           {"best_dev_loss", e.best_dev_loss},
           {"best_step", e.best_step},
           {"seconds", e.seconds}};
    j["parent_hash"] = e.parent_hash ? json(*e.parent_hash) : json(nullptr);
    arr.push_back(j);
  }
  return {{"lineage", arr}};
}

Lineage Lineage::from_json(const json& j) {
  Lineage l;
  for (const auto& e : j.at("lineage")) {
    LineageEntry x;
    x.phase = e.at("phase");
    x.hash = e.at("hash");
    if (!e.at("parent_hash").is_null()) x.parent_hash = e.at("parent_hash").get<std::string>();
    x.checkpoint = e.at("checkpoint");
    x.config = e.value("config", "");
    x.best_dev_loss = e.value("best_dev_loss", 0.0);
    x.best_step = e.value("best_step", 0);
    x.seconds = e.value("seconds", 0.0);
    l.entries.push_back(std::move(x));
  }
  return l;
}

Lineage run_schedule(const std::vector<PhasePlan>& plans, const PhaseInputs& in, const std::filesystem::path& out_dir) {
  if (plans.size() != 4) throw InvalidArgument("a schedule has 4 phase plans, got " + std::to_string(plans.size()));
  for (std::size_t k = 0; k < plans.size(); ++k) {
    plans[k].validate();
    if (plans[k].phase != static_cast<int>(k)) throw InvalidArgument("phase plans must be ordered 0..3");
  }
  std::filesystem::create_directories(out_dir);
  Lineage lineage;
  std::optional<PhasedCheckpoint> prev;
  for (const auto& plan : plans) {
    const auto t0 = std::chrono::steady_clock::now();
    PhasedCheckpoint ck = run_phase(plan, prev ? &*prev : nullptr, in);
    const std::string name = "phase" + std::to_string(plan.phase);
    atomic_write_file(out_dir / (name + ".plan.json"), plan.to_json().dump(2) + "\n");
    ck.save(out_dir / (name + ".ckpt"));
    LineageEntry e;
    e.phase = plan.phase;
    e.hash = ck.hash;
    e.parent_hash = ck.parent_hash;
    e.checkpoint = name + ".ckpt";
    e.config = name + ".plan.json";
    e.best_dev_loss = ck.best_dev_loss;
    e.best_step = ck.best_step;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    lineage.entries.push_back(e);
    atomic_write_file(out_dir / "lineage.json", lineage.to_json().dump(2) + "\n");
    prev = std::move(ck);
  }
  return lineage;
}

void validate_lineage(const std::filesystem::path& dir) {
  const Lineage l = Lineage::from_json(json::parse(read_file(dir / "lineage.json")));
  std::vector<std::string> problems;
  if (l.entries.empty()) problems.push_back("lineage is empty");
  for (std::size_t k = 0; k < l.entries.size(); ++k) {
    const auto& e = l.entries[k];
    const auto ck = PhasedCheckpoint::load(dir / e.checkpoint);
    if (ck.hash != e.hash) problems.push_back(e.checkpoint + ": content hash differs from lineage entry");
    if (ck.phase != e.phase) problems.push_back(e.checkpoint + ": phase differs from lineage entry");
    if (k == 0) {
      if (e.phase != 0 || e.parent_hash) problems.push_back("lineage does not start at a phase-0 checkpoint");
    } else {
      if (!e.parent_hash || *e.parent_hash != l.entries[k - 1].hash) {
        problems.push_back(e.checkpoint + ": parent hash does not match " + l.entries[k - 1].checkpoint);
      }
      if (ck.parent_hash != e.parent_hash) problems.push_back(e.checkpoint + ": stored parent hash differs");
      if (e.phase != l.entries[k - 1].phase + 1) problems.push_back(e.checkpoint + ": phases are not consecutive");
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
}

std::vector<PhasePlan> load_plans(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  const json& arr = j.is_array() ? j : j.at("phases");
  std::vector<PhasePlan> plans;
  for (const auto& p : arr) plans.push_back(PhasePlan::from_json(p));
  return plans;
}

void save_plans(const std::filesystem::path& path, const std::vector<PhasePlan>& plans) {
  json arr = json::array();
  for (const auto& p : plans) arr.push_back(p.to_json());
  atomic_write_file(path, json{{"phases", arr}}.dump(2) + "\n");
}

}  // namespace speakaug::trainer

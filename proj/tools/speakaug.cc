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

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/common/hash.h"
#include "speakaug/corpus/augment.h"
#include "speakaug/corpus/features.h"
#include "speakaug/corpus/manifest.h"
#include "speakaug/corpus/toy.h"
#include "speakaug/dsp/griffin_lim.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/dsp/waveform.h"
#include "speakaug/embed/encoder.h"
#include "speakaug/eval/eval.h"
#include "speakaug/listen/http.h"
#include "speakaug/listen/plan.h"
#include "speakaug/listen/service.h"
#include "speakaug/synth/synth.h"
#include "speakaug/trainer/toy_pipeline.h"
#include "speakaug/trainer/trainer.h"
#include "speakaug/verify/gradient_suite.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace speakaug;

namespace {

void echo_config(const CLI::App* sub) {
  std::cout << "# " << sub->get_name() << " resolved config\n" << sub->config_to_str(true, false) << std::flush;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// "dim:pooling:components", e.g. "256:mean_std:32".
embed::EmbeddingConfig parse_embedding_config(const std::string& s) {
  const auto parts = split_list(s, ':');
  if (parts.size() != 3) throw InvalidArgument("embedding config \"" + s + "\" is not dim:pooling:components");
  embed::EmbeddingConfig c;
  try {
    c.dim = std::stoi(parts[0]);
    c.components = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw InvalidArgument("embedding config \"" + s + "\" has a non-integer field");
  }
  c.pooling = embed::parse_pooling(parts[1]);
  c.validate();
  return c;
}

std::string config_file_stem(const embed::EmbeddingConfig& c) {
  return std::to_string(c.dim) + "_" + std::string(embed::pooling_name(c.pooling)) + "_" + std::to_string(c.components);
}

dsp::MelSpectrogram mel_from_file(const fs::path& p) {
  if (p.extension() == ".mel") return dsp::read_mel(p);
  return dsp::mel_spectrogram(dsp::read_wav(p));
}

corpus::Split split_arg(const std::string& s) { return corpus::parse_split(s); }

// Each file holds one plan object, an array of plans, or {"phases": [...]}.
std::vector<trainer::PhasePlan> load_plan_files(const std::vector<fs::path>& files) {
  std::vector<trainer::PhasePlan> plans;
  for (const auto& f : files) {
    const json j = json::parse(read_file(f));
    if (j.is_object() && !j.contains("phases")) {
      plans.push_back(trainer::PhasePlan::from_json(j));
    } else {
      for (auto& p : trainer::load_plans(f)) plans.push_back(std::move(p));
    }
  }
  return plans;
}

void write_table_csv(const fs::path& path, const std::map<std::string, std::vector<double>>& table) {
  std::vector<embed::Embedding> rows;
  for (const auto& [id, v] : table) rows.push_back({v, id});
  embed::write_embeddings_csv(path, rows);
}

// Row keyed by `key`, or the mean of all rows when the key is empty.
std::vector<double> embedding_from_csv(const fs::path& path, const std::string& key) {
  const auto rows = embed::read_embeddings_csv(path);
  if (rows.empty()) throw InvalidArgument(path.string() + " has no embeddings");
  if (key.empty()) {
    std::vector<std::vector<double>> v;
    for (const auto& r : rows) v.push_back(r.vector);
    return embed::mean_embedding(v);
  }
  for (const auto& r : rows)
    if (r.source_utt == key) return r.vector;
  throw InvalidArgument("no row \"" + key + "\" in " + path.string());
}

// ---- subcommands ----

struct ToyCorpusArgs {
  uint64_t seed = 0;
  fs::path out;
  int speakers = 4, dialects = 2, channels = 2, utts = 20;
};

int toy_corpus(const ToyCorpusArgs& a) {
  corpus::ToyConfig cfg;
  cfg.seed = a.seed;
  cfg.n_speakers = a.speakers;
  cfg.n_dialects = a.dialects;
  cfg.n_channels = a.channels;
  cfg.utts_per_speaker = a.utts;
  const auto m = corpus::make_toy_corpus(cfg, a.out);
  const auto sched = trainer::toy_schedule(m);
  trainer::save_plans(a.out / "plans.json", sched.plans);
  for (const auto& p : sched.plans)
    atomic_write_file(a.out / ("p" + std::to_string(p.phase) + ".json"), p.to_json().dump(2) + "\n");
  atomic_write_file(a.out / "synth.json", sched.synth.to_json().dump(2) + "\n");
  std::cout << "wrote " << m.records.size() << " utterances, " << m.speakers().size() << " speakers to "
            << (a.out / "manifest.jsonl").string() << "\n";
  std::cout << "wrote plans.json, p0.json..p" << sched.plans.size() - 1 << ".json and synth.json to " << a.out.string()
            << "\n";
  return 0;
}

struct AugmentArgs {
  fs::path manifest, out;
  std::string factors = "0.9,1.1";
  std::string splits = "train";
  bool paths_only = false;
};

int augment(const AugmentArgs& a) {
  const auto m = corpus::load_manifest(a.manifest);
  std::vector<double> factors;
  for (const auto& f : split_list(a.factors)) {
    try {
      factors.push_back(std::stod(f));
    } catch (const std::exception&) {
      throw InvalidArgument("factor \"" + f + "\" is not a number");
    }
  }
  std::vector<corpus::Split> splits;
  for (const auto& s : split_list(a.splits)) splits.push_back(split_arg(s));
  corpus::VtlpAudio audio{a.manifest.parent_path(), a.out, !a.paths_only};
  const auto aug = corpus::vtlp_augment(m, factors, &audio, splits);
  corpus::save_manifest(a.out / "manifest.jsonl", aug);
  std::cout << "speakers " << m.speakers(corpus::Split::kTrain).size() << " -> "
            << aug.speakers(corpus::Split::kTrain).size() << " (train); utterances " << m.records.size() << " -> "
            << aug.records.size() << "\n";
  return 0;
}

struct FeaturesArgs {
  fs::path manifest, out;
};

int features(const FeaturesArgs& a) {
  const auto m = corpus::load_manifest(a.manifest);
  fs::create_directories(a.out);
  for (const auto& r : m.records) dsp::write_mel(a.out / (r.utt_id + ".mel"), corpus::load_record_mel(a.manifest.parent_path(), r));
  std::cout << "wrote " << m.records.size() << " mel files to " << a.out.string() << "\n";
  return 0;
}

struct TrainEmbedArgs {
  fs::path manifest, out;
  std::string task = "dialect";
  std::string config = "64:mean:32";
  bool sweep = false;
  uint64_t seed = 0;
  int epochs = 30;
  double lr = 2e-3;
  bool angular = false;
};

int train_embed(const TrainEmbedArgs& a) {
  const auto m = corpus::load_manifest(a.manifest);
  corpus::MelCache cache(a.manifest.parent_path());
  embed::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.lr = a.lr;
  opt.seed = a.seed;
  opt.angular = a.angular;
  const bool speaker = a.task == "speaker";
  if (!speaker && a.task != "dialect") throw InvalidArgument("--task must be dialect or speaker");
  std::vector<embed::EmbeddingConfig> configs = a.sweep ? embed::sweep_grid()
                                                        : std::vector<embed::EmbeddingConfig>{parse_embedding_config(a.config)};
  if (a.sweep) fs::create_directories(a.out);
  for (const auto& cfg : configs) {
    const auto r = speaker ? embed::train_speaker_encoder(m, cache, cfg, opt) : embed::train_dialect_encoder(m, cache, cfg, opt);
    const fs::path path = a.sweep ? a.out / (a.task + "_" + config_file_stem(cfg) + ".enc") : a.out;
    r.encoder.save(path);
    std::printf("%-18s train accuracy %.4f  final loss %.5f  -> %s\n", cfg.label().c_str(), r.train_accuracy,
                r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back(), path.string().c_str());
  }
  return 0;
}

struct SelectEmbedArgs {
  std::vector<fs::path> encoders;
  fs::path pairs, out;
  int top = 5;
};

int select_embed(const SelectEmbedArgs& a) {
  std::vector<fs::path> files;
  for (const auto& e : a.encoders) {
    if (fs::is_directory(e)) {
      for (const auto& d : fs::directory_iterator(e))
        if (d.path().extension() == ".enc") files.push_back(d.path());
    } else {
      files.push_back(e);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidArgument("no encoder files given");
  std::vector<embed::Encoder> encs;
  for (const auto& f : files) encs.push_back(embed::Encoder::load(f));
  std::vector<const embed::Encoder*> ptrs;
  for (const auto& e : encs) ptrs.push_back(&e);

  // Pairs file: one "synthesized,ground_truth" path pair per line (.wav or .mel).
  std::vector<std::pair<dsp::MelSpectrogram, dsp::MelSpectrogram>> pairs;
  std::istringstream in(read_file(a.pairs));
  std::string line;
  int line_no = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_list(line);
    if (f.size() != 2) {
      problems.push_back(a.pairs.string() + ":" + std::to_string(line_no) + ": expected two paths");
      continue;
    }
    const fs::path base = a.pairs.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    for (const auto& p : f)
      if (!fs::exists(resolve(p))) problems.push_back(a.pairs.string() + ":" + std::to_string(line_no) + ": missing " + p);
    if (problems.empty()) pairs.emplace_back(mel_from_file(resolve(f[0])), mel_from_file(resolve(f[1])));
  }
  if (!problems.empty()) throw ValidationError(problems);
  const auto ranked = embed::rank_configs(ptrs, pairs);
  const auto top = embed::take_top(ranked, static_cast<std::size_t>(a.top));
  json report = json::array();
  std::printf("rank  config            mean cosine\n");
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    std::printf("%-5zu %-17s %.6f%s\n", i + 1, ranked[i].cfg.label().c_str(), ranked[i].mean_score,
                i < top.size() ? "  *" : "");
    report.push_back({{"rank", i + 1}, {"config", ranked[i].cfg.to_json()}, {"label", ranked[i].cfg.label()},
                      {"mean_score", ranked[i].mean_score}, {"top", i < top.size()}});
  }
  if (!a.out.empty()) atomic_write_file(a.out, json{{"pairs", pairs.size()}, {"ranking", report}}.dump(2) + "\n");
  return 0;
}

struct TrainTtsArgs {
  std::vector<fs::path> plans;
  fs::path manifest, synth_config, speaker_encoder, dialect_encoder, out;
  int max_steps = -1;
};

int train_tts(const TrainTtsArgs& a) {
  const auto m = corpus::load_manifest(a.manifest);
  auto plans = load_plan_files(a.plans);
  if (a.max_steps >= 0)
    for (auto& p : plans) p.optimizer.max_steps = std::min(p.optimizer.max_steps, a.max_steps);
  for (const auto& p : plans)
    std::cout << "phase " << p.phase << " seed " << p.optimizer.seed << " max_steps " << p.optimizer.max_steps << "\n";
  const auto cfg = synth::SynthConfig::from_json(json::parse(read_file(a.synth_config)));
  std::optional<embed::Encoder> spk, dia;
  if (!a.speaker_encoder.empty()) spk = embed::Encoder::load(a.speaker_encoder);
  if (!a.dialect_encoder.empty()) dia = embed::Encoder::load(a.dialect_encoder);
  if (!spk) throw InvalidArgument("--speaker-encoder is required for phases 1-3");
  if (!dia) throw InvalidArgument("--dialect-encoder is required for phase 3");
  corpus::MelCache cache(a.manifest.parent_path());
  const auto tables = trainer::build_embedding_tables(m, cache, &*spk, &*dia);
  fs::create_directories(a.out);
  tables.save(a.out / "tables.json");
  write_table_csv(a.out / "speaker_embeddings.csv", tables.speaker);
  write_table_csv(a.out / "dialect_embeddings.csv", tables.dialect);
  trainer::PhaseInputs in{&m, &cache, &tables, &cfg, [](const std::string& s) { std::cout << s << "\n" << std::flush; }};
  const auto lineage = trainer::run_schedule(plans, in, a.out);
  trainer::validate_lineage(a.out);
  for (const auto& e : lineage.entries)
    std::printf("phase %d  best dev %.6f at step %d  hash %s\n", e.phase, e.best_dev_loss, e.best_step,
                e.hash.substr(0, 16).c_str());
  return 0;
}

struct SynthArgs {
  fs::path checkpoint, tables, out, text_file, speaker_csv, dialect_csv;
  std::string text, speaker, dialect, channel;
  uint64_t seed = 0;
  int max_frames = 400;
  int iterations = dsp::kDefaultGriffinLimIterations;
};

int synth_cmd(const SynthArgs& a) {
  const auto ck = trainer::PhasedCheckpoint::load(a.checkpoint);
  const auto& model = ck.model;
  const fs::path tables_path = a.tables.empty() ? a.checkpoint.parent_path() / "tables.json" : a.tables;
  const auto tables = trainer::EmbeddingTables::load(tables_path);
  std::string text = a.text;
  if (!a.text_file.empty()) {
    text = read_file(a.text_file);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  }
  if (text.empty()) throw InvalidArgument("empty text");
  synth::Conditioners cond;
  const auto& c = model.conditioning();
  if (c.speaker && !a.speaker_csv.empty()) {
    cond.speaker = embedding_from_csv(a.speaker_csv, a.speaker);
  } else if (c.speaker) {
    auto it = tables.speaker.find(a.speaker);
    if (it == tables.speaker.end()) throw InvalidArgument("unknown speaker \"" + a.speaker + "\"");
    cond.speaker = it->second;
  }
  if (c.dialect && !a.dialect_csv.empty()) {
    cond.dialect = embedding_from_csv(a.dialect_csv, a.dialect);
  } else if (c.dialect) {
    auto it = tables.dialect.find(a.dialect);
    if (it == tables.dialect.end()) throw InvalidArgument("unknown dialect \"" + a.dialect + "\"");
    cond.dialect = it->second;
  }
  if (c.channel) {
    cond.channel = corpus::channel_onehot(a.channel, tables.channels);
    std::cout << "channel " << a.channel << " -> one-hot position "
              << std::find(tables.channels.begin(), tables.channels.end(), a.channel) - tables.channels.begin() << "\n";
  }
  const auto tokens = synth::token_ids(model.config(), corpus::tokenize(text, model.config().token_kind));
  const auto res = synth::synthesize(model, tokens, cond, a.max_frames);
  dsp::MelSpectrogram mel;
  mel.frames = dsp::denormalize_mel(res.mel);
  const auto wave = dsp::griffin_lim(mel, a.iterations, a.seed);
  dsp::write_wav(a.out, wave);
  std::printf("%zu frames (stop %s), focus %.3f, %.2f s -> %s\n", res.mel.rows(),
              res.stop_frame < 0 ? "not reached" : std::to_string(res.stop_frame).c_str(),
              synth::attention_focus(res.attention), wave.duration_seconds(), a.out.string().c_str());
  return 0;
}

struct EvalArgs {
  fs::path ratings, out_prefix;
  std::string baselines, reference = "natural", categories;
  double alpha = 0.01;
  bool counts = false;
};

int eval_cmd(const EvalArgs& a) {
  const auto ratings = eval::load_ratings_csv(a.ratings);
  std::map<std::string, std::string> bm;
  for (const auto& pair : split_list(a.baselines)) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) throw InvalidArgument("baseline \"" + pair + "\" is not system=baseline");
    bm[pair.substr(0, eq)] = pair.substr(eq + 1);
  }
  const auto cats = a.categories.empty() ? listen::kDialectCategories : split_list(a.categories);
  const auto rep = eval::make_report(ratings, cats, bm, a.reference, a.alpha,
                                     a.counts ? eval::ConfusionUnits::kCounts : eval::ConfusionUnits::kProportions);
  std::cout << rep.text;
  if (!a.out_prefix.empty()) {
    atomic_write_file(fs::path(a.out_prefix.string() + ".csv"), rep.csv);
    atomic_write_file(fs::path(a.out_prefix.string() + ".txt"), rep.text);
  }
  return 0;
}

struct PlanArgs {
  fs::path manifest, audio_root, out;
  std::string systems, reference = "natural";
  listen::PlanConfig cfg;
};

int plan_cmd(const PlanArgs& a) {
  const auto m = corpus::load_manifest(a.manifest);
  auto stimuli = listen::stimuli_from_manifest(m, split_list(a.systems), a.audio_root, a.reference);
  const auto plan = listen::build_plan(std::move(stimuli), a.cfg);
  listen::save_plan(plan, a.out);
  std::cout << plan.stimuli.size() << " stimuli, " << plan.sets.size() << " sets, " << plan.n_assignments()
            << " set assignments over " << plan.assignments.size() << " listeners -> " << a.out.string() << "\n";
  return 0;
}

struct ServeArgs {
  fs::path plan, store;
  std::string host = "127.0.0.1", accents;
  int port = 8080;
  bool fsync = false;
};

listen::HttpServer* g_server = nullptr;

int serve(const ServeArgs& a) {
  listen::ServiceOptions opts;
  opts.fsync = a.fsync;
  for (const auto& pair : split_list(a.accents)) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) throw InvalidArgument("accent sample \"" + pair + "\" is not dialect=path");
    opts.accent_samples[pair.substr(0, eq)] = pair.substr(eq + 1);
  }
  listen::ListenService service(listen::load_plan(a.plan), a.store, opts);
  if (service.recovered_torn_tail()) std::cout << "recovered a torn final log line\n";
  std::cout << "replayed " << service.last_seq() << " log records, " << service.ratings().size() << " ratings\n";
  listen::HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << a.host << ":" << port << "\n" << std::flush;
  server.serve();
  g_server = nullptr;
  return 0;
}

int gradcheck(uint64_t seed) {
  const auto suite = verify::run_gradient_suite(seed, [](const verify::GradCase& c) {
    std::printf("%-34s max rel err %.3e  (%zu checked, %zu at kinks)  %s\n", c.name.c_str(), c.max_rel_error,
                c.checked, c.skipped, c.max_rel_error < verify::kGradTolerance ? "ok" : "FAIL");
    std::fflush(stdout);
  });
  const bool ok = suite.max_rel_error() < verify::kGradTolerance;
  std::printf("%zu cases, worst %.3e (%s), %.1f s: %s\n", suite.cases.size(), suite.max_rel_error(),
              suite.worst()->name.c_str(), suite.seconds, ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speaker augmentation toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  ToyCorpusArgs toy;
  auto* toy_cmd = app.add_subcommand("toy-corpus", "generate the synthetic toy corpus plus default plans");
  toy_cmd->add_option("--seed", toy.seed, "generator seed")->required();
  toy_cmd->add_option("--out", toy.out, "output directory")->required();
  toy_cmd->add_option("--speakers", toy.speakers)->capture_default_str();
  toy_cmd->add_option("--dialects", toy.dialects)->capture_default_str();
  toy_cmd->add_option("--channels", toy.channels)->capture_default_str();
  toy_cmd->add_option("--utts", toy.utts, "utterances per speaker")->capture_default_str();
  toy_cmd->callback([&] { action = [&] { return toy_corpus(toy); }; });

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "VTLP speaker augmentation by resampling");
  aug_cmd->add_option("--manifest", aug.manifest)->required()->check(CLI::ExistingFile);
  aug_cmd->add_option("--out", aug.out, "output directory")->required();
  aug_cmd->add_option("--factors", aug.factors, "comma-separated speed factors")->capture_default_str();
  aug_cmd->add_option("--splits", aug.splits, "splits whose speakers are copied")->capture_default_str();
  aug_cmd->add_flag("--paths-only", aug.paths_only, "rewrite the manifest without rendering audio");
  aug_cmd->callback([&] { action = [&] { return augment(aug); }; });

  FeaturesArgs feat;
  auto* feat_cmd = app.add_subcommand("features", "extract 80-band log-mel features");
  feat_cmd->add_option("--manifest", feat.manifest)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--out", feat.out, "output directory")->required();
  feat_cmd->callback([&] { action = [&] { return features(feat); }; });

  TrainEmbedArgs te;
  auto* te_cmd = app.add_subcommand("train-embed", "train speaker or dialect embedding encoders");
  te_cmd->add_option("--manifest", te.manifest)->required()->check(CLI::ExistingFile);
  te_cmd->add_option("--task", te.task, "dialect | speaker")->capture_default_str();
  te_cmd->add_option("--config", te.config, "dim:pooling:components")->capture_default_str();
  te_cmd->add_flag("--sweep", te.sweep, "train every configuration of the sweep grid");
  te_cmd->add_option("--seed", te.seed)->required();
  te_cmd->add_option("--epochs", te.epochs)->capture_default_str();
  te_cmd->add_option("--lr", te.lr)->capture_default_str();
  te_cmd->add_flag("--angular", te.angular, "angular-margin softmax head");
  te_cmd->add_option("--out", te.out, "encoder file, or directory with --sweep")->required();
  te_cmd->callback([&] { action = [&] { return train_embed(te); }; });

  SelectEmbedArgs se;
  auto* se_cmd = app.add_subcommand("select-embed", "rank encoders by synthesized vs ground-truth cosine");
  se_cmd->add_option("--encoders", se.encoders, "encoder files or directories")->required()->check(CLI::ExistingPath);
  se_cmd->add_option("--pairs", se.pairs, "file of synthesized,ground_truth paths")->required()->check(CLI::ExistingFile);
  se_cmd->add_option("--top", se.top)->capture_default_str();
  se_cmd->add_option("--out", se.out, "JSON ranking report");
  se_cmd->callback([&] { action = [&] { return select_embed(se); }; });

  TrainTtsArgs tt;
  auto* tt_cmd = app.add_subcommand("train-tts", "run the four-phase warm-start schedule");
  tt_cmd->add_option("--manifest", tt.manifest)->required()->check(CLI::ExistingFile);
  tt_cmd->add_option("--plans", tt.plans, "phase plan files, in order (or one file with all phases)")->required()->check(CLI::ExistingFile);
  tt_cmd->add_option("--synth-config", tt.synth_config)->required()->check(CLI::ExistingFile);
  tt_cmd->add_option("--speaker-encoder", tt.speaker_encoder)->required()->check(CLI::ExistingFile);
  tt_cmd->add_option("--dialect-encoder", tt.dialect_encoder)->required()->check(CLI::ExistingFile);
  tt_cmd->add_option("--max-steps", tt.max_steps, "cap on every phase's steps");
  tt_cmd->add_option("--out", tt.out, "output directory")->required();
  tt_cmd->callback([&] { action = [&] { return train_tts(tt); }; });

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "synthesize text to WAV");
  sy_cmd->add_option("--checkpoint", sy.checkpoint)->required()->check(CLI::ExistingFile);
  sy_cmd->add_option("--tables", sy.tables, "embedding tables (default: next to the checkpoint)")->check(CLI::ExistingFile);
  auto* text_opt = sy_cmd->add_option("--text", sy.text);
  auto* text_file_opt = sy_cmd->add_option("--text-file", sy.text_file, "token text file")->check(CLI::ExistingFile);
  text_opt->excludes(text_file_opt);
  sy_cmd->add_option("--speaker-embedding", sy.speaker_csv, "embedding CSV; --speaker picks a row, else the mean")
      ->check(CLI::ExistingFile);
  sy_cmd->add_option("--dialect-embedding", sy.dialect_csv, "embedding CSV; --dialect picks a row, else the mean")
      ->check(CLI::ExistingFile);
  sy_cmd->add_option("--speaker", sy.speaker);
  sy_cmd->add_option("--dialect", sy.dialect);
  sy_cmd->add_option("--channel", sy.channel, "corpus name whose channel label is used");
  sy_cmd->add_option("--seed", sy.seed, "Griffin-Lim phase seed")->required();
  sy_cmd->add_option("--max-frames", sy.max_frames)->capture_default_str();
  sy_cmd->add_option("--iterations", sy.iterations)->capture_default_str();
  sy_cmd->add_option("--out", sy.out, "output WAV")->required();
  sy_cmd->callback([&] { action = [&] { return synth_cmd(sy); }; });

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "MOS/DMOS tables, significance marks and Frobenius distances");
  ev_cmd->add_option("--ratings", ev.ratings)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--baselines", ev.baselines, "system=baseline,...")->required();
  ev_cmd->add_option("--reference", ev.reference, "natural-speech system")->capture_default_str();
  ev_cmd->add_option("--categories", ev.categories, "dialect categories, comma-separated");
  ev_cmd->add_option("--alpha", ev.alpha)->capture_default_str();
  ev_cmd->add_flag("--counts", ev.counts, "Frobenius distance on counts instead of proportions");
  ev_cmd->add_option("--out-prefix", ev.out_prefix, "writes <prefix>.csv and <prefix>.txt");
  ev_cmd->callback([&] { action = [&] { return eval_cmd(ev); }; });

  PlanArgs pl;
  auto* pl_cmd = app.add_subcommand("plan", "build a listening-test plan");
  pl_cmd->add_option("--manifest", pl.manifest)->required()->check(CLI::ExistingFile);
  pl_cmd->add_option("--systems", pl.systems, "comma-separated system ids")->required();
  pl_cmd->add_option("--audio-root", pl.audio_root, "<root>/<system>/<utt>.wav")->required();
  pl_cmd->add_option("--reference", pl.reference)->capture_default_str();
  pl_cmd->add_option("--set-size", pl.cfg.set_size)->capture_default_str();
  pl_cmd->add_option("--listeners-per-set", pl.cfg.listeners_per_set)->capture_default_str();
  pl_cmd->add_option("--sets-per-listener", pl.cfg.sets_per_listener)->capture_default_str();
  pl_cmd->add_option("--listeners", pl.cfg.n_listeners)->capture_default_str();
  pl_cmd->add_option("--seed", pl.cfg.seed)->required();
  pl_cmd->add_option("--out", pl.out, "plan JSON")->required();
  pl_cmd->callback([&] { action = [&] { return plan_cmd(pl); }; });

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "run the listening-test service");
  sv_cmd->add_option("--plan", sv.plan)->required()->check(CLI::ExistingFile);
  sv_cmd->add_option("--store", sv.store, "rating log directory")->required();
  sv_cmd->add_option("--host", sv.host)->capture_default_str();
  sv_cmd->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  sv_cmd->add_option("--accents", sv.accents, "dialect=wav,... for the reference page");
  sv_cmd->add_flag("--fsync", sv.fsync, "fdatasync after every log append");
  sv_cmd->callback([&] { action = [&] { return serve(sv); }; });

  uint64_t gc_seed = 0;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gc_cmd->add_option("--seed", gc_seed)->required();
  gc_cmd->callback([&] { action = [&] { return gradcheck(gc_seed); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return 2;
  }
  try {
    for (const auto* sub : app.get_subcommands()) echo_config(sub);
    return action();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

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

#include "speakaug/embed/encoder.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/common/rng.h"
#include "speakaug/corpus/augment.h"
#include "speakaug/nn/archive.h"
#include "speakaug/nn/graph.h"
#include "speakaug/nn/ops.h"
#include "speakaug/nn/optim.h"

namespace speakaug::embed {

using nlohmann::json;
using nn::Graph;
using nn::Tensor;
using nn::Var;

std::string_view pooling_name(Pooling p) { return p == Pooling::kMean ? "mean" : "mean_std"; }

Pooling parse_pooling(std::string_view s) {
  if (s == "mean" || s == "m") return Pooling::kMean;
  if (s == "mean_std" || s == "m,s") return Pooling::kMeanStd;
  throw InvalidArgument("unknown pooling \"" + std::string(s) + "\"");
}

void EmbeddingConfig::validate() const {
  static const int dims[] = {32, 64, 128, 256, 512};
  if (std::find(std::begin(dims), std::end(dims), dim) == std::end(dims)) {
    throw InvalidArgument("embedding dim " + std::to_string(dim) + " is not one of 32, 64, 128, 256, 512");
  }
  if (components != 32 && components != 64) {
    throw InvalidArgument("LDE components " + std::to_string(components) + " is not 32 or 64");
  }
}

int EmbeddingConfig::pooled_width(int feature_dim) const {
  return (pooling == Pooling::kMeanStd ? 2 : 1) * components * feature_dim;
}

std::string EmbeddingConfig::label() const {
  return "(" + std::to_string(dim) + ", " + (pooling == Pooling::kMean ? "m" : "m,s") + ", " +
         std::to_string(components) + ")";
}

json EmbeddingConfig::to_json() const {
  return {{"dim", dim}, {"pooling", pooling_name(pooling)}, {"components", components}};
}

EmbeddingConfig EmbeddingConfig::from_json(const json& j) {
  EmbeddingConfig c;
  c.dim = j.at("dim").get<int>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.components = j.at("components").get<int>();
  c.validate();
  return c;
}

bool EmbeddingConfig::operator<(const EmbeddingConfig& o) const {
  if (dim != o.dim) return dim < o.dim;
  if (pooling != o.pooling) return pooling == Pooling::kMean;
  return components < o.components;
}

std::vector<EmbeddingConfig> sweep_grid() {
  std::vector<EmbeddingConfig> out;
  for (int dim : {32, 64, 128, 256, 512})
    for (Pooling p : {Pooling::kMean, Pooling::kMeanStd})
      for (int comps : {32, 64}) out.push_back({dim, p, comps});
  return out;
}

std::vector<EmbeddingConfig> reported_top5(corpus::TokenKind kind) {
  const Pooling m = Pooling::kMean, ms = Pooling::kMeanStd;
  if (kind == corpus::TokenKind::kPhone) {
    return {{256, ms, 32}, {256, m, 64}, {256, ms, 64}, {32, ms, 64}, {64, m, 64}};
  }
  return {{128, ms, 32}, {256, m, 32}, {32, ms, 64}, {512, ms, 32}, {64, ms, 32}};
}

namespace {

Tensor uniform_init(nn::Shape shape, double limit, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = rng.uniform(-limit, limit);
  return t;
}

const char* task_name(EncoderTask t) { return t == EncoderTask::kDialect ? "dialect" : "speaker"; }

struct Forward {
  Var embedding;
  Var logits;  // plain logits; angular scoring uses the classifier weight directly
};

Var front_end(Graph& g, const Encoder& enc, Var x) {
  auto& ps = const_cast<nn::ParamStore&>(enc.params);
  for (int l = 0; l < kFrontEndLayers; ++l) {
    x = nn::relu(nn::conv1d(x, g.param(ps.get("conv" + std::to_string(l) + "/k")),
                            g.param(ps.get("conv" + std::to_string(l) + "/b"))));
  }
  return x;
}

Var embedding_var(Graph& g, const Encoder& enc, const Matrix& mel) {
  if (mel.rows() == 0) throw InvalidArgument("embed: empty mel");
  if (mel.cols() != dsp::kNumMels) throw InvalidArgument("embed: mel must have 80 bands");
  auto& ps = const_cast<nn::ParamStore&>(enc.params);
  Var x = g.constant(Tensor({static_cast<int>(mel.rows()), dsp::kNumMels}, mel.data()));
  Var feats = front_end(g, enc, x);
  Var pooled = lde_pool(feats, g.param(ps.get("lde/mu")), nn::softplus(g.param(ps.get("lde/rho"))),
                        enc.cfg.pooling);
  return nn::linear(pooled, g.param(ps.get("proj/w")), g.param(ps.get("proj/b")));
}

Var plain_logits(Graph& g, const Encoder& enc, Var emb) {
  auto& ps = const_cast<nn::ParamStore&>(enc.params);
  return nn::linear(emb, g.param(ps.get("cls/w")), g.param(ps.get("cls/b")));
}

std::vector<double> scores(const Encoder& enc, const std::vector<double>& emb) {
  const Tensor& w = enc.params.get("cls/w").value;
  const Tensor& b = enc.params.get("cls/b").value;
  const int dim = w.rows(), k = w.cols();
  std::vector<double> s(k, 0.0);
  for (int j = 0; j < k; ++j) {
    double u = 0, norm = 0;
    for (int i = 0; i < dim; ++i) {
      u += emb[i] * w.at(i, j);
      norm += w.at(i, j) * w.at(i, j);
    }
    s[j] = enc.angular ? u / std::sqrt(norm) : u + b[j];
  }
  return s;
}

}  // namespace

Encoder Encoder::create(const EmbeddingConfig& cfg, EncoderTask task, std::vector<std::string> classes,
                        bool angular, uint64_t seed) {
  cfg.validate();
  if (classes.size() < 2) throw InvalidArgument("encoder needs at least two classes");
  Encoder e;
  e.cfg = cfg;
  e.task = task;
  e.classes = std::move(classes);
  e.angular = angular;
  Rng rng(seed);
  int in = dsp::kNumMels;
  for (int l = 0; l < kFrontEndLayers; ++l) {
    const double limit = std::sqrt(6.0 / (kFrontEndKernel * in));
    e.params.add("conv" + std::to_string(l) + "/k", uniform_init({kFrontEndKernel, in, kFrontEndDim}, limit, rng));
    e.params.add("conv" + std::to_string(l) + "/b", Tensor({kFrontEndDim}, 0.0));
    in = kFrontEndDim;
  }
  Tensor mu({cfg.components, kFrontEndDim});
  for (auto& v : mu.values) v = rng.uniform(0.0, 1.0);
  e.params.add("lde/mu", std::move(mu));
  const double s0 = 1.0 / kFrontEndDim;
  e.params.add("lde/rho", Tensor({cfg.components}, std::log(std::expm1(s0))));
  const int width = cfg.pooled_width(kFrontEndDim);
  e.params.add("proj/w", uniform_init({width, cfg.dim}, std::sqrt(6.0 / (width + cfg.dim)), rng));
  e.params.add("proj/b", Tensor({cfg.dim}, 0.0));
  const int k = static_cast<int>(e.classes.size());
  e.params.add("cls/w", uniform_init({cfg.dim, k}, std::sqrt(6.0 / (cfg.dim + k)), rng));
  e.params.add("cls/b", Tensor({k}, 0.0));
  return e;
}

void Encoder::save(const std::filesystem::path& path) const {
  json meta{{"kind", "encoder"}, {"task", task_name(task)}, {"config", cfg.to_json()},
            {"classes", classes}, {"angular", angular}};
  nn::save_archive(path, meta, params);
}

Encoder Encoder::load(const std::filesystem::path& path) {
  nn::Archive a = nn::load_archive(path);
  if (a.metadata.value("kind", "") != "encoder") {
    throw InvalidArgument(path.string() + " is not an encoder checkpoint");
  }
  Encoder e;
  e.cfg = EmbeddingConfig::from_json(a.metadata.at("config"));
  e.task = a.metadata.at("task") == "speaker" ? EncoderTask::kSpeaker : EncoderTask::kDialect;
  e.classes = a.metadata.at("classes").get<std::vector<std::string>>();
  e.angular = a.metadata.value("angular", false);
  e.params = std::move(a.params);
  return e;
}

std::vector<double> embed_normalized(const Encoder& enc, const Matrix& normalized_mel) {
  Graph g(false);
  return embedding_var(g, enc, normalized_mel).value().values;
}

Embedding embed(const Encoder& enc, const dsp::MelSpectrogram& mel, std::string source_utt) {
  if (mel.num_frames() == 0) throw InvalidArgument("embed: empty mel");
  return {embed_normalized(enc, dsp::normalize_mel(mel.frames)), std::move(source_utt)};
}

int classify(const Encoder& enc, const Matrix& normalized_mel) {
  const auto s = scores(enc, embed_normalized(enc, normalized_mel));
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

double accuracy(const Encoder& enc, const std::vector<Example>& data) {
  if (data.empty()) return 0.0;
  int hits = 0;
  for (const auto& ex : data) hits += classify(enc, ex.mel) == ex.label;
  return static_cast<double>(hits) / data.size();
}

TrainResult train_encoder(const std::vector<Example>& data, const EmbeddingConfig& cfg, EncoderTask task,
                          std::vector<std::string> classes, const TrainOptions& opt) {
  if (data.empty()) throw InvalidArgument("train_encoder: no examples");
  if (opt.epochs < 0) throw InvalidArgument("train_encoder: negative epochs");
  const int k = static_cast<int>(classes.size());
  std::vector<int> present(k, 0);
  for (const auto& ex : data) {
    if (ex.label < 0 || ex.label >= k) throw InvalidArgument("train_encoder: label out of range");
    present[ex.label] = 1;
  }
  if (std::count(present.begin(), present.end(), 1) < 2) {
    throw InvalidArgument("train_encoder: examples cover fewer than two classes");
  }
  TrainResult res{Encoder::create(cfg, task, classes, opt.angular, opt.seed), 0.0, {}};
  Encoder& enc = res.encoder;

  // Balanced sampling over labels via a synthetic manifest of the examples.
  corpus::Manifest index;
  index.corpus_list = {"-"};
  for (int c = 0; c < k; ++c) index.dialect_list.push_back(std::to_string(c));
  index.dialect_list.erase(std::remove_if(index.dialect_list.begin(), index.dialect_list.end(),
                                          [&](const std::string& s) { return !present[std::stoi(s)]; }),
                           index.dialect_list.end());
  for (std::size_t i = 0; i < data.size(); ++i) {
    corpus::UtteranceRecord r;
    r.utt_id = std::to_string(i);
    r.speaker_id = "s" + std::to_string(i);
    r.corpus_id = "-";
    r.dialect = std::to_string(data[i].label);
    index.records.push_back(std::move(r));
  }
  corpus::BalancedBatcher batcher(index, corpus::BalanceKey::kDialect, opt.batch_size, opt.seed + 1);
  nn::AdamOptions aopt;
  aopt.lr = opt.lr;
  aopt.clip_norm = 5.0;
  nn::Adam adam(aopt);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    double total = 0;
    const std::size_t n_batches = batcher.batches_per_epoch();
    for (std::size_t b = 0; b < n_batches; ++b) {
      enc.params.zero_grad();
      const auto batch = batcher.next();
      for (std::size_t i : batch) {
        Graph g;
        Var emb = embedding_var(g, enc, data[i].mel);
        Var logits = opt.angular
                         ? angular_margin_logits(emb, g.param(enc.params.get("cls/w")), {data[i].label},
                                                 opt.angular_lambda)
                         : plain_logits(g, enc, emb);
        Var loss = nn::scale(nn::cross_entropy(logits, {data[i].label}), 1.0 / batch.size());
        total += loss.value()[0];
        g.backward(loss);
      }
      adam.step(enc.params);
    }
    res.epoch_loss.push_back(total / n_batches);
  }
  res.train_accuracy = accuracy(enc, data);
  return res;
}

namespace {

TrainResult train_on_manifest(const corpus::Manifest& m, corpus::MelCache& cache, const EmbeddingConfig& cfg,
                              const TrainOptions& opt, EncoderTask task) {
  corpus::RecordFilter f;
  f.splits = {corpus::Split::kTrain};
  const corpus::Manifest train = corpus::filter_manifest(m, f);
  std::vector<std::string> classes;
  if (task == EncoderTask::kDialect) {
    for (const auto& d : m.dialect_list)
      if (std::any_of(train.records.begin(), train.records.end(), [&](const auto& r) { return r.dialect == d; }))
        classes.push_back(d);
  } else {
    classes = train.speakers();
  }
  if (classes.size() < 2) {
    throw InvalidArgument(std::string("need at least two ") + task_name(task) +
                          " classes in the train split, found " + std::to_string(classes.size()));
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = static_cast<int>(i);
  std::vector<Example> data;
  for (const auto& r : train.records) {
    data.push_back({dsp::normalize_mel(cache.get(r).frames),
                    index.at(task == EncoderTask::kDialect ? r.dialect : r.speaker_id)});
  }
  return train_encoder(data, cfg, task, classes, opt);
}

}  // namespace

TrainResult train_dialect_encoder(const corpus::Manifest& m, corpus::MelCache& cache,
                                  const EmbeddingConfig& cfg, const TrainOptions& opt) {
  return train_on_manifest(m, cache, cfg, opt, EncoderTask::kDialect);
}

TrainResult train_speaker_encoder(const corpus::Manifest& m, corpus::MelCache& cache,
                                  const EmbeddingConfig& cfg, const TrainOptions& opt) {
  return train_on_manifest(m, cache, cfg, opt, EncoderTask::kSpeaker);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine: vectors differ in length");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) throw InvalidArgument("cosine of a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double cosine(const Embedding& a, const Embedding& b) { return cosine(a.vector, b.vector); }

std::vector<double> mean_embedding(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw InvalidArgument("mean_embedding: no vectors");
  std::vector<double> m(vectors[0].size(), 0.0);
  for (const auto& v : vectors) {
    if (v.size() != m.size()) throw InvalidArgument("mean_embedding: vectors differ in length");
    for (std::size_t i = 0; i < v.size(); ++i) m[i] += v[i];
  }
  double norm = 0;
  for (double x : m) norm += x * x;
  if (norm == 0) throw InvalidArgument("mean_embedding: zero mean vector");
  norm = std::sqrt(norm);
  for (double& x : m) x /= norm;
  return m;
}

std::vector<RankedConfig> rank_scores(std::vector<RankedConfig> scored) {
  std::stable_sort(scored.begin(), scored.end(), [](const RankedConfig& a, const RankedConfig& b) {
    if (a.mean_score != b.mean_score) return a.mean_score > b.mean_score;
    return a.cfg < b.cfg;
  });
  return scored;
}

std::vector<RankedConfig> rank_configs(
    const std::vector<const Encoder*>& encoders,
    const std::vector<std::pair<dsp::MelSpectrogram, dsp::MelSpectrogram>>& pairs) {
  if (pairs.empty()) throw InvalidArgument("rank_configs: no (synthesized, ground-truth) pairs");
  std::vector<RankedConfig> scored;
  for (const Encoder* enc : encoders) {
    RankedConfig rc;
    rc.cfg = enc->cfg;
    double sum = 0;
    for (const auto& [synth, gt] : pairs) {
      const double s = cosine(embed(*enc, synth), embed(*enc, gt));
      rc.pair_scores.push_back(s);
      sum += s;
    }
    rc.mean_score = sum / pairs.size();
    scored.push_back(std::move(rc));
  }
  return rank_scores(std::move(scored));
}

std::vector<RankedConfig> take_top(const std::vector<RankedConfig>& ranked, std::size_t k) {
  return {ranked.begin(), ranked.begin() + std::min(k, ranked.size())};
}

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<Embedding>& rows) {
  std::string out = "utt_id";
  const std::size_t dim = rows.empty() ? 0 : rows[0].vector.size();
  for (std::size_t i = 0; i < dim; ++i) out += ",v" + std::to_string(i);
  out += "\n";
  char buf[32];
  for (const auto& r : rows) {
    if (r.vector.size() != dim) throw InvalidArgument("embeddings differ in length");
    if (r.source_utt.find_first_of(",\n\"") != std::string::npos) {
      throw InvalidArgument("utt_id \"" + r.source_utt + "\" cannot be written to CSV");
    }
    out += r.source_utt;
    for (double v : r.vector) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  atomic_write_file(path, out);
}

std::vector<Embedding> read_embeddings_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<Embedding> rows;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      continue;
    }
    std::istringstream fields(line);
    std::string cell;
    Embedding e;
    std::getline(fields, e.source_utt, ',');
    while (std::getline(fields, cell, ',')) {
      try {
        e.vector.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": bad number \"" + cell + "\"");
      }
    }
    if (e.vector.size() != width) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(width) + " values");
    }
    rows.push_back(std::move(e));
  }
  return rows;
}

}  // namespace speakaug::embed

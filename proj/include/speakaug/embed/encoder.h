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

#ifndef SPEAKAUG_EMBED_ENCODER_H_
#define SPEAKAUG_EMBED_ENCODER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "speakaug/common/matrix.h"
#include "speakaug/corpus/features.h"
#include "speakaug/corpus/manifest.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/embed/lde.h"
#include "speakaug/nn/tensor.h"

namespace speakaug::embed {

struct EmbeddingConfig {
  int dim = 64;
  Pooling pooling = Pooling::kMean;
  int components = 32;

  // Values must lie on the sweep grid: dim in {32..512}, components in {32, 64}.
  void validate() const;
  int pooled_width(int feature_dim) const;
  std::string label() const;  // e.g. "(256, m,s, 32)"
  nlohmann::json to_json() const;
  static EmbeddingConfig from_json(const nlohmann::json& j);

  // Lexicographic (dim, pooling, components) order; mean before mean_std.
  bool operator<(const EmbeddingConfig& o) const;
  bool operator==(const EmbeddingConfig&) const = default;
};

std::string_view pooling_name(Pooling p);  // "mean" | "mean_std"
Pooling parse_pooling(std::string_view s);

// The 5 x 2 x 2 grid in (dim, pooling, components) order.
std::vector<EmbeddingConfig> sweep_grid();

// Reported top-5 dialect embedding configurations (DE1..DE5).
std::vector<EmbeddingConfig> reported_top5(corpus::TokenKind kind);

inline constexpr int kFrontEndDim = 64;
inline constexpr int kFrontEndLayers = 3;
inline constexpr int kFrontEndKernel = 3;

enum class EncoderTask { kDialect, kSpeaker };

// Conv front-end (3 x relu conv over normalized mel -> 64 features), LDE
// pooling, a dense projection to cfg.dim (the embedding) and a classifier.
struct Encoder {
  EmbeddingConfig cfg;
  EncoderTask task = EncoderTask::kDialect;
  std::vector<std::string> classes;
  bool angular = false;
  nn::ParamStore params;

  static Encoder create(const EmbeddingConfig& cfg, EncoderTask task,
                        std::vector<std::string> classes, bool angular, uint64_t seed);
  void save(const std::filesystem::path& path) const;
  static Encoder load(const std::filesystem::path& path);
};

struct Embedding {
  std::vector<double> vector;
  std::string source_utt;
};

// Deterministic; throws InvalidArgument on an empty mel.
Embedding embed(const Encoder& enc, const dsp::MelSpectrogram& mel, std::string source_utt = "");
// Same, on an already normalized [T x 80] matrix.
std::vector<double> embed_normalized(const Encoder& enc, const Matrix& normalized_mel);
// Class posteriors argmax for a normalized mel.
int classify(const Encoder& enc, const Matrix& normalized_mel);

struct TrainOptions {
  int epochs = 30;
  int batch_size = 8;
  double lr = 2e-3;
  uint64_t seed = 0;
  bool angular = false;
  double angular_lambda = 5.0;
};

struct TrainResult {
  Encoder encoder;
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;
};

// Labelled examples: normalized mel and class index.
struct Example {
  Matrix mel;
  int label = 0;
};

TrainResult train_encoder(const std::vector<Example>& data, const EmbeddingConfig& cfg,
                          EncoderTask task, std::vector<std::string> classes,
                          const TrainOptions& opt);

// Builds examples from the train split of a manifest (audio via `cache`) with
// dialect or speaker labels, trains with batches balanced over that label.
TrainResult train_dialect_encoder(const corpus::Manifest& m, corpus::MelCache& cache,
                                  const EmbeddingConfig& cfg, const TrainOptions& opt);
TrainResult train_speaker_encoder(const corpus::Manifest& m, corpus::MelCache& cache,
                                  const EmbeddingConfig& cfg, const TrainOptions& opt);

double accuracy(const Encoder& enc, const std::vector<Example>& data);

double cosine(const std::vector<double>& a, const std::vector<double>& b);
double cosine(const Embedding& a, const Embedding& b);

// L2-normalized mean of several embeddings.
std::vector<double> mean_embedding(const std::vector<std::vector<double>>& vectors);

struct RankedConfig {
  EmbeddingConfig cfg;
  double mean_score = 0.0;
  std::vector<double> pair_scores;
};

// Sorts by descending mean score, ties by EmbeddingConfig order.
std::vector<RankedConfig> rank_scores(std::vector<RankedConfig> scored);

// Scores each encoder by the mean cosine between embeddings of synthesized
// and ground-truth mels over all pairs, then ranks.
std::vector<RankedConfig> rank_configs(
    const std::vector<const Encoder*>& encoders,
    const std::vector<std::pair<dsp::MelSpectrogram, dsp::MelSpectrogram>>& pairs);

std::vector<RankedConfig> take_top(const std::vector<RankedConfig>& ranked, std::size_t k);

// CSV rows "utt_id,v0,v1,..." with a header line.
void write_embeddings_csv(const std::filesystem::path& path, const std::vector<Embedding>& rows);
std::vector<Embedding> read_embeddings_csv(const std::filesystem::path& path);

}  // namespace speakaug::embed

#endif  // SPEAKAUG_EMBED_ENCODER_H_

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

#ifndef SPEAKAUG_SYNTH_SYNTH_H_
#define SPEAKAUG_SYNTH_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "speakaug/common/matrix.h"
#include "speakaug/corpus/manifest.h"
#include "speakaug/nn/graph.h"
#include "speakaug/nn/tensor.h"

namespace speakaug::synth {

struct PostnetConfig {
  int layers = 3;
  int kernel = 5;
  int channels = 64;
};

struct SynthConfig {
  std::vector<std::string> token_vocab;
  corpus::TokenKind token_kind = corpus::TokenKind::kChar;
  int encoder_dim = 64;
  int decoder_dim = 128;
  std::vector<int> prenet_dims{64, 64};
  PostnetConfig postnet;
  int n_channels = 5;
  int speaker_dim = 64;
  int dialect_dim = 64;

  int encoder_convs = 2;
  int encoder_kernel = 5;
  int attention_dim = 64;
  int location_filters = 8;
  int location_kernel = 15;
  double prenet_dropout = 0.5;
  double stop_bias_init = -4.0;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// Which conditioning paths the model currently has.
struct Conditioning {
  bool speaker = false;
  bool channel = false;
  bool dialect = false;

  nlohmann::json to_json() const;
  static Conditioning from_json(const nlohmann::json& j);
  bool operator==(const Conditioning&) const = default;
};

class SynthModel {
 public:
  static SynthModel create(const SynthConfig& cfg, uint64_t seed);

  // Warm-start extensions. New projections and concat rows start at zero so the
  // extended model computes exactly what the parent did. Throw if present.
  void add_speaker();
  void add_channel();
  void add_dialect();

  const SynthConfig& config() const { return cfg_; }
  const Conditioning& conditioning() const { return cond_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Width of the attention memory: encoder_dim plus speaker_dim when present.
  int memory_dim() const;

  nlohmann::json metadata() const;
  static SynthModel from_archive(const nlohmann::json& metadata, nn::ParamStore params);
  std::string save(const std::filesystem::path& path) const;  // returns content hash
  static SynthModel load(const std::filesystem::path& path);

 private:
  SynthConfig cfg_;
  Conditioning cond_;
  nn::ParamStore params_;
};

// Maps tokens to vocabulary ids; unknown tokens throw InvalidArgument.
std::vector<int> token_ids(const SynthConfig& cfg, const std::vector<std::string>& tokens);

// Conditioning inputs; an empty vector means absent.
struct Conditioners {
  std::vector<double> speaker;
  std::vector<double> dialect;
  std::vector<double> channel;  // one-hot over n_channels
};

// Graph-level building blocks.
nn::Var encode(nn::Graph& g, SynthModel& m, const std::vector<int>& tokens,
               const std::vector<double>& dialect);

struct DecoderOutputs {
  nn::Var coarse;       // [T, 80]
  nn::Var stop_logits;  // [T, 1]
  nn::Var attention;    // [T, T_in]
};

DecoderOutputs decode_teacher_forced(nn::Graph& g, SynthModel& m, nn::Var enc_states,
                                     const std::vector<double>& speaker, const Matrix& target);

nn::Var postnet_refine(nn::Graph& g, SynthModel& m, nn::Var coarse, const std::vector<double>& channel);

// One training utterance: token ids, normalized target mel and conditioners.
struct SynthExample {
  std::string utt_id;
  std::vector<int> tokens;
  Matrix mel;
  Conditioners cond;
};

struct TeacherForced {
  nn::Var loss;  // L1(coarse) + L1(refined) + BCE(stop)
  nn::Var coarse;
  nn::Var refined;
  nn::Var stop_logits;
  nn::Var attention;
  double l1_coarse = 0;
  double l1_refined = 0;
  double stop_bce = 0;
};

TeacherForced teacher_forced(nn::Graph& g, SynthModel& m, const SynthExample& ex);

// Teacher-forced loss without gradients (dropout off).
double teacher_forced_loss(const SynthModel& m, const SynthExample& ex);

// Matrix-level wrappers, evaluated without gradients.
Matrix encode_states(const SynthModel& m, const std::vector<int>& tokens, const std::vector<double>& dialect);
Matrix postnet_refine(const SynthModel& m, const Matrix& coarse, const std::vector<double>& channel);

struct TeacherForcedResult {
  Matrix coarse;
  Matrix refined;
  std::vector<double> stop_logits;
  Matrix attention;
  double l1_refined = 0;
  double loss = 0;
};
TeacherForcedResult run_teacher_forced(const SynthModel& m, const SynthExample& ex);

struct SynthesisResult {
  Matrix mel;        // after the postnet, normalized units
  Matrix coarse;     // before the postnet
  Matrix attention;  // [frames x T_in]
  int stop_frame = -1;  // frames emitted when the stop fired, -1 if capped
};

// Autoregressive decoding until the stop probability exceeds 0.5 or
// max_frames. Channel enters only the postnet.
SynthesisResult synthesize(const SynthModel& m, const std::vector<int>& tokens, const Conditioners& cond,
                           int max_frames);

inline constexpr double kAlignmentFailure = 0.5;

// Mean over decoder steps of the row maximum.
double attention_focus(const Matrix& attention);

// Validates a one-hot channel vector of the given length.
void check_one_hot(const std::vector<double>& channel, int n_channels);

}  // namespace speakaug::synth

#endif  // SPEAKAUG_SYNTH_SYNTH_H_

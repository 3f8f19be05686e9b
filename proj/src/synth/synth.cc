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

#include "speakaug/synth/synth.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "speakaug/common/error.h"
#include "speakaug/common/rng.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/nn/archive.h"
#include "speakaug/nn/attention.h"
#include "speakaug/nn/ops.h"

namespace speakaug::synth {

using nlohmann::json;
using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

constexpr int kMels = dsp::kNumMels;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("synth config: " + what);
}

Tensor xavier(nn::Shape shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.values) v = rng.uniform(-limit, limit);
  return t;
}

void add_gru(nn::ParamStore& ps, const std::string& prefix, int in, int hidden, Rng& rng) {
  ps.add(prefix + "/wx", xavier({in, 3 * hidden}, in, hidden, rng));
  ps.add(prefix + "/wh", xavier({hidden, 3 * hidden}, hidden, hidden, rng));
  ps.add(prefix + "/bx", Tensor({3 * hidden}));
  ps.add(prefix + "/bh", Tensor({3 * hidden}));
}

// Appends zero rows at the end of a matrix parameter.
void append_zero_rows(nn::ParamStore& ps, const std::string& name, int extra) {
  const Tensor& old = ps.get(name).value;
  const int rows = old.rows(), cols = old.cols();
  Tensor t({rows + extra, cols});
  std::copy(old.values.begin(), old.values.end(), t.values.begin());
  ps.replace(name, std::move(t));
}

struct Ctx {
  Graph& g;
  nn::ParamStore& ps;
  Var p(const std::string& name) { return g.param(ps.get(name)); }
};

Var gru(Ctx& c, const std::string& prefix, Var x, Var h) {
  return nn::gru_step(x, h, c.p(prefix + "/wx"), c.p(prefix + "/wh"), c.p(prefix + "/bx"), c.p(prefix + "/bh"));
}

Var row_constant(Graph& g, const std::vector<double>& v) {
  return g.constant(Tensor({1, static_cast<int>(v.size())}, v));
}

void check_vector(const std::vector<double>& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim) {
    throw InvalidArgument(std::string(what) + " embedding has " + std::to_string(v.size()) +
                          " values, model expects " + std::to_string(dim));
  }
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " embedding is not finite");
}

Var speaker_row(Graph& g, const SynthModel& m, const std::vector<double>& speaker) {
  if (speaker.empty()) throw InvalidArgument("model is speaker-conditioned but no speaker embedding was given");
  check_vector(speaker, m.config().speaker_dim, "speaker");
  return row_constant(g, speaker);
}

Var prenet(Ctx& c, const SynthConfig& cfg, Var x) {
  for (std::size_t i = 0; i < cfg.prenet_dims.size(); ++i) {
    const std::string n = "prenet/" + std::to_string(i);
    x = nn::dropout(nn::relu(nn::linear(x, c.p(n + "/w"), c.p(n + "/b"))), cfg.prenet_dropout);
  }
  return x;
}

nn::AttentionParams attention_params(Ctx& c) {
  return {c.p("attn/query_w"), c.p("attn/loc_filters"), c.p("attn/loc_w"), c.p("attn/bias"), c.p("attn/v")};
}

// One decoder step; state is updated in place.
struct DecoderState {
  Var att_h, dec_h, context, prev_weights, cumulative;
};

struct StepOut {
  Var frame, stop, weights;
};

StepOut decoder_step(Ctx& c, const SynthConfig& cfg, const nn::AttentionParams& ap, Var memory, Var keys,
                     Var prev_frame, Var spk, DecoderState& s) {
  Var pin = spk.valid() ? nn::concat_cols({prev_frame, spk}) : prev_frame;
  Var p = prenet(c, cfg, pin);
  s.att_h = gru(c, "att_rnn", nn::concat_cols({p, s.context}), s.att_h);
  Var w = nn::attention_weights(ap, s.att_h, keys, s.prev_weights, s.cumulative);
  s.context = nn::matmul(w, memory);
  s.dec_h = gru(c, "dec_rnn", nn::concat_cols({s.att_h, s.context}), s.dec_h);
  Var out = nn::concat_cols({s.dec_h, s.context});
  s.prev_weights = w;
  s.cumulative = nn::add(s.cumulative, w);
  return {nn::linear(out, c.p("proj/w"), c.p("proj/b")), nn::linear(out, c.p("stop/w"), c.p("stop/b")), w};
}

struct Memory {
  Var memory, keys, spk;
};

Memory build_memory(Ctx& c, const SynthModel& m, Var enc, const std::vector<double>& speaker) {
  const int t_in = enc.value().rows();
  Memory mem;
  mem.memory = enc;
  if (m.conditioning().speaker) {
    mem.spk = speaker_row(c.g, m, speaker);
    mem.memory = nn::concat_cols({enc, nn::broadcast_rows(mem.spk, t_in)});
  }
  mem.keys = nn::matmul(mem.memory, c.p("attn/memory_w"));
  return mem;
}

DecoderState initial_state(Graph& g, const SynthModel& m, int t_in) {
  const int d = m.config().decoder_dim;
  Tensor start({1, t_in});
  start.values[0] = 1.0;  // alignment starts on the first token
  return {g.constant(Tensor({1, d})), g.constant(Tensor({1, d})), g.constant(Tensor({1, m.memory_dim()})),
          g.constant(start), g.constant(start)};
}

Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), t.cols());
  std::copy(t.values.begin(), t.values.end(), m.data().begin());
  return m;
}

Tensor to_tensor(const Matrix& m) {
  return Tensor({static_cast<int>(m.rows()), static_cast<int>(m.cols())}, m.data());
}

SynthModel& mut(const SynthModel& m) { return const_cast<SynthModel&>(m); }

}  // namespace

void SynthConfig::validate() const {
  require(!token_vocab.empty(), "empty token vocabulary");
  require(std::set<std::string>(token_vocab.begin(), token_vocab.end()).size() == token_vocab.size(),
          "duplicate tokens in vocabulary");
  require(encoder_dim > 0 && encoder_dim % 2 == 0, "encoder_dim must be positive and even");
  require(decoder_dim > 0, "decoder_dim must be positive");
  require(!prenet_dims.empty(), "prenet needs at least one layer");
  for (int d : prenet_dims) require(d > 0, "prenet dims must be positive");
  require(postnet.layers >= 1, "postnet needs at least one layer");
  require(postnet.kernel > 0 && postnet.kernel % 2 == 1, "postnet kernel must be odd");
  require(postnet.channels > 0, "postnet channels must be positive");
  require(n_channels >= 1, "n_channels must be positive");
  require(speaker_dim > 0 && dialect_dim > 0, "embedding dims must be positive");
  require(encoder_convs >= 0, "encoder_convs must be non-negative");
  require(encoder_kernel % 2 == 1, "encoder kernel must be odd");
  require(attention_dim > 0 && location_filters > 0, "attention dims must be positive");
  require(location_kernel % 2 == 1, "location kernel must be odd");
  require(prenet_dropout >= 0 && prenet_dropout < 1, "prenet dropout must lie in [0, 1)");
}

json SynthConfig::to_json() const {
  return {{"token_vocab", token_vocab},
          {"token_kind", corpus::token_kind_name(token_kind)},
          {"encoder_dim", encoder_dim},
          {"decoder_dim", decoder_dim},
          {"prenet_dims", prenet_dims},
          {"postnet", {{"layers", postnet.layers}, {"kernel", postnet.kernel}, {"channels", postnet.channels}}},
          {"n_channels", n_channels},
          {"speaker_dim", speaker_dim},
          {"dialect_dim", dialect_dim},
          {"encoder_convs", encoder_convs},
          {"encoder_kernel", encoder_kernel},
          {"attention_dim", attention_dim},
          {"location_filters", location_filters},
          {"location_kernel", location_kernel},
          {"prenet_dropout", prenet_dropout},
          {"stop_bias_init", stop_bias_init}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.token_vocab = j.at("token_vocab").get<std::vector<std::string>>();
  c.token_kind = corpus::parse_token_kind(j.value("token_kind", "char"));
  c.encoder_dim = j.value("encoder_dim", c.encoder_dim);
  c.decoder_dim = j.value("decoder_dim", c.decoder_dim);
  c.prenet_dims = j.value("prenet_dims", c.prenet_dims);
  if (j.contains("postnet")) {
    const auto& p = j.at("postnet");
    c.postnet.layers = p.value("layers", c.postnet.layers);
    c.postnet.kernel = p.value("kernel", c.postnet.kernel);
    c.postnet.channels = p.value("channels", c.postnet.channels);
  }
  c.n_channels = j.value("n_channels", c.n_channels);
  c.speaker_dim = j.value("speaker_dim", c.speaker_dim);
  c.dialect_dim = j.value("dialect_dim", c.dialect_dim);
  c.encoder_convs = j.value("encoder_convs", c.encoder_convs);
  c.encoder_kernel = j.value("encoder_kernel", c.encoder_kernel);
  c.attention_dim = j.value("attention_dim", c.attention_dim);
  c.location_filters = j.value("location_filters", c.location_filters);
  c.location_kernel = j.value("location_kernel", c.location_kernel);
  c.prenet_dropout = j.value("prenet_dropout", c.prenet_dropout);
  c.stop_bias_init = j.value("stop_bias_init", c.stop_bias_init);
  c.validate();
  return c;
}

json Conditioning::to_json() const { return {{"speaker", speaker}, {"channel", channel}, {"dialect", dialect}}; }

Conditioning Conditioning::from_json(const json& j) {
  return {j.value("speaker", false), j.value("channel", false), j.value("dialect", false)};
}

SynthModel SynthModel::create(const SynthConfig& cfg, uint64_t seed) {
  cfg.validate();
  SynthModel m;
  m.cfg_ = cfg;
  Rng rng(seed);
  auto& ps = m.params_;
  const int e = cfg.encoder_dim, d = cfg.decoder_dim, a = cfg.attention_dim;
  const int v = static_cast<int>(cfg.token_vocab.size());
  Tensor emb({v, e});
  for (auto& x : emb.values) x = 0.3 * rng.normal();
  ps.add("enc/embedding", std::move(emb));
  for (int i = 0; i < cfg.encoder_convs; ++i) {
    const std::string n = "enc/conv" + std::to_string(i);
    ps.add(n + "/k", xavier({cfg.encoder_kernel, e, e}, cfg.encoder_kernel * e, e, rng));
    ps.add(n + "/b", Tensor({e}));
  }
  add_gru(ps, "enc/fwd", e, e / 2, rng);
  add_gru(ps, "enc/bwd", e, e / 2, rng);

  ps.add("attn/memory_w", xavier({e, a}, e, a, rng));
  ps.add("attn/query_w", xavier({d, a}, d, a, rng));
  ps.add("attn/loc_filters", xavier({cfg.location_kernel, 2, cfg.location_filters}, 2 * cfg.location_kernel,
                                    cfg.location_filters, rng));
  ps.add("attn/loc_w", xavier({cfg.location_filters, a}, cfg.location_filters, a, rng));
  ps.add("attn/bias", Tensor({a}));
  ps.add("attn/v", xavier({a, 1}, a, 1, rng));

  int in = kMels;
  for (std::size_t i = 0; i < cfg.prenet_dims.size(); ++i) {
    const std::string n = "prenet/" + std::to_string(i);
    ps.add(n + "/w", xavier({in, cfg.prenet_dims[i]}, in, cfg.prenet_dims[i], rng));
    ps.add(n + "/b", Tensor({cfg.prenet_dims[i]}));
    in = cfg.prenet_dims[i];
  }
  add_gru(ps, "att_rnn", in + e, d, rng);
  add_gru(ps, "dec_rnn", d + e, d, rng);
  ps.add("proj/w", xavier({d + e, kMels}, d + e, kMels, rng));
  ps.add("proj/b", Tensor({kMels}));
  ps.add("stop/w", xavier({d + e, 1}, d + e, 1, rng));
  ps.add("stop/b", Tensor({1}, cfg.stop_bias_init));

  int pin = kMels;
  for (int l = 0; l < cfg.postnet.layers; ++l) {
    const int out = l + 1 == cfg.postnet.layers ? kMels : cfg.postnet.channels;
    const std::string n = "postnet/" + std::to_string(l);
    ps.add(n + "/k", xavier({cfg.postnet.kernel, pin, out}, cfg.postnet.kernel * pin, out, rng));
    ps.add(n + "/b", Tensor({out}));
    pin = out;
  }
  return m;
}

int SynthModel::memory_dim() const { return cfg_.encoder_dim + (cond_.speaker ? cfg_.speaker_dim : 0); }

void SynthModel::add_speaker() {
  if (cond_.speaker) throw InvalidArgument("model already has speaker conditioning");
  const int s = cfg_.speaker_dim;
  for (const char* n : {"attn/memory_w", "prenet/0/w", "att_rnn/wx", "dec_rnn/wx", "proj/w", "stop/w"}) {
    append_zero_rows(params_, n, s);
  }
  cond_.speaker = true;
}

void SynthModel::add_channel() {
  if (cond_.channel) throw InvalidArgument("model already has channel conditioning");
  for (int l = 0; l < cfg_.postnet.layers; ++l) {
    const int out = l + 1 == cfg_.postnet.layers ? kMels : cfg_.postnet.channels;
    params_.add("postnet/" + std::to_string(l) + "/channel_proj", Tensor({cfg_.n_channels, out}));
  }
  cond_.channel = true;
}

void SynthModel::add_dialect() {
  if (cond_.dialect) throw InvalidArgument("model already has dialect conditioning");
  params_.add("enc/dialect_proj", Tensor({cfg_.dialect_dim, cfg_.encoder_dim}));
  cond_.dialect = true;
}

json SynthModel::metadata() const {
  return {{"kind", "synth"}, {"config", cfg_.to_json()}, {"conditioning", cond_.to_json()}};
}

SynthModel SynthModel::from_archive(const json& metadata, nn::ParamStore params) {
  if (metadata.value("kind", "") != "synth") throw InvalidArgument("archive is not a synthesizer checkpoint");
  SynthModel ref = create(SynthConfig::from_json(metadata.at("config")), 0);
  const Conditioning cond = Conditioning::from_json(metadata.at("conditioning"));
  if (cond.speaker) ref.add_speaker();
  if (cond.channel) ref.add_channel();
  if (cond.dialect) ref.add_dialect();
  if (params.num_tensors() != ref.params_.num_tensors()) {
    throw InvalidArgument("synth checkpoint has " + std::to_string(params.num_tensors()) + " tensors, expected " +
                          std::to_string(ref.params_.num_tensors()));
  }
  for (const nn::Parameter* p : std::as_const(ref.params_).all()) {
    if (!params.contains(p->name)) throw InvalidArgument("synth checkpoint lacks tensor " + p->name);
    if (params.get(p->name).value.shape != p->value.shape) {
      throw InvalidArgument("synth checkpoint tensor " + p->name + " has shape " +
                            nn::shape_string(params.get(p->name).value.shape) + ", expected " +
                            nn::shape_string(p->value.shape));
    }
  }
  ref.params_ = std::move(params);
  return ref;
}

std::string SynthModel::save(const std::filesystem::path& path) const {
  return nn::save_archive(path, metadata(), params_);
}

SynthModel SynthModel::load(const std::filesystem::path& path) {
  nn::Archive a = nn::load_archive(path);
  return from_archive(a.metadata, std::move(a.params));
}

std::vector<int> token_ids(const SynthConfig& cfg, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  for (const auto& t : tokens) {
    auto it = std::find(cfg.token_vocab.begin(), cfg.token_vocab.end(), t);
    if (it == cfg.token_vocab.end()) throw InvalidArgument("unknown token \"" + t + "\"");
    ids.push_back(static_cast<int>(it - cfg.token_vocab.begin()));
  }
  return ids;
}

void check_one_hot(const std::vector<double>& channel, int n_channels) {
  if (static_cast<int>(channel.size()) != n_channels) {
    throw InvalidArgument("channel one-hot has " + std::to_string(channel.size()) + " entries, expected " +
                          std::to_string(n_channels));
  }
  int ones = 0;
  for (double v : channel) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw InvalidArgument("channel vector is not one-hot");
    }
  }
  if (ones != 1) throw InvalidArgument("channel vector must contain exactly one 1");
}

Var encode(Graph& g, SynthModel& m, const std::vector<int>& tokens, const std::vector<double>& dialect) {
  const SynthConfig& cfg = m.config();
  if (tokens.empty()) throw InvalidArgument("encode: empty token sequence");
  for (int t : tokens) {
    if (t < 0 || t >= static_cast<int>(cfg.token_vocab.size())) {
      throw InvalidArgument("encode: token id " + std::to_string(t) + " outside vocabulary of " +
                            std::to_string(cfg.token_vocab.size()));
    }
  }
  Ctx c{g, m.params()};
  const int n = static_cast<int>(tokens.size()), h = cfg.encoder_dim / 2;
  Var x = nn::gather_rows(c.p("enc/embedding"), tokens);
  for (int i = 0; i < cfg.encoder_convs; ++i) {
    const std::string p = "enc/conv" + std::to_string(i);
    x = nn::relu(nn::conv1d(x, c.p(p + "/k"), c.p(p + "/b")));
  }
  std::vector<Var> fwd(n), bwd(n);
  Var hf = g.constant(Tensor({1, h})), hb = hf;
  for (int t = 0; t < n; ++t) fwd[t] = hf = gru(c, "enc/fwd", nn::row(x, t), hf);
  for (int t = n - 1; t >= 0; --t) bwd[t] = hb = gru(c, "enc/bwd", nn::row(x, t), hb);
  Var states = nn::concat_cols({nn::stack_rows(fwd), nn::stack_rows(bwd)});
  if (m.conditioning().dialect && !dialect.empty()) {
    check_vector(dialect, cfg.dialect_dim, "dialect");
    Var shift = nn::matmul(row_constant(g, dialect), c.p("enc/dialect_proj"));
    states = nn::add(states, nn::broadcast_rows(shift, n));
  }
  return states;
}

DecoderOutputs decode_teacher_forced(Graph& g, SynthModel& m, Var enc_states, const std::vector<double>& speaker,
                                     const Matrix& target) {
  if (target.rows() == 0) throw InvalidArgument("decode: empty target mel");
  if (target.cols() != static_cast<std::size_t>(kMels)) throw InvalidArgument("decode: target must have 80 bands");
  Ctx c{g, m.params()};
  const Memory mem = build_memory(c, m, enc_states, speaker);
  const nn::AttentionParams ap = attention_params(c);
  DecoderState s = initial_state(g, m, enc_states.value().rows());
  const Tensor targets = to_tensor(target);
  std::vector<Var> frames, stops, weights;
  Var prev = g.constant(Tensor({1, kMels}));
  for (std::size_t t = 0; t < target.rows(); ++t) {
    if (t > 0) {
      prev = g.constant(Tensor({1, kMels}, std::vector<double>(targets.values.begin() + (t - 1) * kMels,
                                                               targets.values.begin() + t * kMels)));
    }
    StepOut o = decoder_step(c, m.config(), ap, mem.memory, mem.keys, prev, mem.spk, s);
    frames.push_back(o.frame);
    stops.push_back(o.stop);
    weights.push_back(o.weights);
  }
  return {nn::stack_rows(frames), nn::stack_rows(stops), nn::stack_rows(weights)};
}

Var postnet_refine(Graph& g, SynthModel& m, Var coarse, const std::vector<double>& channel) {
  const SynthConfig& cfg = m.config();
  const int T = coarse.value().rows();
  if (coarse.value().cols() != kMels) throw InvalidArgument("postnet: coarse mel must have 80 bands");
  Ctx c{g, m.params()};
  Var ch;
  if (m.conditioning().channel) {
    check_one_hot(channel, cfg.n_channels);
    ch = row_constant(g, channel);
  }
  Var x = coarse;
  for (int l = 0; l < cfg.postnet.layers; ++l) {
    const std::string n = "postnet/" + std::to_string(l);
    Var y = nn::conv1d(x, c.p(n + "/k"), c.p(n + "/b"));
    if (ch.valid()) y = nn::add(y, nn::broadcast_rows(nn::matmul(ch, c.p(n + "/channel_proj")), T));
    x = l + 1 < cfg.postnet.layers ? nn::tanh(y) : y;
  }
  return nn::add(coarse, x);
}

TeacherForced teacher_forced(Graph& g, SynthModel& m, const SynthExample& ex) {
  Var enc = encode(g, m, ex.tokens, ex.cond.dialect);
  DecoderOutputs d = decode_teacher_forced(g, m, enc, ex.cond.speaker, ex.mel);
  Var refined = postnet_refine(g, m, d.coarse, ex.cond.channel);
  Var target = g.constant(to_tensor(ex.mel));
  Tensor stop_target({static_cast<int>(ex.mel.rows()), 1});
  stop_target.values.back() = 1.0;
  Var l1c = nn::l1_loss(d.coarse, target);
  Var l1r = nn::l1_loss(refined, target);
  Var bce = nn::bce_with_logits(d.stop_logits, stop_target);
  TeacherForced out{nn::add(nn::add(l1c, l1r), bce), d.coarse, refined, d.stop_logits, d.attention};
  out.l1_coarse = l1c.value()[0];
  out.l1_refined = l1r.value()[0];
  out.stop_bce = bce.value()[0];
  return out;
}

double teacher_forced_loss(const SynthModel& m, const SynthExample& ex) {
  Graph g(false);
  return teacher_forced(g, mut(m), ex).loss.value()[0];
}

Matrix encode_states(const SynthModel& m, const std::vector<int>& tokens, const std::vector<double>& dialect) {
  Graph g(false);
  return to_matrix(encode(g, mut(m), tokens, dialect).value());
}

Matrix postnet_refine(const SynthModel& m, const Matrix& coarse, const std::vector<double>& channel) {
  if (coarse.rows() == 0) throw InvalidArgument("postnet: empty mel");
  Graph g(false);
  return to_matrix(postnet_refine(g, mut(m), g.constant(to_tensor(coarse)), channel).value());
}

TeacherForcedResult run_teacher_forced(const SynthModel& m, const SynthExample& ex) {
  Graph g(false);
  TeacherForced tf = teacher_forced(g, mut(m), ex);
  return {to_matrix(tf.coarse.value()), to_matrix(tf.refined.value()), tf.stop_logits.value().values,
          to_matrix(tf.attention.value()), tf.l1_refined, tf.loss.value()[0]};
}

SynthesisResult synthesize(const SynthModel& model, const std::vector<int>& tokens, const Conditioners& cond,
                           int max_frames) {
  if (max_frames < 1) throw InvalidArgument("synthesize: max_frames must be at least 1");
  SynthModel& m = mut(model);
  if (m.conditioning().channel) check_one_hot(cond.channel, m.config().n_channels);
  Graph g(false);
  Ctx c{g, m.params()};
  Var enc = encode(g, m, tokens, cond.dialect);
  const Memory mem = build_memory(c, m, enc, cond.speaker);
  const nn::AttentionParams ap = attention_params(c);
  DecoderState s = initial_state(g, m, enc.value().rows());
  std::vector<Var> frames, weights;
  Var prev = g.constant(Tensor({1, kMels}));
  SynthesisResult res;
  for (int t = 0; t < max_frames; ++t) {
    StepOut o = decoder_step(c, m.config(), ap, mem.memory, mem.keys, prev, mem.spk, s);
    frames.push_back(o.frame);
    weights.push_back(o.weights);
    prev = o.frame;
    if (o.stop.value()[0] > 0.0) {  // sigmoid > 0.5
      res.stop_frame = t + 1;
      break;
    }
  }
  Var coarse = nn::stack_rows(frames);
  res.coarse = to_matrix(coarse.value());
  res.mel = to_matrix(postnet_refine(g, m, coarse, cond.channel).value());
  res.attention = to_matrix(nn::stack_rows(weights).value());
  return res;
}

double attention_focus(const Matrix& attention) {
  if (attention.rows() == 0) return 0.0;
  double s = 0;
  for (std::size_t t = 0; t < attention.rows(); ++t) {
    const auto r = attention.row(t);
    s += *std::max_element(r.begin(), r.end());
  }
  return s / attention.rows();
}

}  // namespace speakaug::synth

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

#include "speakaug/verify/gradient_suite.h"

#include <algorithm>
#include <chrono>

#include "speakaug/common/rng.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/embed/lde.h"
#include "speakaug/nn/attention.h"
#include "speakaug/nn/grad_check.h"
#include "speakaug/nn/graph.h"
#include "speakaug/nn/ops.h"
#include "speakaug/synth/synth.h"

namespace speakaug::verify {

namespace {

using nn::Graph;
using nn::Parameter;
using nn::ParamStore;
using nn::Tensor;
using nn::Var;

Tensor random_tensor(nn::Shape shape, Rng& rng, double scale = 0.5) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = scale * rng.normal();
  return t;
}

// Weighted sum so every output coordinate reaches the loss.
Var probe(Graph& g, Var y, uint64_t seed) {
  Rng rng(seed);
  return nn::sum(nn::mul(y, g.constant(random_tensor(y.shape(), rng, 1.0))));
}

class Runner {
 public:
  Runner(uint64_t seed, const std::function<void(const GradCase&)>& progress) : rng_(seed), progress_(progress) {}

  void run(const std::string& name, ParamStore& ps, const nn::LossBuilder& build, double eps = 1e-5,
           double floor = 1e-8) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = nn::grad_check(build, ps.all(), eps, floor);
    GradCase c;
    c.name = name;
    c.max_rel_error = r.max_rel_error;
    c.worst = r.worst_param + "[" + std::to_string(r.worst_index) + "]";
    c.checked = r.checked;
    c.skipped = r.skipped;
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress_) progress_(c);
    suite.cases.push_back(std::move(c));
  }

  Parameter& add(ParamStore& ps, const std::string& name, nn::Shape shape, double scale = 0.5) {
    return ps.add(name, random_tensor(std::move(shape), rng_, scale));
  }

  Rng& rng() { return rng_; }
  GradSuite suite;

 private:
  Rng rng_;
  std::function<void(const GradCase&)> progress_;
};

void elementwise_ops(Runner& R) {
  ParamStore ps;
  auto& a = R.add(ps, "a", {3, 4});
  auto& b = R.add(ps, "b", {3, 4});
  auto& row = R.add(ps, "row", {4});
  R.run("add", ps, [&](Graph& g) { return probe(g, nn::add(g.param(a), g.param(b)), 1); });
  R.run("sub", ps, [&](Graph& g) { return probe(g, nn::sub(g.param(a), g.param(b)), 2); });
  R.run("mul", ps, [&](Graph& g) { return probe(g, nn::mul(g.param(a), g.param(b)), 3); });
  R.run("add_row", ps, [&](Graph& g) { return probe(g, nn::add_row(g.param(a), g.param(row)), 4); });
  R.run("scale", ps, [&](Graph& g) { return probe(g, nn::scale(g.param(a), -1.7), 5); });
  R.run("tanh", ps, [&](Graph& g) { return probe(g, nn::tanh(g.param(a)), 6); });
  R.run("sigmoid", ps, [&](Graph& g) { return probe(g, nn::sigmoid(g.param(a)), 7); });
  R.run("relu", ps, [&](Graph& g) { return probe(g, nn::relu(g.param(a)), 8); });
  R.run("softplus", ps, [&](Graph& g) { return probe(g, nn::softplus(g.param(a)), 9); });
  R.run("dropout", ps, [&](Graph& g) {
    Rng mask(77);  // same mask on every evaluation
    g.set_training(true, &mask);
    return probe(g, nn::dropout(g.param(a), 0.5), 10);
  });
  R.run("sum", ps, [&](Graph& g) { return nn::sum(nn::mul(g.param(a), g.param(b))); });
  R.run("mean", ps, [&](Graph& g) { return nn::mean(nn::mul(g.param(a), g.param(b))); });
  R.run("softmax_rows", ps, [&](Graph& g) { return probe(g, nn::softmax_rows(g.param(a)), 11); });
}

void matrix_ops(Runner& R) {
  ParamStore ps;
  auto& x = R.add(ps, "x", {3, 4});
  auto& w = R.add(ps, "w", {4, 5});
  auto& b = R.add(ps, "b", {5});
  R.run("matmul", ps, [&](Graph& g) { return probe(g, nn::matmul(g.param(x), g.param(w)), 12); });
  R.run("linear", ps, [&](Graph& g) { return probe(g, nn::linear(g.param(x), g.param(w), g.param(b)), 13); });

  ParamStore cs;
  auto& cx = R.add(cs, "x", {6, 3});
  auto& ck = R.add(cs, "k", {3, 3, 4});
  auto& cb = R.add(cs, "b", {4});
  R.run("conv1d", cs, [&](Graph& g) { return probe(g, nn::conv1d(g.param(cx), g.param(ck), g.param(cb)), 14); });

  ParamStore gs;
  auto& gx = R.add(gs, "x", {2, 3});
  auto& gh = R.add(gs, "h", {2, 4});
  auto& gwx = R.add(gs, "wx", {3, 12});
  auto& gwh = R.add(gs, "wh", {4, 12});
  auto& gbx = R.add(gs, "bx", {12});
  auto& gbh = R.add(gs, "bh", {12});
  R.run("gru_step", gs, [&](Graph& g) {
    return probe(g,
                 nn::gru_step(g.param(gx), g.param(gh), g.param(gwx), g.param(gwh), g.param(gbx), g.param(gbh)),
                 15);
  });
}

void shape_ops(Runner& R) {
  ParamStore ps;
  auto& a = R.add(ps, "a", {3, 4});
  auto& c = R.add(ps, "c", {3, 2});
  auto& r0 = R.add(ps, "r0", {1, 4});
  auto& table = R.add(ps, "table", {5, 4});
  R.run("concat_cols", ps, [&](Graph& g) { return probe(g, nn::concat_cols({g.param(a), g.param(c)}), 16); });
  R.run("slice_cols", ps, [&](Graph& g) { return probe(g, nn::slice_cols(g.param(a), 1, 2), 17); });
  R.run("row", ps, [&](Graph& g) { return probe(g, nn::row(g.param(a), 2), 18); });
  R.run("stack_rows", ps, [&](Graph& g) {
    return probe(g, nn::stack_rows({nn::row(g.param(a), 0), g.param(r0), nn::row(g.param(a), 0)}), 19);
  });
  R.run("broadcast_rows", ps, [&](Graph& g) { return probe(g, nn::broadcast_rows(g.param(r0), 3), 20); });
  R.run("reshape", ps, [&](Graph& g) { return probe(g, nn::reshape(g.param(a), {2, 6}), 21); });
  R.run("gather_rows", ps, [&](Graph& g) { return probe(g, nn::gather_rows(g.param(table), {4, 0, 4, 2}), 22); });
}

void losses(Runner& R) {
  ParamStore ps;
  auto& a = R.add(ps, "a", {3, 4});
  auto& b = R.add(ps, "b", {3, 4});
  R.run("l1_loss", ps, [&](Graph& g) { return nn::l1_loss(g.param(a), g.param(b)); });
  const Tensor targets({3, 4}, std::vector<double>{1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1});
  R.run("bce_with_logits", ps, [&](Graph& g) { return nn::bce_with_logits(g.param(a), targets); });
  R.run("cross_entropy", ps, [&](Graph& g) { return nn::cross_entropy(g.param(a), {3, 0, 2}); });
}

void attention(Runner& R) {
  const int T = 5, q = 3, A = 4, F = 2, k = 3;
  ParamStore ps;
  auto& query = R.add(ps, "query", {1, q});
  auto& keys = R.add(ps, "keys", {T, A});
  auto& qw = R.add(ps, "query_w", {q, A});
  auto& lf = R.add(ps, "loc_filters", {k, 2, F});
  auto& lw = R.add(ps, "loc_w", {F, A});
  auto& bias = R.add(ps, "bias", {A});
  auto& v = R.add(ps, "v", {A, 1});
  auto& prev_logits = R.add(ps, "prev", {1, T});
  auto& cum = R.add(ps, "cumulative", {1, T});
  R.run("attention_weights", ps, [&](Graph& g) {
    nn::AttentionParams p{g.param(qw), g.param(lf), g.param(lw), g.param(bias), g.param(v)};
    Var prev = nn::softmax_rows(g.param(prev_logits));
    return probe(g, nn::attention_weights(p, g.param(query), g.param(keys), prev, g.param(cum)), 23);
  });
}

void pooling(Runner& R) {
  for (auto pool : {embed::Pooling::kMean, embed::Pooling::kMeanStd}) {
    ParamStore ps;
    auto& x = R.add(ps, "x", {7, 3}, 1.0);
    auto& mu = R.add(ps, "mu", {2, 3}, 1.0);
    auto& rho = R.add(ps, "rho", {2}, 0.3);
    R.run(pool == embed::Pooling::kMean ? "lde_pool(m)" : "lde_pool(m,s)", ps, [&](Graph& g) {
      return probe(g, embed::lde_pool(g.param(x), g.param(mu), nn::softplus(g.param(rho)), pool), 24);
    });
  }
  ParamStore ps;
  auto& x = R.add(ps, "x", {3, 4}, 1.0);
  auto& w = R.add(ps, "w", {4, 3}, 1.0);
  R.run("angular_margin_logits", ps,
        [&](Graph& g) { return probe(g, embed::angular_margin_logits(g.param(x), g.param(w), {0, 2, 1}, 5.0), 25); });
}

void full_synthesizer(Runner& R) {
  synth::SynthConfig c;
  c.token_vocab = {"a", "b", "c", "d", "e"};
  c.encoder_dim = 8;
  c.decoder_dim = 12;
  c.prenet_dims = {8, 8};
  c.postnet = {3, 5, 8};
  c.n_channels = 5;
  c.speaker_dim = 4;
  c.dialect_dim = 3;
  c.attention_dim = 8;
  c.location_filters = 4;
  c.location_kernel = 5;
  synth::SynthModel m = synth::SynthModel::create(c, 12);
  m.add_speaker();
  m.add_channel();
  m.add_dialect();
  // Trained-looking values on the zero-initialized conditioning paths.
  for (Parameter* p : m.params().all())
    if (p->name.find("channel_proj") != std::string::npos || p->name == "enc/dialect_proj")
      for (auto& v : p->value.values) v = 0.3 * R.rng().normal();
  synth::SynthExample ex;
  ex.tokens = {0, 1, 2};
  ex.mel = Matrix(6, dsp::kNumMels);
  for (auto& v : ex.mel.data()) v = R.rng().uniform(0.0, 1.0);
  for (int i = 0; i < c.speaker_dim; ++i) ex.cond.speaker.push_back(R.rng().normal());
  for (int i = 0; i < c.dialect_dim; ++i) ex.cond.dialect.push_back(R.rng().normal());
  ex.cond.channel.assign(c.n_channels, 0.0);
  ex.cond.channel[2] = 1.0;
  R.run("synthesizer (3 tokens, 6 frames)", m.params(),
        [&](Graph& g) { return synth::teacher_forced(g, m, ex).loss; }, 1e-4, 1e-6);
}

}  // namespace

double GradSuite::max_rel_error() const {
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, c.max_rel_error);
  return worst;
}

const GradCase* GradSuite::worst() const {
  const GradCase* w = nullptr;
  for (const auto& c : cases)
    if (!w || c.max_rel_error > w->max_rel_error) w = &c;
  return w;
}

GradSuite run_gradient_suite(uint64_t seed, const std::function<void(const GradCase&)>& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  Runner R(seed, progress);
  elementwise_ops(R);
  matrix_ops(R);
  shape_ops(R);
  losses(R);
  attention(R);
  pooling(R);
  full_synthesizer(R);
  R.suite.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return std::move(R.suite);
}

}  // namespace speakaug::verify

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

#include "speakaug/corpus/toy.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "speakaug/common/error.h"
#include "speakaug/common/hash.h"
#include "speakaug/common/rng.h"
#include "speakaug/dsp/fft.h"

namespace speakaug::corpus {
namespace {

constexpr int kHop = 200;
constexpr double kPi = std::numbers::pi;
constexpr std::array<double, 3> kFormantGain{1.0, 0.7, 0.45};
constexpr std::array<double, 3> kBandwidth{90.0, 120.0, 180.0};
constexpr double kEnvelopeFloor = 0.03;
constexpr double kLevel = 0.06;

struct Template {
  std::array<ToyFrame, kToyFramesPerToken> frames;
};

Template token_template(int token) {
  Rng rng(fnv1a64("toy-token") + static_cast<uint64_t>(token) * 7919);
  const double f1a = rng.uniform(300, 750), f2a = rng.uniform(900, 2200), f3a = rng.uniform(2400, 3100);
  const double d1 = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(150, 300);
  const double d2 = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(350, 700);
  const double d3 = rng.uniform(-200, 200);
  const double peak = rng.uniform(0.0, 1.0);
  Template t;
  for (int j = 0; j < kToyFramesPerToken; ++j) {
    const double u = j / double(kToyFramesPerToken - 1);
    ToyFrame& f = t.frames[j];
    f.formants = {std::max(200.0, f1a + d1 * u), f2a + d2 * u, f3a + d3 * u};
    f.amplitude = 0.55 + 0.45 * std::exp(-8.0 * (u - peak) * (u - peak));
  }
  return t;
}

int token_index(const std::string& tok) {
  const auto& v = toy_vocab();
  auto it = std::find(v.begin(), v.end(), tok);
  if (it == v.end()) throw InvalidArgument("token \"" + tok + "\" is not in the toy vocabulary");
  return static_cast<int>(it - v.begin());
}

double envelope(double f, const std::array<double, 3>& formants) {
  double e = kEnvelopeFloor;
  for (int i = 0; i < 3; ++i) {
    const double x = (f - formants[i]) / kBandwidth[i];
    e += kFormantGain[i] / (1.0 + x * x);
  }
  return e;
}

void apply_tilt(std::vector<double>& x, double db_per_khz) {
  if (db_per_khz == 0.0) return;
  std::size_t n = 1;
  while (n < 2 * x.size()) n <<= 1;
  dsp::FftPlan plan(n);
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  plan.forward(buf);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kk = k <= n / 2 ? k : n - k;
    const double khz = kk * double(dsp::kCanonicalRate) / n / 1000.0;
    buf[k] *= std::pow(10.0, db_per_khz * khz / 20.0);
  }
  plan.inverse(buf);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = buf[i].real();
}

}  // namespace

const std::vector<std::string>& toy_vocab() {
  static const std::vector<std::string> v{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  return v;
}

std::vector<std::string> toy_corpus_names(int n_channels) {
  static const std::vector<std::string> names{"VCTK", "GRID", "WSJ1", "WSJCAM", "TIMIT"};
  std::vector<std::string> out;
  for (int c = 0; c < n_channels; ++c)
    out.push_back(c < static_cast<int>(names.size()) ? names[c] : "CH" + std::to_string(c));
  return out;
}

std::vector<std::string> toy_dialect_names(int n_dialects) {
  static const std::vector<std::string> names{"American", "English", "Scottish",
                                              "Irish", "Canadian", "NorthernIrish"};
  std::vector<std::string> out;
  for (int d = 0; d < n_dialects; ++d)
    out.push_back(d < static_cast<int>(names.size()) ? names[d] : "D" + std::to_string(d));
  return out;
}

std::vector<ToySpeaker> toy_speakers(const ToyConfig& cfg) {
  Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 17);
  std::vector<ToySpeaker> out;
  for (int s = 0; s < cfg.n_speakers; ++s) {
    ToySpeaker sp;
    char id[16];
    std::snprintf(id, sizeof id, "toy%02d", s);
    sp.id = id;
    // Evenly spread scales, jittered per seed.
    const double base = cfg.n_speakers == 1 ? 0.5 : s / double(cfg.n_speakers - 1);
    sp.freq_scale = 0.85 + 0.35 * base + rng.uniform(-0.02, 0.02);
    sp.f0 = 110.0 * sp.freq_scale;
    sp.dialect = s % cfg.n_dialects;
    sp.channel = (s / cfg.n_dialects) % cfg.n_channels;
    sp.gender = sp.freq_scale >= 1.0 ? "F" : "M";
    out.push_back(sp);
  }
  return out;
}

std::vector<std::string> toy_texts(const ToyConfig& cfg) {
  Rng rng(cfg.seed * 0x2545f4914f6cdd1dULL + 3);
  const auto& vocab = toy_vocab();
  std::vector<std::string> out;
  for (int u = 0; u < cfg.utts_per_speaker; ++u) {
    const int n = cfg.min_tokens + static_cast<int>(rng.below(cfg.max_tokens - cfg.min_tokens + 1));
    std::string text;
    for (int i = 0; i < n; ++i) text += vocab[rng.below(vocab.size())];
    out.push_back(text);
  }
  return out;
}

double toy_channel_tilt_db_per_khz(int channel) { return -2.0 * channel; }
double toy_channel_noise_rms(int channel) { return 1e-4 * channel; }

std::array<int, kToyFramesPerToken> toy_dialect_order(int token, int dialect) {
  std::array<int, kToyFramesPerToken> order{0, 1, 2, 3, 4};
  if (dialect == 0 || (token + dialect) % 2 == 0) return order;
  switch (dialect) {
    case 1: return {4, 3, 2, 1, 0};
    case 2: return {2, 3, 4, 0, 1};
    case 3: return {1, 0, 3, 2, 4};
    case 4: return {0, 2, 4, 1, 3};
    case 5: return {3, 4, 0, 1, 2};
    default: {
      Rng rng(1000 + dialect);
      do rng.shuffle(order.begin(), order.end());
      while (order == std::array<int, kToyFramesPerToken>{0, 1, 2, 3, 4});
      return order;
    }
  }
}

std::vector<ToyFrame> toy_frames(const std::vector<std::string>& tokens, int dialect) {
  if (tokens.empty()) throw InvalidArgument("toy utterance needs at least one token");
  std::vector<ToyFrame> frames;
  for (const auto& tok : tokens) {
    const int k = token_index(tok);
    const Template t = token_template(k);
    for (int j : toy_dialect_order(k, dialect)) frames.push_back(t.frames[j]);
  }
  ToyFrame head = frames.front(), tail = frames.back();
  head.amplitude = tail.amplitude = 0.0;
  frames.insert(frames.begin(), kToyEdgeFrames, head);
  frames.insert(frames.end(), kToyEdgeFrames, tail);
  return frames;
}

dsp::Waveform render_toy_utterance(const std::vector<std::string>& tokens, const ToySpeaker& speaker,
                                   int dialect, int channel, uint64_t noise_seed) {
  const auto frames = toy_frames(tokens, dialect);
  const std::size_t n = (frames.size() - 1) * kHop;
  dsp::Waveform w;
  w.samples.assign(n, 0.0);
  const double nyquist_guard = 7800.0;
  const int harmonics = static_cast<int>(nyquist_guard / speaker.f0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = i / kHop;
    const double u = (i % kHop) / double(kHop);
    const ToyFrame& a = frames[f];
    const ToyFrame& b = frames[std::min(f + 1, frames.size() - 1)];
    const double amp = a.amplitude + (b.amplitude - a.amplitude) * u;
    phase += 2 * kPi * speaker.f0 / dsp::kCanonicalRate;
    if (phase > 2 * kPi) phase -= 2 * kPi;
    if (amp == 0.0) continue;
    std::array<double, 3> formants;
    for (int k = 0; k < 3; ++k)
      formants[k] = speaker.freq_scale * (a.formants[k] + (b.formants[k] - a.formants[k]) * u);
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) s += envelope(h * speaker.f0, formants) * std::sin(h * phase);
    w.samples[i] = kLevel * amp * s;
  }
  apply_tilt(w.samples, toy_channel_tilt_db_per_khz(channel));
  const double sigma = toy_channel_noise_rms(channel);
  if (sigma > 0) {
    Rng rng(noise_seed);
    for (auto& x : w.samples) x += sigma * rng.normal();
  }
  for (auto& x : w.samples) x = std::clamp(x, -0.99, 0.99);
  return w;
}

Manifest make_toy_corpus(const ToyConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.n_speakers < 1 || cfg.n_dialects < 1 || cfg.n_channels < 1 || cfg.utts_per_speaker < 1) {
    throw InvalidArgument("toy corpus counts must all be at least 1");
  }
  if (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens) {
    throw InvalidArgument("toy corpus token range must satisfy 1 <= min <= max");
  }
  Manifest m;
  m.corpus_list = toy_corpus_names(cfg.n_channels);
  m.dialect_list = toy_dialect_names(cfg.n_dialects);
  const auto speakers = toy_speakers(cfg);
  const auto texts = toy_texts(cfg);
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const auto& sp = speakers[s];
    Split split = Split::kTrain;
    if (cfg.n_speakers >= 8 && s + 2 == speakers.size()) split = Split::kDev;
    if (cfg.n_speakers >= 8 && s + 1 == speakers.size()) split = Split::kTest;
    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      UtteranceRecord r;
      char utt[32];
      std::snprintf(utt, sizeof utt, "%s_%03d", sp.id.c_str(), u);
      r.utt_id = utt;
      r.speaker_id = sp.id;
      r.corpus_id = m.corpus_list[sp.channel];
      r.dialect = m.dialect_list[sp.dialect];
      r.split = split;
      r.text = texts[u];
      r.token_kind = TokenKind::kChar;
      r.audio_path = "wav/" + sp.id + "/" + r.utt_id + ".wav";
      r.sample_rate = dsp::kCanonicalRate;
      r.gender = sp.gender;
      const auto wave = render_toy_utterance(tokenize(r.text, r.token_kind), sp, sp.dialect,
                                             sp.channel, cfg.seed ^ fnv1a64(r.utt_id));
      dsp::write_wav(out_dir / r.audio_path, wave);
      m.records.push_back(std::move(r));
    }
  }
  save_manifest(out_dir / "manifest.jsonl", m);
  return m;
}

}  // namespace speakaug::corpus

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

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/corpus/augment.h"
#include "speakaug/corpus/features.h"
#include "speakaug/corpus/manifest.h"
#include "speakaug/corpus/toy.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/dsp/waveform.h"

namespace speakaug::corpus {
namespace {

namespace fs = std::filesystem;

const fs::path kData = fs::path(SPEAKAUG_SOURCE_DIR) / "data" / "manifests";

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("speakaug_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string header() {
  return R"({"manifest_version":1,"corpus_list":["VCTK","GRID","WSJ1","WSJCAM","TIMIT"],"dialect_list":["American","English"]})"
         "\n";
}

std::string record(const std::string& utt, const std::string& spk, const std::string& corpus = "VCTK",
                   const std::string& split = "train", const std::string& dialect = "English") {
  return R"({"utt_id":")" + utt + R"(","speaker_id":")" + spk + R"(","corpus_id":")" + corpus +
         R"(","dialect":")" + dialect + R"(","split":")" + split +
         R"(","text":"Hello, world!","token_kind":"char","audio_path":"a.wav","sample_rate":16000})" "\n";
}

std::vector<std::string> offenders(const std::string& text) {
  try {
    parse_manifest(text, "m.jsonl");
  } catch (const ValidationError& e) {
    return e.offenders();
  }
  return {};
}

TEST(Manifest, WellFormedTenRecords) {
  std::string text = header();
  for (int i = 0; i < 10; ++i) text += record("u" + std::to_string(i), "s" + std::to_string(i % 3));
  Manifest m = parse_manifest(text);
  EXPECT_EQ(m.records.size(), 10u);
  EXPECT_EQ(m.speakers().size(), 3u);
  EXPECT_EQ(m.corpus_list.front(), "VCTK");
}

TEST(Manifest, UnknownCorpusNamed) {
  auto errs = offenders(header() + record("u1", "s1") + record("u2", "s1", "XYZ"));
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("\"XYZ\""), std::string::npos);
  EXPECT_NE(errs[0].find("line 3"), std::string::npos);
}

TEST(Manifest, SpeakerInTwoSplits) {
  auto errs = offenders(header() + record("u1", "s1") + record("u2", "s1", "VCTK", "dev"));
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("s1"), std::string::npos);
}

TEST(Manifest, AllOffendersListed) {
  auto errs = offenders(header() + record("u1", "s1") + record("u1", "s2") +
                        record("u3", "s3", "VCTK", "train", "Klingon") + "{not json\n");
  EXPECT_EQ(errs.size(), 1u);  // parse errors stop before record checks
  errs = offenders(header() + record("u1", "s1") + record("u1", "s2") +
                   record("u3", "s3", "VCTK", "train", "Klingon"));
  EXPECT_EQ(errs.size(), 2u);
}

TEST(Manifest, SaveLoadRoundTrip) {
  Manifest m = parse_manifest(header() + record("u1", "s1") + record("u2", "s2", "TIMIT", "dev"));
  const auto dir = temp_dir("roundtrip");
  save_manifest(dir / "m.jsonl", m);
  Manifest back = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(manifest_to_jsonl(back), manifest_to_jsonl(m));
  EXPECT_EQ(back.records[1].split, Split::kDev);
}

TEST(Manifest, MissingFileIsInvalidArgument) {
  EXPECT_THROW(load_manifest("/nonexistent/m.jsonl"), InvalidArgument);
}

TEST(Text, NormalizeAndTokenize) {
  EXPECT_EQ(normalize_text("  Hello,   World! It's"), "hello world it's");
  EXPECT_EQ(tokenize("Hi, Bo", TokenKind::kChar), (std::vector<std::string>{"h", "i", "_", "b", "o"}));
  EXPECT_EQ(tokenize("HH AY1  B", TokenKind::kPhone), (std::vector<std::string>{"HH", "AY1", "B"}));
}

TEST(Manifest, BundledFollowTableOneSplits) {
  Manifest v = load_manifest(kData / "vctk.jsonl");
  EXPECT_EQ(v.speakers(Split::kTrain).size(), 100u);
  EXPECT_EQ(v.speakers(Split::kDev).size(), 4u);
  EXPECT_EQ(v.speakers(Split::kTest).size(), 4u);
  Manifest c = load_manifest(kData / "vctk_5c.jsonl");
  EXPECT_EQ(c.speakers(Split::kTrain).size(), 300u);
  EXPECT_EQ(c.speakers(Split::kDev).size(), 12u);
  EXPECT_EQ(c.speakers(Split::kTest).size(), 4u);
  EXPECT_EQ(c.corpus_list, (std::vector<std::string>{"VCTK", "GRID", "WSJ1", "WSJCAM", "TIMIT"}));
}

TEST(Vtlp, HundredSpeakersBecomeThreeHundred) {
  Manifest v = load_manifest(kData / "vctk.jsonl");
  Manifest a = vtlp_augment(v, {0.9, 1.1});
  EXPECT_EQ(a.speakers(Split::kTrain).size(), 300u);
  EXPECT_EQ(a.records.size(), v.records.size() * 3);
  for (std::size_t i = 0; i < v.records.size(); ++i) EXPECT_EQ(a.records[i].utt_id, v.records[i].utt_id);
  validate_manifest(a);
}

TEST(Vtlp, TableOneSplitRestriction) {
  Manifest v = load_manifest(kData / "vctk.jsonl");
  Manifest a = vtlp_augment(v, {0.9, 1.1}, nullptr, {Split::kTrain, Split::kDev});
  EXPECT_EQ(a.speakers(Split::kTrain).size(), 300u);
  EXPECT_EQ(a.speakers(Split::kDev).size(), 12u);
  EXPECT_EQ(a.speakers(Split::kTest).size(), 4u);
}

TEST(Vtlp, PerSpeakerCopy) {
  Manifest v = load_manifest(kData / "vctk.jsonl");
  Manifest a = vtlp_augment(v, {0.9});
  std::map<std::string, int> counts;
  for (const auto& r : a.records) ++counts[r.speaker_id];
  EXPECT_EQ(counts.at("vctk_p225_x0.9"), counts.at("vctk_p225"));
  for (const auto& r : a.records) {
    if (r.speaker_id != "vctk_p225_x0.9") continue;
    EXPECT_EQ(r.dialect, v.records[0].dialect);
    EXPECT_EQ(r.corpus_id, "VCTK");
    EXPECT_EQ(r.split, Split::kTrain);
  }
}

TEST(Vtlp, RejectsBadFactors) {
  Manifest v = parse_manifest(header() + record("u1", "s1"));
  EXPECT_THROW(vtlp_augment(v, {}), InvalidArgument);
  EXPECT_THROW(vtlp_augment(v, {2.5}), InvalidArgument);
  EXPECT_THROW(vtlp_augment(v, {0.9, 0.9}), InvalidArgument);
  Manifest clash = parse_manifest(header() + record("u1", "s1") + record("u2", "s1_x0.9"));
  EXPECT_THROW(vtlp_augment(clash, {0.9}), InvalidArgument);
}

TEST(Vtlp, RendersResampledAudio) {
  const auto dir = temp_dir("vtlp");
  ToyConfig cfg;
  cfg.n_speakers = 1;
  cfg.utts_per_speaker = 2;
  Manifest m = make_toy_corpus(cfg, dir / "src");
  VtlpAudio audio{dir / "src", dir / "aug", true};
  Manifest a = vtlp_augment(m, {0.9, 1.1}, &audio);
  ASSERT_EQ(a.records.size(), 6u);
  for (std::size_t i = 2; i < 6; ++i) {
    const auto& r = a.records[i];
    const double f = i < 4 ? 0.9 : 1.1;
    const auto orig = dsp::read_wav(dir / "src" / m.records[i % 2].audio_path);
    const auto w = dsp::read_wav(r.audio_path);
    EXPECT_NEAR(static_cast<double>(w.size()), std::round(orig.size() / f), 2.0) << r.utt_id;
  }
  EXPECT_NE(a.records[2].audio_path.find("x0.9"), std::string::npos);
}

TEST(ChannelOnehot, Examples) {
  const std::vector<std::string> corpora{"VCTK", "GRID", "WSJ1", "WSJCAM", "TIMIT"};
  EXPECT_EQ(channel_onehot("VCTK", corpora), (std::vector<double>{1, 0, 0, 0, 0}));
  EXPECT_EQ(channel_onehot("TIMIT", corpora), (std::vector<double>{0, 0, 0, 0, 1}));
  EXPECT_THROW(channel_onehot("LibriTTS", corpora), InvalidArgument);
}

TEST(ChannelOnehot, SumsToCorpusCounts) {
  Manifest c = load_manifest(kData / "vctk_5c.jsonl");
  std::vector<double> total(c.corpus_list.size(), 0.0);
  std::map<std::string, double> counts;
  for (const auto& r : c.records) {
    auto v = channel_onehot(r.corpus_id, c.corpus_list);
    for (std::size_t i = 0; i < v.size(); ++i) total[i] += v[i];
    counts[r.corpus_id] += 1;
  }
  for (std::size_t i = 0; i < total.size(); ++i) EXPECT_EQ(total[i], counts[c.corpus_list[i]]);
}

Manifest dialect_manifest(const std::vector<int>& sizes) {
  Manifest m;
  m.corpus_list = {"VCTK"};
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    m.dialect_list.push_back("d" + std::to_string(d));
    for (int i = 0; i < sizes[d]; ++i) {
      UtteranceRecord r;
      r.utt_id = "d" + std::to_string(d) + "_" + std::to_string(i);
      r.speaker_id = "spk" + std::to_string(d) + "_" + std::to_string(i % 3);
      r.corpus_id = "VCTK";
      r.dialect = m.dialect_list.back();
      m.records.push_back(r);
    }
  }
  return m;
}

std::vector<int> class_counts(const Manifest& m, const std::vector<std::vector<std::size_t>>& batches,
                              std::size_t from, std::size_t n) {
  std::vector<int> counts(m.dialect_list.size(), 0);
  for (std::size_t b = from; b < from + n; ++b)
    for (auto i : batches[b]) ++counts[m.dialect_index(m.records[i].dialect)];
  return counts;
}

TEST(Balanced, MinorityResampled) {
  Manifest m = dialect_manifest({100, 10});
  auto batches = balanced_batches(m, BalanceKey::kDialect, 10, 3, 40);
  for (std::size_t b = 0; b + 1 < batches.size(); ++b) {
    auto c = class_counts(m, batches, b, 2);
    EXPECT_EQ(c[0], 10);
    EXPECT_EQ(c[1], 10);
  }
}

TEST(Balanced, SeedDeterminism) {
  Manifest m = dialect_manifest({30, 7, 12});
  EXPECT_EQ(balanced_batches(m, BalanceKey::kDialect, 8, 7, 25),
            balanced_batches(m, BalanceKey::kDialect, 8, 7, 25));
  EXPECT_NE(balanced_batches(m, BalanceKey::kDialect, 8, 7, 25),
            balanced_batches(m, BalanceKey::kDialect, 8, 8, 25));
}

TEST(Balanced, SixClassesAnyWindow) {
  Manifest m = dialect_manifest({50, 3, 20, 9, 31, 1});
  for (int bs : {1, 4, 7, 16}) {
    auto batches = balanced_batches(m, BalanceKey::kDialect, bs, 11, 60);
    for (std::size_t b = 0; b + 6 <= batches.size(); ++b) {
      auto c = class_counts(m, batches, b, 6);
      EXPECT_LE(*std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end()), bs);
    }
  }
}

TEST(Balanced, EpochHistogramNearUniform) {
  Manifest m = dialect_manifest({57, 13, 29, 8});
  BalancedBatcher batcher(m, BalanceKey::kDialect, 6, 5);
  std::vector<int> counts(4, 0);
  int total = 0;
  for (std::size_t b = 0; b < batcher.batches_per_epoch(); ++b)
    for (auto i : batcher.next()) {
      ++counts[batcher.class_of(i)];
      ++total;
    }
  for (int c : counts) EXPECT_LT(std::abs(c - total / 4.0) / (total / 4.0), 0.05);
}

TEST(Balanced, EmptyClassNamed) {
  Manifest m = dialect_manifest({5, 5});
  m.dialect_list.push_back("Scottish");
  try {
    BalancedBatcher b(m, BalanceKey::kDialect, 4, 1);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("Scottish"), std::string::npos);
  }
}

TEST(Balanced, SpeakerKey) {
  Manifest m = dialect_manifest({12, 6});
  BalancedBatcher b(m, BalanceKey::kSpeaker, 6, 2);
  EXPECT_EQ(b.num_classes(), 6);
  std::map<std::string, int> counts;
  for (int k = 0; k < 6; ++k)
    for (auto i : b.next()) ++counts[m.records[i].speaker_id];
  for (auto& [spk, c] : counts) EXPECT_EQ(c, 6) << spk;
}

TEST(Toy, CardinalityAndReload) {
  const auto dir = temp_dir("toy");
  ToyConfig cfg;
  cfg.utts_per_speaker = 20;
  Manifest m = make_toy_corpus(cfg, dir);
  EXPECT_EQ(m.records.size(), 80u);
  Manifest back = load_manifest(dir / "manifest.jsonl");
  EXPECT_EQ(back.records.size(), 80u);
  for (const auto& r : back.records) {
    const auto w = dsp::read_wav(resolve_audio(dir, r));
    EXPECT_EQ(w.sample_rate, 16000);
    const auto mel = load_record_mel(dir, r);
    EXPECT_EQ(mel.num_frames(),
              static_cast<std::size_t>(2 * kToyEdgeFrames +
                                       kToyFramesPerToken * tokenize(r.text, r.token_kind).size()));
  }
  std::set<std::pair<std::string, std::string>> combos;
  for (const auto& r : m.records) combos.insert({r.dialect, r.corpus_id});
  EXPECT_EQ(combos.size(), 4u);
}

TEST(Toy, SameSeedBitIdentical) {
  const auto a = temp_dir("toy_a"), b = temp_dir("toy_b");
  ToyConfig cfg;
  cfg.utts_per_speaker = 3;
  Manifest ma = make_toy_corpus(cfg, a);
  make_toy_corpus(cfg, b);
  for (const auto& r : ma.records) EXPECT_EQ(read_file(a / r.audio_path), read_file(b / r.audio_path));
  cfg.seed = 2;
  const auto c = temp_dir("toy_c");
  Manifest mc = make_toy_corpus(cfg, c);
  EXPECT_NE(read_file(c / mc.records[0].audio_path), read_file(a / ma.records[0].audio_path));
}

// Independent tilt measurement: dB spectrum averaged over voiced frames,
// slope against band centers recomputed from the mel formula.
double oracle_tilt(const Matrix& log_mel, const std::vector<bool>& voiced) {
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int m = 0; m < 80; ++m) {
    const double hz = 700.0 * (std::pow(10.0, top * (m + 1) / 81.0 / 2595.0) - 1.0);
    if (hz < 250 || hz > 7000) continue;
    double y = 0;
    int used = 0;
    for (std::size_t t = 0; t < log_mel.rows(); ++t)
      if (voiced[t]) {
        y += 20.0 * std::log10(std::exp(log_mel(t, m)));
        ++used;
      }
    y /= used;
    const double x = hz / 1000.0;
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TEST(Toy, ChannelTiltDifferenceMatchesConfiguration) {
  ToyConfig cfg;
  const auto speakers = toy_speakers(cfg);
  const auto texts = toy_texts(cfg);
  const double expected = toy_channel_tilt_db_per_khz(1) - toy_channel_tilt_db_per_khz(0);
  ASSERT_NE(expected, 0.0);
  for (int u = 0; u < 5; ++u) {
    const auto tokens = tokenize(texts[u], TokenKind::kChar);
    const auto m0 = dsp::mel_spectrogram(render_toy_utterance(tokens, speakers[0], 0, 0, 9)).frames;
    const auto m1 = dsp::mel_spectrogram(render_toy_utterance(tokens, speakers[0], 0, 1, 9)).frames;
    // Voiced frames: the token frames, excluding two on each side.
    std::vector<bool> voiced(m0.rows(), false);
    for (std::size_t t = kToyEdgeFrames + 1; t + kToyEdgeFrames + 1 < m0.rows(); ++t) voiced[t] = true;
    const double diff = oracle_tilt(m1, voiced) - oracle_tilt(m0, voiced);
    EXPECT_NEAR(diff, expected, 0.1 * std::abs(expected)) << texts[u];
    const double lib = dsp::spectral_tilt_db_per_khz(m1) - dsp::spectral_tilt_db_per_khz(m0);
    EXPECT_NEAR(lib, expected, 0.1 * std::abs(expected)) << texts[u];
  }
}

TEST(Toy, DialectPermutesASubsetOfTokens) {
  int changed = 0;
  for (int k = 0; k < static_cast<int>(toy_vocab().size()); ++k) {
    auto order = toy_dialect_order(k, 1);
    EXPECT_EQ(toy_dialect_order(k, 0), (std::array<int, 5>{0, 1, 2, 3, 4}));
    std::array<int, 5> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::array<int, 5>{0, 1, 2, 3, 4}));
    changed += order != std::array<int, 5>{0, 1, 2, 3, 4};
  }
  EXPECT_GT(changed, 0);
  EXPECT_LT(changed, static_cast<int>(toy_vocab().size()));
}

TEST(Toy, SpeakersDifferInFrequencyScale) {
  ToyConfig cfg;
  cfg.n_speakers = 8;
  auto sp = toy_speakers(cfg);
  for (std::size_t i = 1; i < sp.size(); ++i) EXPECT_GT(sp[i].freq_scale, sp[i - 1].freq_scale);
  Manifest m;
  const auto dir = temp_dir("toy8");
  cfg.utts_per_speaker = 1;
  m = make_toy_corpus(cfg, dir);
  EXPECT_EQ(m.speakers(Split::kDev).size(), 1u);
  EXPECT_EQ(m.speakers(Split::kTest).size(), 1u);
}

TEST(Filter, SelectsByCorpusSpeakerSplitGender) {
  Manifest c = load_manifest(kData / "vctk_5c.jsonl");
  RecordFilter f;
  f.corpora = {"GRID"};
  f.splits = {Split::kTrain};
  EXPECT_EQ(filter_manifest(c, f).speakers().size(), 15u);
  f.gender = "F";
  for (const auto& r : filter_manifest(c, f).records) EXPECT_EQ(r.gender, "F");
}

}  // namespace
}  // namespace speakaug::corpus

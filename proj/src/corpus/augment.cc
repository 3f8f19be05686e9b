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

#include "speakaug/corpus/augment.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "speakaug/common/error.h"
#include "speakaug/dsp/resample.h"
#include "speakaug/dsp/waveform.h"

namespace speakaug::corpus {

std::string format_factor(double factor) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", factor);
  return buf;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || root.empty() ? path : root / path;
}

std::filesystem::path mirrored(const VtlpAudio& audio, const std::string& tag,
                               const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute()) path = path.filename();
  return audio.output_root / ("x" + tag) / path;
}

}  // namespace

Manifest vtlp_augment(const Manifest& m, const std::vector<double>& factors,
                      const VtlpAudio* audio, const std::vector<Split>& splits) {
  auto selected = [&](Split s) {
    return splits.empty() || std::find(splits.begin(), splits.end(), s) != splits.end();
  };
  if (factors.empty()) throw InvalidArgument("vtlp_augment: no factors given");
  for (double f : factors) {
    if (!(f >= dsp::kMinSpeedFactor && f <= dsp::kMaxSpeedFactor)) {
      throw InvalidArgument("vtlp factor " + format_factor(f) + " outside [0.5, 2]");
    }
  }
  std::set<std::string> speakers, utts;
  for (const auto& r : m.records) {
    speakers.insert(r.speaker_id);
    utts.insert(r.utt_id);
  }
  std::set<std::string> tags;
  for (double f : factors) {
    if (!tags.insert(format_factor(f)).second) {
      throw InvalidArgument("vtlp factors collide on id suffix _x" + format_factor(f));
    }
  }
  const std::vector<std::string> originals = m.speakers();
  for (const auto& tag : tags) {
    for (const auto& s : originals) {
      const std::string id = s + "_x" + tag;
      if (speakers.count(id)) throw InvalidArgument("augmented speaker id \"" + id + "\" already exists");
    }
  }

  Manifest out = m;
  for (double f : factors) {
    const std::string tag = format_factor(f);
    for (const auto& r : m.records) {
      if (!selected(r.split)) continue;
      UtteranceRecord a = r;
      a.speaker_id = r.speaker_id + "_x" + tag;
      a.utt_id = r.utt_id + "_x" + tag;
      if (utts.count(a.utt_id)) throw InvalidArgument("augmented utterance id \"" + a.utt_id + "\" already exists");
      a.sample_rate = dsp::kCanonicalRate;
      if (audio) {
        const auto dst = mirrored(*audio, tag, r.audio_path);
        a.audio_path = dst.string();
        if (audio->render) {
          dsp::Waveform w = dsp::read_wav(resolve(audio->input_root, r.audio_path));
          if (w.sample_rate != dsp::kCanonicalRate) w = dsp::resample_rate(w, dsp::kCanonicalRate);
          dsp::write_wav(dst, dsp::resample_speed(w, f));
        }
      }
      out.records.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<double> channel_onehot(const std::string& corpus_id,
                                   const std::vector<std::string>& corpus_list) {
  std::vector<double> v(corpus_list.size(), 0.0);
  for (std::size_t i = 0; i < corpus_list.size(); ++i) {
    if (corpus_list[i] == corpus_id) {
      v[i] = 1.0;
      return v;
    }
  }
  throw InvalidArgument("corpus \"" + corpus_id + "\" is not in the corpus list");
}

BalancedBatcher::BalancedBatcher(const Manifest& m, BalanceKey key, int batch_size, uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (m.records.empty()) throw InvalidArgument("balanced_batches: empty manifest");
  classes_ = key == BalanceKey::kDialect ? m.dialect_list : m.speakers();
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < classes_.size(); ++c) index[classes_[c]] = static_cast<int>(c);
  members_.resize(classes_.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const int c = index.at(key == BalanceKey::kDialect ? r.dialect : r.speaker_id);
    record_class_.push_back(c);
    members_[c].push_back(i);
  }
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (members_[c].empty()) throw InvalidArgument("balanced_batches: class \"" + classes_[c] + "\" has no records");
  }
  order_ = members_;
  cursor_.assign(classes_.size(), 0);
  for (auto& o : order_) rng_.shuffle(o.begin(), o.end());
  total_ = m.records.size();
}

std::size_t BalancedBatcher::draw(int cls) {
  auto& o = order_[cls];
  if (cursor_[cls] == o.size()) {
    rng_.shuffle(o.begin(), o.end());
    cursor_[cls] = 0;
  }
  return o[cursor_[cls]++];
}

std::vector<std::size_t> BalancedBatcher::next() {
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  for (int i = 0; i < batch_size_; ++i) {
    batch.push_back(draw(static_cast<int>(turn_ % classes_.size())));
    ++turn_;
  }
  return batch;
}

std::size_t BalancedBatcher::batches_per_epoch() const {
  return (total_ + batch_size_ - 1) / batch_size_;
}

std::vector<std::vector<std::size_t>> balanced_batches(const Manifest& m, BalanceKey key,
                                                       int batch_size, uint64_t seed,
                                                       std::size_t n_batches) {
  BalancedBatcher b(m, key, batch_size, seed);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n_batches; ++i) out.push_back(b.next());
  return out;
}

}  // namespace speakaug::corpus

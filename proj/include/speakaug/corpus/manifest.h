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

#ifndef SPEAKAUG_CORPUS_MANIFEST_H_
#define SPEAKAUG_CORPUS_MANIFEST_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace speakaug::corpus {

enum class Split { kTrain, kDev, kTest };
enum class TokenKind { kChar, kPhone };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);
std::string_view token_kind_name(TokenKind k);
TokenKind parse_token_kind(std::string_view s);

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  std::string corpus_id;
  std::string dialect;
  Split split = Split::kTrain;
  std::string text;
  TokenKind token_kind = TokenKind::kChar;
  std::string audio_path;
  int sample_rate = 16000;
  std::string gender;  // optional; empty when unknown
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  std::vector<std::string> corpus_list;
  std::vector<std::string> dialect_list;

  // Speaker ids in first-appearance order.
  std::vector<std::string> speakers() const;
  std::vector<std::string> speakers(Split split) const;
  std::size_t count(Split split) const;
  int corpus_index(std::string_view corpus_id) const;   // -1 if absent
  int dialect_index(std::string_view dialect) const;    // -1 if absent
};

// JSON-lines layout: a header object
//   {"manifest_version": 1, "corpus_list": [...], "dialect_list": [...]}
// followed by one record object per line with keys utt_id, speaker_id,
// corpus_id, dialect, split, text, token_kind, audio_path, sample_rate and an
// optional gender. Blank lines are ignored.
inline constexpr int kManifestVersion = 1;

// Parses and validates. Problems are collected across the whole file and
// thrown together as a ValidationError; each names its line.
Manifest parse_manifest(std::string_view text, const std::string& source = "<manifest>");
Manifest load_manifest(const std::filesystem::path& path);

std::string manifest_to_jsonl(const Manifest& m);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

// Checks record-level invariants of an in-memory manifest. `lines`, when
// given, maps record index to a source line for messages.
void validate_manifest(const Manifest& m, const std::vector<int>* lines = nullptr);

// Lowercases and strips punctuation (letters, digits, apostrophes and single
// spaces are kept).
std::string normalize_text(std::string_view text);

// Char tokens are the characters of the normalized text ("_" for a space);
// phone tokens are the whitespace-separated symbols as written.
std::vector<std::string> tokenize(std::string_view text, TokenKind kind);

// Selection used by phase plans. Empty lists select everything.
struct RecordFilter {
  std::vector<std::string> corpora;
  std::vector<std::string> speakers;
  std::vector<Split> splits;
  std::string gender;
};
Manifest filter_manifest(const Manifest& m, const RecordFilter& f);

}  // namespace speakaug::corpus

#endif  // SPEAKAUG_CORPUS_MANIFEST_H_

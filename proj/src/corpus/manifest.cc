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

#include "speakaug/corpus/manifest.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"

namespace speakaug::corpus {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw InvalidArgument("unknown split \"" + std::string(s) + "\"");
}

std::string_view token_kind_name(TokenKind k) { return k == TokenKind::kChar ? "char" : "phone"; }

TokenKind parse_token_kind(std::string_view s) {
  if (s == "char") return TokenKind::kChar;
  if (s == "phone") return TokenKind::kPhone;
  throw InvalidArgument("unknown token_kind \"" + std::string(s) + "\"");
}

std::vector<std::string> Manifest::speakers() const {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& r : records)
    if (seen.insert(r.speaker_id).second) out.push_back(r.speaker_id);
  return out;
}

std::vector<std::string> Manifest::speakers(Split split) const {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& r : records)
    if (r.split == split && seen.insert(r.speaker_id).second) out.push_back(r.speaker_id);
  return out;
}

std::size_t Manifest::count(Split split) const {
  return std::count_if(records.begin(), records.end(),
                       [&](const UtteranceRecord& r) { return r.split == split; });
}

int Manifest::corpus_index(std::string_view corpus_id) const {
  auto it = std::find(corpus_list.begin(), corpus_list.end(), corpus_id);
  return it == corpus_list.end() ? -1 : static_cast<int>(it - corpus_list.begin());
}

int Manifest::dialect_index(std::string_view dialect) const {
  auto it = std::find(dialect_list.begin(), dialect_list.end(), dialect);
  return it == dialect_list.end() ? -1 : static_cast<int>(it - dialect_list.begin());
}

namespace {

std::string where(const std::vector<int>* lines, std::size_t i) {
  if (lines) return "line " + std::to_string((*lines)[i]);
  return "record " + std::to_string(i);
}

void check_list(const std::vector<std::string>& list, const char* name,
                std::vector<std::string>& problems) {
  if (list.empty()) problems.push_back(std::string(name) + " is empty");
  std::set<std::string> seen;
  for (const auto& s : list) {
    if (s.empty()) problems.push_back(std::string(name) + " contains an empty name");
    if (!seen.insert(s).second) problems.push_back(std::string(name) + " repeats \"" + s + "\"");
  }
}

}  // namespace

void validate_manifest(const Manifest& m, const std::vector<int>* lines) {
  std::vector<std::string> problems;
  check_list(m.corpus_list, "corpus_list", problems);
  check_list(m.dialect_list, "dialect_list", problems);
  std::map<std::string, std::size_t> utt_first;
  std::map<std::string, std::pair<Split, std::size_t>> speaker_split;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const std::string at = where(lines, i);
    if (r.utt_id.empty()) problems.push_back(at + ": empty utt_id");
    if (r.speaker_id.empty()) problems.push_back(at + ": empty speaker_id");
    auto [it, fresh] = utt_first.emplace(r.utt_id, i);
    if (!fresh) {
      problems.push_back(at + ": duplicate utt_id \"" + r.utt_id + "\" (first at " +
                         where(lines, it->second) + ")");
    }
    if (m.corpus_index(r.corpus_id) < 0) {
      problems.push_back(at + ": unknown corpus \"" + r.corpus_id + "\"");
    }
    if (m.dialect_index(r.dialect) < 0) {
      problems.push_back(at + ": unknown dialect \"" + r.dialect + "\"");
    }
    if (r.sample_rate <= 0) problems.push_back(at + ": sample_rate must be positive");
    auto [sit, sfresh] = speaker_split.emplace(r.speaker_id, std::make_pair(r.split, i));
    if (!sfresh && sit->second.first != r.split) {
      problems.push_back(at + ": speaker \"" + r.speaker_id + "\" in split " +
                         std::string(split_name(r.split)) + " but also in " +
                         std::string(split_name(sit->second.first)) + " at " +
                         where(lines, sit->second.second));
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

Manifest parse_manifest(std::string_view text, const std::string& source) {
  Manifest m;
  std::vector<int> lines;
  std::vector<std::string> problems;
  bool have_header = false;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at = source + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      problems.push_back(at + ": not valid JSON");
      continue;
    }
    if (!obj.is_object()) {
      problems.push_back(at + ": expected a JSON object");
      continue;
    }
    if (!have_header) {
      have_header = true;
      try {
        if (obj.value("manifest_version", 0) != kManifestVersion) {
          problems.push_back(at + ": unsupported manifest_version");
        }
        m.corpus_list = obj.at("corpus_list").get<std::vector<std::string>>();
        m.dialect_list = obj.at("dialect_list").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        problems.push_back(at + ": bad header: " + e.what());
      }
      continue;
    }
    try {
      UtteranceRecord r;
      r.utt_id = obj.at("utt_id").get<std::string>();
      r.speaker_id = obj.at("speaker_id").get<std::string>();
      r.corpus_id = obj.at("corpus_id").get<std::string>();
      r.dialect = obj.at("dialect").get<std::string>();
      r.split = parse_split(obj.at("split").get<std::string>());
      r.text = obj.at("text").get<std::string>();
      r.token_kind = parse_token_kind(obj.at("token_kind").get<std::string>());
      r.audio_path = obj.at("audio_path").get<std::string>();
      r.sample_rate = obj.at("sample_rate").get<int>();
      r.gender = obj.value("gender", std::string());
      m.records.push_back(std::move(r));
      lines.push_back(line_no);
    } catch (const json::exception& e) {
      problems.push_back(at + ": bad record: " + e.what());
    } catch (const InvalidArgument& e) {
      problems.push_back(at + ": " + e.what());
    }
  }
  if (!have_header) problems.push_back(source + ": missing header line");
  if (!problems.empty()) throw ValidationError(std::move(problems));
  try {
    validate_manifest(m, &lines);
  } catch (const ValidationError& e) {
    std::vector<std::string> named;
    for (const auto& o : e.offenders()) named.push_back(source + ": " + o);
    throw ValidationError(std::move(named));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw InvalidArgument(e.what());
  }
  return parse_manifest(text, path.string());
}

std::string manifest_to_jsonl(const Manifest& m) {
  std::string out = json{{"manifest_version", kManifestVersion},
                         {"corpus_list", m.corpus_list},
                         {"dialect_list", m.dialect_list}}
                        .dump() +
                    "\n";
  for (const auto& r : m.records) {
    json obj{{"utt_id", r.utt_id},
             {"speaker_id", r.speaker_id},
             {"corpus_id", r.corpus_id},
             {"dialect", r.dialect},
             {"split", split_name(r.split)},
             {"text", r.text},
             {"token_kind", token_kind_name(r.token_kind)},
             {"audio_path", r.audio_path},
             {"sample_rate", r.sample_rate}};
    if (!r.gender.empty()) obj["gender"] = r.gender;
    out += obj.dump() + "\n";
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  validate_manifest(m);
  atomic_write_file(path, manifest_to_jsonl(m));
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool space = false;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      if (space && !out.empty()) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(c));
    } else if (std::isspace(c)) {
      space = true;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, TokenKind kind) {
  std::vector<std::string> out;
  if (kind == TokenKind::kChar) {
    for (char c : normalize_text(text)) out.emplace_back(c == ' ' ? std::string("_") : std::string(1, c));
  } else {
    std::istringstream in{std::string(text)};
    std::string sym;
    while (in >> sym) out.push_back(sym);
  }
  return out;
}

Manifest filter_manifest(const Manifest& m, const RecordFilter& f) {
  auto allowed = [](const auto& list, const auto& v) {
    return list.empty() || std::find(list.begin(), list.end(), v) != list.end();
  };
  Manifest out;
  out.corpus_list = m.corpus_list;
  out.dialect_list = m.dialect_list;
  for (const auto& r : m.records) {
    if (!allowed(f.corpora, r.corpus_id) || !allowed(f.speakers, r.speaker_id) ||
        !allowed(f.splits, r.split) || (!f.gender.empty() && r.gender != f.gender)) {
      continue;
    }
    out.records.push_back(r);
  }
  return out;
}

}  // namespace speakaug::corpus

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

#include "speakaug/listen/service.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <mutex>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/common/hash.h"

namespace speakaug::listen {

using nlohmann::json;

namespace {

constexpr int kLogVersion = 1;

bool plain_id(const std::string& s) {
  if (s.empty() || s.size() > 128) return false;
  return std::none_of(s.begin(), s.end(), [](char c) { return c == ',' || c == '"' || c == '\n' || c == '\r'; });
}

}  // namespace

std::string_view rating_status_name(RatingStatus s) {
  switch (s) {
    case RatingStatus::kAccepted: return "accepted";
    case RatingStatus::kDuplicate: return "duplicate";
    case RatingStatus::kInvalid: return "invalid";
    case RatingStatus::kOutOfOrder: return "out_of_order";
    case RatingStatus::kComplete: return "complete";
    case RatingStatus::kTokenConflict: return "token_conflict";
  }
  return "";
}

std::string session_id_for(std::size_t slot) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "session-%03zu", slot);
  return buf;
}

ListenService::ListenService(TestPlan plan, const std::filesystem::path& store_dir, ServiceOptions options)
    : plan_(std::move(plan)), dir_(store_dir), options_(std::move(options)) {
  if (options_.categories.empty()) throw InvalidArgument("listening test needs dialect categories");
  for (const auto& s : plan_.stimuli)
    if (!plain_id(s.utt_id) || !plain_id(s.system_id) || !plain_id(s.true_dialect)) {
      throw InvalidArgument("stimulus " + s.id + " has an id unusable in CSV output");
    }
  plan_hash_ = sha256_hex(plan_to_json(plan_).dump());
  slots_.resize(plan_.assignments.size());
  std::filesystem::create_directories(dir_);
  replay();
  const auto path = dir_ / log_name();
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  if (fresh) append({{"seq", 0}, {"type", "header"}, {"version", kLogVersion}, {"plan_hash", plan_hash_}});
}

ListenService::~ListenService() {
  if (fd_ >= 0) ::close(fd_);
}

void ListenService::replay() {
  const auto path = dir_ / log_name();
  if (!std::filesystem::exists(path)) return;
  std::string text = read_file(path);
  if (!text.empty() && text.back() != '\n') {
    const auto cut = text.rfind('\n');
    text.resize(cut == std::string::npos ? 0 : cut + 1);
    std::filesystem::resize_file(path, text.size());
    torn_tail_ = true;
  }
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
      const uint64_t seq = j.at("seq").get<uint64_t>();
      const std::string type = j.at("type").get<std::string>();
      if (line_no == 1) {
        if (type != "header" || seq != 0) throw ValidationError({where + ": missing log header"});
        if (j.at("plan_hash").get<std::string>() != plan_hash_) {
          throw ValidationError({where + ": log was written for a different test plan"});
        }
        continue;
      }
      if (seq != seq_ + 1) throw ValidationError({where + ": sequence " + std::to_string(seq) + " out of order"});
      if (type == "session") {
        const auto slot = j.at("slot").get<std::size_t>();
        const auto listener = j.at("listener_id").get<std::string>();
        if (slot >= slots_.size() || slots_[slot].claimed || by_listener_.count(listener)) {
          throw ValidationError({where + ": inconsistent session record"});
        }
        apply_session(listener, slot);
      } else if (type == "rating") {
        const auto slot = j.at("slot").get<std::size_t>();
        RatingSubmission r{j.at("stimulus_id").get<std::string>(), j.at("mos").get<int>(), j.at("dmos").get<int>(),
                           j.at("dialect_choice").get<std::string>(), j.at("token").get<std::string>()};
        if (slot >= slots_.size() || !slots_[slot].claimed) throw ValidationError({where + ": rating for unknown slot"});
        const auto cursor = cursor_stimulus(slot);
        if (!cursor || plan_.stimuli[*cursor].id != r.stimulus_id || !validate(r).empty() ||
            by_token_.count(r.token)) {
          throw ValidationError({where + ": rating inconsistent with the replayed state"});
        }
        apply_rating(slot, r, *cursor, seq);
      } else {
        throw ValidationError({where + ": unknown record type \"" + type + "\""});
      }
      seq_ = seq;
    } catch (const json::exception& e) {
      throw ValidationError({where + ": " + e.what()});
    }
  }
}

void ListenService::append(const json& line) {
  const std::string bytes = line.dump() + "\n";
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("rating log write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (options_.fsync) ::fdatasync(fd_);
}

void ListenService::apply_session(const std::string& listener_id, std::size_t slot) {
  slots_[slot].claimed = true;
  slots_[slot].listener_id = listener_id;
  by_listener_[listener_id] = slot;
}

void ListenService::apply_rating(std::size_t slot, const RatingSubmission& r, std::size_t stimulus, uint64_t seq) {
  by_token_[r.token] = ratings_.size();
  ratings_.push_back({slot, stimulus, r.mos, r.dmos, r.dialect_choice, r.token, seq});
  ++slots_[slot].position;
}

std::size_t ListenService::slot_of(const std::string& session_id) const {
  for (std::size_t s = 0; s < slots_.size(); ++s)
    if (slots_[s].claimed && session_id_for(s) == session_id) return s;
  throw NotFound("unknown session \"" + session_id + "\"");
}

std::optional<std::size_t> ListenService::cursor_stimulus(std::size_t slot) const {
  const std::size_t pos = slots_[slot].position;
  const std::size_t per_set = static_cast<std::size_t>(plan_.config.set_size);
  const auto& sets = plan_.assignments[slot];
  if (pos >= sets.size() * per_set) return std::nullopt;
  return plan_.set_order(slot, sets[pos / per_set])[pos % per_set];
}

SessionView ListenService::view(std::size_t slot) const {
  SessionView v;
  v.session_id = session_id_for(slot);
  v.listener_id = slots_[slot].listener_id;
  v.slot = slot;
  v.position = slots_[slot].position;
  v.total = plan_.assignments[slot].size() * static_cast<std::size_t>(plan_.config.set_size);
  v.complete = v.position >= v.total;
  return v;
}

std::string ListenService::validate(const RatingSubmission& r) const {
  if (r.mos < 1 || r.mos > 5) return "mos must be an integer in 1..5, got " + std::to_string(r.mos);
  if (r.dmos < 1 || r.dmos > 5) return "dmos must be an integer in 1..5, got " + std::to_string(r.dmos);
  if (std::find(options_.categories.begin(), options_.categories.end(), r.dialect_choice) ==
      options_.categories.end()) {
    return "unknown dialect choice \"" + r.dialect_choice + "\"";
  }
  if (r.token.empty() || r.token.size() > 128) return "a submission token (1..128 chars) is required";
  return "";
}

SessionView ListenService::open_session(const std::string& listener_id) {
  if (!plain_id(listener_id)) {
    throw InvalidArgument("listener_id must be 1..128 characters without commas, quotes or newlines");
  }
  std::unique_lock lock(mu_);
  auto it = by_listener_.find(listener_id);
  if (it != by_listener_.end()) return view(it->second);
  std::size_t slot = 0;
  while (slot < slots_.size() && slots_[slot].claimed) ++slot;
  if (slot == slots_.size()) {
    throw Conflict("all " + std::to_string(slots_.size()) + " listener slots are taken");
  }
  append({{"seq", seq_ + 1}, {"type", "session"}, {"listener_id", listener_id}, {"slot", slot}});
  ++seq_;
  apply_session(listener_id, slot);
  return view(slot);
}

SessionView ListenService::session(const std::string& session_id) const {
  std::shared_lock lock(mu_);
  return view(slot_of(session_id));
}

std::vector<SessionView> ListenService::sessions() const {
  std::shared_lock lock(mu_);
  std::vector<SessionView> out;
  for (std::size_t s = 0; s < slots_.size(); ++s)
    if (slots_[s].claimed) out.push_back(view(s));
  return out;
}

NextStimulus ListenService::next(const std::string& session_id) const {
  std::shared_lock lock(mu_);
  const std::size_t slot = slot_of(session_id);
  const SessionView v = view(slot);
  NextStimulus n;
  n.position = v.position;
  n.total = v.total;
  const auto cur = cursor_stimulus(slot);
  if (!cur) {
    n.done = true;
    return n;
  }
  n.stimulus_id = plan_.stimuli[*cur].id;
  n.audio_url = "/audio/" + n.stimulus_id;
  n.reference_url = "/audio/ref-" + n.stimulus_id;
  return n;
}

RatingResult ListenService::record(const std::string& session_id, const RatingSubmission& r) {
  std::unique_lock lock(mu_);
  const std::size_t slot = slot_of(session_id);
  RatingResult res;
  if (auto t = by_token_.find(r.token); !r.token.empty() && t != by_token_.end()) {
    const Stored& s = ratings_[t->second];
    if (s.slot == slot && plan_.stimuli[s.stimulus].id == r.stimulus_id && s.mos == r.mos && s.dmos == r.dmos &&
        s.dialect_choice == r.dialect_choice) {
      res.status = RatingStatus::kDuplicate;
      res.seq = s.seq;
      res.message = "already recorded";
    } else {
      res.status = RatingStatus::kTokenConflict;
      res.message = "token \"" + r.token + "\" was already used for a different submission";
    }
    return res;
  }
  if (auto err = validate(r); !err.empty()) {
    res.message = err;
    return res;
  }
  const auto cur = cursor_stimulus(slot);
  if (!cur) {
    res.status = RatingStatus::kComplete;
    res.message = "session is complete";
    return res;
  }
  const std::string& expected = plan_.stimuli[*cur].id;
  if (r.stimulus_id != expected) {
    res.status = RatingStatus::kOutOfOrder;
    res.expected = expected;
    res.message = "expected a rating for " + expected + ", got \"" + r.stimulus_id + "\"";
    return res;
  }
  const uint64_t seq = seq_ + 1;
  append({{"seq", seq},
          {"type", "rating"},
          {"slot", slot},
          {"stimulus_id", r.stimulus_id},
          {"mos", r.mos},
          {"dmos", r.dmos},
          {"dialect_choice", r.dialect_choice},
          {"token", r.token}});
  seq_ = seq;
  apply_rating(slot, r, *cur, seq);
  res.status = RatingStatus::kAccepted;
  res.seq = seq;
  return res;
}

std::vector<eval::RatingRecord> ListenService::ratings() const {
  std::shared_lock lock(mu_);
  std::vector<eval::RatingRecord> out;
  out.reserve(ratings_.size());
  for (const auto& s : ratings_) {
    const Stimulus& st = plan_.stimuli[s.stimulus];
    out.push_back({slots_[s.slot].listener_id, st.utt_id, st.system_id, st.split, s.mos, s.dmos, s.dialect_choice,
                   st.true_dialect});
  }
  return out;
}

std::string ListenService::export_csv() const { return eval::ratings_to_csv(ratings()); }

uint64_t ListenService::last_seq() const {
  std::shared_lock lock(mu_);
  return seq_;
}

json ListenService::references() const {
  json out = json::array();
  for (std::size_t k = 0; k < options_.categories.size(); ++k) {
    const auto& c = options_.categories[k];
    auto it = options_.accent_samples.find(c);
    const bool ok = it != options_.accent_samples.end() && std::filesystem::exists(it->second);
    out.push_back({{"dialect", c},
                   {"audio_url", ok ? json("/audio/accent-" + std::to_string(k)) : json(nullptr)},
                   {"available", ok}});
  }
  return out;
}

std::optional<std::filesystem::path> ListenService::audio_path(const std::string& id) const {
  std::filesystem::path p;
  try {
    if (id.rfind("accent-", 0) == 0) {
      const std::size_t k = std::stoul(id.substr(7));
      if (k >= options_.categories.size()) return std::nullopt;
      auto it = options_.accent_samples.find(options_.categories[k]);
      if (it == options_.accent_samples.end()) return std::nullopt;
      p = it->second;
    } else if (id.rfind("ref-", 0) == 0) {
      p = plan_.stimuli[plan_.stimulus_index(id.substr(4))].reference_path;
    } else {
      p = plan_.stimuli[plan_.stimulus_index(id)].audio_path;
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (p.empty() || !std::filesystem::is_regular_file(p)) return std::nullopt;
  return p;
}

}  // namespace speakaug::listen

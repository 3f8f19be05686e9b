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

#ifndef SPEAKAUG_LISTEN_SERVICE_H_
#define SPEAKAUG_LISTEN_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "speakaug/eval/eval.h"
#include "speakaug/listen/plan.h"

namespace speakaug::listen {

inline const std::vector<std::string> kDialectCategories = {"American", "Canadian",       "English",
                                                            "Irish",    "Northern Irish", "Scottish"};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Conflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceOptions {
  std::vector<std::string> categories = kDialectCategories;
  std::map<std::string, std::string> accent_samples;  // category -> wav path
  bool fsync = false;
};

struct SessionView {
  std::string session_id;
  std::string listener_id;
  std::size_t slot = 0;
  std::size_t position = 0;  // accepted ratings so far
  std::size_t total = 0;
  bool complete = false;
};

struct NextStimulus {
  bool done = false;
  std::string stimulus_id;
  std::string audio_url;
  std::string reference_url;
  std::size_t position = 0;
  std::size_t total = 0;
};

struct RatingSubmission {
  std::string stimulus_id;
  int mos = 0;
  int dmos = 0;
  std::string dialect_choice;
  std::string token;
};

enum class RatingStatus { kAccepted, kDuplicate, kInvalid, kOutOfOrder, kComplete, kTokenConflict };
std::string_view rating_status_name(RatingStatus s);

struct RatingResult {
  RatingStatus status = RatingStatus::kInvalid;
  std::string message;
  std::string expected;  // cursor stimulus on kOutOfOrder
  uint64_t seq = 0;      // log sequence number of the stored rating
  bool ok() const { return status == RatingStatus::kAccepted || status == RatingStatus::kDuplicate; }
};

// Listening-test state backed by an append-only JSON-lines log in
// `store_dir`. Opening replays the log; a torn final line left by a crash
// is cut off. Writes are serialized; reads share the lock.
class ListenService {
 public:
  ListenService(TestPlan plan, const std::filesystem::path& store_dir, ServiceOptions options = {});
  ~ListenService();
  ListenService(const ListenService&) = delete;
  ListenService& operator=(const ListenService&) = delete;

  // Resumes the listener's session or claims the next free listener slot.
  // Throws Conflict when every slot is taken, InvalidArgument on a bad id.
  SessionView open_session(const std::string& listener_id);
  SessionView session(const std::string& session_id) const;  // NotFound
  std::vector<SessionView> sessions() const;
  NextStimulus next(const std::string& session_id) const;    // NotFound
  RatingResult record(const std::string& session_id, const RatingSubmission& rating);

  std::vector<eval::RatingRecord> ratings() const;  // log order
  std::string export_csv() const;
  uint64_t last_seq() const;
  bool recovered_torn_tail() const { return torn_tail_; }

  nlohmann::json references() const;
  // Audio ids: stimulus ids, "ref-<stimulus id>" and "accent-<k>".
  std::optional<std::filesystem::path> audio_path(const std::string& audio_id) const;

  const TestPlan& plan() const { return plan_; }
  const ServiceOptions& options() const { return options_; }
  static std::string log_name() { return "ratings.log"; }

 private:
  struct Stored {
    std::size_t slot;
    std::size_t stimulus;
    int mos;
    int dmos;
    std::string dialect_choice;
    std::string token;
    uint64_t seq;
  };
  struct Slot {
    std::string listener_id;
    std::size_t position = 0;
    bool claimed = false;
  };

  void replay();
  void append(const nlohmann::json& line);
  std::size_t slot_of(const std::string& session_id) const;
  SessionView view(std::size_t slot) const;
  std::optional<std::size_t> cursor_stimulus(std::size_t slot) const;
  std::string validate(const RatingSubmission& r) const;
  void apply_session(const std::string& listener_id, std::size_t slot);
  void apply_rating(std::size_t slot, const RatingSubmission& r, std::size_t stimulus, uint64_t seq);

  TestPlan plan_;
  std::filesystem::path dir_;
  ServiceOptions options_;
  std::string plan_hash_;
  int fd_ = -1;
  bool torn_tail_ = false;

  mutable std::shared_mutex mu_;
  uint64_t seq_ = 0;
  std::vector<Slot> slots_;
  std::map<std::string, std::size_t> by_listener_;
  std::vector<Stored> ratings_;
  std::map<std::string, std::size_t> by_token_;  // index into ratings_
};

std::string session_id_for(std::size_t slot);

}  // namespace speakaug::listen

#endif  // SPEAKAUG_LISTEN_SERVICE_H_

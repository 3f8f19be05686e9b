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

#ifndef SPEAKAUG_LISTEN_PLAN_H_
#define SPEAKAUG_LISTEN_PLAN_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "speakaug/corpus/manifest.h"

namespace speakaug::listen {

struct Stimulus {
  std::string id;  // assigned by build_plan, "s00000" in input order
  std::string utt_id;
  std::string system_id;
  corpus::Split split = corpus::Split::kTest;
  std::string audio_path;
  std::string reference_path;
  std::string true_dialect;
};

struct PlanConfig {
  int set_size = 40;
  int listeners_per_set = 5;
  int sets_per_listener = 10;
  int n_listeners = 60;
  uint64_t seed = 1;
};

struct TestPlan {
  PlanConfig config;
  std::vector<Stimulus> stimuli;
  std::vector<std::vector<std::size_t>> sets;         // stimulus indices
  std::vector<std::vector<std::size_t>> assignments;  // per listener slot: set indices

  std::size_t n_assignments() const;
  std::size_t stimuli_per_listener() const;
  // Presentation order of one set for one listener slot.
  std::vector<std::size_t> set_order(std::size_t slot, std::size_t set) const;
  std::size_t stimulus_index(const std::string& id) const;  // throws if unknown
};

// Shuffles stimuli into sets and assigns each set to listeners_per_set
// distinct listener slots, sets_per_listener per slot.
TestPlan build_plan(std::vector<Stimulus> stimuli, const PlanConfig& config);

nlohmann::json plan_to_json(const TestPlan& plan);
TestPlan plan_from_json(const nlohmann::json& j);
void save_plan(const TestPlan& plan, const std::filesystem::path& path);
TestPlan load_plan(const std::filesystem::path& path);

// Stimuli for every (record, system) pair; audio at
// <audio_root>/<system>/<utt_id>.wav, references at
// <audio_root>/<reference_system>/<utt_id>.wav.
std::vector<Stimulus> stimuli_from_manifest(const corpus::Manifest& manifest, const std::vector<std::string>& systems,
                                            const std::filesystem::path& audio_root,
                                            const std::string& reference_system);

}  // namespace speakaug::listen

#endif  // SPEAKAUG_LISTEN_PLAN_H_

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

#include "speakaug/listen/plan.h"

#include <cstdio>
#include <numeric>
#include <set>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/common/hash.h"
#include "speakaug/common/rng.h"

namespace speakaug::listen {

using nlohmann::json;

std::size_t TestPlan::n_assignments() const {
  std::size_t n = 0;
  for (const auto& a : assignments) n += a.size();
  return n;
}

std::size_t TestPlan::stimuli_per_listener() const {
  return static_cast<std::size_t>(config.sets_per_listener) * static_cast<std::size_t>(config.set_size);
}

std::vector<std::size_t> TestPlan::set_order(std::size_t slot, std::size_t set) const {
  if (set >= sets.size()) throw InvalidArgument("set index " + std::to_string(set) + " out of range");
  std::vector<std::size_t> order = sets[set];
  Rng rng(fnv1a64("order/" + std::to_string(config.seed) + "/" + std::to_string(slot) + "/" + std::to_string(set)));
  rng.shuffle(order.begin(), order.end());
  return order;
}

std::size_t TestPlan::stimulus_index(const std::string& id) const {
  // ids are "s" followed by the zero-padded index
  if (id.size() > 1 && id[0] == 's') {
    std::size_t pos = 0;
    try {
      const unsigned long v = std::stoul(id.substr(1), &pos);
      if (pos == id.size() - 1 && v < stimuli.size() && stimuli[v].id == id) return v;
    } catch (const std::exception&) {
    }
  }
  throw InvalidArgument("unknown stimulus \"" + id + "\"");
}

TestPlan build_plan(std::vector<Stimulus> stimuli, const PlanConfig& c) {
  if (c.set_size <= 0 || c.listeners_per_set <= 0 || c.sets_per_listener <= 0 || c.n_listeners <= 0) {
    throw InvalidArgument("plan sizes must be positive");
  }
  if (stimuli.empty()) throw InvalidArgument("no stimuli");
  const std::size_t n = stimuli.size();
  if (n % static_cast<std::size_t>(c.set_size) != 0) {
    throw InvalidArgument(std::to_string(n) + " stimuli do not divide into sets of " + std::to_string(c.set_size) +
                          " (remainder " + std::to_string(n % c.set_size) + ")");
  }
  const long n_sets = static_cast<long>(n / c.set_size);
  const long lhs = static_cast<long>(c.n_listeners) * c.sets_per_listener;
  const long rhs = n_sets * c.listeners_per_set;
  if (lhs != rhs) {
    throw InvalidArgument("infeasible assignment: listeners x sets_per_listener = " + std::to_string(c.n_listeners) +
                          " x " + std::to_string(c.sets_per_listener) + " = " + std::to_string(lhs) +
                          " but sets x listeners_per_set = " + std::to_string(n_sets) + " x " +
                          std::to_string(c.listeners_per_set) + " = " + std::to_string(rhs));
  }
  if (c.sets_per_listener > n_sets) {
    throw InvalidArgument("sets_per_listener " + std::to_string(c.sets_per_listener) + " exceeds the " +
                          std::to_string(n_sets) + " sets available");
  }
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = stimuli[i];
    if (s.utt_id.empty() || s.system_id.empty()) problems.push_back("stimulus " + std::to_string(i) + ": empty id");
    if (!seen.insert({s.system_id, s.utt_id}).second) {
      problems.push_back("stimulus " + std::to_string(i) + ": duplicate " + s.system_id + "/" + s.utt_id);
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%05zu", i);
    s.id = buf;
  }
  if (!problems.empty()) throw ValidationError(problems);

  TestPlan plan;
  plan.config = c;
  plan.stimuli = std::move(stimuli);
  Rng rng(c.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  plan.sets.resize(n_sets);
  for (long s = 0; s < n_sets; ++s)
    plan.sets[s].assign(order.begin() + s * c.set_size, order.begin() + (s + 1) * c.set_size);

  std::vector<std::size_t> set_perm(n_sets);
  std::iota(set_perm.begin(), set_perm.end(), 0);
  rng.shuffle(set_perm.begin(), set_perm.end());
  plan.assignments.resize(c.n_listeners);
  for (long l = 0; l < c.n_listeners; ++l)
    for (long j = 0; j < c.sets_per_listener; ++j)
      plan.assignments[l].push_back(set_perm[(l * c.sets_per_listener + j) % n_sets]);
  return plan;
}

json plan_to_json(const TestPlan& p) {
  json st = json::array();
  for (const auto& s : p.stimuli) {
    st.push_back({{"id", s.id},
                  {"utt_id", s.utt_id},
                  {"system_id", s.system_id},
                  {"split", corpus::split_name(s.split)},
                  {"audio_path", s.audio_path},
                  {"reference_path", s.reference_path},
                  {"true_dialect", s.true_dialect}});
  }
  return {{"set_size", p.config.set_size},
          {"listeners_per_set", p.config.listeners_per_set},
          {"sets_per_listener", p.config.sets_per_listener},
          {"n_listeners", p.config.n_listeners},
          {"seed", p.config.seed},
          {"stimuli", st},
          {"sets", p.sets},
          {"assignments", p.assignments}};
}

TestPlan plan_from_json(const json& j) {
  TestPlan p;
  try {
    p.config.set_size = j.at("set_size").get<int>();
    p.config.listeners_per_set = j.at("listeners_per_set").get<int>();
    p.config.sets_per_listener = j.at("sets_per_listener").get<int>();
    p.config.n_listeners = j.at("n_listeners").get<int>();
    p.config.seed = j.at("seed").get<uint64_t>();
    for (const auto& s : j.at("stimuli")) {
      p.stimuli.push_back({s.at("id").get<std::string>(), s.at("utt_id").get<std::string>(),
                           s.at("system_id").get<std::string>(), corpus::parse_split(s.at("split").get<std::string>()),
                           s.at("audio_path").get<std::string>(), s.at("reference_path").get<std::string>(),
                           s.at("true_dialect").get<std::string>()});
    }
    p.sets = j.at("sets").get<std::vector<std::vector<std::size_t>>>();
    p.assignments = j.at("assignments").get<std::vector<std::vector<std::size_t>>>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed test plan: ") + e.what());
  }
  // Structural checks on every field.
  std::vector<int> used(p.stimuli.size(), 0);
  for (const auto& s : p.sets) {
    if (static_cast<int>(s.size()) != p.config.set_size) throw InvalidArgument("test plan set has the wrong size");
    for (auto i : s) {
      if (i >= used.size()) throw InvalidArgument("test plan set names an unknown stimulus");
      ++used[i];
    }
  }
  for (int u : used)
    if (u != 1) throw InvalidArgument("test plan sets are not a partition of the stimuli");
  if (static_cast<int>(p.assignments.size()) != p.config.n_listeners) {
    throw InvalidArgument("test plan has the wrong number of listener slots");
  }
  for (const auto& a : p.assignments)
    for (auto s : a)
      if (s >= p.sets.size()) throw InvalidArgument("test plan assigns an unknown set");
  for (std::size_t i = 0; i < p.stimuli.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%05zu", i);
    if (p.stimuli[i].id != buf) throw InvalidArgument("test plan stimulus ids are out of sequence");
  }
  return p;
}

void save_plan(const TestPlan& plan, const std::filesystem::path& path) {
  atomic_write_file(path, plan_to_json(plan).dump(1) + "\n");
}

TestPlan load_plan(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return plan_from_json(j);
}

std::vector<Stimulus> stimuli_from_manifest(const corpus::Manifest& manifest, const std::vector<std::string>& systems,
                                            const std::filesystem::path& audio_root,
                                            const std::string& reference_system) {
  std::vector<Stimulus> out;
  for (const auto& sys : systems)
    for (const auto& r : manifest.records) {
      out.push_back({"", r.utt_id, sys, r.split, (audio_root / sys / (r.utt_id + ".wav")).string(),
                     (audio_root / reference_system / (r.utt_id + ".wav")).string(), r.dialect});
    }
  return out;
}

}  // namespace speakaug::listen

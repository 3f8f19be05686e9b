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

#ifndef SPEAKAUG_EVAL_EVAL_H_
#define SPEAKAUG_EVAL_EVAL_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "speakaug/common/matrix.h"
#include "speakaug/corpus/manifest.h"

namespace speakaug::eval {

struct RatingRecord {
  std::string listener_id;
  std::string utt_id;
  std::string system_id;
  corpus::Split split = corpus::Split::kTest;
  int mos = 0;   // 1..5
  int dmos = 0;  // 1..5
  std::string dialect_choice;
  std::string true_dialect;
};

inline constexpr const char* kRatingsHeader =
    "listener_id,utt_id,system_id,split,mos,dmos,dialect_choice,true_dialect";

// Validates scores (1..5) and, when `categories` is non-empty, dialects.
// Collects every problem into one ValidationError.
void validate_ratings(const std::vector<RatingRecord>& ratings, const std::vector<std::string>& categories);

std::vector<RatingRecord> parse_ratings_csv(std::string_view text, const std::string& source = "<ratings>");
std::vector<RatingRecord> load_ratings_csv(const std::filesystem::path& path);
std::string ratings_to_csv(const std::vector<RatingRecord>& ratings);

std::vector<RatingRecord> select(const std::vector<RatingRecord>& ratings, const std::string& system,
                                 corpus::Split split);

struct ConfusionMatrix {
  std::vector<std::string> categories;
  std::vector<std::vector<long>> counts;  // rows true, columns guessed
  Matrix normalized;                      // row-stochastic for non-empty rows
  std::vector<bool> empty_rows;
};

ConfusionMatrix confusion_from_ratings(const std::vector<RatingRecord>& ratings,
                                       const std::vector<std::string>& categories);

// sqrt of the summed squared entrywise differences; shapes must agree.
double frobenius(const Matrix& a, const Matrix& b);

enum class ConfusionUnits { kProportions, kCounts };
double confusion_distance(const ConfusionMatrix& a, const ConfusionMatrix& b,
                          ConfusionUnits units = ConfusionUnits::kProportions);

enum class MwMode { kExact, kNormal, kAuto };
inline constexpr int kExactLimit = 40;  // exact mode needs |x| + |y| <= this

struct MannWhitney {
  double u_x = 0;  // pairs with x > y, ties counted one half
  double u_y = 0;
  double p_two_sided = 1;
  bool exact = false;
};

// Two-sided Mann-Whitney U with midranks. Exact mode gives the permutation
// distribution of U under the observed ties; normal mode uses the
// tie-corrected variance with a continuity correction. kAuto picks exact up
// to kExactLimit observations.
MannWhitney mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y, MwMode mode = MwMode::kAuto);

enum class Measure { kMos, kDmos };
std::string_view measure_name(Measure m);

// Mean rounded half-up to one decimal place.
double round_half_up_1(long sum, long n);

struct Cell {
  bool missing = true;
  double mean = 0;     // rounded
  double raw_mean = 0;
  std::vector<double> sample;
};

struct MosTable {
  Measure measure = Measure::kMos;
  std::vector<std::string> systems;
  std::vector<corpus::Split> splits{corpus::Split::kTrain, corpus::Split::kDev, corpus::Split::kTest};
  std::map<std::pair<std::string, corpus::Split>, Cell> cells;

  const Cell& cell(const std::string& system, corpus::Split split) const;
};

// Systems appear in the order given, or sorted when `systems` is empty.
MosTable mos_table(const std::vector<RatingRecord>& ratings, Measure measure,
                   const std::vector<std::string>& systems = {});

enum class Mark { kBetter, kWorse, kNotSignificant, kBaseline, kMissing };
std::string_view mark_symbol(Mark m);  // "+", "-", "", "(base)", "n/a"

struct MarkedCell {
  Mark mark = Mark::kMissing;
  double p = 1;
};

struct MarkedTable {
  MosTable table;
  std::map<std::pair<std::string, corpus::Split>, MarkedCell> marks;
};

// Compares each system with its baseline per split (two-sided, p < alpha).
// Systems named as a baseline need no entry of their own; a system mapped to
// itself is a reference and is marked like a baseline.
MarkedTable significance_marks(const MosTable& table, const std::map<std::string, std::string>& baseline_map,
                               double alpha = 0.01);

struct FrobeniusRow {
  std::string system;
  std::map<corpus::Split, std::optional<double>> distance;
};

// Distance of each system's confusion matrix to the reference system's, per split.
std::vector<FrobeniusRow> frobenius_table(const std::vector<RatingRecord>& ratings,
                                          const std::vector<std::string>& categories,
                                          const std::string& reference_system,
                                          const std::vector<std::string>& systems = {},
                                          ConfusionUnits units = ConfusionUnits::kProportions);

struct Report {
  std::string csv;
  std::string text;
};

Report make_report(const std::vector<RatingRecord>& ratings, const std::vector<std::string>& categories,
                   const std::map<std::string, std::string>& baseline_map, const std::string& reference_system,
                   double alpha = 0.01, ConfusionUnits units = ConfusionUnits::kProportions);

}  // namespace speakaug::eval

#endif  // SPEAKAUG_EVAL_EVAL_H_

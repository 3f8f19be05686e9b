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

#include "speakaug/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"

namespace speakaug::eval {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Doubled midranks (integers) of the pooled sample.
std::vector<long> doubled_midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<long> r2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
    const long twice = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) r2[idx[k]] = twice;
    i = j + 1;
  }
  return r2;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

void validate_ratings(const std::vector<RatingRecord>& ratings, const std::vector<std::string>& categories) {
  std::vector<std::string> problems;
  const std::set<std::string> cats(categories.begin(), categories.end());
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i];
    const std::string where = "rating " + std::to_string(i + 1) + " (" + r.listener_id + "/" + r.utt_id + ")";
    if (r.mos < 1 || r.mos > 5) problems.push_back(where + ": mos " + std::to_string(r.mos) + " outside 1..5");
    if (r.dmos < 1 || r.dmos > 5) problems.push_back(where + ": dmos " + std::to_string(r.dmos) + " outside 1..5");
    if (!cats.empty()) {
      if (!cats.count(r.dialect_choice)) problems.push_back(where + ": unknown dialect choice \"" + r.dialect_choice + "\"");
      if (!cats.count(r.true_dialect)) problems.push_back(where + ": unknown true dialect \"" + r.true_dialect + "\"");
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
}

std::vector<RatingRecord> parse_ratings_csv(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<RatingRecord> out;
  std::vector<std::string> problems;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kRatingsHeader) {
        throw InvalidArgument(source + ":" + std::to_string(line_no) + ": expected header \"" + kRatingsHeader + "\"");
      }
      header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 8) {
      problems.push_back(where + ": expected 8 fields, found " + std::to_string(f.size()));
      continue;
    }
    RatingRecord r;
    r.listener_id = f[0];
    r.utt_id = f[1];
    r.system_id = f[2];
    try {
      r.split = corpus::parse_split(f[3]);
    } catch (const std::exception&) {
      problems.push_back(where + ": unknown split \"" + f[3] + "\"");
      continue;
    }
    auto score = [&](const std::string& s, const char* what) {
      try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos == s.size() && v >= 1 && v <= 5) return v;
      } catch (const std::exception&) {
      }
      problems.push_back(where + ": " + what + " \"" + s + "\" is not an integer in 1..5");
      return 0;
    };
    r.mos = score(f[4], "mos");
    r.dmos = score(f[5], "dmos");
    r.dialect_choice = f[6];
    r.true_dialect = f[7];
    out.push_back(std::move(r));
  }
  if (!header) throw InvalidArgument(source + ": missing header");
  if (!problems.empty()) throw ValidationError(problems);
  return out;
}

std::vector<RatingRecord> load_ratings_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InvalidArgument("ratings file not found: " + path.string());
  return parse_ratings_csv(read_file(path), path.string());
}

std::string ratings_to_csv(const std::vector<RatingRecord>& ratings) {
  std::string out = std::string(kRatingsHeader) + "\n";
  for (const auto& r : ratings) {
    out += r.listener_id + "," + r.utt_id + "," + r.system_id + "," + std::string(corpus::split_name(r.split)) + "," +
           std::to_string(r.mos) + "," + std::to_string(r.dmos) + "," + r.dialect_choice + "," + r.true_dialect + "\n";
  }
  return out;
}

std::vector<RatingRecord> select(const std::vector<RatingRecord>& ratings, const std::string& system,
                                 corpus::Split split) {
  std::vector<RatingRecord> out;
  for (const auto& r : ratings)
    if (r.system_id == system && r.split == split) out.push_back(r);
  return out;
}

ConfusionMatrix confusion_from_ratings(const std::vector<RatingRecord>& ratings,
                                       const std::vector<std::string>& categories) {
  if (categories.empty()) throw InvalidArgument("confusion matrix needs categories");
  const std::size_t k = categories.size();
  auto index = [&](const std::string& c) -> std::size_t {
    auto it = std::find(categories.begin(), categories.end(), c);
    if (it == categories.end()) throw InvalidArgument("unknown dialect category \"" + c + "\"");
    return static_cast<std::size_t>(it - categories.begin());
  };
  ConfusionMatrix cm{categories, std::vector<std::vector<long>>(k, std::vector<long>(k, 0)), Matrix(k, k), {}};
  for (const auto& r : ratings) ++cm.counts[index(r.true_dialect)][index(r.dialect_choice)];
  cm.empty_rows.assign(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    const long total = std::accumulate(cm.counts[i].begin(), cm.counts[i].end(), 0L);
    cm.empty_rows[i] = total == 0;
    if (total == 0) continue;
    for (std::size_t j = 0; j < k; ++j) cm.normalized(i, j) = static_cast<double>(cm.counts[i][j]) / total;
  }
  return cm;
}

double frobenius(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("frobenius: shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " differ");
  }
  double s = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double confusion_distance(const ConfusionMatrix& a, const ConfusionMatrix& b, ConfusionUnits units) {
  if (a.categories != b.categories) throw InvalidArgument("confusion matrices use different categories");
  if (units == ConfusionUnits::kProportions) return frobenius(a.normalized, b.normalized);
  const std::size_t k = a.categories.size();
  Matrix ca(k, k), cb(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      ca(i, j) = static_cast<double>(a.counts[i][j]);
      cb(i, j) = static_cast<double>(b.counts[i][j]);
    }
  return frobenius(ca, cb);
}

MannWhitney mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y, MwMode mode) {
  if (x.empty() || y.empty()) throw InvalidArgument("Mann-Whitney needs two non-empty samples");
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("Mann-Whitney sample holds a non-finite value");
  for (double v : y)
    if (!std::isfinite(v)) throw InvalidArgument("Mann-Whitney sample holds a non-finite value");
  const int n1 = static_cast<int>(x.size()), n2 = static_cast<int>(y.size()), n = n1 + n2;
  if (mode == MwMode::kAuto) mode = n <= kExactLimit ? MwMode::kExact : MwMode::kNormal;
  if (mode == MwMode::kExact && n > kExactLimit) {
    throw InvalidArgument("exact Mann-Whitney supports at most " + std::to_string(kExactLimit) + " observations, got " +
                          std::to_string(n));
  }
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto r2 = doubled_midranks(pooled);
  long rx2 = 0;
  for (int i = 0; i < n1; ++i) rx2 += r2[i];
  MannWhitney res;
  res.u_x = rx2 / 2.0 - n1 * (n1 + 1) / 2.0;
  res.u_y = static_cast<double>(n1) * n2 - res.u_x;
  const double mu = n1 * n2 / 2.0;
  const double dev = std::abs(res.u_x - mu);

  if (mode == MwMode::kExact) {
    res.exact = true;
    // ways[k][s]: subsets of size k with doubled rank sum s.
    const long total2 = std::accumulate(r2.begin(), r2.end(), 0L);
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(total2 + 1, 0.0));
    ways[0][0] = 1;
    for (int i = 0; i < n; ++i)
      for (int k = std::min(i + 1, n1); k >= 1; --k)
        for (long s = total2; s >= r2[i]; --s) ways[k][s] += ways[k - 1][s - r2[i]];
    double hit = 0, all = 0;
    for (long s = 0; s <= total2; ++s) {
      const double w = ways[n1][s];
      if (w == 0) continue;
      all += w;
      const double u = s / 2.0 - n1 * (n1 + 1) / 2.0;
      if (std::abs(u - mu) >= dev - 1e-9) hit += w;
    }
    res.p_two_sided = std::min(1.0, hit / all);
    return res;
  }

  std::map<double, long> ties;
  for (double v : pooled) ++ties[v];
  double tie_term = 0;
  for (const auto& [v, t] : ties) tie_term += static_cast<double>(t) * t * t - t;
  const double var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (static_cast<double>(n) * (n - 1)));
  if (var <= 0) {
    res.p_two_sided = 1.0;
    return res;
  }
  const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
  res.p_two_sided = std::min(1.0, 2.0 * normal_sf(z));
  return res;
}

std::string_view measure_name(Measure m) { return m == Measure::kMos ? "MOS" : "DMOS"; }

double round_half_up_1(long sum, long n) {
  if (n <= 0) throw InvalidArgument("mean of an empty cell");
  // floor(10 * sum / n + 1/2) in integers, valid for non-negative sums.
  const long tenths = (20 * sum + n) / (2 * n);
  return tenths / 10.0;
}

const Cell& MosTable::cell(const std::string& system, corpus::Split split) const {
  static const Cell missing;
  auto it = cells.find({system, split});
  return it == cells.end() ? missing : it->second;
}

MosTable mos_table(const std::vector<RatingRecord>& ratings, Measure measure, const std::vector<std::string>& systems) {
  MosTable t;
  t.measure = measure;
  if (systems.empty()) {
    std::set<std::string> s;
    for (const auto& r : ratings) s.insert(r.system_id);
    t.systems.assign(s.begin(), s.end());
  } else {
    t.systems = systems;
  }
  std::map<std::pair<std::string, corpus::Split>, std::vector<int>> scores;
  for (const auto& r : ratings) scores[{r.system_id, r.split}].push_back(measure == Measure::kMos ? r.mos : r.dmos);
  for (const auto& sys : t.systems)
    for (auto sp : t.splits) {
      Cell c;
      auto it = scores.find({sys, sp});
      if (it != scores.end() && !it->second.empty()) {
        std::vector<int> v = it->second;
        std::sort(v.begin(), v.end());  // order-free sample
        const long sum = std::accumulate(v.begin(), v.end(), 0L);
        c.missing = false;
        c.mean = round_half_up_1(sum, static_cast<long>(v.size()));
        c.raw_mean = static_cast<double>(sum) / v.size();
        c.sample.assign(v.begin(), v.end());
      }
      t.cells[{sys, sp}] = std::move(c);
    }
  return t;
}

std::string_view mark_symbol(Mark m) {
  switch (m) {
    case Mark::kBetter: return "+";
    case Mark::kWorse: return "-";
    case Mark::kNotSignificant: return "";
    case Mark::kBaseline: return "(base)";
    case Mark::kMissing: return "n/a";
  }
  return "";
}

MarkedTable significance_marks(const MosTable& table, const std::map<std::string, std::string>& baseline_map,
                               double alpha) {
  std::set<std::string> baselines;
  for (const auto& [sys, base] : baseline_map) baselines.insert(base);
  std::vector<std::string> missing;
  for (const auto& sys : table.systems)
    if (!baseline_map.count(sys) && !baselines.count(sys)) missing.push_back(sys);
  if (!missing.empty()) {
    std::string s;
    for (const auto& m : missing) s += (s.empty() ? "" : ", ") + m;
    throw InvalidArgument("no baseline given for system(s): " + s);
  }
  MarkedTable out{table, {}};
  for (const auto& sys : table.systems)
    for (auto sp : table.splits) {
      MarkedCell mc;
      const Cell& c = table.cell(sys, sp);
      auto it = baseline_map.find(sys);
      if (c.missing) {
        mc.mark = Mark::kMissing;
      } else if (it == baseline_map.end() || it->second == sys) {
        mc.mark = Mark::kBaseline;
      } else {
        const Cell& b = table.cell(it->second, sp);
        if (b.missing) {
          mc.mark = Mark::kMissing;
        } else {
          mc.p = mann_whitney_u(c.sample, b.sample).p_two_sided;
          if (mc.p < alpha && c.raw_mean != b.raw_mean) {
            mc.mark = c.raw_mean > b.raw_mean ? Mark::kBetter : Mark::kWorse;
          } else {
            mc.mark = Mark::kNotSignificant;
          }
        }
      }
      out.marks[{sys, sp}] = mc;
    }
  return out;
}

std::vector<FrobeniusRow> frobenius_table(const std::vector<RatingRecord>& ratings,
                                          const std::vector<std::string>& categories,
                                          const std::string& reference_system, const std::vector<std::string>& systems,
                                          ConfusionUnits units) {
  std::vector<std::string> order = systems;
  if (order.empty()) {
    std::set<std::string> s;
    for (const auto& r : ratings)
      if (r.system_id != reference_system) s.insert(r.system_id);
    order.assign(s.begin(), s.end());
  }
  std::vector<FrobeniusRow> rows;
  const corpus::Split splits[] = {corpus::Split::kTrain, corpus::Split::kDev, corpus::Split::kTest};
  for (const auto& sys : order) {
    FrobeniusRow row{sys, {}};
    for (auto sp : splits) {
      const auto mine = select(ratings, sys, sp);
      const auto ref = select(ratings, reference_system, sp);
      if (mine.empty() || ref.empty()) {
        row.distance[sp] = std::nullopt;
        continue;
      }
      row.distance[sp] =
          confusion_distance(confusion_from_ratings(mine, categories), confusion_from_ratings(ref, categories), units);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Report make_report(const std::vector<RatingRecord>& ratings, const std::vector<std::string>& categories,
                   const std::map<std::string, std::string>& baseline_map, const std::string& reference_system,
                   double alpha, ConfusionUnits units) {
  validate_ratings(ratings, categories);
  Report rep;
  rep.csv = "table,system,split,value,n,mark,p\n";
  const corpus::Split splits[] = {corpus::Split::kTrain, corpus::Split::kDev, corpus::Split::kTest};
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::size_t width = 8;
  for (const auto& r : ratings) width = std::max(width, r.system_id.size() + 2);

  auto bmap = baseline_map;
  bmap.emplace(reference_system, reference_system);
  for (Measure m : {Measure::kMos, Measure::kDmos}) {
    const MarkedTable mt = significance_marks(mos_table(ratings, m), bmap, alpha);
    rep.text += std::string(measure_name(m)) + " (+/- significantly better/worse than baseline, p < " +
                fmt("%g", alpha) + ")\n";
    rep.text += pad("system", width);
    for (auto sp : splits) rep.text += pad(std::string(corpus::split_name(sp)), 10);
    rep.text += "\n";
    for (const auto& sys : mt.table.systems) {
      rep.text += pad(sys, width);
      for (auto sp : splits) {
        const Cell& c = mt.table.cell(sys, sp);
        const MarkedCell& mc = mt.marks.at({sys, sp});
        const std::string sym(mark_symbol(mc.mark));
        rep.text += pad(c.missing ? "n/a" : fmt("%.1f", c.mean) + sym, 10);
        rep.csv += std::string(measure_name(m)) + "," + sys + "," + std::string(corpus::split_name(sp)) + "," +
                   (c.missing ? "" : fmt("%.1f", c.mean)) + "," + std::to_string(c.sample.size()) + "," +
                   (mc.mark == Mark::kNotSignificant ? "n.s." : sym) + "," +
                   (mc.mark == Mark::kBetter || mc.mark == Mark::kWorse || mc.mark == Mark::kNotSignificant
                        ? fmt("%.6g", mc.p)
                        : "") +
                   "\n";
      }
      rep.text += "\n";
    }
    rep.text += "\n";
  }

  if (!categories.empty()) {
    const auto rows = frobenius_table(ratings, categories, reference_system, {}, units);
    rep.text += std::string("Frobenius distance to ") + reference_system + " (" +
                (units == ConfusionUnits::kProportions ? "row-normalized" : "counts") + ")\n";
    rep.text += pad("system", width);
    for (auto sp : splits) rep.text += pad(std::string(corpus::split_name(sp)), 10);
    rep.text += "\n";
    for (const auto& row : rows) {
      rep.text += pad(row.system, width);
      for (auto sp : splits) {
        const auto& d = row.distance.at(sp);
        rep.text += pad(d ? fmt("%.2f", *d) : "n/a", 10);
        rep.csv += "Frobenius," + row.system + "," + std::string(corpus::split_name(sp)) + "," +
                   (d ? fmt("%.6f", *d) : "") + ",,,\n";
      }
      rep.text += "\n";
    }
  }
  return rep;
}

}  // namespace speakaug::eval

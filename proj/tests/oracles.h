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

#ifndef SPEAKAUG_TESTS_ORACLES_H_
#define SPEAKAUG_TESTS_ORACLES_H_

// Independent reference implementations. Nothing here calls library code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace speakaug::oracle {

inline std::vector<double> sine(double hz, int rate, std::size_t n, double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * i / rate);
  return x;
}

// Peak frequency by a direct DFT over [lo_hz, hi_hz]; bin spacing rate/N.
inline double dft_peak_hz(const std::vector<double>& x, int rate, double lo_hz, double hi_hz) {
  const double n = static_cast<double>(x.size());
  const double bin_hz = rate / n;
  int best = 0;
  double best_mag = -1;
  for (int k = static_cast<int>(lo_hz / bin_hz); k <= static_cast<int>(hi_hz / bin_hz); ++k) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = -2 * std::numbers::pi * k * static_cast<double>(i) / n;
      re += x[i] * std::cos(a);
      im += x[i] * std::sin(a);
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best * bin_hz;
}

// Plain sinc interpolation, rectangular truncation, no anti-alias rolloff.
inline std::vector<double> naive_sinc(const std::vector<double>& x, double step, std::size_t out_len, double cutoff) {
  std::vector<double> y(out_len);
  const long n = static_cast<long>(x.size());
  for (std::size_t j = 0; j < out_len; ++j) {
    const double t = j * step;
    double acc = 0;
    for (long i = std::max(0L, static_cast<long>(t) - 2000); i < std::min(n, static_cast<long>(t) + 2000); ++i) {
      const double u = cutoff * (t - i);
      acc += x[i] * cutoff * (std::abs(u) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u));
    }
    y[j] = acc;
  }
  return y;
}

// LDE pooling by direct summation.
inline std::vector<double> lde(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& mu,
                               const std::vector<double>& s, bool with_std) {
  const std::size_t T = x.size(), C = mu.size(), D = x[0].size();
  std::vector<std::vector<double>> w(T, std::vector<double>(C));
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> a(C);
    for (std::size_t c = 0; c < C; ++c) {
      double d2 = 0;
      for (std::size_t d = 0; d < D; ++d) d2 += (x[t][d] - mu[c][d]) * (x[t][d] - mu[c][d]);
      a[c] = -s[c] * d2;
    }
    double mx = a[0];
    for (double v : a) mx = std::max(mx, v);
    double z = 0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(a[c] - mx);
    for (std::size_t c = 0; c < C; ++c) w[t][c] = std::exp(a[c] - mx) / z;
  }
  std::vector<double> mean, sd;
  for (std::size_t c = 0; c < C; ++c) {
    double wsum = 0;
    for (std::size_t t = 0; t < T; ++t) wsum += w[t][c];
    for (std::size_t d = 0; d < D; ++d) {
      double num = 0;
      for (std::size_t t = 0; t < T; ++t) num += w[t][c] * (x[t][d] - mu[c][d]);
      const double e = num / (wsum + 1e-8);
      double var = 0;
      for (std::size_t t = 0; t < T; ++t) {
        const double dev = x[t][d] - mu[c][d] - e;
        var += w[t][c] * dev * dev;
      }
      mean.push_back(e);
      sd.push_back(std::sqrt(var / (wsum + 1e-8) + 1e-8));
    }
  }
  if (with_std) mean.insert(mean.end(), sd.begin(), sd.end());
  return mean;
}

inline double frobenius(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return std::sqrt(s);
}

// U by direct pair counting.
inline double pair_u(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0;
  for (double a : x)
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return u;
}

// Two-sided permutation p by enumerating every split of the pooled values.
inline double enumerate_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const int n = static_cast<int>(pooled.size()), n1 = static_cast<int>(x.size());
  const double mu = n1 * static_cast<double>(y.size()) / 2.0;
  const double obs = std::abs(pair_u(x, y) - mu);
  long hit = 0, all = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != n1) continue;
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) (mask >> i & 1u ? a : b).push_back(pooled[i]);
    ++all;
    if (std::abs(pair_u(a, b) - mu) >= obs - 1e-9) ++hit;
  }
  return static_cast<double>(hit) / all;
}

}  // namespace speakaug::oracle

#endif  // SPEAKAUG_TESTS_ORACLES_H_

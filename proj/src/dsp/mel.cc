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

#include "speakaug/dsp/mel.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <string>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/dsp/fft.h"

namespace speakaug::dsp {
namespace {

constexpr char kMelMagic[8] = {'S', 'A', 'M', 'E', 'L', '1', '\0', '\0'};

// Reflection about the first/last sample, numpy "reflect" mode.
double reflect_at(std::span<const double> x, long i) {
  const long n = static_cast<long>(x.size());
  if (i < 0) i = -i;
  if (i >= n) i = 2 * (n - 1) - i;
  return x[static_cast<std::size_t>(i)];
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& b, std::size_t off) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[off + i]);
  return v;
}

}  // namespace

void FrameConfig::validate() const {
  if (hop_length <= 0 || hop_length > win_length || win_length > fft_size) {
    throw InvalidArgument("frame config requires 0 < hop <= win <= fft (hop=" +
                          std::to_string(hop_length) + ", win=" +
                          std::to_string(win_length) + ", fft=" +
                          std::to_string(fft_size) + ")");
  }
  if ((fft_size & (fft_size - 1)) != 0) {
    throw InvalidArgument("fft_size must be a power of two");
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(int n_mels, int fft_size, int sample_rate, double fmin,
                      double fmax) {
  if (n_mels < 1 || fft_size < 2 || sample_rate <= 0) {
    throw InvalidArgument("mel_filterbank: non-positive size");
  }
  if (!(fmin >= 0.0 && fmin < fmax)) {
    throw InvalidArgument("mel_filterbank: require 0 <= fmin < fmax");
  }
  if (fmax > sample_rate / 2.0) {
    throw InvalidArgument("mel_filterbank: fmax " + std::to_string(fmax) +
                          " exceeds Nyquist " + std::to_string(sample_rate / 2.0));
  }
  const int bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  Matrix fb(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double center = edges[m + 1];
    const double hi = edges[m + 2];
    double peak = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      const double rise = (f - lo) / (center - lo);
      const double fall = (hi - f) / (hi - center);
      const double w = std::max(0.0, std::min(rise, fall));
      fb(m, k) = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) {
      throw InvalidArgument("mel_filterbank: filter " + std::to_string(m) +
                            " covers no FFT bin; increase fft_size");
    }
    for (int k = 0; k < bins; ++k) fb(m, k) /= peak;
  }
  return fb;
}

std::vector<double> mel_band_centers(int n_mels, double fmin, double fmax) {
  const double lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<double> out(n_mels);
  for (int m = 0; m < n_mels; ++m) out[m] = mel_to_hz(lo + (hi - lo) * (m + 1) / (n_mels + 1));
  return out;
}

double spectral_tilt_db_per_khz(const Matrix& log_mel, double min_hz, double max_hz,
                                double active_margin) {
  if (log_mel.cols() != kNumMels || log_mel.rows() == 0) {
    throw InvalidArgument("spectral tilt needs a non-empty [T x 80] log-mel matrix");
  }
  std::vector<double> frame_mean(log_mel.rows());
  for (std::size_t t = 0; t < log_mel.rows(); ++t) {
    double s = 0;
    for (double v : log_mel.row(t)) s += v;
    frame_mean[t] = s / kNumMels;
  }
  const double loudest = *std::max_element(frame_mean.begin(), frame_mean.end());
  std::vector<double> avg(kNumMels, 0.0);
  int used = 0;
  for (std::size_t t = 0; t < log_mel.rows(); ++t) {
    if (frame_mean[t] < loudest - active_margin) continue;
    for (int m = 0; m < kNumMels; ++m) avg[m] += log_mel(t, m);
    ++used;
  }
  const double to_db = 20.0 / std::log(10.0);
  const auto centers = mel_band_centers(kNumMels, 0.0, 8000.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int m = 0; m < kNumMels; ++m) {
    if (centers[m] < min_hz || centers[m] > max_hz) continue;
    const double x = centers[m] / 1000.0, y = to_db * avg[m] / used;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw InvalidArgument("spectral tilt needs at least two bands in range");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> hann_window(int win_length, int fft_size) {
  std::vector<double> w(fft_size, 0.0);
  const int offset = (fft_size - win_length) / 2;
  for (int n = 0; n < win_length; ++n) {
    w[offset + n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / win_length);
  }
  return w;
}

ComplexFrames stft(std::span<const double> signal, const FrameConfig& cfg) {
  cfg.validate();
  const long pad = cfg.fft_size / 2;
  if (static_cast<long>(signal.size()) <= pad) {
    throw InvalidArgument("signal of " + std::to_string(signal.size()) +
                          " samples is too short for reflection padding of " +
                          std::to_string(pad));
  }
  const std::size_t num_frames = 1 + signal.size() / cfg.hop_length;
  const auto window = hann_window(cfg.win_length, cfg.fft_size);
  const FftPlan plan(cfg.fft_size);
  ComplexFrames out(num_frames);
  std::vector<std::complex<double>> buf(cfg.fft_size);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const long start = static_cast<long>(t) * cfg.hop_length - pad;
    for (int n = 0; n < cfg.fft_size; ++n) {
      buf[n] = {reflect_at(signal, start + n) * window[n], 0.0};
    }
    plan.forward(buf);
    out[t].assign(buf.begin(), buf.begin() + cfg.num_bins());
  }
  return out;
}

std::vector<double> istft(const ComplexFrames& frames, const FrameConfig& cfg,
                          std::size_t length) {
  cfg.validate();
  const auto window = hann_window(cfg.win_length, cfg.fft_size);
  const FftPlan plan(cfg.fft_size);
  const std::size_t pad = cfg.fft_size / 2;
  const std::size_t total = cfg.fft_size + cfg.hop_length * (frames.size() - 1);
  std::vector<double> acc(total, 0.0);
  std::vector<double> norm(total, 0.0);
  std::vector<std::complex<double>> buf(cfg.fft_size);
  const int bins = cfg.num_bins();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (static_cast<int>(frames[t].size()) != bins) {
      throw InvalidArgument("istft: frame has wrong number of bins");
    }
    for (int k = 0; k < bins; ++k) buf[k] = frames[t][k];
    for (int k = bins; k < cfg.fft_size; ++k) buf[k] = std::conj(buf[cfg.fft_size - k]);
    plan.inverse(buf);
    const std::size_t start = t * cfg.hop_length;
    for (int n = 0; n < cfg.fft_size; ++n) {
      acc[start + n] += buf[n].real() * window[n];
      norm[start + n] += window[n] * window[n];
    }
  }
  std::vector<double> out(length, 0.0);
  for (std::size_t i = 0; i < length && pad + i < total; ++i) {
    const double d = norm[pad + i];
    out[i] = d > 1e-10 ? acc[pad + i] / d : 0.0;
  }
  return out;
}

MelSpectrogram mel_spectrogram(const Waveform& wave, const FrameConfig& cfg) {
  if (wave.sample_rate != kCanonicalRate) {
    throw InvalidArgument("mel_spectrogram expects 16000 Hz input, got " +
                          std::to_string(wave.sample_rate) +
                          " Hz; convert with resample_rate first");
  }
  validate(wave);
  const ComplexFrames spec = stft(wave.samples, cfg);
  const Matrix fb = mel_filterbank(kNumMels, cfg.fft_size, wave.sample_rate, 0.0,
                                   wave.sample_rate / 2.0);
  const int bins = cfg.num_bins();
  MelSpectrogram mel;
  mel.frame_config = cfg;
  mel.sample_rate = wave.sample_rate;
  mel.frames = Matrix(spec.size(), kNumMels);
  std::vector<double> mag(bins);
  for (std::size_t t = 0; t < spec.size(); ++t) {
    for (int k = 0; k < bins; ++k) mag[k] = std::abs(spec[t][k]);
    for (int m = 0; m < kNumMels; ++m) {
      double e = 0.0;
      const auto row = fb.row(m);
      for (int k = 0; k < bins; ++k) e += row[k] * mag[k];
      mel.frames(t, m) = std::log(std::max(e, kMelFloor));
    }
  }
  return mel;
}

Matrix normalize_mel(const Matrix& log_mel) {
  Matrix out(log_mel.rows(), log_mel.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = (log_mel.data()[i] - kLogMelFloor) / kMelNormRange;
  }
  return out;
}

Matrix denormalize_mel(const Matrix& normalized) {
  Matrix out(normalized.rows(), normalized.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = std::max(kLogMelFloor, normalized.data()[i] * kMelNormRange + kLogMelFloor);
  }
  return out;
}

void write_mel(const std::filesystem::path& path, const MelSpectrogram& mel) {
  std::string out(kMelMagic, sizeof(kMelMagic));
  put_u32(out, static_cast<uint32_t>(mel.frames.rows()));
  put_u32(out, static_cast<uint32_t>(mel.frames.cols()));
  put_u32(out, static_cast<uint32_t>(mel.frame_config.hop_length));
  put_u32(out, static_cast<uint32_t>(mel.frame_config.win_length));
  put_u32(out, static_cast<uint32_t>(mel.sample_rate));
  for (double v : mel.frames.data()) {
    put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
  }
  atomic_write_file(path, out);
}

MelSpectrogram read_mel(const std::filesystem::path& path) {
  const std::string b = read_file(path);
  if (b.size() < 28 || std::memcmp(b.data(), kMelMagic, sizeof(kMelMagic)) != 0) {
    throw InvalidArgument(path.string() + ": not a mel file");
  }
  const uint32_t frames = get_u32(b, 8);
  const uint32_t bands = get_u32(b, 12);
  MelSpectrogram mel;
  mel.frame_config.hop_length = static_cast<int>(get_u32(b, 16));
  mel.frame_config.win_length = static_cast<int>(get_u32(b, 20));
  mel.sample_rate = static_cast<int>(get_u32(b, 24));
  if (b.size() != 28 + 4ull * frames * bands) {
    throw InvalidArgument(path.string() + ": truncated mel payload");
  }
  mel.frames = Matrix(frames, bands);
  for (std::size_t i = 0; i < mel.frames.data().size(); ++i) {
    mel.frames.data()[i] = std::bit_cast<float>(get_u32(b, 28 + 4 * i));
  }
  return mel;
}

}  // namespace speakaug::dsp

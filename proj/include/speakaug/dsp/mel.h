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

#ifndef SPEAKAUG_DSP_MEL_H_
#define SPEAKAUG_DSP_MEL_H_

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "speakaug/common/matrix.h"
#include "speakaug/dsp/waveform.h"

namespace speakaug::dsp {

inline constexpr int kNumMels = 80;
inline constexpr double kMelFloor = 1e-5;
// log(kMelFloor)
inline constexpr double kLogMelFloor = -11.512925464970229;

struct FrameConfig {
  int win_length = 800;  // 50 ms at 16 kHz
  int hop_length = 200;  // 12.5 ms
  int fft_size = 1024;

  // hop <= win <= fft, fft a power of two.
  void validate() const;
  int num_bins() const { return fft_size / 2 + 1; }
  bool operator==(const FrameConfig&) const = default;
};

struct MelSpectrogram {
  Matrix frames;  // [T x 80] natural-log mel magnitudes
  FrameConfig frame_config;
  int sample_rate = kCanonicalRate;

  std::size_t num_frames() const { return frames.rows(); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// HTK-scale triangular filters, each row peak-normalized to 1.
Matrix mel_filterbank(int n_mels, int fft_size, int sample_rate, double fmin,
                      double fmax);

// Complex STFT with reflection center padding: T = 1 + floor(N / hop) rows of
// fft_size/2 + 1 bins. Periodic Hann window of win_length centered in the FFT
// frame.
using ComplexFrames = std::vector<std::vector<std::complex<double>>>;
ComplexFrames stft(std::span<const double> signal, const FrameConfig& cfg);

// Weighted overlap-add inverse of `stft`; returns `length` samples.
std::vector<double> istft(const ComplexFrames& frames, const FrameConfig& cfg,
                          std::size_t length);

std::vector<double> hann_window(int win_length, int fft_size);

// 80-band log-mel magnitude spectrogram (fmin 0, fmax 8 kHz) of a 16 kHz wave.
MelSpectrogram mel_spectrogram(const Waveform& wave, const FrameConfig& cfg = {});

// Center frequencies (Hz) of the HTK filterbank bands.
std::vector<double> mel_band_centers(int n_mels, double fmin, double fmax);

// Least-squares slope, in dB per kHz, of the frame-averaged log-mel spectrum
// over bands centered in [min_hz, max_hz]. Only frames whose mean log value is
// within `active_margin` nats of the loudest frame are averaged, so silence
// and noise-only frames do not flatten the estimate.
double spectral_tilt_db_per_khz(const Matrix& log_mel, double min_hz = 250.0,
                                double max_hz = 7000.0, double active_margin = 3.0);

// Fixed affine map used by the neural models: floor -> 0, log value 4.488 -> 1.
inline constexpr double kMelNormRange = 16.0;
Matrix normalize_mel(const Matrix& log_mel);
Matrix denormalize_mel(const Matrix& normalized);

// Binary mel file: "SAMEL1\0\0" magic, then uint32 T, n_mels, hop, win, sr,
// then T*n_mels little-endian float32 values in time-major order.
void write_mel(const std::filesystem::path& path, const MelSpectrogram& mel);
MelSpectrogram read_mel(const std::filesystem::path& path);

}  // namespace speakaug::dsp

#endif  // SPEAKAUG_DSP_MEL_H_

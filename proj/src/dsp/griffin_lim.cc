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

#include "speakaug/dsp/griffin_lim.h"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "speakaug/common/error.h"
#include "speakaug/common/rng.h"

namespace speakaug::dsp {
namespace {

ComplexFrames with_phase(const Matrix& magnitude, const ComplexFrames& phase_source) {
  ComplexFrames out(magnitude.rows());
  for (std::size_t t = 0; t < magnitude.rows(); ++t) {
    out[t].resize(magnitude.cols());
    for (std::size_t k = 0; k < magnitude.cols(); ++k) {
      const auto z = phase_source[t][k];
      const double a = std::abs(z);
      out[t][k] = a > 1e-12 ? magnitude(t, k) * (z / a)
                            : std::complex<double>(magnitude(t, k), 0.0);
    }
  }
  return out;
}

ComplexFrames random_phases(const Matrix& magnitude, uint64_t seed) {
  Rng rng(seed);
  ComplexFrames out(magnitude.rows());
  for (std::size_t t = 0; t < magnitude.rows(); ++t) {
    out[t].resize(magnitude.cols());
    for (std::size_t k = 0; k < magnitude.cols(); ++k) {
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      out[t][k] = magnitude(t, k) * std::polar(1.0, phi);
    }
  }
  return out;
}

std::size_t output_length(const MelSpectrogram& mel) {
  return static_cast<std::size_t>(mel.frame_config.hop_length) * (mel.num_frames() - 1);
}

void check_input(const MelSpectrogram& mel) {
  if (mel.num_frames() < 2) {
    throw InvalidArgument("griffin_lim needs at least two mel frames");
  }
  if (mel.frames.cols() != static_cast<std::size_t>(kNumMels)) {
    throw InvalidArgument("griffin_lim expects 80 mel bands");
  }
  if (mel.sample_rate != kCanonicalRate) {
    throw InvalidArgument("griffin_lim expects a 16 kHz mel spectrogram");
  }
  mel.frame_config.validate();
}

}  // namespace

Matrix mel_to_linear_magnitude(const MelSpectrogram& mel) {
  const auto& cfg = mel.frame_config;
  const Matrix fb = mel_filterbank(kNumMels, cfg.fft_size, mel.sample_rate, 0.0,
                                   mel.sample_rate / 2.0);
  Eigen::MatrixXd basis(fb.rows(), fb.cols());
  for (std::size_t r = 0; r < fb.rows(); ++r)
    for (std::size_t c = 0; c < fb.cols(); ++c) basis(r, c) = fb(r, c);
  const Eigen::MatrixXd pinv = basis.completeOrthogonalDecomposition().pseudoInverse();

  Matrix out(mel.num_frames(), fb.cols());
  Eigen::VectorXd energies(kNumMels);
  for (std::size_t t = 0; t < mel.num_frames(); ++t) {
    for (int m = 0; m < kNumMels; ++m) energies(m) = std::exp(mel.frames(t, m));
    const Eigen::VectorXd lin = pinv * energies;
    for (Eigen::Index k = 0; k < lin.size(); ++k) out(t, k) = std::max(0.0, lin(k));
  }
  return out;
}

Waveform random_phase_reconstruction(const MelSpectrogram& mel, uint64_t seed) {
  check_input(mel);
  const Matrix magnitude = mel_to_linear_magnitude(mel);
  return Waveform{istft(random_phases(magnitude, seed), mel.frame_config, output_length(mel)),
                  mel.sample_rate};
}

Waveform griffin_lim(const MelSpectrogram& mel, int iterations, uint64_t seed) {
  if (iterations < 1) {
    throw InvalidArgument("griffin_lim iterations must be >= 1, got " +
                          std::to_string(iterations));
  }
  check_input(mel);
  const auto& cfg = mel.frame_config;
  const std::size_t length = output_length(mel);
  const Matrix magnitude = mel_to_linear_magnitude(mel);
  ComplexFrames estimate = random_phases(magnitude, seed);
  std::vector<double> signal;
  for (int it = 0; it < iterations; ++it) {
    signal = istft(estimate, cfg, length);
    estimate = with_phase(magnitude, stft(signal, cfg));
  }
  return Waveform{istft(estimate, cfg, length), mel.sample_rate};
}

double mel_l1(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("mel_l1: band count mismatch");
  const std::size_t rows = std::min(a.rows(), b.rows());
  if (rows == 0) throw InvalidArgument("mel_l1: empty input");
  double acc = 0.0;
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t m = 0; m < a.cols(); ++m) acc += std::abs(a(t, m) - b(t, m));
  return acc / static_cast<double>(rows * a.cols());
}

}  // namespace speakaug::dsp

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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <vector>

#include "speakaug/common/error.h"
#include "speakaug/common/rng.h"
#include "speakaug/dsp/fft.h"
#include "speakaug/dsp/griffin_lim.h"
#include "speakaug/dsp/mel.h"
#include "speakaug/dsp/resample.h"
#include "oracles.h"

namespace speakaug::dsp {
namespace {

constexpr double kPi = std::numbers::pi;

Waveform sine(double hz, int rate, std::size_t n, double amp = 0.5) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2 * kPi * hz * i / rate);
  return w;
}

using oracle::dft_peak_hz;
using oracle::naive_sinc;

TEST(ResampleSpeedTest, LengthFollowsFactor) {
  const auto out = resample_speed(sine(440, 16000, 16000), 1.1);
  EXPECT_NEAR(static_cast<double>(out.size()), 14545.0, 2.0);
  EXPECT_EQ(out.sample_rate, 16000);
}

TEST(ResampleSpeedTest, UnitFactorIsIdentity) {
  const auto in = sine(440, 16000, 4000);
  const auto out = resample_speed(in, 1.0);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_NEAR(out.samples[i], in.samples[i], 1e-6);
}

TEST(ResampleSpeedTest, SinePeakScalesWithFactorLikeOracle) {
  const auto in = sine(440, 16000, 16000);
  for (double factor : {1.1, 0.9}) {
    const auto out = resample_speed(in, factor);
    const auto oracle = naive_sinc(in.samples, factor, out.size(), std::min(1.0, 1.0 / factor));
    const double bin = 16000.0 / out.size();
    const double got = dft_peak_hz(out.samples, 16000, 300, 600);
    const double want = dft_peak_hz(oracle, 16000, 300, 600);
    EXPECT_NEAR(got, want, bin + 1e-9) << "factor " << factor;
    EXPECT_NEAR(got, 440 * factor, bin + 1e-9) << "factor " << factor;
  }
}

TEST(ResampleSpeedTest, RejectsOutOfRangeAndEmpty) {
  EXPECT_THROW(resample_speed(sine(440, 16000, 100), 0.49), InvalidArgument);
  EXPECT_THROW(resample_speed(sine(440, 16000, 100), 2.01), InvalidArgument);
  EXPECT_THROW(resample_speed(Waveform{{}, 16000}, 1.1), InvalidArgument);
}

TEST(ResampleSpeedTest, RoundTripPreservesDuration) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const double f = rng.uniform(0.5, 2.0);
    const auto n = 500 + static_cast<std::size_t>(rng.below(3000));
    const auto x = sine(300, 16000, n);
    if (1.0 / f < 0.5 || 1.0 / f > 2.0) continue;
    const auto back = resample_speed(resample_speed(x, f), 1.0 / f);
    EXPECT_NEAR(static_cast<double>(back.size()), static_cast<double>(n), 4.0) << f;
  }
}

TEST(ResampleRateTest, PreservesDuration) {
  const auto out = resample_rate(sine(440, 50000, 50000), 16000);
  EXPECT_EQ(out.size(), 16000u);
  EXPECT_EQ(out.sample_rate, 16000);
  EXPECT_THROW(resample_rate(sine(440, 16000, 10), 0), InvalidArgument);
}

TEST(ResampleRateTest, SameRateIsIdentity) {
  const auto in = sine(440, 16000, 1000);
  EXPECT_EQ(resample_rate(in, 16000).samples, in.samples);
}

TEST(ResampleRateTest, SinePeakSurvivesDownsampling) {
  const auto in = sine(440, 48000, 24000);
  const auto out = resample_rate(in, 16000);
  const auto oracle = naive_sinc(in.samples, 3.0, out.size(), 1.0 / 3.0);
  const double bin = 16000.0 / out.size();
  EXPECT_NEAR(dft_peak_hz(out.samples, 16000, 200, 800), 440.0, bin + 1e-9);
  EXPECT_NEAR(dft_peak_hz(oracle, 16000, 200, 800), 440.0, bin + 1e-9);
}

TEST(FftTest, MatchesDirectDft) {
  const FftPlan plan(16);
  std::vector<std::complex<double>> x(16);
  Rng rng(5);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  auto y = x;
  plan.forward(y);
  for (int k = 0; k < 16; ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < 16; ++n) acc += x[n] * std::polar(1.0, -2 * kPi * k * n / 16);
    EXPECT_NEAR(std::abs(acc - y[k]), 0.0, 1e-12);
  }
  plan.inverse(y);
  for (int n = 0; n < 16; ++n) EXPECT_NEAR(std::abs(y[n] - x[n]), 0.0, 1e-12);
  EXPECT_THROW(FftPlan(12), InvalidArgument);
}

TEST(MelFilterbankTest, ShapeAndPeaks) {
  const Matrix fb = mel_filterbank(80, 1024, 16000, 0, 8000);
  ASSERT_EQ(fb.rows(), 80u);
  ASSERT_EQ(fb.cols(), 513u);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    double peak = 0;
    for (double v : fb.row(m)) {
      EXPECT_GE(v, 0.0);
      peak = std::max(peak, v);
    }
    EXPECT_DOUBLE_EQ(peak, 1.0);
  }
}

TEST(MelFilterbankTest, CentersFollowUniformMelGrid) {
  const Matrix fb = mel_filterbank(80, 1024, 16000, 0, 8000);
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  const double bin_hz = 16000.0 / 1024;
  double prev = -1;
  for (int m = 0; m < 80; ++m) {
    const double center_mel = top * (m + 1) / 81.0;
    const double center_hz = 700.0 * (std::pow(10.0, center_mel / 2595.0) - 1.0);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < fb.cols(); ++k)
      if (fb(m, k) > fb(m, arg)) arg = k;
    EXPECT_NEAR(arg * bin_hz, center_hz, bin_hz) << "row " << m;
    EXPECT_GT(center_hz, prev);
    prev = center_hz;
  }
}

TEST(MelFilterbankTest, RejectsAboveNyquist) {
  EXPECT_THROW(mel_filterbank(80, 1024, 16000, 0, 8001), InvalidArgument);
  EXPECT_THROW(mel_filterbank(80, 1024, 16000, 500, 400), InvalidArgument);
}

TEST(MelSpectrogramTest, FrameCount) {
  const auto mel = mel_spectrogram(sine(440, 16000, 16000));
  EXPECT_EQ(mel.num_frames(), 81u);
  EXPECT_EQ(mel.frames.cols(), 80u);
}

TEST(MelSpectrogramTest, SilenceHitsFloorExactly) {
  const auto mel = mel_spectrogram(Waveform{std::vector<double>(4000, 0.0), 16000});
  for (double v : mel.frames.data()) EXPECT_EQ(v, std::log(1e-5));
}

TEST(MelSpectrogramTest, SineLandsInOneBand) {
  const auto mel = mel_spectrogram(sine(1000, 16000, 8000, 1.0));
  // Oracle band: the filter with the largest response at 1 kHz.
  const Matrix fb = mel_filterbank(80, 1024, 16000, 0, 8000);
  const std::size_t bin = static_cast<std::size_t>(std::lround(1000.0 * 1024 / 16000));
  std::size_t want = 0;
  for (std::size_t m = 1; m < 80; ++m)
    if (fb(m, bin) > fb(want, bin)) want = m;
  for (std::size_t t = 0; t < mel.num_frames(); ++t) {
    const auto row = mel.frames.row(t);
    const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    EXPECT_NEAR(static_cast<double>(arg), static_cast<double>(want), 1.0) << "frame " << t;
  }
}

TEST(MelSpectrogramTest, DeterministicAndFloored) {
  Rng rng(11);
  Waveform w{std::vector<double>(5000), 16000};
  for (auto& s : w.samples) s = 0.3 * rng.normal() * (rng.uniform() < 0.5 ? 1e-4 : 1.0);
  const auto a = mel_spectrogram(w);
  const auto b = mel_spectrogram(w);
  EXPECT_EQ(a.frames, b.frames);
  for (double v : a.frames.data()) EXPECT_GE(v, std::log(1e-5));
}

TEST(MelSpectrogramTest, RejectsWrongRateAndTinyInput) {
  EXPECT_THROW(mel_spectrogram(sine(440, 22050, 4000)), InvalidArgument);
  EXPECT_THROW(mel_spectrogram(sine(440, 16000, 300)), InvalidArgument);
}

double correlation(const Matrix& a, const Matrix& b) {
  const std::size_t rows = std::min(a.rows(), b.rows());
  double ma = 0, mb = 0;
  const double n = static_cast<double>(rows * a.cols());
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t m = 0; m < a.cols(); ++m) {
      ma += a(t, m);
      mb += b(t, m);
    }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t m = 0; m < a.cols(); ++m) {
      sab += (a(t, m) - ma) * (b(t, m) - mb);
      saa += (a(t, m) - ma) * (a(t, m) - ma);
      sbb += (b(t, m) - mb) * (b(t, m) - mb);
    }
  return sab / std::sqrt(saa * sbb);
}

TEST(GriffinLimTest, ReconstructsSineMel) {
  const auto mel = mel_spectrogram(sine(440, 16000, 8000));
  const auto wave = griffin_lim(mel, 60);
  EXPECT_EQ(wave.sample_rate, 16000);
  const auto again = mel_spectrogram(wave);
  EXPECT_EQ(again.num_frames(), mel.num_frames());
  EXPECT_GT(correlation(again.frames, mel.frames), 0.9);
}

TEST(GriffinLimTest, IterationsDoNotIncreaseError) {
  Waveform w = sine(300, 16000, 6000, 0.3);
  const auto chirp = sine(1700, 16000, 6000, 0.2);
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] += chirp.samples[i] * (i / 6000.0);
  const auto mel = mel_spectrogram(w);
  const double e0 = mel_l1(mel_spectrogram(random_phase_reconstruction(mel)).frames, mel.frames);
  const double e1 = mel_l1(mel_spectrogram(griffin_lim(mel, 1)).frames, mel.frames);
  const double e60 = mel_l1(mel_spectrogram(griffin_lim(mel, 60)).frames, mel.frames);
  EXPECT_LE(e1, e0);
  EXPECT_LE(e60, e1);
}

TEST(GriffinLimTest, SilenceStaysSilent) {
  MelSpectrogram mel;
  mel.frames = Matrix(40, 80, std::log(1e-5));
  const auto wave = griffin_lim(mel, 10);
  double e = 0;
  for (double s : wave.samples) e += s * s;
  EXPECT_LT(std::sqrt(e / wave.size()), 1e-3);
  EXPECT_THROW(griffin_lim(mel, 0), InvalidArgument);
}

TEST(WavIoTest, RoundTripWithinQuantization) {
  const auto path = std::filesystem::temp_directory_path() / "speakaug_wav_test.wav";
  const auto w = sine(440, 16000, 1234, 0.7);
  write_wav(path, w);
  const auto r = read_wav(path);
  ASSERT_EQ(r.size(), w.size());
  EXPECT_EQ(r.sample_rate, 16000);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 32767);
  std::filesystem::remove(path);
}

TEST(MelIoTest, RoundTripAsFloat32) {
  const auto path = std::filesystem::temp_directory_path() / "speakaug_mel_test.mel";
  const auto mel = mel_spectrogram(sine(440, 16000, 3000));
  write_mel(path, mel);
  const auto r = read_mel(path);
  ASSERT_EQ(r.num_frames(), mel.num_frames());
  EXPECT_EQ(r.frame_config.hop_length, 200);
  EXPECT_EQ(r.frame_config.win_length, 800);
  EXPECT_EQ(r.sample_rate, 16000);
  for (std::size_t i = 0; i < mel.frames.data().size(); ++i)
    EXPECT_EQ(r.frames.data()[i], static_cast<float>(mel.frames.data()[i]));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace speakaug::dsp

// testutil.hpp -- shared helpers for the test suites: scratch dirs, synthetic
// signals, and independent (oracle) mel computation kept free of the library's
// own DSP path.
#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "scwr/common.hpp"
#include "scwr/wav.hpp"

namespace scwr::testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / (tag + ".XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline AudioClip tone_clip(double freq, double seconds, double amp = 0.5,
                           int rate = 16000) {
  AudioClip c;
  c.sample_rate = rate;
  int64_t n = int64_t(seconds * rate + 0.5);
  c.samples.resize(size_t(n));
  for (int64_t i = 0; i < n; ++i)
    c.samples[size_t(i)] =
        float(amp * std::sin(2.0 * 3.14159265358979323846 * freq * double(i) / rate));
  return c;
}

// Harmonic tone: fundamental plus scaled overtones, deterministic phase.
inline AudioClip harmonic_clip(double f0, const std::vector<double>& amps,
                               double seconds, int rate = 16000) {
  AudioClip c;
  c.sample_rate = rate;
  int64_t n = int64_t(seconds * rate + 0.5);
  c.samples.assign(size_t(n), 0.0f);
  for (size_t h = 0; h < amps.size(); ++h) {
    double f = f0 * double(h + 1);
    for (int64_t i = 0; i < n; ++i)
      c.samples[size_t(i)] += float(
          amps[h] * std::sin(2.0 * 3.14159265358979323846 * f * double(i) / rate));
  }
  return c;
}

// White noise shaped by a windowed-sinc bandpass FIR; each (lo, hi) band gives
// a speaker-like stationary spectral profile.
inline AudioClip bandnoise_clip(double lo_hz, double hi_hz, double seconds,
                                Rng& rng, double amp = 0.5, int rate = 16000,
                                int fir_len = 101) {
  const double pi = 3.14159265358979323846;
  int64_t n = int64_t(seconds * rate + 0.5);
  std::vector<double> noise(size_t(n), 0.0);
  for (auto& v : noise) v = rng.uniform(-1.0, 1.0);

  // bandpass = highpass(lo) applied to lowpass(hi): sinc(hi) - sinc(lo)
  std::vector<double> fir(size_t(fir_len), 0.0);
  int mid = fir_len / 2;
  double wl = 2.0 * lo_hz / rate, wh = 2.0 * hi_hz / rate;
  for (int i = 0; i < fir_len; ++i) {
    int k = i - mid;
    double sinc_h = k == 0 ? wh : std::sin(pi * wh * k) / (pi * k);
    double sinc_l = k == 0 ? wl : std::sin(pi * wl * k) / (pi * k);
    double hann = 0.5 - 0.5 * std::cos(2.0 * pi * i / (fir_len - 1));
    fir[size_t(i)] = (sinc_h - sinc_l) * hann;
  }

  AudioClip c;
  c.sample_rate = rate;
  c.samples.resize(size_t(n));
  double peak = 1e-9;
  std::vector<double> filtered(size_t(n), 0.0);
  for (int64_t t = 0; t < n; ++t) {
    double acc = 0;
    for (int i = 0; i < fir_len; ++i) {
      int64_t s = t - mid + i;
      if (s >= 0 && s < n) acc += fir[size_t(i)] * noise[size_t(s)];
    }
    filtered[size_t(t)] = acc;
    peak = std::max(peak, std::fabs(acc));
  }
  for (int64_t t = 0; t < n; ++t)
    c.samples[size_t(t)] = float(filtered[size_t(t)] / peak * amp);
  return c;
}

// Independent mel path used as a test oracle: direct DFT, own mel scale and
// triangle construction. Returns frames x n_mels of log energies.
inline std::vector<std::vector<double>> oracle_mel(
    const AudioClip& clip, int n_fft, int win_length, int hop, int n_mels,
    double fmin, double fmax, double log_floor) {
  const double pi = 3.14159265358979323846;
  int64_t n = int64_t(clip.samples.size());
  int frames = n < n_fft ? 1 : int((n - n_fft) / hop) + 1;
  int bins = n_fft / 2 + 1;

  auto mel_of = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz_of = [](double m) {
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  std::vector<double> pts(size_t(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m)
    pts[size_t(m)] = hz_of(mel_of(fmin) +
                           (mel_of(fmax) - mel_of(fmin)) * m / double(n_mels + 1));

  std::vector<std::vector<double>> out(size_t(frames),
                                       std::vector<double>(size_t(n_mels)));
  for (int fr = 0; fr < frames; ++fr) {
    std::vector<double> frame(size_t(n_fft), 0.0);
    for (int i = 0; i < win_length; ++i) {
      int64_t s = int64_t(fr) * hop + i;
      if (s < n)
        frame[size_t(i)] = double(clip.samples[size_t(s)]) *
                           (0.5 - 0.5 * std::cos(2.0 * pi * i / win_length));
    }
    std::vector<double> power(size_t(bins), 0.0);
    for (int k = 0; k < bins; ++k) {
      double re = 0, im = 0;
      for (int t = 0; t < n_fft; ++t) {
        double ang = -2.0 * pi * k * t / n_fft;
        re += frame[size_t(t)] * std::cos(ang);
        im += frame[size_t(t)] * std::sin(ang);
      }
      power[size_t(k)] = re * re + im * im;
    }
    for (int m = 0; m < n_mels; ++m) {
      double lo = pts[size_t(m)], mid = pts[size_t(m) + 1], hi = pts[size_t(m) + 2];
      double acc = 0;
      for (int k = 0; k < bins; ++k) {
        double f = double(k) * clip.sample_rate / n_fft;
        if (f > lo && f < hi)
          acc += (f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid)) *
                 power[size_t(k)];
      }
      out[size_t(fr)][size_t(m)] = std::log(std::max(acc, log_floor));
    }
  }
  return out;
}

}  // namespace scwr::testutil

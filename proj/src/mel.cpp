#include "scwr/mel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "scwr/common.hpp"

namespace scwr {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT; falls back to a direct DFT for non power-of-two
// sizes so arbitrary n_fft configs still work.
void fft_forward(std::vector<std::complex<double>>& a) {
  size_t n = a.size();
  if (!is_pow2(int(n))) {
    std::vector<std::complex<double>> out(n);
    for (size_t k = 0; k < n; ++k) {
      std::complex<double> acc(0, 0);
      for (size_t t = 0; t < n; ++t) {
        double ang = -2.0 * kPi * double(k) * double(t) / double(n);
        acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out[k] = acc;
    }
    a = std::move(out);
    return;
  }
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / double(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1, 0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

void MelConfig::validate(int sample_rate) const {
  require(sample_rate > 0, "sample rate must be positive");
  require(n_fft >= 1 && win_length >= 1 && hop_length >= 1,
          "mel config sizes must be positive");
  require(hop_length <= win_length && win_length <= n_fft,
          "mel config requires hop <= win <= n_fft");
  require(n_mels >= 1, "n_mels must be positive");
  require(fmin >= 0 && fmax > fmin, "mel config requires 0 <= fmin < fmax");
  require(fmax <= sample_rate / 2.0 + 1e-9,
          "mel config fmax exceeds Nyquist for this sample rate");
  require(log_floor > 0, "log floor must be positive");
}

MelConfig MelConfig::encoder_profile(int sample_rate) {
  MelConfig c;
  c.win_length = sample_rate / 40;  // 25 ms
  c.hop_length = sample_rate / 100;  // 10 ms
  c.n_fft = 1;
  while (c.n_fft < c.win_length) c.n_fft <<= 1;
  c.n_mels = 40;
  c.fmin = 0.0;
  c.fmax = sample_rate / 2.0;
  c.log_floor = 1e-5;
  return c;
}

MelConfig MelConfig::vocoder_profile(int sample_rate) {
  MelConfig c;
  c.n_fft = 1024;
  c.win_length = 800;
  c.hop_length = 200;
  c.n_mels = 80;
  c.fmin = 0.0;
  c.fmax = sample_rate / 2.0;
  c.log_floor = 1e-5;
  return c;
}

TensorT<double> mel_filterbank(const MelConfig& cfg, int sample_rate) {
  int bins = cfg.n_fft / 2 + 1;
  TensorT<double> fb({cfg.n_mels, bins});
  double mel_lo = hz_to_mel(cfg.fmin);
  double mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> centers(size_t(cfg.n_mels) + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    centers[size_t(m)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(m) / double(cfg.n_mels + 1));
  for (int m = 0; m < cfg.n_mels; ++m) {
    double lo = centers[size_t(m)], mid = centers[size_t(m) + 1],
           hi = centers[size_t(m) + 2];
    for (int k = 0; k < bins; ++k) {
      double f = double(k) * sample_rate / double(cfg.n_fft);
      double w = 0;
      if (f > lo && f < hi)
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb.at(m, k) = std::max(0.0, w);
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const MelConfig& cfg) {
  cfg.validate(clip.sample_rate);
  require(!clip.samples.empty(), "mel_spectrogram on empty clip");

  int64_t n = int64_t(clip.samples.size());
  int frames = cfg.frames_for(n);
  int bins = cfg.n_fft / 2 + 1;

  std::vector<double> window(size_t(cfg.win_length));
  for (int i = 0; i < cfg.win_length; ++i)
    window[size_t(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / cfg.win_length);

  TensorT<double> fb = mel_filterbank(cfg, clip.sample_rate);
  TensorT<float> out({frames, cfg.n_mels});

  std::vector<std::complex<double>> buf(size_t(cfg.n_fft));
  std::vector<double> power(size_t(bins), 0.0);
  for (int fr = 0; fr < frames; ++fr) {
    int64_t start = int64_t(fr) * cfg.hop_length;
    for (int i = 0; i < cfg.n_fft; ++i) {
      int64_t s = start + i;
      double v = (i < cfg.win_length && s < n)
                     ? double(clip.samples[size_t(s)]) * window[size_t(i)]
                     : 0.0;
      buf[size_t(i)] = {v, 0.0};
    }
    fft_forward(buf);
    for (int k = 0; k < bins; ++k) power[size_t(k)] = std::norm(buf[size_t(k)]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0;
      const double* row = fb.data.data() + int64_t(m) * bins;
      for (int k = 0; k < bins; ++k) acc += row[k] * power[size_t(k)];
      out.at(fr, m) = float(std::log(std::max(acc, cfg.log_floor)));
    }
  }
  return MelSpectrogram{std::move(out), cfg, clip.sample_rate};
}

AudioClip vad_trim(const AudioClip& clip, double threshold_db) {
  require(threshold_db > 0, "vad threshold must be positive");
  require(!clip.samples.empty(), "vad_trim on empty clip");
  int win = std::max(1, clip.sample_rate / 40);  // 25 ms
  int hop = std::max(1, clip.sample_rate / 100);  // 10 ms
  int64_t n = int64_t(clip.samples.size());
  int frames = n >= win ? int((n - win) / hop) + 1 : 1;

  std::vector<double> rms(size_t(frames), 0.0);
  double peak = 0;
  for (int fr = 0; fr < frames; ++fr) {
    int64_t start = int64_t(fr) * hop;
    int64_t end = std::min<int64_t>(start + win, n);
    double acc = 0;
    for (int64_t i = start; i < end; ++i)
      acc += double(clip.samples[size_t(i)]) * double(clip.samples[size_t(i)]);
    rms[size_t(fr)] = std::sqrt(acc / double(end - start));
    peak = std::max(peak, rms[size_t(fr)]);
  }
  if (peak < 1e-8) fail_data("vad_trim: clip is entirely below threshold");

  double cut = peak * std::pow(10.0, -threshold_db / 20.0);
  int first = -1, last = -1;
  for (int fr = 0; fr < frames; ++fr) {
    if (rms[size_t(fr)] >= cut) {
      if (first < 0) first = fr;
      last = fr;
    }
  }
  if (first < 0) fail_data("vad_trim: clip is entirely below threshold");

  // Keeping to the clip edge when the edge frame is active makes the trim
  // idempotent on clean signals.
  int64_t begin = first == 0 ? 0 : int64_t(first) * hop;
  int64_t end = last == frames - 1 ? n : int64_t(last) * hop + win;
  end = std::min(end, n);

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + begin, clip.samples.begin() + end);
  return out;
}

}  // namespace scwr

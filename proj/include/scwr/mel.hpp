// mel.hpp -- voice-activity trimming and log mel-spectrogram extraction.
#pragma once

#include <vector>

#include "scwr/tensor.hpp"
#include "scwr/wav.hpp"

namespace scwr {

struct MelConfig {
  int n_fft = 1024;
  int win_length = 800;
  int hop_length = 200;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-5;

  void validate(int sample_rate) const;

  // Frame count for a clip of n samples: clips shorter than one frame are
  // zero-padded to n_fft, otherwise 1 + floor((n - n_fft) / hop), no centering.
  int frames_for(int64_t n) const {
    if (n < n_fft) return 1;
    return int(1 + (n - n_fft) / hop_length);
  }

  // Feature profile used by the speaker encoder (25 ms window, 10 ms hop).
  static MelConfig encoder_profile(int sample_rate = 16000);
  // Conditioning profile for the vocoder; hop factors as 5*5*8.
  static MelConfig vocoder_profile(int sample_rate = 16000);
};

struct MelSpectrogram {
  TensorT<float> values;  // frames x n_mels, natural-log compressed
  MelConfig config;
  int sample_rate = 16000;

  int frames() const { return values.shape[0]; }
  int n_mels() const { return values.shape[1]; }
};

// Triangular filterbank rows (n_mels x (n_fft/2 + 1)), HTK mel scale.
TensorT<double> mel_filterbank(const MelConfig& cfg, int sample_rate);

MelSpectrogram mel_spectrogram(const AudioClip& clip, const MelConfig& cfg);

// Energy VAD over 25 ms / 10 ms frames: leading and trailing frames whose RMS
// sits more than threshold_db below the loudest frame are dropped; the
// interior is kept untouched. Errors out when everything is below threshold.
AudioClip vad_trim(const AudioClip& clip, double threshold_db = 30.0);

}  // namespace scwr

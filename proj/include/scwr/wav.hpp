// wav.hpp -- RIFF/WAVE PCM-16 mono reader and writer.
#pragma once

#include <string>
#include <vector>

namespace scwr {

struct AudioClip {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = 16000;

  double duration() const {
    return double(samples.size()) / double(sample_rate);
  }
};

// 16-bit PCM mono only; integer sample v maps to v / 32768.
AudioClip load_wav(const std::string& path);

// Scalar v maps to clamp(round(v * 32768), -32767, 32767): symmetric
// saturation, and exact inverse of the load mapping for every code except
// -32768 (which reads as -1.0 and writes back as -32767).
void write_wav(const AudioClip& clip, const std::string& path);

}  // namespace scwr

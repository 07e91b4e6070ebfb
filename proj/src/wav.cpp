#include "scwr/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "scwr/common.hpp"

namespace scwr {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void wr_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& f, uint16_t v) {
  uint8_t b[2] = {uint8_t(v), uint8_t(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail_data("cannot open wav file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail_data("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  AudioClip clip;
  bool have_data = false;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* hdr = bytes.data() + pos;
    uint32_t chunk_size = rd_u32(hdr + 4);
    size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (body + 16 > bytes.size()) fail_data("truncated fmt chunk: " + path);
      format = rd_u16(bytes.data() + body);
      channels = rd_u16(bytes.data() + body + 2);
      rate = rd_u32(bytes.data() + body + 4);
      bits = rd_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) fail_data("data chunk before fmt chunk: " + path);
      if (format != 1) fail_data("unsupported wav encoding (PCM only): " + path);
      if (channels != 1) fail_data("multi-channel wav rejected (mono only): " + path);
      if (bits != 16) fail_data("unsupported sample width (16-bit only): " + path);
      size_t n = std::min<size_t>(chunk_size, bytes.size() - body) / 2;
      clip.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t s = int16_t(rd_u16(bytes.data() + body + 2 * i));
        clip.samples[i] = float(s) / 32768.0f;
      }
      clip.sample_rate = int(rate);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  if (!have_data) fail_data("wav file has no data chunk: " + path);
  return clip;
}

void write_wav(const AudioClip& clip, const std::string& path) {
  require(!clip.samples.empty(), "refusing to write empty wav: " + path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail_data("cannot write wav file: " + path);
  uint32_t n = uint32_t(clip.samples.size());
  uint32_t data_bytes = n * 2;

  f.write("RIFF", 4);
  wr_u32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, 1);  // PCM
  wr_u16(f, 1);  // mono
  wr_u32(f, uint32_t(clip.sample_rate));
  wr_u32(f, uint32_t(clip.sample_rate) * 2);  // byte rate
  wr_u16(f, 2);                               // block align
  wr_u16(f, 16);                              // bits per sample
  f.write("data", 4);
  wr_u32(f, data_bytes);
  for (float v : clip.samples) {
    long q = std::lround(double(v) * 32768.0);
    int16_t s = int16_t(std::clamp<long>(q, -32767, 32767));
    wr_u16(f, uint16_t(s));
  }
  if (!f) fail_data("short write to wav file: " + path);
}

}  // namespace scwr

// common.hpp -- error type, deterministic rng, threading helpers.
#pragma once

#include <cstdint>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace scwr {

// Error kinds map onto the CLI exit codes: usage=1, data=2, numeric=3.
enum class ErrorKind { kUsage = 1, kData = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& m) {
  throw Error(ErrorKind::kUsage, m);
}
[[noreturn]] inline void fail_data(const std::string& m) {
  throw Error(ErrorKind::kData, m);
}
[[noreturn]] inline void fail_numeric(const std::string& m) {
  throw Error(ErrorKind::kNumeric, m);
}

inline void require(bool cond, const std::string& m) {
  if (!cond) fail_data(m);
}

// Deterministic rng. mt19937_64 is bit-exact across platforms; the value
// mappings below avoid std::*_distribution, whose output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Independent per-step stream so training loops can be resumed mid-run.
  static Rng for_step(uint64_t seed, uint64_t step) {
    std::seed_seq seq{uint32_t(seed), uint32_t(seed >> 32), uint32_t(step),
                      uint32_t(step >> 32)};
    Rng r(0);
    r.gen_.seed(seq);
    return r;
  }

  uint64_t bits() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled.
  int uniform_int(int n) {
    uint64_t un = uint64_t(n);
    uint64_t lim = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= lim);
    return int(x % un);
  }

  // Marsaglia polar method, pair-cached.
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Kernel parallelism cap: SCWR_THREADS env var, default = logical cores.
int max_threads();

// Deterministic row partition: results do not depend on the thread count
// because every index is processed by exactly one worker in a fixed order.
void parallel_for(int64_t n, int64_t grain,
                  const std::function<void(int64_t, int64_t)>& fn);

}  // namespace scwr

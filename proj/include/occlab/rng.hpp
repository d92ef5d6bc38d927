#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace occlab {

// One independent random stream per (master seed, trial id). The stream is a
// 64-bit Mersenne Twister seeded through std::seed_seq, whose algorithm is
// fixed by the standard, so sequences are reproducible across platforms.
// Uniforms are built from raw 53-bit words instead of
// std::uniform_real_distribution, which is implementation defined.
class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32),
                      0x6f63636cU};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential() { return -std::log(uniform_open()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace occlab

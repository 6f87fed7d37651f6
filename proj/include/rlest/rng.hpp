#pragma once

#include <array>
#include <cstdint>

namespace rlest {

// Stream purpose tags. A stream is addressed by (master seed, purpose, index)
// so that parallel scheduling can never change which draws a task sees.
namespace stream {
inline constexpr std::uint64_t kPhiPrime = 1;
inline constexpr std::uint64_t kMatrixW = 2;
inline constexpr std::uint64_t kSignal = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kNoiseTilde = 5;
inline constexpr std::uint64_t kAuxV = 6;
inline constexpr std::uint64_t kTrial = 7;
inline constexpr std::uint64_t kPriorSample = 8;
inline constexpr std::uint64_t kSpectrum = 9;
inline constexpr std::uint64_t kOracle = 10;
}  // namespace stream

std::uint64_t mix64(std::uint64_t x);

// Counter-derived seed for (module/purpose, index) sub-streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t index);

// xoshiro256++ with Box-Muller Gaussians. Self-contained so that output is
// identical across compilers and standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t master, std::uint64_t purpose, std::uint64_t index)
      : RngStream(derive_seed(master, purpose, index)) {}

  std::uint64_t next_u64();
  double uniform();   // [0, 1)
  double gaussian();  // N(0, 1)

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace rlest

#pragma once

#include <cstdint>
#include <random>

namespace cfcast {

/// splitmix64 step; used to derive well-mixed child seeds from a user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic seed for sub-stream `stream` / element `index` of a run.
/// Distinct (stream, index) pairs give independent-looking streams, so
/// per-unit work can run concurrently without changing any output.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ (0xd1b54a32d192ed03ULL * (stream + 1))) ^
                    (0x9e3779b97f4a7c15ULL * (index + 1)));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

}  // namespace cfcast

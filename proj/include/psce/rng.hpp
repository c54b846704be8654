#pragma once

#include <cstdint>
#include <random>

namespace psce {

// Independent generator for a (master seed, stream, substream) triple.
// Replicates draw from their own stream so results do not depend on the
// order or thread in which they run.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return std::mt19937_64(seq);
}

// A 64-bit seed drawn from a substream, for handing to another component.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t sub = 0) {
  auto gen = substream(seed, stream, sub);
  return gen();
}

}  // namespace psce

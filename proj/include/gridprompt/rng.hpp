// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace gridprompt {

// SplitMix64: 64-bit state, passes BigCrush, identical output on every
// platform. All randomness in the pipeline flows through this generator so
// that (seed, record id) fully determines every draw.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Stateless mix of (key, data); same inputs, same output.
  static constexpr std::uint64_t mix(std::uint64_t key, std::uint64_t data) noexcept {
    std::uint64_t z = key ^ data;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Record-scoped deterministic stream. The stream seed is derived from the
// global seed, the record id, and the caption index, so worker count and
// record processing order cannot perturb any draw.
class RecordRng {
 public:
  explicit RecordRng(std::uint64_t stream_seed) noexcept
      : seed_(stream_seed), gen_(stream_seed) {}

  static RecordRng for_record(std::uint64_t global_seed, std::string_view record_id,
                              std::uint64_t caption_index = 0) noexcept {
    const std::uint64_t record_key = SplitMix64::mix(global_seed, fnv1a64(record_id));
    return RecordRng(SplitMix64::mix(record_key, caption_index));
  }

  std::uint64_t next() noexcept { return gen_.next(); }

  // Uniform draw in [0, n) via 128-bit multiply-shift; n must be > 0.
  std::uint64_t bounded(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  std::uint64_t stream_seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  SplitMix64 gen_;
};

}  // namespace gridprompt

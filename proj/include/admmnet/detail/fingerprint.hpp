#pragma once

#include <bit>
#include <cstdint>
#include <span>

namespace admmnet::detail {

// FNV-1a over the bit patterns of a sequence of doubles.
class Fingerprint {
 public:
  void add(std::span<const double> values) noexcept {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        hash_ ^= (bits & 0xffu);
        hash_ *= 0x100000001b3ull;
        bits >>= 8;
      }
    }
  }
  void add(double v) noexcept { add(std::span<const double>(&v, 1)); }
  std::uint64_t value() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

}  // namespace admmnet::detail

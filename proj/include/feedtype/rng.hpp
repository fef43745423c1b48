#pragma once

#include <array>
#include <cstdint>

namespace feedtype {

// Counter-based generator (Philox4x32-10). Draw k of stream (seed, stream) is
// a pure function of (seed, stream, k), so any worker can replay any stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t position() const noexcept { return index_; }

  // Next raw 64-bit word.
  std::uint64_t next_u64() noexcept {
    const std::uint64_t block = index_ >> 1;
    if (block != cached_block_) {
      cached_ = philox(block);
      cached_block_ = block;
    }
    const bool high = (index_ & 1) != 0;
    ++index_;
    return high ? (std::uint64_t{cached_[3]} << 32) | cached_[2]
                : (std::uint64_t{cached_[1]} << 32) | cached_[0];
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Stateless access to word k of the stream.
  static std::uint64_t word_at(std::uint64_t seed, std::uint64_t stream,
                               std::uint64_t k) noexcept {
    RngStream r(seed, stream);
    r.index_ = k;
    return r.next_u64();
  }

 private:
  std::array<std::uint32_t, 4> philox(std::uint64_t block) const noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
             static_cast<std::uint32_t>(p0)};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::array<std::uint32_t, 4> cached_{};
};

}  // namespace feedtype

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace vamh {

/// Philox4x32-10 block function. Exposed for known-answer testing.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream.
///
/// A stream is addressed by (seed, stream_id, lane). The seed is the Philox
/// key; stream_id and lane occupy the upper half of the counter, the draw
/// position the lower half. Two streams that differ in any coordinate never
/// share a counter value, so replications seeded as (master_seed, j) are
/// independent and reproducible regardless of execution order.
///
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kMaxStreamId = (std::uint64_t{1} << 48) - 1;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0,
                        std::uint16_t lane = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal.
  double normal();
  /// Gamma(shape, 1).
  double gamma(double shape);

  /// Same (seed, stream_id) on a different lane; starts at position zero.
  RandomStream lane(std::uint16_t lane) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint16_t lane_id() const { return lane_; }
  /// Number of 32-bit words consumed so far.
  std::uint64_t position() const { return block_ * 4 + index_ - 4; }

 private:
  std::uint32_t next32();
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint16_t lane_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned index_ = 4;
};

}  // namespace vamh

#include <doctest.h>

#include <cmath>
#include <concepts>
#include <random>

#include "vamh/random.hpp"

using vamh::RandomStream;

static_assert(std::uniform_random_bit_generator<RandomStream>);

TEST_CASE("philox4x32-10 known-answer vectors") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(vamh::philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(vamh::philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                         {0xffffffff, 0xffffffff}) ==
        W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(vamh::philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                         {0xa4093822, 0x299f31d0}) ==
        W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream reproduce the sequence") {
  RandomStream a(42, 7);
  RandomStream b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
  RandomStream c(42, 7);
  CHECK(c.normal() == RandomStream(42, 7).normal());
}

TEST_CASE("streams that differ in seed, id or lane differ") {
  RandomStream base(1, 0);
  RandomStream other_id(1, 1);
  RandomStream other_seed(2, 0);
  RandomStream other_lane = base.lane(1);
  int same_id = 0, same_seed = 0, same_lane = 0;
  for (int i = 0; i < 256; ++i) {
    const auto v = base();
    same_id += v == other_id();
    same_seed += v == other_seed();
    same_lane += v == other_lane();
  }
  CHECK(same_id == 0);
  CHECK(same_seed == 0);
  CHECK(same_lane == 0);
}

TEST_CASE("lane keeps seed and stream and restarts at position zero") {
  RandomStream s(9, 123);
  s();
  s();
  const RandomStream l = s.lane(2);
  CHECK(l.seed() == 9);
  CHECK(l.stream_id() == 123);
  CHECK(l.lane_id() == 2);
  CHECK(l.position() == 0);
  CHECK(s.position() == 4);
}

TEST_CASE("stream ids beyond the 48-bit range are rejected") {
  CHECK_NOTHROW(RandomStream(1, RandomStream::kMaxStreamId));
  CHECK_THROWS(RandomStream(1, RandomStream::kMaxStreamId + 1));
}

TEST_CASE("uniform, normal and gamma moments") {
  RandomStream rng(5, 0);
  const int n = 200000;
  double su = 0.0, sz = 0.0, sz2 = 0.0, sg = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sz += z;
    sz2 += z * z;
    sg += rng.gamma(2.5);
  }
  // 4 standard errors
  CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sz / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sz2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sg / n - 2.5) < 4.0 * std::sqrt(2.5 / n));
}

#include "vamh/random.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "vamh/errors.hpp"

namespace vamh {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t{a} * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id,
                           std::uint16_t lane)
    : seed_(seed), stream_id_(stream_id), lane_(lane) {
  if (stream_id > kMaxStreamId) {
    throw ConfigError("stream_id exceeds 48 bits");
  }
}

void RandomStream::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_),
      static_cast<std::uint32_t>((stream_id_ >> 32) & 0xFFFFu) |
          (std::uint32_t{lane_} << 16)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox4x32(ctr, key);
  ++block_;
  index_ = 0;
}

std::uint32_t RandomStream::next32() {
  if (index_ == 4) refill();
  return buffer_[index_++];
}

RandomStream::result_type RandomStream::operator()() {
  const std::uint64_t hi = next32();
  const std::uint64_t lo = next32();
  return (hi << 32) | lo;
}

double RandomStream::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(*this);
}

double RandomStream::gamma(double shape) {
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(*this);
}

RandomStream RandomStream::lane(std::uint16_t lane) const {
  return RandomStream(seed_, stream_id_, lane);
}

}  // namespace vamh

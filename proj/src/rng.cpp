#include "kdp/rng.hpp"

#include <cmath>
#include <numbers>

#include "kdp/errors.hpp"

namespace kdp {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

Stream::Stream(std::uint64_t master_seed, std::uint32_t replication,
               StreamPurpose purpose)
    : key_{static_cast<std::uint32_t>(master_seed),
           static_cast<std::uint32_t>(master_seed >> 32)},
      replication_(replication),
      purpose_(static_cast<std::uint32_t>(purpose)) {}

std::uint64_t Stream::next_u64() {
  if (buffered_ == 0) {
    buffer_ = philox4x32({static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32),
                          replication_, purpose_},
                         key_);
    ++block_;
    buffered_ = 2;
  }
  const int slot = 2 - buffered_;
  --buffered_;
  return (static_cast<std::uint64_t>(buffer_[2 * slot + 1]) << 32) |
         buffer_[2 * slot];
}

double Stream::uniform() {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t Stream::index(std::uint64_t n) {
  // Lemire's multiply-and-reject; unbiased for every n.
  if (n == 0) throw DomainError("Stream::index: empty range");
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

ScriptedVariates::ScriptedVariates(std::vector<double> normals,
                                   std::vector<double> uniforms,
                                   std::vector<std::uint64_t> indices)
    : normals_(std::move(normals)),
      uniforms_(std::move(uniforms)),
      indices_(std::move(indices)) {}

double ScriptedVariates::uniform() {
  if (next_uniform_ >= uniforms_.size())
    throw DomainError("ScriptedVariates: uniform script exhausted");
  return uniforms_[next_uniform_++];
}

double ScriptedVariates::normal() {
  if (next_normal_ >= normals_.size())
    throw DomainError("ScriptedVariates: normal script exhausted");
  return normals_[next_normal_++];
}

std::uint64_t ScriptedVariates::index(std::uint64_t n) {
  if (next_index_ >= indices_.size())
    throw DomainError("ScriptedVariates: index script exhausted");
  const auto i = indices_[next_index_++];
  if (i >= n) throw DomainError("ScriptedVariates: scripted index out of range");
  return i;
}

}  // namespace kdp

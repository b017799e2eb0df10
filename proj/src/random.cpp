#include "scbf/random.hpp"

#include <cmath>
#include <numbers>

namespace scbf {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Block index occupies the low 24 bits of the first counter word, the stream tag the high 8.
std::array<std::uint32_t, 4> counter_for(const RandomKey& key, std::uint32_t block) noexcept {
  return {(static_cast<std::uint32_t>(key.stream) << 24) | (block & 0x00FFFFFFu),
          static_cast<std::uint32_t>(key.step), static_cast<std::uint32_t>(key.step >> 32),
          static_cast<std::uint32_t>(key.trajectory)};
}

std::array<std::uint32_t, 2> key_for(const RandomKey& key) noexcept {
  return {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
}

inline double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
  // 53-bit mantissa in [0,1), flipped to (0,1] so log() is finite.
  const double x = (static_cast<double>(a >> 5) * 67108864.0 + static_cast<double>(b >> 6)) * 0x1.0p-53;
  return 1.0 - x;
}

std::array<double, 2> box_muller(const std::array<std::uint32_t, 4>& bits) noexcept {
  const double u1 = to_unit(bits[0], bits[1]);
  const double u2 = to_unit(bits[2], bits[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) noexcept {
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

void fill_normals(const RandomKey& key, std::span<double> out) {
  const auto k = key_for(key);
  std::size_t j = 0;
  for (std::uint32_t block = 0; j < out.size(); ++block) {
    const auto z = box_muller(philox4x32(counter_for(key, block), k));
    out[j++] = z[0];
    if (j < out.size()) out[j++] = z[1];
  }
}

double normal_at(const RandomKey& key, std::uint32_t j) {
  const auto z = box_muller(philox4x32(counter_for(key, j / 2), key_for(key)));
  return z[j % 2];
}

double uniform_at(const RandomKey& key, std::uint32_t j) {
  const auto bits = philox4x32(counter_for(key, j / 2), key_for(key));
  return (j % 2 == 0) ? to_unit(bits[0], bits[1]) : to_unit(bits[2], bits[3]);
}

}  // namespace scbf

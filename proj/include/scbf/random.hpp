#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace scbf {

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Stateless: output depends only on (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

/// Independent sub-streams drawn from one seed.
enum class Stream : std::uint32_t {
  kNoise = 1,         // Wiener increments
  kBridge = 2,        // Brownian-bridge refinement when a step is split
  kInitial = 3,       // random initial conditions
  kProperty = 4,      // property-test field generator
  kDirection = 5,     // finite-difference directions
};

/// Address of one block of Gaussian draws. Every draw is a pure function of this key and its index,
/// so ensembles can be generated in any order or in parallel with bit-identical results.
struct RandomKey {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;
  Stream stream = Stream::kNoise;
};

/// Fills `out` with i.i.d. N(0,1) draws; `out[j]` depends only on (key, j).
void fill_normals(const RandomKey& key, std::span<double> out);

/// Single draw at index j.
double normal_at(const RandomKey& key, std::uint32_t j);

/// Uniform double in (0, 1] at index j (53 random bits).
double uniform_at(const RandomKey& key, std::uint32_t j);

}  // namespace scbf

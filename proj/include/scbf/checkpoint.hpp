#pragma once

// Self-describing JSON checkpoints. Coefficients are stored as [re, im] pairs in basis order
// (mode-major, then component) with 17 significant digits, so a round trip is bit-exact.
//
//   { "format": "scbf-checkpoint", "version": 1, "kind": "field" | "path" | "coupled",
//     "basis": { "n", "N", "eigen_cut" }, "u": [[re, im], ...],
//     path:    "rng": { "seed", "trajectory", "step" }, "ledger": {...}, "x_norm_sq"
//     coupled: "rng", "v", "log_phi", "int_h_sq", "t", "mode" }

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "scbf/coupling.hpp"
#include "scbf/integrator.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

inline constexpr int kCheckpointVersion = 1;

struct PathCheckpoint {
  VelocityField u;
  EnergyLedger ledger;
  double x_norm_sq = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;
};

struct CoupledCheckpoint {
  CouplingState state;
  CouplingMode mode = CouplingMode::kTilted;
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
};

nlohmann::json field_to_json(const VelocityField& u);
/// Throws MismatchError when the coefficient count does not fit the basis.
VelocityField field_from_json(const nlohmann::json& j, const BasisPtr& basis);

void save_field(const std::filesystem::path& file, const VelocityField& u);
void save_checkpoint(const std::filesystem::path& file, const PathCheckpoint& c);
void save_checkpoint(const std::filesystem::path& file, const CoupledCheckpoint& c);

/// Loaders check format, version and that the stored basis equals `basis`.
VelocityField load_field(const std::filesystem::path& file, const BasisPtr& basis);
PathCheckpoint load_path_checkpoint(const std::filesystem::path& file, const BasisPtr& basis);
CoupledCheckpoint load_coupled_checkpoint(const std::filesystem::path& file, const BasisPtr& basis);

}  // namespace scbf

#include "scbf/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "scbf/errors.hpp"

namespace scbf {

using nlohmann::json;

namespace {

json basis_json(const SpectralBasis& b) {
  return {{"n", b.dimension()}, {"N", b.resolution()}, {"eigen_cut", b.eigen_cut()}};
}

json ledger_json(const EnergyLedger& l) {
  return {{"t", l.t},           {"norm_h_sq", l.norm_h_sq},   {"int_v", l.int_v},
          {"int_lr1", l.int_lr1}, {"int_h", l.int_h},           {"martingale", l.martingale},
          {"quad_var", l.quad_var}, {"int_trace", l.int_trace}};
}

EnergyLedger ledger_from(const json& j) {
  EnergyLedger l;
  l.t = j.at("t");
  l.norm_h_sq = j.at("norm_h_sq");
  l.int_v = j.at("int_v");
  l.int_lr1 = j.at("int_lr1");
  l.int_h = j.at("int_h");
  l.martingale = j.at("martingale");
  l.quad_var = j.at("quad_var");
  l.int_trace = j.at("int_trace");
  return l;
}

json header(const char* kind, const VelocityField& u) {
  json j;
  j["format"] = "scbf-checkpoint";
  j["version"] = kCheckpointVersion;
  j["kind"] = kind;
  j["basis"] = basis_json(u.basis());
  j["u"] = field_to_json(u);
  return j;
}

void write(const std::filesystem::path& file, const json& j) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + file.string());
  out << j.dump(1) << '\n';
  if (!out) throw Error("write failed for " + file.string());
}

json read(const std::filesystem::path& file, const char* kind, const BasisPtr& basis) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint " + file.string() + ": " + e.what());
  }
  if (j.value("format", "") != "scbf-checkpoint") throw Error(file.string() + " is not a checkpoint");
  int version = j.value("version", -1);
  if (version != kCheckpointVersion)
    throw MismatchError("checkpoint version " + std::to_string(version) + " in " + file.string() + ", expected " +
                        std::to_string(kCheckpointVersion));
  if (j.value("kind", "") != kind) throw MismatchError(file.string() + " holds a '" + j.value("kind", "") + "' checkpoint, expected '" + kind + "'");
  const json& b = j.at("basis");
  if (b.at("n").get<int>() != basis->dimension() || b.at("N").get<int>() != basis->resolution() ||
      b.at("eigen_cut").get<double>() != basis->eigen_cut())
    throw MismatchError("checkpoint basis " + b.dump() + " does not match " + basis_json(*basis).dump());
  return j;
}

void rng_to(json& j, std::uint64_t seed, std::uint64_t traj, std::uint64_t step) {
  j["rng"] = {{"seed", seed}, {"trajectory", traj}, {"step", step}};
}

}  // namespace

json field_to_json(const VelocityField& u) {
  json arr = json::array();
  for (const Complex& c : u.coefficients()) arr.push_back({c.real(), c.imag()});
  return arr;
}

VelocityField field_from_json(const json& j, const BasisPtr& basis) {
  VelocityField u(basis);
  auto coef = u.coefficients();
  if (!j.is_array() || j.size() != coef.size())
    throw MismatchError("expected " + std::to_string(coef.size()) + " coefficients, found " +
                        std::to_string(j.is_array() ? j.size() : 0));
  const int n = basis->dimension();
  for (std::size_t q = 0; q < coef.size(); ++q)
    u.at(q / std::size_t(n), int(q % std::size_t(n))) = Complex(j[q].at(0).get<double>(), j[q].at(1).get<double>());
  return u;
}

void save_field(const std::filesystem::path& file, const VelocityField& u) { write(file, header("field", u)); }

void save_checkpoint(const std::filesystem::path& file, const PathCheckpoint& c) {
  json j = header("path", c.u);
  rng_to(j, c.seed, c.trajectory, c.step);
  j["ledger"] = ledger_json(c.ledger);
  j["x_norm_sq"] = c.x_norm_sq;
  write(file, j);
}

void save_checkpoint(const std::filesystem::path& file, const CoupledCheckpoint& c) {
  json j = header("coupled", c.state.u);
  rng_to(j, c.seed, c.trajectory, c.state.step);
  j["v"] = field_to_json(c.state.v);
  j["log_phi"] = c.state.log_phi;
  j["int_h_sq"] = c.state.int_h_sq;
  j["t"] = c.state.t;
  j["mode"] = coupling_mode_name(c.mode);
  write(file, j);
}

VelocityField load_field(const std::filesystem::path& file, const BasisPtr& basis) {
  // A path or coupled checkpoint also carries a usable field.
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read field file " + file.string());
  json peek;
  try {
    peek = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed field file " + file.string() + ": " + e.what());
  }
  std::string kind = peek.value("kind", "field");
  json j = read(file, kind == "path" || kind == "coupled" ? kind.c_str() : "field", basis);
  return field_from_json(j.at("u"), basis);
}

PathCheckpoint load_path_checkpoint(const std::filesystem::path& file, const BasisPtr& basis) {
  json j = read(file, "path", basis);
  PathCheckpoint c{field_from_json(j.at("u"), basis), {}, 0.0, 0, 0, 0};
  c.ledger = ledger_from(j.at("ledger"));
  c.x_norm_sq = j.at("x_norm_sq");
  c.seed = j.at("rng").at("seed");
  c.trajectory = j.at("rng").at("trajectory");
  c.step = j.at("rng").at("step");
  return c;
}

CoupledCheckpoint load_coupled_checkpoint(const std::filesystem::path& file, const BasisPtr& basis) {
  json j = read(file, "coupled", basis);
  CoupledCheckpoint c{CouplingState{field_from_json(j.at("u"), basis), field_from_json(j.at("v"), basis), 0.0, 0.0, 0.0, 0},
                      CouplingMode::kTilted, 0, 0};
  c.state.log_phi = j.at("log_phi");
  c.state.int_h_sq = j.at("int_h_sq");
  c.state.t = j.at("t");
  c.state.step = j.at("rng").at("step");
  auto mode = parse_coupling_mode(j.at("mode"));
  if (!mode) throw Error("unknown coupling mode in " + file.string());
  c.mode = *mode;
  c.seed = j.at("rng").at("seed");
  c.trajectory = j.at("rng").at("trajectory");
  return c;
}

}  // namespace scbf

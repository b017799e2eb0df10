// Command-line front end. The configuration document sets everything; flags override it.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scbf/errors.hpp"
#include "scbf/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> paths;
  std::optional<std::string> format;
};

std::vector<std::string> split_formats(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int run(scbf::Command cmd, const Overrides& o) {
  using namespace scbf;
  try {
    nlohmann::json doc = nlohmann::json::object();
    if (!o.config.empty()) {
      std::ifstream in(o.config);
      if (!in) throw ConfigError("cannot read config file " + o.config);
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(o.config + ": " + e.what());
      }
      if (!doc.is_object()) throw ConfigError(o.config + ": expected an object");
    }
    if (doc.contains("command") && doc["command"] != command_name(cmd))
      throw ConfigError("command: document says '" + doc["command"].dump() + "' but the subcommand is '" +
                        command_name(cmd) + "'");
    doc["command"] = command_name(cmd);
    if (o.seed) doc["seed"] = *o.seed;
    if (o.out) doc["out"] = *o.out;
    if (o.paths) doc["paths"] = *o.paths;
    if (o.format) doc["formats"] = split_formats(*o.format);
    ExperimentSpec spec = spec_from_json(doc);
    return run_and_emit(spec, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin simulator and Monte Carlo checks for stochastic Brinkman-Forchheimer flow"};
  app.require_subcommand(1);
  Overrides o;
  std::optional<scbf::Command> chosen;

  for (scbf::Command c : {scbf::Command::kSimulate, scbf::Command::kCouple, scbf::Command::kErgodic,
                          scbf::Command::kHarnack, scbf::Command::kGradcheck, scbf::Command::kProptest}) {
    auto* sub = app.add_subcommand(scbf::command_name(c));
    sub->add_option("--config", o.config, "JSON experiment document")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Monte Carlo seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--paths", o.paths, "number of trajectories");
    sub->add_option("--format", o.format, "comma-separated subset of csv,json");
    sub->callback([&chosen, c] { chosen = c; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : scbf::kExitConfig;
  }
  return run(*chosen, o);
}

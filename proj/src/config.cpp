#include "scbf/config.hpp"

#include <cmath>
#include <set>

#include "scbf/checkpoint.hpp"
#include "scbf/errors.hpp"

namespace scbf {

using nlohmann::json;

const char* command_name(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kCouple: return "couple";
    case Command::kErgodic: return "ergodic";
    case Command::kHarnack: return "harnack";
    case Command::kGradcheck: return "gradcheck";
    case Command::kProptest: return "proptest";
  }
  return "?";
}

std::optional<Command> parse_command(const std::string& s) {
  for (Command c : {Command::kSimulate, Command::kCouple, Command::kErgodic, Command::kHarnack, Command::kGradcheck,
                    Command::kProptest})
    if (s == command_name(c)) return c;
  return std::nullopt;
}

namespace {

// Reads keys out of one JSON object and remembers which were used, so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string where(const std::string& key = "") const {
    std::string p = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
    return p.empty() ? "<root>" : p;
  }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) {
    if (auto v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (auto v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (auto v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + ": expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (auto v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (auto v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (auto v = find(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (auto v = find(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(where(key) + ": expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void get(const char* key, std::array<int, 3>& out) {
    if (auto v = find(key)) {
      if (!v->is_array() || v->size() < 2 || v->size() > 3) throw ConfigError(where(key) + ": expected 2 or 3 integers");
      out = {0, 0, 0};
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number_integer()) throw ConfigError(where(key) + ": expected integers");
        out[i] = (*v)[i].get<int>();
      }
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_initial(Reader& parent, const char* key, InitialSpec& s) {
  const json* v = parent.find(key);
  if (!v) return;
  Reader r(*v, parent.where(key));
  r.get("kind", s.kind);
  r.get("k", s.k);
  r.get("polarization", s.polarization);
  r.get("amplitude", s.amplitude);
  r.get("id", s.id);
  r.get("norm", s.norm);
  r.get("decay", s.decay);
  r.get("path", s.path);
  r.get("distance", s.distance);
  r.get("low_only", s.low_only);
  r.finish();
}

nlohmann::ordered_json initial_json(const InitialSpec& s) {
  nlohmann::ordered_json j;
  j["kind"] = s.kind;
  j["k"] = s.k;
  j["polarization"] = s.polarization;
  j["amplitude"] = s.amplitude;
  j["id"] = s.id;
  j["norm"] = s.norm;
  j["decay"] = s.decay;
  j["path"] = s.path;
  j["distance"] = s.distance;
  j["low_only"] = s.low_only;
  return j;
}

void check_times(const std::vector<double>& times, double dt, const char* key) {
  double prev = -1.0;
  for (double t : times) {
    if (!(t >= 0.0) || t < prev) throw ConfigError(std::string(key) + ": times must be nonnegative and nondecreasing");
    try {
      step_count(t, dt);
    } catch (const InvalidArgument&) {
      throw ConfigError(std::string(key) + ": time " + std::to_string(t) + " is not a multiple of dt");
    }
    prev = t;
  }
}

NoiseModel build_noise(const ExperimentSpec& s, const BasisPtr& basis) {
  std::vector<double> amp = s.noise.amplitudes;
  if (amp.empty()) amp.assign(NoiseModel::dof_count(*basis), s.noise.amplitude);
  if (s.noise.kind == NoiseKind::kMultiplicative) return NoiseModel::multiplicative(basis, amp, s.noise.q0, s.noise.q1);
  return NoiseModel::additive(basis, amp);
}

}  // namespace

nlohmann::ordered_json ExperimentSpec::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_name(command);
  j["n"] = n;
  j["N"] = N;
  j["eigen_cut"] = eigen_cut;
  j["mu"] = params.mu;
  j["beta"] = params.beta;
  j["r"] = params.r;
  j["alpha"] = params.alpha;
  nlohmann::ordered_json nz;
  nz["kind"] = noise.kind == NoiseKind::kAdditive ? "additive" : "multiplicative";
  if (noise.amplitudes.empty())
    nz["amplitude"] = noise.amplitude;
  else
    nz["amplitude"] = noise.amplitudes;
  nz["q0"] = noise.q0;
  nz["q1"] = noise.q1;
  j["noise"] = nz;
  j["regime"] = regime_name(regime);
  j["dt"] = dt;
  j["T"] = T;
  j["seed"] = seed;
  j["paths"] = paths;
  j["sample_every"] = sample_every;
  j["split_on_guard"] = split_on_guard;
  j["x"] = initial_json(x);
  j["y"] = initial_json(y);
  j["times"] = times;
  j["girsanov_times"] = girsanov_times;
  j["coupling"] = coupling;
  j["observables"] = observables;
  j["cap"] = cap;
  j["burn_in"] = burn_in;
  j["directions"] = directions;
  j["displacement"] = displacement;
  j["trials"] = trials;
  j["checkpoint"] = checkpoint;
  j["resume"] = resume;
  j["out"] = out;
  j["formats"] = formats;
  return j;
}

ExperimentSpec spec_from_json(const json& doc) {
  ExperimentSpec s;
  Reader r(doc, "");
  std::string cmd = command_name(s.command);
  r.get("command", cmd);
  auto c = parse_command(cmd);
  if (!c) throw ConfigError("command: unknown command '" + cmd + "'");
  s.command = *c;
  r.get("n", s.n);
  r.get("N", s.N);
  r.get("eigen_cut", s.eigen_cut);
  r.get("mu", s.params.mu);
  r.get("beta", s.params.beta);
  r.get("r", s.params.r);
  r.get("alpha", s.params.alpha);
  if (const json* nz = r.find("noise")) {
    Reader nr(*nz, "noise");
    std::string kind = "additive";
    nr.get("kind", kind);
    if (kind == "additive")
      s.noise.kind = NoiseKind::kAdditive;
    else if (kind == "multiplicative")
      s.noise.kind = NoiseKind::kMultiplicative;
    else
      throw ConfigError("noise.kind: expected 'additive' or 'multiplicative', got '" + kind + "'");
    if (const json* a = nr.find("amplitude"); a && a->is_array())
      nr.get("amplitude", s.noise.amplitudes);
    else
      nr.get("amplitude", s.noise.amplitude);
    nr.get("q0", s.noise.q0);
    nr.get("q1", s.noise.q1);
    nr.finish();
  }
  std::string regime;
  r.get("regime", regime);
  r.get("dt", s.dt);
  r.get("T", s.T);
  r.get("seed", s.seed);
  r.get("paths", s.paths);
  r.get("sample_every", s.sample_every);
  r.get("split_on_guard", s.split_on_guard);
  read_initial(r, "x", s.x);
  read_initial(r, "y", s.y);
  r.get("times", s.times);
  r.get("girsanov_times", s.girsanov_times);
  r.get("coupling", s.coupling);
  r.get("observables", s.observables);
  r.get("cap", s.cap);
  r.get("burn_in", s.burn_in);
  r.get("directions", s.directions);
  r.get("displacement", s.displacement);
  r.get("trials", s.trials);
  r.get("checkpoint", s.checkpoint);
  r.get("resume", s.resume);
  r.get("out", s.out);
  r.get("formats", s.formats);
  r.finish();

  if (!regime.empty()) {
    auto rg = parse_regime(regime);
    if (!rg) throw ConfigError("regime: unknown tag '" + regime + "'");
    s.regime = *rg;
  } else {
    s.regime = infer_regime(s.n, s.params, s.noise.kind);
  }
  validate_spec(s);
  return s;
}

ExperimentSpec parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return spec_from_json(doc);
}

void validate_spec(ExperimentSpec& s) {
  BasisPtr basis;
  try {
    s.params.validate();
    basis = SpectralBasis::build(s.n, s.N, s.eigen_cut);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!(s.dt > 0.0)) throw ConfigError("dt: must be positive");
  if (!(s.T >= 0.0)) throw ConfigError("T: must be nonnegative");
  check_times({s.T}, s.dt, "T");
  if (s.paths < 1) throw ConfigError("paths: must be at least 1");
  if (s.coupling != "tilted" && s.coupling != "weighted") throw ConfigError("coupling: expected 'tilted' or 'weighted'");
  for (const auto& f : s.formats)
    if (f != "csv" && f != "json") throw ConfigError("formats: unknown format '" + f + "'");
  for (double c : s.observables)
    if (!(c >= 0.0)) throw ConfigError("observables: scales must be nonnegative");
  if (!(s.cap > 0.0)) throw ConfigError("cap: must be positive");
  if (!(s.burn_in >= 0.0) || (s.command == Command::kErgodic && !(s.burn_in < s.T)))
    throw ConfigError("burn_in: must satisfy 0 <= burn_in < T");
  check_times({s.burn_in}, s.dt, "burn_in");
  if (s.x.kind == "offset") throw ConfigError("x.kind: 'offset' is only meaningful for y");
  for (const auto* init : {&s.x, &s.y})
    if (init->kind != "zero" && init->kind != "mode" && init->kind != "random" && init->kind != "file" &&
        init->kind != "offset")
      throw ConfigError((init == &s.x ? std::string("x") : std::string("y")) + ".kind: unknown kind '" + init->kind + "'");

  if (s.times.empty()) {
    int m = s.command == Command::kCouple ? 8 : 4;
    for (int i = 1; i <= m; ++i) s.times.push_back(std::round(s.T * i / m / s.dt) * s.dt);
  }
  check_times(s.times, s.dt, "times");
  check_times(s.girsanov_times, s.dt, "girsanov_times");
  if (s.command == Command::kCouple && s.times.size() < 3) throw ConfigError("times: the rate fit needs at least 3 times");

  // The regime tag must fit the parameters and its hypotheses must hold.
  NoiseModel noise = [&] {
    try {
      return build_noise(s, basis);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
  }();
  HarnackConstants c = harnack_constants(s.params, noise, s.regime);
  if (!c.valid()) {
    std::string msg = std::string("regime ") + regime_name(s.regime) + ":";
    for (const auto& v : c.violations) msg += " " + v + ";";
    msg.pop_back();
    throw ConfigError(msg);
  }
}

VelocityField make_initial(const InitialSpec& s, const BasisPtr& basis, std::uint64_t /*seed*/,
                           const VelocityField* anchor) {
  // Initial data use their own fixed key so that changing the Monte Carlo seed never moves x or y.
  constexpr std::uint64_t kInitialSeed = 0x1d;
  auto unit = [&](bool low) {
    auto e = random_field(basis, kInitialSeed, s.id, 1.0, s.decay, Stream::kInitial);
    if (low) e = low_part(e);
    double nrm = norm_h(e);
    if (nrm == 0.0) throw ConfigError("random initial field vanished");
    e *= 1.0 / nrm;
    return e;
  };
  if (s.kind == "zero") return VelocityField(basis);
  if (s.kind == "mode") {
    if (basis->find(s.k) == basis->size()) throw ConfigError("initial mode is not a retained wavevector");
    if (s.polarization < 0 || s.polarization >= basis->polarizations()) throw ConfigError("initial polarization out of range");
    VelocityField u(basis);
    u.add_mode(s.k, s.polarization, s.amplitude);
    return u;
  }
  if (s.kind == "random") {
    if (!(s.norm >= 0.0)) throw ConfigError("initial norm must be nonnegative");
    return s.norm * unit(s.low_only);
  }
  if (s.kind == "file") {
    try {
      return load_field(s.path, basis);
    } catch (const Error& e) {
      throw ConfigError(std::string("initial field: ") + e.what());
    }
  }
  if (s.kind == "offset") {
    if (!anchor) throw ConfigError("offset initial state needs an anchor");
    return *anchor + s.distance * unit(s.low_only);
  }
  throw ConfigError("unknown initial kind '" + s.kind + "'");
}

Workspace::Workspace(const ExperimentSpec& spec)
    : basis(SpectralBasis::build(spec.n, spec.N, spec.eigen_cut)),
      noise(std::make_unique<NoiseModel>(build_noise(spec, basis))),
      x(make_initial(spec.x, basis, spec.seed)),
      y(make_initial(spec.y, basis, spec.seed, &x)) {
  ensemble.basis = basis;
  ensemble.params = spec.params;
  ensemble.noise = noise.get();
  ensemble.step.dt = spec.dt;
  ensemble.step.split_on_guard = spec.split_on_guard;
  ensemble.regime = spec.regime;
  ensemble.seed = spec.seed;
  ensemble.paths = spec.paths;
  ensemble.workers = worker_count();
}

}  // namespace scbf

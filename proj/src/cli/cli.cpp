#include "liefrw/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "liefrw/integrate.hpp"
#include "liefrw/noether.hpp"
#include "liefrw/reduce.hpp"
#include "liefrw/symmetry.hpp"

namespace liefrw::cli {

namespace {

/// K vanishes on constrained lapse runs; tolerance relative to its term size.
constexpr double kLapseFluxTolerance = 1e-9;

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string exact(double v) { return format("%.17g", v); }
std::string sci(double v) { return format("%.3e", v); }

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  double v = to_double(key, value);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

Rational to_rational(const std::string& what, const std::string& text) {
  try {
    Expr e = normalize(parse(text));
    if (e.is_constant()) return e.value();
  } catch (const ParseError&) {
  }
  throw ConfigError(what + " must be a rational number, got '" + text + "'");
}

Expr to_expr(const std::string& what, const std::string& text) {
  try {
    return normalize(parse(text));
  } catch (const ParseError& err) {
    throw ConfigError(what + ": " + err.what());
  }
}

ODESystem make_system(const RunConfig& cfg) {
  if (cfg.system == "conformal") return frw_system(cfg.model);
  if (cfg.system == "proper") return frw_proper_time_system(cfg.model);
  return frw_lapse_system(cfg.model);
}

VectorField make_generator(const std::string& name, const JetContext& ctx, const RunConfig& cfg) {
  if (name == "G") {
    GeneratorFamily fam = GeneratorFamily::symbolic();
    if (cfg.c1) fam.c1 = *cfg.c1;
    if (cfg.c2) fam.c2 = *cfg.c2;
    if (cfg.mu) fam.mu = *cfg.mu;
    return fam.field(ctx);
  }
  if (name == "custom") {
    if (cfg.field.empty()) throw ConfigError("generator 'custom' needs 'field'");
    std::map<Symbol, Expr> coefficients;
    for (const auto& entry : split(cfg.field, ';')) {
      if (entry.empty()) continue;
      auto colon = entry.find(':');
      if (colon == std::string::npos) throw ConfigError("field entries take the form 'coordinate: expression'");
      std::string coord = trim(entry.substr(0, colon));
      auto base = ctx.base_variables();
      auto it = std::find_if(base.begin(), base.end(), [&](Symbol s) { return symbol_name(s) == coord; });
      if (it == base.end()) throw ConfigError("'" + coord + "' is not a base coordinate of the system");
      coefficients[*it] = to_expr("field coefficient", entry.substr(colon + 1));
    }
    try {
      return VectorField(ctx, coefficients);
    } catch (const ContextMismatch& err) {
      throw ConfigError(std::string("field: ") + err.what());
    }
  }
  return named_generator(name, ctx);
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

void require_numeric(const RunConfig& cfg) {
  if (cfg.model.potential.is_opaque()) throw ConfigError("numeric runs need an explicit potential, not 'opaque'");
}

State initial_state(const RunConfig& cfg) {
  const auto& s = frw_symbols();
  if (!cfg.adot0) return constrained_initial_state(cfg.a0, cfg.phi0, cfg.phidot0, cfg.model, cfg.branch, cfg.N0);
  if (!(cfg.a0 > 0.0)) throw NonPositiveScaleFactor("a0 must be positive");
  State st;
  st.values.emplace(s.a, std::make_pair(cfg.a0, *cfg.adot0));
  st.values.emplace(s.phi, std::make_pair(cfg.phi0, cfg.phidot0));
  if (cfg.model.lapse == LapseMode::Dynamical) st.values.emplace(s.N, std::make_pair(cfg.N0, 0.0));
  return st;
}

std::string describe_state(const State& st) {
  std::string out = "t = " + exact(st.t);
  for (const auto& [u, v] : st.values) {
    out += ", " + symbol_name(u) + " = " + exact(v.first) + ", " + symbol_name(u) + "dot = " + exact(v.second);
  }
  return out;
}

/// Resolved flux of time translation on the selected unit-lapse or lapse model.
Expr time_translation_flux(const ModelConfig& model) {
  bool lapse = model.lapse == LapseMode::Dynamical;
  JetContext ctx = frw_context(lapse);
  Expr candidate = lapse ? flux_candidate_K(model) : flux_candidate_P(model);
  return verify_conservation_law(candidate, generator_Y(ctx), lagrangian(model)).flux;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  file << text;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& known_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"system", "conformal, proper or lapse"},
      {"k", "spatial curvature: -1, 0 or 1"},
      {"potential", "opaque, exp:LAMBDA[:C], const:V0 or poly:c0,c1,..."},
      {"gens", "comma-separated generators: X, Y, Z, W, G (family) or custom"},
      {"c1", "family parameter c1 (symbolic when unset)"},
      {"c2", "family parameter c2 (symbolic when unset)"},
      {"mu", "family parameter mu (symbolic when unset)"},
      {"field", "custom generator, e.g. 't: 1; a: a'"},
      {"expect", "comma-separated expected verdicts (true/false) for check"},
      {"a0", "initial scale factor"},
      {"adot0", "initial adot; the constraint fixes it when unset"},
      {"phi0", "initial scalar field"},
      {"phidot0", "initial scalar field velocity"},
      {"N0", "initial lapse"},
      {"branch", "sign of adot0 from the constraint: 1 or -1"},
      {"t_end", "final time"},
      {"rtol", "relative tolerance"},
      {"atol", "absolute tolerance"},
      {"samples", "number of output samples"},
      {"x_end", "end of the reduction window in x = phi (default phi0 + 1)"},
      {"drift_max", "largest accepted monitor drift"},
      {"roundtrip_max", "largest accepted reduction round-trip error"},
      {"e0", "initial E for the off-constraint Noether run"},
      {"lagrangian", "proper, lapse or both"},
      {"numeric", "also run numeric conservation checks"},
      {"verify_reassembly", "check that collected coefficients reassemble the condition"},
      {"out", "report file"},
      {"csv", "trajectory CSV file"},
      {"reduced_csv", "reduced trajectory CSV file"},
  };
  return keys;
}

Settings parse_config_text(const std::string& text) {
  Settings settings;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    std::string value = trim(line.substr(eq + 1));
    const auto& keys = known_keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == key; })) {
      throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    if (!settings.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  return settings;
}

Potential parse_potential(const std::string& spec) {
  if (spec == "opaque") return Potential::opaque();
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "exp" && !rest.empty()) {
    auto parts = split(rest, ':');
    if (parts.size() > 2) throw ConfigError("potential exp takes exp:LAMBDA[:C]");
    Expr c = parts.size() == 2 ? to_expr("potential scale", parts[1]) : Expr(1);
    return Potential::exponential(c, to_rational("potential rate", parts[0]));
  }
  if (kind == "const" && !rest.empty()) return Potential::constant(to_rational("potential value", rest));
  if (kind == "poly" && !rest.empty()) {
    std::vector<Rational> coefficients;
    for (const auto& c : split(rest, ',')) coefficients.push_back(to_rational("polynomial coefficient", c));
    return Potential::polynomial(coefficients);
  }
  throw ConfigError("unknown potential '" + spec + "'");
}

RunConfig build_config(const Settings& settings) {
  RunConfig cfg;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };
  for (const auto& [key, value] : settings) {
    const auto& keys = known_keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == key; })) {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (auto v = get("system")) cfg.system = *v;
  if (cfg.system != "conformal" && cfg.system != "proper" && cfg.system != "lapse") {
    throw ConfigError("system must be conformal, proper or lapse, got '" + cfg.system + "'");
  }
  if (auto v = get("k")) cfg.model.k = to_int("k", *v);
  if (auto v = get("potential")) cfg.potential_spec = *v;
  cfg.model.potential = parse_potential(cfg.potential_spec);
  cfg.model.lapse = cfg.system == "lapse" ? LapseMode::Dynamical : LapseMode::Unit;
  cfg.model.validate();
  if (auto v = get("gens")) {
    for (const auto& g : split(*v, ',')) {
      if (g != "X" && g != "Y" && g != "Z" && g != "W" && g != "G" && g != "custom") {
        throw ConfigError("unknown generator '" + g + "'");
      }
      cfg.gens.push_back(g);
    }
    if (cfg.gens.empty()) throw ConfigError("gens must name at least one generator");
  }
  if (auto v = get("c1")) cfg.c1 = to_expr("c1", *v);
  if (auto v = get("c2")) cfg.c2 = to_expr("c2", *v);
  if (auto v = get("mu")) cfg.mu = to_expr("mu", *v);
  if (auto v = get("field")) cfg.field = *v;
  if (auto v = get("expect")) {
    for (const auto& e : split(*v, ',')) cfg.expect.push_back(to_bool("expect", e));
  }
  if (auto v = get("a0")) cfg.a0 = to_double("a0", *v);
  if (auto v = get("adot0")) cfg.adot0 = to_double("adot0", *v);
  if (auto v = get("phi0")) cfg.phi0 = to_double("phi0", *v);
  if (auto v = get("phidot0")) cfg.phidot0 = to_double("phidot0", *v);
  if (auto v = get("N0")) cfg.N0 = to_double("N0", *v);
  if (auto v = get("branch")) cfg.branch = to_int("branch", *v);
  if (cfg.branch != 1 && cfg.branch != -1) throw ConfigError("branch must be 1 or -1");
  if (auto v = get("t_end")) cfg.t_end = to_double("t_end", *v);
  if (auto v = get("rtol")) cfg.rtol = to_double("rtol", *v);
  if (auto v = get("atol")) cfg.atol = to_double("atol", *v);
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw ConfigError("rtol and atol must be positive");
  if (auto v = get("samples")) {
    int n = to_int("samples", *v);
    if (n < 2) throw ConfigError("samples must be at least 2");
    cfg.samples = static_cast<std::size_t>(n);
  }
  if (auto v = get("x_end")) cfg.x_end = to_double("x_end", *v);
  if (auto v = get("drift_max")) cfg.drift_max = to_double("drift_max", *v);
  if (auto v = get("roundtrip_max")) cfg.roundtrip_max = to_double("roundtrip_max", *v);
  if (auto v = get("e0")) cfg.e0 = to_double("e0", *v);
  if (auto v = get("lagrangian")) cfg.lagrangian = *v;
  if (cfg.lagrangian != "proper" && cfg.lagrangian != "lapse" && cfg.lagrangian != "both") {
    throw ConfigError("lagrangian must be proper, lapse or both");
  }
  if (auto v = get("numeric")) cfg.numeric = to_bool("numeric", *v);
  if (auto v = get("verify_reassembly")) cfg.verify_reassembly = to_bool("verify_reassembly", *v);
  if (auto v = get("out")) cfg.out = *v;
  if (auto v = get("csv")) cfg.csv = *v;
  if (auto v = get("reduced_csv")) cfg.reduced_csv = *v;
  return cfg;
}

std::uint64_t config_hash(const std::string& command, const Settings& settings) {
  std::uint64_t h = 14695981039346656037ull;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  feed(command + "\n");
  for (const auto& [key, value] : settings) {
    if (key == "out" || key == "csv" || key == "reduced_csv") continue;
    feed(key + "=" + value + "\n");
  }
  return h;
}

// ---------------------------------------------------------------------------

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  ODESystem sys = make_system(cfg);
  std::vector<std::string> gens = cfg.gens.empty() ? std::vector<std::string>{"X", "Y", "Z"} : cfg.gens;
  if (!cfg.expect.empty() && cfg.expect.size() != gens.size()) {
    throw ConfigError("expect must list one verdict per generator");
  }
  bool all = true;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    SymmetryReport report = symmetry_residual(make_generator(gens[i], sys.context, cfg), sys, gens[i]);
    bool expected = cfg.expect.empty() ? true : cfg.expect[i];
    bool ok = report.verdict == expected;
    all = all && ok;
    out << report.to_text();
    out << "  constraints preserved: "
        << (report.constraints.empty()     ? "n/a"
            : report.constraints_preserved ? "yes"
                                           : "no")
        << "\n";
    out << "  expected " << (expected ? "symmetry" : "not a symmetry") << ": " << (ok ? "ok" : "MISMATCH") << "\n";
  }
  out << "result: " << (all ? "pass" : "fail") << "\n";
  return all ? kOk : kMismatch;
}

int cmd_derive(const RunConfig& cfg, std::ostream& out) {
  ODESystem sys = make_system(cfg);
  DeterminingEquations de = determining_equations(sys);
  out << "ansatz: " << render(de.ansatz) << "\n";
  std::vector<std::string> vars;
  for (Symbol s : de.jet_variables) vars.push_back(symbol_name(s));
  out << "collected in: " << join(vars, ", ") << "\n";
  bool all = true;
  for (const auto& block : de.blocks) {
    out << "[" << block.label << "]\n";
    for (const auto& [exponents, coefficient] : block.coefficients.terms()) {
      out << "  " << render(block.coefficients.monomial(exponents)) << " : " << render(coefficient) << "\n";
    }
    if (cfg.verify_reassembly) {
      bool ok = is_zero(normalize(block.coefficients.reassemble() - block.condition));
      all = all && ok;
      out << "  reassembly: " << (ok ? "pass" : "FAIL") << "\n";
    }
  }
  return all ? kOk : kMismatch;
}

int cmd_integrate(const RunConfig& cfg, std::ostream& out) {
  require_numeric(cfg);
  ODESystem sys = make_system(cfg);
  State s0 = initial_state(cfg);
  IntegrateOptions options;
  options.rtol = cfg.rtol;
  options.atol = cfg.atol;
  options.samples = cfg.samples;
  if (cfg.system == "conformal") {
    options.monitors = {{"E", frw_energy(cfg.model.potential)}};
  } else {
    options.monitors = {{cfg.system == "proper" ? "P" : "K", time_translation_flux(cfg.model)}};
  }
  Trajectory traj = solve_ivp(sys, s0, cfg.t_end, options);
  out << "system: " << sys.name << "\n";
  out << "initial state: " << describe_state(s0) << "\n";
  out << "termination: " << to_string(traj.termination) << (traj.message.empty() ? "" : " (" + traj.message + ")")
      << "\n";
  out << "steps: " << traj.stats.steps << " accepted, " << traj.stats.rejected << " rejected\n";
  out << "final state: " << describe_state(traj.state(traj.size() - 1)) << "\n";
  bool ok = true;
  for (const auto& [name, series] : traj.monitors) {
    double drift = monitor_drift(traj, name);
    bool within = drift <= cfg.drift_max;
    ok = ok && within;
    out << "drift " << name << " = " << sci(drift) << " (limit " << sci(cfg.drift_max)
        << "): " << (within ? "ok" : "EXCEEDED") << "\n";
  }
  if (!cfg.csv.empty()) {
    std::ostringstream csv;
    write_csv(traj, csv);
    write_file(cfg.csv, csv.str());
  }
  if (traj.termination != Termination::Completed) return kStepUnderflow;
  return ok ? kOk : kMismatch;
}

int cmd_reduce(const RunConfig& cfg, std::ostream& out) {
  require_numeric(cfg);
  if (cfg.system == "lapse") throw ConfigError("reduction is defined for the conformal and proper systems");
  if (cfg.system == "proper" && cfg.model.k != 0) throw ConfigError("the proper reduction requires k = 0");
  ReducedVariant variant = cfg.system == "proper" ? ReducedVariant::Proper : ReducedVariant::Conformal;
  ReducedSystem rsys = reduced_system(cfg.model.potential, variant);
  State s0 = initial_state(cfg);
  ReducedState r0 = to_invariants(s0);
  double x_end = cfg.x_end.value_or(cfg.phi0 + 1.0);
  ReconstructOptions ropts;
  ropts.samples = cfg.samples;
  ReducedTrajectory rt = reconstruct(rsys, r0, s0.value(frw_symbols().a), s0.t, x_end, ropts);
  Trajectory rebuilt = rt.to_trajectory();

  IntegrateOptions options;
  options.rtol = cfg.rtol;
  options.atol = cfg.atol;
  options.output_times = rebuilt.times;
  // The reconstruction runs forward or backward in t depending on sign(y).
  State start = rebuilt.state(0);
  Trajectory direct = solve_ivp(make_system(cfg), start, rebuilt.times.back(), options);
  direct.require_complete();
  double error = 0.0;
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    const auto& got = rebuilt.rows[i];
    const auto& ref = direct.rows[i];
    error = std::max(error, std::abs(got[0] - ref[0]) / std::abs(ref[0]));
    error = std::max(error, std::abs(got[2] - ref[2]) / std::max(1.0, std::abs(ref[2])));
  }
  out << "variant: " << to_string(variant) << "\n";
  out << "dy/dx = " << render(rsys.dy_dx) << "\n";
  out << "dw/dx = " << render(rsys.dw_dx) << "\n";
  out << "conserved: a^" << rsys.conserved_power << " * (" << render(reduced_conserved(rsys.potential)) << "), defect "
      << render(reduced_conservation_defect(rsys)) << "\n";
  out << "window: x from " << exact(r0.x) << " to " << exact(rt.x.back()) << " (" << rt.size() << " samples)\n";
  out << "turning point: " << (rt.turning_point ? "yes, segment ends early" : "no") << "\n";
  bool ok = error <= cfg.roundtrip_max;
  out << "round-trip max relative error = " << sci(error) << " (limit " << sci(cfg.roundtrip_max)
      << "): " << (ok ? "ok" : "EXCEEDED") << "\n";
  if (!cfg.reduced_csv.empty()) {
    std::ostringstream csv;
    write_csv(rt, csv);
    write_file(cfg.reduced_csv, csv.str());
  }
  if (!cfg.csv.empty()) {
    std::ostringstream csv;
    write_csv(rebuilt, csv);
    write_file(cfg.csv, csv.str());
  }
  return ok ? kOk : kMismatch;
}

int cmd_noether(const RunConfig& cfg, std::ostream& out) {
  bool all = true;
  auto expect = [&](const std::string& what, bool got, bool wanted) {
    bool ok = got == wanted;
    all = all && ok;
    out << what << ": " << (got ? "true" : "false") << " (expected " << (wanted ? "true" : "false") << ") "
        << (ok ? "ok" : "MISMATCH") << "\n";
  };
  ModelConfig unit = cfg.model;
  unit.lapse = LapseMode::Unit;
  ModelConfig lapse = cfg.model;
  lapse.lapse = LapseMode::Dynamical;
  std::vector<std::pair<std::string, ModelConfig>> models;
  if (cfg.lagrangian != "lapse") models.emplace_back("proper", unit);
  if (cfg.lagrangian != "proper") models.emplace_back("lapse", lapse);

  for (const auto& [lname, model] : models) {
    Lagrangian L = lagrangian(model);
    std::vector<std::string> gens = cfg.gens;
    if (gens.empty()) gens = lname == "proper" ? std::vector<std::string>{"Y", "Z"} : std::vector<std::string>{"Y"};
    for (const auto& g : gens) {
      Expr residual = variational_residual(make_generator(g, L.context, cfg), L);
      bool variational = is_zero(residual);
      expect("variational " + g + " on " + lname + " Lagrangian", variational, g == "Y");
      if (!variational) out << "  residual: " << render(residual) << "\n";
    }
  }
  for (const auto& [lname, model] : models) {
    JetContext ctx = frw_context(model.lapse == LapseMode::Dynamical);
    Characteristic q = characteristics(generator_Y(ctx));
    out << "characteristic of Y (" << lname << "):";
    for (const auto& [u, e] : q.components) out << " Q_" << symbol_name(u) << " = " << render(e) << ";";
    out << "\n";
    Expr candidate = lname == "proper" ? flux_candidate_P(model) : flux_candidate_K(model);
    std::string flux_name = lname == "proper" ? "P" : "K";
    try {
      ConservationLaw law = verify_conservation_law(candidate, generator_Y(ctx), lagrangian(model));
      expect("flux " + flux_name + " verified", true, true);
      out << law.to_key_values("  " + flux_name + ".");
    } catch (const NotConserved& err) {
      expect("flux " + flux_name + " verified", false, true);
      out << "  defect: " << render(err.defect()) << "\n";
    }
    if (lname == "proper") {
      bool printed = true;
      try {
        verify_conservation_law(flux_printed_P(model), generator_Y(ctx), lagrangian(model));
      } catch (const NotConserved&) {
        printed = false;
      }
      expect("printed bracket with k*a conserved", printed, false);
      Expr diff = conjugate_momentum_check(model);
      expect("conjugate momentum equals " + kMomentumFactor.get_str() + " * P", is_zero(diff), true);
    }
  }

  if (cfg.numeric) {
    require_numeric(cfg);
    const auto& s = frw_symbols();
    IntegrateOptions options;
    options.rtol = cfg.rtol;
    options.atol = cfg.atol;
    options.samples = cfg.samples;
    if (cfg.lagrangian != "lapse") {
      // Off the constraint surface: E(0) = e0.
      State st = constrained_initial_state(cfg.a0, cfg.phi0, cfg.phidot0, ModelConfig{0, unit.potential}, 1);
      NumericBinding b;
      b.set(s.phi, cfg.phi0);
      double V = evaluate(unit.potential.in_phi(), b);
      double radicand = cfg.e0 + 2 * cfg.a0 * cfg.a0 * V + cfg.a0 * cfg.a0 * cfg.phidot0 * cfg.phidot0;
      if (radicand < 0.0) throw ConstraintInfeasible("e0 too negative for a real adot0");
      st.values[s.a].second = std::sqrt(radicand);
      options.monitors = {{"P", time_translation_flux(unit)}};
      Trajectory traj = solve_ivp(frw_proper_time_system(unit), st, cfg.t_end, options);
      traj.require_complete();
      double drift = monitor_drift(traj, "P");
      expect("P drift " + sci(drift) + " within " + sci(cfg.drift_max), drift <= cfg.drift_max, true);
    }
    if (cfg.lagrangian != "proper") {
      State st;
      try {
        st = constrained_initial_state(cfg.a0, cfg.phi0, cfg.phidot0, lapse, 1, 1.0);
      } catch (const ConstraintInfeasible& e) {
        out << "K run skipped: " << e.what() << "\n";
        out << "result: " << (all ? "pass" : "fail") << "\n";
        return all ? kOk : kMismatch;
      }
      options.monitors = {{"K", time_translation_flux(lapse)}};
      Trajectory traj = solve_ivp(frw_lapse_system(lapse), st, cfg.t_end, options);
      traj.require_complete();
      // K is a sum of terms of size a adot^2 / 2N that cancel; judge it
      // against that size.
      Expr a(s.a), ad(s.adot), N(s.N);
      auto scale = evaluate_along(traj, a * ad * ad / (2 * N));
      double largest = 0.0, relative = 0.0;
      const auto& k_series = traj.monitor("K");
      for (std::size_t i = 0; i < k_series.size(); ++i) {
        largest = std::max(largest, std::abs(k_series[i]));
        relative = std::max(relative, std::abs(k_series[i]) / std::max(1.0, std::abs(scale[i])));
      }
      out << "max |K| = " << sci(largest) << "\n";
      expect("max |K| / max(1, a adot^2 / 2N) " + sci(relative) + " within " + sci(kLapseFluxTolerance),
             relative <= kLapseFluxTolerance, true);
    }
  }
  out << "result: " << (all ? "pass" : "fail") << "\n";
  return all ? kOk : kMismatch;
}

int cmd_algebra(const RunConfig& cfg, std::ostream& out) {
  JetContext ctx = frw_context(cfg.system == "lapse");
  std::vector<std::string> gens = cfg.gens.empty() ? std::vector<std::string>{"X", "Y", "Z"} : cfg.gens;
  std::vector<VectorField> basis;
  for (const auto& g : gens) basis.push_back(make_generator(g, ctx, cfg));
  AlgebraStructure alg;
  try {
    alg = classify(basis, gens);
  } catch (const NotClosed& err) {
    out << "not closed: " << err.what() << "\n";
    return kMismatch;
  } catch (const NotLinearlyIndependent& err) {
    out << "not linearly independent: " << err.what() << "\n";
    return kMismatch;
  }
  for (std::size_t i = 0; i < gens.size(); ++i) out << gens[i] << " = " << render(basis[i]) << "\n";
  out << "commutators:\n" << alg.commutator_table();
  out << "structure constants:\n";
  bool any = false;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    for (std::size_t j = i + 1; j < gens.size(); ++j) {
      for (std::size_t k = 0; k < gens.size(); ++k) {
        if (alg.constants[i][j][k] == 0) continue;
        any = true;
        out << "  C[" << gens[i] << "," << gens[j] << "]^" << gens[k] << " = " << alg.constants[i][j][k].get_str()
            << "\n";
      }
    }
  }
  if (!any) out << "  all zero\n";
  auto dims = [](const std::vector<std::size_t>& v) {
    std::vector<std::string> s;
    for (auto d : v) s.push_back(std::to_string(d));
    return join(s, " > ");
  };
  out << "derived series: " << dims(alg.derived_series) << "\n";
  out << "lower central series: " << dims(alg.lower_central_series) << "\n";
  out << "solvable: " << (alg.solvable ? "true" : "false") << "\n";
  out << "nilpotent: " << (alg.nilpotent ? "true" : "false") << "\n";
  out << "abelian: " << (alg.abelian ? "true" : "false") << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Lie symmetries, Noether laws and order reduction for the FRW equations", "liefrw");
  app.set_version_flag("--version", std::string(LIEFRW_VERSION));
  app.require_subcommand(1);

  struct Command {
    std::string name;
    std::string help;
    int (*body)(const RunConfig&, std::ostream&);
  };
  const std::vector<Command> commands{
      {"check", "verify generators against a system", cmd_check},
      {"derive", "list the determining equations", cmd_derive},
      {"integrate", "integrate a system and monitor conserved quantities", cmd_integrate},
      {"reduce", "reduce to first order and reconstruct by quadrature", cmd_reduce},
      {"noether", "variational symmetries and conservation laws", cmd_noether},
      {"algebra", "commutator table and structure of a generator set", cmd_algebra},
  };
  Settings flags;
  std::string config_file;
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_file, "key = value configuration file");
    for (const auto& [key, help] : known_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (key == "numeric" || key == "verify_reassembly") {
        sub->add_flag_callback("--" + flag, [&flags, key = key] { flags[key] = "true"; }, help);
      } else {
        sub->add_option_function<std::string>(
               "--" + flag, [&flags, key = key](const std::string& v) { flags[key] = v; }, help)
            ->allow_extra_args(false);
      }
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  std::size_t which = 0;
  while (which < subs.size() && !subs[which]->parsed()) ++which;
  const Command& command = commands.at(which);

  Settings settings;
  RunConfig cfg;
  try {
    if (!config_file.empty()) {
      std::ifstream file(config_file);
      if (!file) throw ConfigError("cannot read config file '" + config_file + "'");
      std::stringstream text;
      text << file.rdbuf();
      settings = parse_config_text(text.str());
    }
    for (const auto& [key, value] : flags) settings[key] = value;
    cfg = build_config(settings);
  } catch (const Error& e) {
    err << "liefrw: config error: " << e.what() << "\n";
    return kConfigError;
  }

  std::ostringstream report;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(command.name, settings)));
  report << "# liefrw " << LIEFRW_VERSION << "\n";
  report << "# command: " << command.name << "\n";
  report << "# config hash: fnv1a64:" << hash << "\n";
  int code = kOk;
  try {
    std::vector<std::string> conditions = make_system(cfg).side_conditions;
    report << "# side conditions: " << join(conditions, "; ") << "\n";
    code = command.body(cfg, report);
  } catch (const ConstraintInfeasible& e) {
    report << "error: constraint infeasible: " << e.what() << "\n";
    code = kConstraintInfeasible;
  } catch (const StepUnderflow& e) {
    report << "error: step underflow: " << e.what() << "\n";
    code = kStepUnderflow;
  } catch (const TurningPoint& e) {
    report << "error: turning point: " << e.what() << "\n";
    code = kTurningPoint;
  } catch (const ConfigError& e) {
    err << "liefrw: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const UnboundSymbol& e) {
    err << "liefrw: config error: potential is not numeric: " << e.what() << "\n";
    return kConfigError;
  } catch (const NonPositiveScaleFactor& e) {
    err << "liefrw: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    report << "error: " << e.what() << "\n";
    code = kMismatch;
  }
  out << report.str();
  if (!cfg.out.empty()) {
    try {
      write_file(cfg.out, report.str());
    } catch (const ConfigError& e) {
      err << "liefrw: " << e.what() << "\n";
      return kConfigError;
    }
  }
  return code;
}

}  // namespace liefrw::cli

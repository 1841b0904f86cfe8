#include "liefrw/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "integrate/dopri5.hpp"

namespace liefrw {

double State::value(Symbol u) const {
  auto it = values.find(u);
  if (it == values.end()) throw UnboundSymbol("state has no value for '" + symbol_name(u) + "'");
  return it->second.first;
}

double State::rate(Symbol u) const {
  auto it = values.find(u);
  if (it == values.end()) throw UnboundSymbol("state has no value for '" + symbol_name(u) + "'");
  return it->second.second;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Completed:
      return "completed";
    case Termination::SingularScaleFactor:
      return "singular scale factor";
    case Termination::StepUnderflow:
      return "step underflow";
    case Termination::NonFiniteDerivative:
      return "non-finite derivative";
  }
  return "unknown";
}

State Trajectory::state(std::size_t i) const {
  State s;
  s.t = times.at(i);
  for (std::size_t j = 0; j < dependents.size(); ++j) {
    s.values.emplace(dependents[j], std::make_pair(rows.at(i)[2 * j], rows.at(i)[2 * j + 1]));
  }
  return s;
}

const std::vector<double>& Trajectory::monitor(const std::string& name) const {
  for (const auto& [n, series] : monitors) {
    if (n == name) return series;
  }
  throw UnknownMonitor("no monitor named '" + name + "'");
}

void Trajectory::require_complete() const {
  switch (termination) {
    case Termination::Completed:
      return;
    case Termination::StepUnderflow:
    case Termination::SingularScaleFactor:
      throw StepUnderflow("integration stopped at t = " + std::to_string(times.empty() ? 0.0 : times.back()) + ": " +
                          message);
    case Termination::NonFiniteDerivative:
      throw NonFiniteDerivative("integration stopped: " + message);
  }
}

namespace {

// Inputs of every compiled program: t, then (u, u') for each dependent.
std::vector<Symbol> state_inputs(const JetContext& ctx) {
  std::vector<Symbol> inputs{ctx.independent()};
  for (Symbol u : ctx.dependents()) {
    inputs.push_back(u);
    inputs.push_back(ctx.jet(u, 1));
  }
  return inputs;
}

std::vector<double> pack(const JetContext& ctx, const State& s) {
  std::vector<double> y;
  for (Symbol u : ctx.dependents()) {
    y.push_back(s.value(u));
    y.push_back(s.rate(u));
  }
  return y;
}

State unpack(const JetContext& ctx, double t, std::span<const double> y) {
  State s;
  s.t = t;
  for (std::size_t j = 0; j < ctx.dependents().size(); ++j) {
    s.values.emplace(ctx.dependents()[j], std::make_pair(y[2 * j], y[2 * j + 1]));
  }
  return s;
}

std::vector<Expr> second_derivatives(const ODESystem& sys, const std::map<Symbol, Expr>& gauge) {
  std::vector<Expr> out;
  for (Symbol u : sys.context.dependents()) {
    auto eq = std::find_if(sys.equations.begin(), sys.equations.end(),
                           [&](const SolvedEquation& e) { return e.dependent == u; });
    if (eq != sys.equations.end()) {
      out.push_back(eq->rhs);
    } else if (auto g = gauge.find(u); g != gauge.end()) {
      out.push_back(g->second);
    } else {
      out.emplace_back(0);
    }
  }
  return out;
}

CompiledExprs compile_monitors(const JetContext& ctx, const std::vector<Expr>& exprs,
                               const std::map<FunctionRef, NumericFunction>& functions) {
  try {
    return CompiledExprs(exprs, state_inputs(ctx), functions);
  } catch (const UnboundSymbol& err) {
    throw MonitorUnbound(std::string("monitor cannot be evaluated from the state: ") + err.what());
  }
}

std::optional<std::size_t> index_of(const JetContext& ctx, Symbol u) {
  auto it = std::find(ctx.dependents().begin(), ctx.dependents().end(), u);
  if (it == ctx.dependents().end()) return std::nullopt;
  return static_cast<std::size_t>(it - ctx.dependents().begin());
}

}  // namespace

Trajectory solve_ivp(const ODESystem& sys, const State& s0, double t_end, const IntegrateOptions& options) {
  if (!(options.rtol > 0.0) || !(options.atol > 0.0)) throw Error("tolerances must be positive");
  const JetContext& ctx = sys.context;
  const std::size_t n = ctx.dependents().size();
  std::vector<double> y0 = pack(ctx, s0);
  if (!std::all_of(y0.begin(), y0.end(), [](double v) { return std::isfinite(v); }) || !std::isfinite(s0.t)) {
    throw Error("initial state must be finite");
  }
  const auto& fs = frw_symbols();
  const auto a_index = index_of(ctx, fs.a);
  const auto n_index = index_of(ctx, fs.N);
  if (a_index && y0[2 * *a_index] <= 0.0) throw NonPositiveScaleFactor("initial scale factor must be positive");
  if (n_index && y0[2 * *n_index] == 0.0) throw DegenerateLapse("lapse vanishes in the initial state");

  CompiledExprs rhs(second_derivatives(sys, options.gauge), state_inputs(ctx), options.functions);
  std::vector<std::string> monitor_names;
  std::vector<Expr> monitor_exprs;
  for (const auto& [name, e] : options.monitors) {
    monitor_names.push_back(name);
    monitor_exprs.push_back(e);
  }
  CompiledExprs monitors = compile_monitors(ctx, monitor_exprs, options.functions);

  std::vector<double> outputs = options.output_times;
  if (outputs.empty()) {
    std::size_t m = t_end == s0.t ? 1 : std::max<std::size_t>(options.samples, 2);
    for (std::size_t i = 0; i < m; ++i) {
      outputs.push_back(i + 1 == m ? t_end
                                   : s0.t + (t_end - s0.t) * static_cast<double>(i) / static_cast<double>(m - 1));
    }
  }
  const double direction = t_end >= s0.t ? 1.0 : -1.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    bool inside = (outputs[i] - s0.t) * direction >= 0.0 && (t_end - outputs[i]) * direction >= 0.0;
    bool ordered = i == 0 || (outputs[i] - outputs[i - 1]) * direction > 0.0;
    if (!inside || !ordered) throw Error("output times must be ordered and lie within the integration interval");
  }

  Trajectory traj;
  traj.dependents = ctx.dependents();
  for (const auto& name : monitor_names) traj.monitors.emplace_back(name, std::vector<double>{});
  std::vector<double> input(1 + 2 * n);
  std::vector<double> monitor_values(monitor_names.size());
  std::vector<double> scratch;
  auto record = [&](double t, std::span<const double> y) {
    traj.times.push_back(t);
    traj.rows.emplace_back(y.begin(), y.end());
    if (monitor_names.empty()) return;
    input[0] = t;
    std::copy(y.begin(), y.end(), input.begin() + 1);
    try {
      monitors.run(input, monitor_values, scratch);
    } catch (const DomainError&) {
      std::fill(monitor_values.begin(), monitor_values.end(), std::nan(""));
    }
    for (std::size_t k = 0; k < monitor_values.size(); ++k) traj.monitors[k].second.push_back(monitor_values[k]);
  };

  std::vector<double> rhs_input(1 + 2 * n);
  std::vector<double> accel(n);
  std::vector<double> rhs_scratch;
  detail::OdeRhs f = [&](double t, std::span<const double> y, std::span<double> dy) {
    if (n_index && y[2 * *n_index] == 0.0) throw DegenerateLapse("lapse vanished during integration");
    rhs_input[0] = t;
    std::copy(y.begin(), y.end(), rhs_input.begin() + 1);
    try {
      rhs.run(rhs_input, accel, rhs_scratch);
    } catch (const DomainError&) {
      return false;
    }
    for (std::size_t j = 0; j < n; ++j) {
      dy[2 * j] = y[2 * j + 1];
      dy[2 * j + 1] = accel[j];
    }
    return true;
  };

  std::size_t next = 0;
  while (next < outputs.size() && outputs[next] == s0.t) {
    record(s0.t, y0);
    ++next;
  }
  const double a_floor = a_index ? options.singular_fraction * y0[2 * *a_index] : 0.0;
  bool singular = false;
  std::vector<double> buffer(2 * n);
  detail::StepObserver observer = [&](const detail::DenseStep& step, std::span<const double> y) {
    while (next < outputs.size() && (step.t_new - outputs[next]) * direction >= 0.0) {
      if (outputs[next] == step.t_new) {
        record(outputs[next], y);
      } else {
        step.eval(outputs[next], buffer);
        record(outputs[next], buffer);
      }
      ++next;
    }
    if (a_index && y[2 * *a_index] <= a_floor) {
      singular = true;
      return false;
    }
    return true;
  };

  detail::DopriOptions dopts;
  dopts.rtol = options.rtol;
  dopts.atol = options.atol;
  dopts.max_steps = options.max_steps;
  detail::DopriResult res = detail::dopri5(f, s0.t, y0, t_end, dopts, observer);
  traj.stats = {res.stats.steps, res.stats.rejected, res.stats.evaluations};
  switch (res.status) {
    case detail::DopriStatus::Completed:
      traj.termination = Termination::Completed;
      break;
    case detail::DopriStatus::Stopped:
      traj.termination = singular ? Termination::SingularScaleFactor : Termination::Completed;
      if (singular) traj.message = "scale factor fell below " + std::to_string(options.singular_fraction) + " a0";
      break;
    case detail::DopriStatus::StepUnderflow:
    case detail::DopriStatus::TooManySteps:
      traj.termination = Termination::StepUnderflow;
      traj.message = "step size underflow";
      break;
    case detail::DopriStatus::NonFiniteDerivative:
      traj.termination = Termination::NonFiniteDerivative;
      traj.message = "right side not finite";
      break;
  }
  if (traj.termination != Termination::Completed && (traj.times.empty() || traj.times.back() != res.t)) {
    record(res.t, res.y);
  }
  return traj;
}

State constrained_initial_state(double a0, double phi0, double phidot0, const ModelConfig& cfg, int branch, double N0) {
  cfg.validate();
  if (!(a0 > 0.0)) throw NonPositiveScaleFactor("a0 must be positive");
  if (branch != 1 && branch != -1) throw ConfigError("branch must be +1 or -1");
  const auto& s = frw_symbols();
  bool lapse = cfg.lapse == LapseMode::Dynamical;
  if (lapse && N0 == 0.0) throw DegenerateLapse("N0 must be nonzero");
  double n2 = lapse ? N0 * N0 : 1.0;
  NumericBinding b;
  b.set(s.phi, phi0);
  double V = 0.0;
  try {
    V = evaluate(cfg.potential.in_phi(), b);
  } catch (const UnboundSymbol& err) {
    throw ConfigError(std::string("potential must be numeric for integration: ") + err.what());
  }
  double radicand = 2.0 * n2 * a0 * a0 * V + a0 * a0 * phidot0 * phidot0 - n2 * cfg.k;
  if (radicand < 0.0) {
    throw ConstraintInfeasible("constraint requires adot^2 = " + std::to_string(radicand) + " < 0");
  }
  State st;
  st.t = 0.0;
  st.values.emplace(s.a, std::make_pair(a0, branch * std::sqrt(radicand)));
  st.values.emplace(s.phi, std::make_pair(phi0, phidot0));
  if (lapse) st.values.emplace(s.N, std::make_pair(N0, 0.0));
  return st;
}

double monitor_drift(const Trajectory& traj, const std::string& name) {
  const auto& series = traj.monitor(name);
  double drift = 0.0;
  for (double v : series) drift = std::max(drift, std::abs(v - series.front()));
  return drift;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
  out << "t";
  for (Symbol u : traj.dependents) out << "," << symbol_name(u) << "," << symbol_name(u) << "dot";
  for (const auto& [name, series] : traj.monitors) out << "," << name;
  out << "\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < traj.size(); ++i) {
    put(traj.times[i]);
    for (double v : traj.rows[i]) {
      out << ",";
      put(v);
    }
    for (const auto& [name, series] : traj.monitors) {
      out << ",";
      put(series[i]);
    }
    out << "\n";
  }
}

std::vector<double> evaluate_along(const Trajectory& traj, const Expr& e,
                                   const std::map<FunctionRef, NumericFunction>& functions) {
  const auto& fs = frw_symbols();
  JetContext ctx(fs.t, traj.dependents, 2);
  CompiledExprs program = compile_monitors(ctx, {e}, functions);
  std::vector<double> input(1 + 2 * traj.dependents.size());
  std::vector<double> scratch;
  std::vector<double> out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    input[0] = traj.times[i];
    std::copy(traj.rows[i].begin(), traj.rows[i].end(), input.begin() + 1);
    program.run(input, std::span<double>(&out[i], 1), scratch);
  }
  return out;
}

// ---------------------------------------------------------------------------

State transform_state(const VectorField& g, const State& s, double epsilon) {
  const JetContext& ctx = g.context();
  ProlongedField pr1 = prolong(g, 1);
  std::vector<Expr> flow{g.tau()};
  for (Symbol u : ctx.dependents()) {
    flow.push_back(g.coefficient(u));
    flow.push_back(pr1.coefficient(ctx.jet(u, 1)));
  }
  CompiledExprs program(flow, state_inputs(ctx));
  std::vector<double> z{s.t};
  auto y = pack(ctx, s);
  z.insert(z.end(), y.begin(), y.end());
  std::vector<double> scratch;
  detail::OdeRhs f = [&](double, std::span<const double> zz, std::span<double> dz) {
    try {
      program.run(zz, dz, scratch);
    } catch (const DomainError&) {
      return false;
    }
    return true;
  };
  detail::DopriOptions o;
  o.rtol = 1e-14;
  o.atol = 1e-16;
  auto res = detail::dopri5(f, 0.0, z, epsilon, o);
  if (res.status != detail::DopriStatus::Completed) throw NonFiniteDerivative("flow of the generator failed");
  return unpack(ctx, res.y[0], std::span<const double>(res.y).subspan(1));
}

PushforwardResult pushforward_test(const VectorField& g, const ODESystem& sys, const State& s0, double t_end,
                                   std::vector<double> epsilons, IntegrateOptions options) {
  if (!(g.context() == sys.context)) throw ContextMismatch("generator and system use different jet contexts");
  const JetContext& ctx = sys.context;
  options.monitors.clear();
  options.output_times = {t_end};

  Trajectory reference = solve_ivp(sys, s0, t_end, options);
  reference.require_complete();
  const auto& ref = reference.rows.back();

  // First-order prediction: characteristic and its total derivative on-shell.
  Binding shell = sys.on_shell();
  for (Symbol u : sys.free_dependents) {
    auto it = options.gauge.find(u);
    shell.set(ctx.jet(u, 2), it == options.gauge.end() ? Expr(0) : it->second);
  }
  std::vector<Expr> prediction;
  for (Symbol u : ctx.dependents()) {
    Expr q = normalize(g.coefficient(u) - g.tau() * Expr(ctx.jet(u, 1)));
    prediction.push_back(q);
    prediction.push_back(substitute(total_derivative(q, ctx), shell));
  }
  CompiledExprs predict(prediction, state_inputs(ctx), options.functions);
  std::vector<double> input{t_end};
  input.insert(input.end(), ref.begin(), ref.end());
  std::vector<double> delta(prediction.size());
  std::vector<double> scratch;
  predict.run(input, delta, scratch);

  PushforwardResult out;
  out.epsilons = epsilons;
  for (double eps : epsilons) {
    State moved = transform_state(g, s0, eps);
    Trajectory run = solve_ivp(sys, moved, t_end, options);
    run.require_complete();
    const auto& got = run.rows.back();
    double defect = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      defect = std::max(defect, std::abs(got[i] - (ref[i] + eps * delta[i])) / (1.0 + std::abs(ref[i])));
    }
    out.defects.push_back(defect);
  }
  if (out.defects.size() >= 2 && out.defects[1] > 0.0) out.ratio = out.defects[0] / out.defects[1];
  return out;
}

}  // namespace liefrw

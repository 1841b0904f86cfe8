#include <array>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include "liefrw/expr.hpp"

namespace liefrw {

NumericBinding& NumericBinding::set(Symbol s, double value) {
  values_.insert_or_assign(s, value);
  return *this;
}

NumericBinding& NumericBinding::set(FunctionRef f, NumericFunction rule) {
  functions_.insert_or_assign(f, std::move(rule));
  return *this;
}

const double* NumericBinding::find(Symbol s) const {
  auto it = values_.find(s);
  return it == values_.end() ? nullptr : &it->second;
}

const NumericFunction* NumericBinding::find(FunctionRef f) const {
  auto it = functions_.find(f);
  return it == functions_.end() ? nullptr : &it->second;
}

double evaluate(const Expr& e, const NumericBinding& b) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return e.value().get_d();
    case Expr::Kind::Variable: {
      const double* v = b.find(e.symbol());
      if (!v) throw UnboundSymbol("no value bound for '" + symbol_name(e.symbol()) + "'");
      return *v;
    }
    case Expr::Kind::Sum: {
      double s = 0.0;
      for (const Expr& c : e.children()) s += evaluate(c, b);
      return s;
    }
    case Expr::Kind::Product: {
      double p = 1.0;
      for (const Expr& c : e.children()) p *= evaluate(c, b);
      return p;
    }
    case Expr::Kind::Power: {
      double base = evaluate(e.children()[0], b);
      if (base == 0.0 && e.exponent() < 0) throw DomainError("division by zero");
      return std::pow(base, e.exponent());
    }
    case Expr::Kind::Exp:
      return std::exp(evaluate(e.children()[0], b));
    case Expr::Kind::Log: {
      double u = evaluate(e.children()[0], b);
      if (u <= 0.0) throw DomainError("logarithm of a nonpositive value");
      return std::log(u);
    }
    case Expr::Kind::Function: {
      const NumericFunction* rule = b.find(e.function());
      if (!rule) throw UnboundSymbol("no rule bound for function '" + function_name(e.function()) + "'");
      std::vector<double> args;
      args.reserve(e.children().size());
      for (const Expr& c : e.children()) args.push_back(evaluate(c, b));
      return (*rule)(args, e.orders());
    }
  }
  return 0.0;
}

namespace {

struct RuleCache {
  FunctionRef function;
  Expr body;
  std::vector<Symbol> params;
  std::mutex mutex;
  std::map<std::vector<int>, std::shared_ptr<const CompiledExprs>> compiled;

  std::shared_ptr<const CompiledExprs> get(std::span<const int> orders) {
    std::vector<int> key(orders.begin(), orders.end());
    std::lock_guard lock(mutex);
    auto it = compiled.find(key);
    if (it != compiled.end()) return it->second;
    Expr derived = body;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (key[i] > 0) derived = differentiate(derived, params[i], key[i]);
    }
    auto program = std::make_shared<const CompiledExprs>(std::vector<Expr>{derived}, params);
    compiled.emplace(std::move(key), program);
    return program;
  }
};

}  // namespace

NumericFunction numeric_rule(FunctionRef f, Expr body) {
  auto cache = std::make_shared<RuleCache>();
  cache->function = f;
  cache->body = std::move(body);
  cache->params = function_params(f);
  return [cache](std::span<const double> args, std::span<const int> orders) {
    if (args.size() != cache->params.size() || orders.size() != cache->params.size()) {
      throw Error("numeric rule for '" + function_name(cache->function) + "' called with the wrong arity");
    }
    auto program = cache->get(orders);
    thread_local std::vector<double> scratch;
    double out = 0.0;
    program->run(args, std::span<double>(&out, 1), scratch);
    return out;
  };
}

CompiledExprs::CompiledExprs(const std::vector<Expr>& outputs, const std::vector<Symbol>& inputs,
                             const std::map<FunctionRef, NumericFunction>& functions)
    : input_count_(inputs.size()) {
  std::unordered_map<Expr, std::uint32_t, ExprHash> memo;
  std::map<std::uint32_t, std::uint32_t> input_index;
  for (std::size_t i = 0; i < inputs.size(); ++i) input_index.emplace(inputs[i].id, static_cast<std::uint32_t>(i));
  std::map<FunctionRef, std::uint32_t> function_index;

  auto emit = [this](Instruction ins) {
    program_.push_back(std::move(ins));
    return static_cast<std::uint32_t>(program_.size() - 1);
  };
  auto constant = [&](double v) {
    Instruction ins;
    ins.op = Op::Constant;
    ins.constant = v;
    return emit(std::move(ins));
  };
  auto is_const = [this](std::uint32_t i) { return program_[i].op == Op::Constant; };

  std::function<std::uint32_t(const Expr&)> compile = [&](const Expr& e) -> std::uint32_t {
    if (auto it = memo.find(e); it != memo.end()) return it->second;
    std::uint32_t result = 0;
    switch (e.kind()) {
      case Expr::Kind::Constant:
        result = constant(e.value().get_d());
        break;
      case Expr::Kind::Variable: {
        auto it = input_index.find(e.symbol().id);
        if (it == input_index.end()) throw UnboundSymbol("no input bound for '" + symbol_name(e.symbol()) + "'");
        Instruction ins;
        ins.op = Op::Input;
        ins.input = it->second;
        result = emit(std::move(ins));
        break;
      }
      case Expr::Kind::Sum:
      case Expr::Kind::Product: {
        bool is_sum = e.kind() == Expr::Kind::Sum;
        double folded = is_sum ? 0.0 : 1.0;
        Instruction ins;
        ins.op = is_sum ? Op::Add : Op::Mul;
        for (const Expr& c : e.children()) {
          std::uint32_t k = compile(c);
          if (is_const(k)) {
            folded = is_sum ? folded + program_[k].constant : folded * program_[k].constant;
          } else {
            ins.operands.push_back(k);
          }
        }
        if (ins.operands.empty()) {
          result = constant(folded);
        } else if (folded == (is_sum ? 0.0 : 1.0) && ins.operands.size() == 1) {
          result = ins.operands.front();
        } else {
          if (folded != (is_sum ? 0.0 : 1.0)) ins.operands.push_back(constant(folded));
          result = emit(std::move(ins));
        }
        break;
      }
      case Expr::Kind::Power: {
        std::uint32_t base = compile(e.children()[0]);
        if (is_const(base)) {
          result = constant(std::pow(program_[base].constant, e.exponent()));
        } else {
          Instruction ins;
          ins.op = Op::Pow;
          ins.exponent = e.exponent();
          ins.operands = {base};
          result = emit(std::move(ins));
        }
        break;
      }
      case Expr::Kind::Exp:
      case Expr::Kind::Log: {
        bool is_exp = e.kind() == Expr::Kind::Exp;
        std::uint32_t arg = compile(e.children()[0]);
        if (is_const(arg) && (is_exp || program_[arg].constant > 0.0)) {
          double v = program_[arg].constant;
          result = constant(is_exp ? std::exp(v) : std::log(v));
        } else {
          Instruction ins;
          ins.op = is_exp ? Op::Exp : Op::Log;
          ins.operands = {arg};
          result = emit(std::move(ins));
        }
        break;
      }
      case Expr::Kind::Function: {
        auto rule = functions.find(e.function());
        if (rule == functions.end()) {
          throw UnboundSymbol("no rule bound for function '" + function_name(e.function()) + "'");
        }
        auto [slot, inserted] = function_index.try_emplace(e.function(), static_cast<std::uint32_t>(functions_.size()));
        if (inserted) functions_.push_back(rule->second);
        Instruction ins;
        ins.op = Op::Call;
        ins.function = slot->second;
        ins.orders.assign(e.orders().begin(), e.orders().end());
        for (const Expr& c : e.children()) ins.operands.push_back(compile(c));
        result = emit(std::move(ins));
        break;
      }
    }
    memo.emplace(e, result);
    return result;
  };

  for (const Expr& out : outputs) outputs_.push_back(compile(out));
}

void CompiledExprs::run(std::span<const double> inputs, std::span<double> outputs, std::vector<double>& scratch) const {
  if (inputs.size() != input_count_ || outputs.size() != outputs_.size()) {
    throw Error("compiled program called with mismatched buffer sizes");
  }
  scratch.resize(program_.size());
  for (std::size_t i = 0; i < program_.size(); ++i) {
    const Instruction& ins = program_[i];
    double v = 0.0;
    switch (ins.op) {
      case Op::Constant:
        v = ins.constant;
        break;
      case Op::Input:
        v = inputs[ins.input];
        break;
      case Op::Add:
        for (std::uint32_t k : ins.operands) v += scratch[k];
        break;
      case Op::Mul:
        v = 1.0;
        for (std::uint32_t k : ins.operands) v *= scratch[k];
        break;
      case Op::Pow: {
        double base = scratch[ins.operands[0]];
        if (base == 0.0 && ins.exponent < 0) throw DomainError("division by zero");
        v = ins.exponent == 2 ? base * base : (ins.exponent == -1 ? 1.0 / base : std::pow(base, ins.exponent));
        break;
      }
      case Op::Exp:
        v = std::exp(scratch[ins.operands[0]]);
        break;
      case Op::Log: {
        double u = scratch[ins.operands[0]];
        if (u <= 0.0) throw DomainError("logarithm of a nonpositive value");
        v = std::log(u);
        break;
      }
      case Op::Call: {
        std::array<double, 8> small{};
        std::vector<double> large;
        std::span<double> args;
        if (ins.operands.size() <= small.size()) {
          args = std::span<double>(small.data(), ins.operands.size());
        } else {
          large.resize(ins.operands.size());
          args = large;
        }
        for (std::size_t j = 0; j < ins.operands.size(); ++j) args[j] = scratch[ins.operands[j]];
        v = functions_[ins.function](args, ins.orders);
        break;
      }
    }
    scratch[i] = v;
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i) outputs[i] = scratch[outputs_[i]];
}

}  // namespace liefrw

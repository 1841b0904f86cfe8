#include <cctype>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "liefrw/expr.hpp"

namespace liefrw {
namespace {

struct VariableEntry {
  std::string name;
  std::optional<JetInfo> jet;
};

struct FunctionEntry {
  std::string name;
  std::vector<Symbol> params;
};

bool is_identifier(std::string_view name) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

bool is_reserved(std::string_view name) { return name == "exp" || name == "ln" || name == "D"; }

class Registry {
 public:
  static Registry& instance() {
    static Registry registry;
    return registry;
  }

  Symbol variable(std::string_view name) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = variables_by_name_.find(std::string(name)); it != variables_by_name_.end()) return it->second;
    }
    if (!is_identifier(name) || is_reserved(name)) {
      throw Error("invalid variable name '" + std::string(name) + "'");
    }
    std::unique_lock lock(mutex_);
    if (functions_by_name_.count(std::string(name))) {
      throw Error("'" + std::string(name) + "' is already declared as a function");
    }
    return intern_locked(std::string(name), std::nullopt);
  }

  Symbol jet(Symbol base, Symbol independent, int order) {
    if (order < 1) throw Error("jet order must be positive");
    std::string base_name;
    std::string indep_name;
    {
      std::shared_lock lock(mutex_);
      const auto& b = variables_.at(base.id);
      if (b.jet) throw Error("jet base must be a plain variable");
      base_name = b.name;
      indep_name = variables_.at(independent.id).name;
    }
    if (base == independent) throw Error("a variable has no jet with respect to itself");
    std::string name = "D(" + base_name + "," + indep_name + "," + std::to_string(order) + ")";
    std::unique_lock lock(mutex_);
    if (auto it = variables_by_name_.find(name); it != variables_by_name_.end()) return it->second;
    return intern_locked(name, JetInfo{base, independent, order});
  }

  std::optional<Symbol> find_variable(std::string_view name) const {
    std::shared_lock lock(mutex_);
    if (auto it = variables_by_name_.find(std::string(name)); it != variables_by_name_.end()) return it->second;
    return std::nullopt;
  }

  std::string name(Symbol s) const {
    std::shared_lock lock(mutex_);
    return variables_.at(s.id).name;
  }

  std::optional<JetInfo> jet_info(Symbol s) const {
    std::shared_lock lock(mutex_);
    return variables_.at(s.id).jet;
  }

  FunctionRef declare(std::string_view name, std::vector<Symbol> params) {
    if (!is_identifier(name) || is_reserved(name)) {
      throw Error("invalid function name '" + std::string(name) + "'");
    }
    std::unique_lock lock(mutex_);
    std::string key(name);
    if (auto it = functions_by_name_.find(key); it != functions_by_name_.end()) {
      if (functions_[it->second.id].params != params) {
        throw Error("function '" + key + "' is already declared with different parameters");
      }
      return it->second;
    }
    if (variables_by_name_.count(key)) throw Error("'" + key + "' is already declared as a variable");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (variables_.at(params[i].id).jet) throw Error("function parameters must be plain variables");
      for (std::size_t j = 0; j < i; ++j) {
        if (params[i] == params[j]) throw Error("duplicate parameter in declaration of '" + key + "'");
      }
    }
    FunctionRef ref{static_cast<std::uint32_t>(functions_.size())};
    functions_.push_back(FunctionEntry{key, std::move(params)});
    functions_by_name_.emplace(key, ref);
    return ref;
  }

  std::optional<FunctionRef> find_function(std::string_view name) const {
    std::shared_lock lock(mutex_);
    if (auto it = functions_by_name_.find(std::string(name)); it != functions_by_name_.end()) return it->second;
    return std::nullopt;
  }

  std::string function_name(FunctionRef f) const {
    std::shared_lock lock(mutex_);
    return functions_.at(f.id).name;
  }

  std::vector<Symbol> function_params(FunctionRef f) const {
    std::shared_lock lock(mutex_);
    return functions_.at(f.id).params;
  }

 private:
  Symbol intern_locked(std::string name, std::optional<JetInfo> jet) {
    if (auto it = variables_by_name_.find(name); it != variables_by_name_.end()) return it->second;
    Symbol s{static_cast<std::uint32_t>(variables_.size())};
    variables_.push_back(VariableEntry{name, jet});
    variables_by_name_.emplace(std::move(name), s);
    return s;
  }

  mutable std::shared_mutex mutex_;
  std::deque<VariableEntry> variables_;
  std::unordered_map<std::string, Symbol> variables_by_name_;
  std::deque<FunctionEntry> functions_;
  std::unordered_map<std::string, FunctionRef> functions_by_name_;
};

}  // namespace

Symbol variable(std::string_view name) { return Registry::instance().variable(name); }
Symbol jet_variable(Symbol base, Symbol independent, int order) {
  return Registry::instance().jet(base, independent, order);
}
std::optional<Symbol> find_variable(std::string_view name) { return Registry::instance().find_variable(name); }
std::string symbol_name(Symbol s) { return Registry::instance().name(s); }
std::optional<JetInfo> jet_info(Symbol s) { return Registry::instance().jet_info(s); }

FunctionRef declare_function(std::string_view name, std::vector<Symbol> params) {
  return Registry::instance().declare(name, std::move(params));
}
std::optional<FunctionRef> find_function(std::string_view name) { return Registry::instance().find_function(name); }
std::string function_name(FunctionRef f) { return Registry::instance().function_name(f); }
std::vector<Symbol> function_params(FunctionRef f) { return Registry::instance().function_params(f); }

namespace {

std::string describe_parse_error(const std::string& message, std::size_t offset,
                                 const std::vector<std::string>& expected) {
  std::string out = message + " at offset " + std::to_string(offset);
  if (!expected.empty()) {
    out += " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) out += (i ? ", " : "") + expected[i];
    out += ")";
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::string message, std::size_t offset, std::vector<std::string> expected)
    : Error(describe_parse_error(message, offset, expected)), offset_(offset), expected_(std::move(expected)) {}

}  // namespace liefrw

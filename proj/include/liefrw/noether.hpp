#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "liefrw/error.hpp"
#include "liefrw/integrate.hpp"
#include "liefrw/jet.hpp"
#include "liefrw/models.hpp"

namespace liefrw {

/// Q_u = xi_u - tau u' for every dependent, in context order.
struct Characteristic {
  std::vector<std::pair<Symbol, Expr>> components;

  const Expr& of(Symbol u) const;
};

struct ConservationLaw {
  /// Resolved flux: the supplied candidate times `factor`.
  Expr flux;
  Expr candidate;
  Rational factor = 1;
  Characteristic characteristic;
  Lagrangian lagrangian;
  /// sum_u Q_u E_u(L), equal to D_t(flux).
  Expr source;
  bool variational = true;

  std::string to_text() const;
  std::string to_key_values(const std::string& prefix) const;
};

class NotConserved : public Error {
 public:
  NotConserved(const std::string& message, Expr defect) : Error(message), defect_(std::move(defect)) {}
  /// D_t(P) - sum_u Q_u E_u(L) for the supplied P.
  const Expr& defect() const noexcept { return defect_; }

 private:
  Expr defect_;
};

/// pr1 g (L) + L D_t(tau), normalized. Throws ContextMismatch.
Expr variational_residual(const VectorField& g, const Lagrangian& L);

Characteristic characteristics(const VectorField& g);

/// Accepts P when D_t(P) - sum Q_u E_u(L) vanishes, or when it does after
/// rescaling P by a unique nonzero rational constant (recorded in `factor`).
/// Throws NotConserved with the unscaled defect otherwise.
ConservationLaw verify_conservation_law(const Expr& P, const VectorField& g, const Lagrangian& L);

/// a (adot^2 + k - 2 a^2 V - a^2 phidot^2) / 2, the unit-lapse flux candidate.
Expr flux_candidate_P(const ModelConfig& cfg);
/// The bracket as printed: a (adot^2 + k a - 2 a^3 V - a^3 phidot^2) / 2.
Expr flux_printed_P(const ModelConfig& cfg);
/// (a / 2N) (adot^2 + N^2 k - 2 N^2 a^2 V - a^2 phidot^2).
Expr flux_candidate_K(const ModelConfig& cfg);

/// Constant c with conjugate momentum = c * resolved P; pinned, not fitted.
inline const Rational kMomentumFactor{-1};

/// dL~/dt_a of the a-parameterized unit-lapse Lagrangian
/// L~ = t_a L(a, phi, 1/t_a, phi_a/t_a), mapped back with t_a = 1/adot and
/// phi_a = phidot/adot.
Expr conjugate_momentum(const ModelConfig& cfg);

/// conjugate_momentum(cfg) - kMomentumFactor * P with P the resolved flux
/// of time translation; symbolic zero when the two agree.
Expr conjugate_momentum_check(const ModelConfig& cfg);

/// max |flux(t) - flux(t0)| along `traj`.
double numeric_conservation(const Trajectory& traj, const ConservationLaw& law,
                            const std::map<FunctionRef, NumericFunction>& functions = {});

}  // namespace liefrw

#include "dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace liefrw::detail {
namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799, d4 = -10690763975.0 / 1880347072,
                 d5 = 701980252875.0 / 199316789632, d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double norm(std::span<const double> v, std::span<const double> y, const DopriOptions& o) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double sk = o.atol + o.rtol * std::abs(y[i]);
    s += (v[i] / sk) * (v[i] / sk);
  }
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void DenseStep::eval(double t, std::span<double> out) const {
  double h = t_new - t_old;
  double theta = h == 0.0 ? 1.0 : (t - t_old) / h;
  double theta1 = 1.0 - theta;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
  }
}

DopriResult dopri5(const OdeRhs& f, double t0, std::vector<double> y0, double t_end, const DopriOptions& o,
                   const StepObserver& observer) {
  const std::size_t n = y0.size();
  DopriResult result;
  result.t = t0;
  result.y = std::move(y0);
  if (t_end == t0) return result;
  const double direction = t_end > t0 ? 1.0 : -1.0;

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y1(n), ytmp(n), err(n), scale_y(n);
  std::vector<double>& y = result.y;
  double t = t0;
  auto eval = [&](double tt, std::span<const double> yy, std::span<double> dy) {
    ++result.stats.evaluations;
    if (!f(tt, yy, dy)) return false;
    return std::all_of(dy.begin(), dy.end(), [](double v) { return std::isfinite(v); });
  };
  if (!eval(t, y, k1)) {
    result.status = DopriStatus::NonFiniteDerivative;
    return result;
  }

  double h = o.initial_step;
  if (h <= 0.0) {
    // Starting step from the first two derivative norms.
    double d0 = norm(y, y, o);
    double dd1 = norm(k1, y, o);
    double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h0 = std::min(h0, std::abs(t_end - t0));
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + direction * h0 * k1[i];
    if (!eval(t + direction * h0, ytmp, k2)) {
      h = h0 * 1e-3;
    } else {
      for (std::size_t i = 0; i < n; ++i) err[i] = (k2[i] - k1[i]) / h0;
      double dd2 = norm(err, y, o);
      double h1 =
          std::max(dd1, dd2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(dd1, dd2), 1.0 / 5);
      h = std::min(100 * h0, h1);
    }
  }
  h = std::min(h, std::abs(t_end - t0)) * direction;

  DenseStep dense;
  dense.r1.resize(n);
  dense.r2.resize(n);
  dense.r3.resize(n);
  dense.r4.resize(n);
  dense.r5.resize(n);
  bool last_rejected = false;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  while (true) {
    if (result.stats.steps + result.stats.rejected >= o.max_steps) {
      result.status = DopriStatus::TooManySteps;
      return result;
    }
    if (std::abs(h) <= 16.0 * eps * std::max(1.0, std::abs(t))) {
      result.status = DopriStatus::StepUnderflow;
      return result;
    }
    bool final_step = false;
    if ((t + h - t_end) * direction >= 0.0) {
      h = t_end - t;
      final_step = true;
    }
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    finite = finite && eval(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n && finite; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    finite = finite && eval(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n && finite; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    finite = finite && eval(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n && finite; ++i) {
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    finite = finite && eval(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n && finite; ++i) {
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    finite = finite && eval(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n && finite; ++i) {
      y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    finite = finite && eval(t + h, y1, k7);
    if (!finite) {
      // Treat an unevaluable trial point as a rejection with a sharp cut.
      ++result.stats.rejected;
      h *= 0.2;
      last_rejected = true;
      if (std::abs(h) <= 16.0 * eps * std::max(1.0, std::abs(t))) {
        result.status = DopriStatus::NonFiniteDerivative;
        return result;
      }
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      scale_y[i] = std::max(std::abs(y[i]), std::abs(y1[i]));
    }
    double error = norm(err, scale_y, o);
    double factor = error == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(error, -0.2), 0.2, 10.0);
    if (error > 1.0) {
      ++result.stats.rejected;
      h *= std::min(1.0, factor);
      last_rejected = true;
      continue;
    }
    ++result.stats.steps;
    dense.t_old = t;
    dense.t_new = t + h;
    for (std::size_t i = 0; i < n; ++i) {
      double ydiff = y1[i] - y[i];
      double bspl = h * k1[i] - ydiff;
      dense.r1[i] = y[i];
      dense.r2[i] = ydiff;
      dense.r3[i] = bspl;
      dense.r4[i] = ydiff - h * k7[i] - bspl;
      dense.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
    t = final_step ? t_end : t + h;
    y.swap(y1);
    k1.swap(k7);
    result.t = t;
    if (observer && !observer(dense, y)) {
      result.status = DopriStatus::Stopped;
      return result;
    }
    if (final_step) return result;
    if (last_rejected) factor = std::min(factor, 1.0);
    last_rejected = false;
    h *= factor;
  }
}

}  // namespace liefrw::detail

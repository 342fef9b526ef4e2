#pragma once
// Rate sequences c_k (migration) and lambda_k = 2 mu_k (block resampling),
// either explicit tables or generated families of the form
//   value(k) = scale * base^k * (k+shift)^power * log2(k+shift+1)^logpow.
// base == 1 gives the polynomial families, base != 1 the exponential ones.
// The generated form is what the symbolic classifiers key on.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiercan {

struct SeqSpec {
  enum Kind { Explicit, Polynomial, Exponential };
  Kind kind = Polynomial;
  double scale = 1.0;
  double base = 1.0;    // only Exponential uses base != 1
  double power = 0.0;   // exponent on (k+shift)
  double logpow = 0.0;  // exponent on log2(k+shift+1)
  double shift = 1.0;   // (k+shift) in the algebraic part; shift 0 gives k^power literally
  std::vector<double> values;  // Explicit only

  double at(int k) const {
    if (kind == Explicit) {
      if (k < 0 || k >= (int)values.size())
        throw std::out_of_range("explicit sequence has no entry " + std::to_string(k));
      return values[k];
    }
    double alg = k + shift;
    if (alg <= 0.0) alg = 1.0;  // k = 0 with shift 0: the asymptotic form starts at k = 1
    double v = scale;
    if (base != 1.0) v *= std::pow(base, (double)k);
    if (power != 0.0) v *= std::pow(alg, power);
    if (logpow != 0.0) v *= std::pow(std::log2(alg + 1.0), logpow);
    return v;
  }

  int length() const { return kind == Explicit ? (int)values.size() : -1; }  // -1: unbounded

  static SeqSpec constant(double v) {
    SeqSpec s;
    s.kind = Polynomial;
    s.scale = v;
    return s;
  }
  static SeqSpec polynomial(double scale, double power, double shift = 1.0, double logpow = 0.0) {
    SeqSpec s;
    s.kind = Polynomial;
    s.scale = scale;
    s.power = power;
    s.shift = shift;
    s.logpow = logpow;
    return s;
  }
  static SeqSpec exponential(double scale, double base, double power = 0.0, double shift = 1.0,
                             double logpow = 0.0) {
    SeqSpec s;
    s.kind = Exponential;
    s.scale = scale;
    s.base = base;
    s.power = power;
    s.shift = shift;
    s.logpow = logpow;
    return s;
  }
  static SeqSpec explicit_values(std::vector<double> v) {
    SeqSpec s;
    s.kind = Explicit;
    s.values = std::move(v);
    return s;
  }
};

struct ParamFamily {
  SeqSpec c;       // c_k > 0
  SeqSpec lambda;  // lambda_k >= 0, mu_k = lambda_k / 2

  double c_at(int k) const { return c.at(k); }
  double lambda_at(int k) const { return lambda.at(k); }
  double mu_at(int k) const { return 0.5 * lambda.at(k); }

  // largest k with data on both sequences, or `fallback` when generated
  int usable_length(int fallback) const {
    int n = fallback;
    if (c.kind == SeqSpec::Explicit) n = std::min(n, (int)c.values.size());
    if (lambda.kind == SeqSpec::Explicit) n = std::min(n, (int)lambda.values.size());
    return n;
  }
};

// Exponential growth rate of a generated sequence: limsup (1/k) log value(k).
// Explicit tables estimate it from the stored tail (reported, not certified).
inline double growth_rate(const SeqSpec& s) {
  if (s.kind != SeqSpec::Explicit) return std::log(s.base);
  double g = -1e300;
  int n = (int)s.values.size();
  for (int k = n / 2; k < n; ++k)
    if (k > 0 && s.values[k] > 0) g = std::max(g, std::log(s.values[k]) / k);
  return n > 1 ? g : 0.0;
}

// The model is only defined when per-individual total rates converge:
// both sequences must grow strictly slower than N^k.
inline bool growth_ok(const SeqSpec& s, int N) { return growth_rate(s) < std::log((double)N); }

inline void check_positive(const ParamFamily& p, int upto) {
  for (int k = 0; k < upto; ++k) {
    if (p.c_at(k) <= 0.0) throw std::invalid_argument("c_" + std::to_string(k) + " <= 0");
    if (p.lambda_at(k) < 0.0) throw std::invalid_argument("lambda_" + std::to_string(k) + " < 0");
  }
}

// symbolic growth order of a generated sequence: coef * e^{logbase * k} *
// k^power * (log k)^logpow.  Products and ratios act componentwise, which is
// what the series classifiers need; coef only matters for finite-limit reads.
struct Growth {
  double logbase = 0;  // log of the exponential base
  double power = 0;
  double logpow = 0;
  double coef = 1;
  bool zero = false;  // identically zero sequence

  Growth times(const Growth& o) const {
    if (zero || o.zero) return Growth{0, 0, 0, 0, true};
    return Growth{logbase + o.logbase, power + o.power, logpow + o.logpow, coef * o.coef, false};
  }
  Growth over(const Growth& o) const {
    return Growth{logbase - o.logbase, power - o.power, logpow - o.logpow, coef / o.coef, zero};
  }
  // sign of the limit exponent: does the sequence tend to infinity, a constant, or zero
  int direction() const {
    if (zero) return -1;
    if (logbase != 0) return logbase > 0 ? 1 : -1;
    if (power != 0) return power > 0 ? 1 : -1;
    if (logpow != 0) return logpow > 0 ? 1 : -1;
    return 0;
  }
  // limit value: +inf, coef, or 0 depending on direction
  double limit() const {
    int d = direction();
    if (d > 0) return std::numeric_limits<double>::infinity();
    if (d < 0) return 0.0;
    return coef;
  }
};

inline Growth growth_of(const SeqSpec& s) {
  if (s.kind == SeqSpec::Explicit)
    throw std::invalid_argument("explicit tables have no symbolic growth order");
  if (s.scale == 0.0) return Growth{0, 0, 0, 0, true};
  return Growth{std::log(s.base), s.power, s.logpow, s.scale, false};
}

// growth order of the partial sums sum_{l<=k} of a sequence with this order
inline Growth partial_sum_growth(const Growth& g) {
  if (g.zero) return g;
  if (g.logbase > 0) return g;  // dominated by the last term
  if (g.logbase < 0) return Growth{0, 0, 0, g.coef, false};  // converges to a constant
  if (g.power > -1) return Growth{0, g.power + 1, g.logpow, g.coef / (g.power + 1), false};
  if (g.power == -1) {
    if (g.logpow > -1) return Growth{0, 0, g.logpow + 1, g.coef / (g.logpow + 1), false};
    // logpow <= -1 grows slower than any log power (log log at -1); treating it
    // as bounded never flips a downstream convergence verdict within this family
    return Growth{0, 0, 0, g.coef, false};
  }
  return Growth{0, 0, 0, g.coef, false};  // summable tail
}

inline bool series_converges(const Growth& g) {
  if (g.zero) return true;
  if (g.logbase != 0) return g.logbase < 0;
  if (g.power != -1) return g.power < -1;
  return g.logpow < -1;
}

}  // namespace hiercan

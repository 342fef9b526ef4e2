#pragma once
// The volatility recursion d_{k+1} = E[ c_k (mu_k rho + d_k) / (c_k + mu_k rho + d_k) ]
// (expectation over the environment law), its deterministic companions, fixed
// points of the associated Moebius maps, and the scaling classifier that sorts
// (c_k, mu_k) families into their universality cases.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "environment.hpp"
#include "params.hpp"

namespace hiercan {

inline double mobius_step(double c, double mu, double d, const EnvLaw& law) {
  double out = 0;
  for (size_t i = 0; i < law.atoms.size(); ++i) {
    double m = mu * law.atoms[i] + d;
    out += law.weights[i] * c * m / (c + m);
  }
  return out;
}

struct VolatilityTrace {
  std::vector<double> d;     // d[k], k = 0..kmax
  std::vector<double> d_lo;  // companion with rho frozen at 0 (no resampling noise)
  std::vector<double> d_hi;  // companion with rho frozen at 1
  std::vector<double> sigma;          // sigma[k] = sum_{l<k} 1/c_l
  std::vector<double> ratio_c;        // d_k / c_k
  std::vector<double> ratio_sqrt;     // d_k / sqrt(c_k mu_k)
  std::vector<double> sigma_d;        // sigma_k d_k
};

inline VolatilityTrace recurse(const ParamFamily& p, const EnvLaw& law, double d0, int kmax) {
  if (d0 < 0) throw std::invalid_argument("negative starting volatility");
  law.validate();
  VolatilityTrace t;
  t.d.resize(kmax + 1);
  t.d_lo.resize(kmax + 1);
  t.d_hi.resize(kmax + 1);
  t.sigma.resize(kmax + 1);
  t.ratio_c.resize(kmax + 1);
  t.ratio_sqrt.resize(kmax + 1);
  t.sigma_d.resize(kmax + 1);
  t.d[0] = t.d_lo[0] = t.d_hi[0] = d0;
  double sig = 0;
  for (int k = 0; k <= kmax; ++k) {
    double c = p.c_at(k), mu = p.mu_at(k);
    if (c <= 0) throw std::invalid_argument("migration rate must stay positive");
    t.sigma[k] = sig;
    t.ratio_c[k] = t.d[k] / c;
    double cm = c * mu;
    t.ratio_sqrt[k] = cm > 0 ? t.d[k] / std::sqrt(cm) : std::nan("");
    t.sigma_d[k] = sig * t.d[k];
    if (k < kmax) {
      t.d[k + 1] = mobius_step(c, mu, t.d[k], law);
      t.d_lo[k + 1] = c * t.d_lo[k] / (c + t.d_lo[k]);
      t.d_hi[k + 1] = c * (mu + t.d_hi[k]) / (c + mu + t.d_hi[k]);
    }
    sig += 1.0 / c;
  }
  return t;
}

struct FixedPoint {
  double M = 0;
  double residual = 0;  // |g(M) - M| after polish
  double beta = 0;      // contraction factor 1 - g(0)/M
};

// root of M = E[(K rho + M)/(1 + K rho + M)] on (0,1); bisection is the
// authority, a few Newton steps polish the last bits
inline FixedPoint fixed_point_poly(double K, const EnvLaw& law) {
  if (K <= 0) throw std::invalid_argument("ratio limit must be positive for a fixed point");
  law.validate();
  auto g = [&](double M) {
    double s = 0;
    for (size_t i = 0; i < law.atoms.size(); ++i) {
      double x = K * law.atoms[i] + M;
      s += law.weights[i] * x / (1.0 + x);
    }
    return s;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 120; ++it) {
    double mid = 0.5 * (lo + hi);
    (g(mid) - mid > 0 ? lo : hi) = mid;
  }
  double M = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    double h = 1e-7;
    double f = g(M) - M, fp = (g(M + h) - (M + h) - f) / h;
    if (fp >= 0 || !std::isfinite(fp)) break;
    M -= f / fp;
  }
  FixedPoint r;
  r.M = M;
  r.residual = std::abs(g(M) - M);
  r.beta = 1.0 - g(0.0) / M;
  return r;
}

// exponential-family variant: root of M = E[(cK rho + M)/(c + cK rho + M)]
inline FixedPoint fixed_point_exp(double c, double Kbar, const EnvLaw& law) {
  if (c <= 0 || Kbar <= 0) throw std::invalid_argument("base and ratio limit must be positive");
  law.validate();
  auto g = [&](double M) {
    double s = 0;
    for (size_t i = 0; i < law.atoms.size(); ++i) {
      double x = c * Kbar * law.atoms[i] + M;
      s += law.weights[i] * x / (c + x);
    }
    return s;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 120; ++it) {
    double mid = 0.5 * (lo + hi);
    (g(mid) - mid > 0 ? lo : hi) = mid;
  }
  double M = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    double h = 1e-7;
    double f = g(M) - M, fp = (g(M + h) - (M + h) - f) / h;
    if (fp >= 0 || !std::isfinite(fp)) break;
    M -= f / fp;
  }
  FixedPoint r;
  r.M = M;
  r.residual = std::abs(g(M) - M);
  r.beta = 1.0 - g(0.0) / M;
  return r;
}

// which rescaled sequence carries the limit for a given case
enum class Diagnostic { RatioC, RatioSqrtCMu, SigmaD, RatioMu };

struct ScalingClass {
  bool exponential_family = false;
  std::string label;  // "a".."e" or "A","B","C1","C2","C3"; empty if unresolved
  bool resolved = false;
  Diagnostic diagnostic = Diagnostic::RatioC;
  double predicted = 0;  // limit of the diagnostic sequence
  double K = 0;          // lim mu_k/c_k (may be infinity)
  double L = 0;          // lim k^2 mu_k/c_k
  double Kbar = 0;       // exponential families: lim of the subexponential ratio
  double cbase = 1, mubase = 1;
  double a = 0, b = 0;  // polynomial exponents (of the subexponential parts)
  double M = 0;         // fixed-point or closed-form constant where one exists
  double kK_limit = 0;  // lim k * Kbar_k, used by the cluster-formation split
  std::string note;
};

inline SeqSpec scaled_seq(const SeqSpec& s, double f) {
  SeqSpec out = s;
  if (out.kind == SeqSpec::Explicit)
    for (auto& v : out.values) v *= f;
  else
    out.scale *= f;
  return out;
}

inline ScalingClass classify_polynomial(const SeqSpec& c, const SeqSpec& mu, const EnvLaw& law) {
  if (c.kind == SeqSpec::Explicit || mu.kind == SeqSpec::Explicit)
    throw std::invalid_argument("scaling classification needs generated families");
  ScalingClass cls;
  cls.a = c.power;
  cls.b = mu.power;
  Growth gc = growth_of(c), gm = growth_of(mu);
  if (gm.zero) {
    cls.note = "no resampling: volatility follows the pure-migration recursion";
    return cls;
  }
  Growth ratio = gm.over(gc);
  cls.K = ratio.limit();
  Growth l2 = ratio.times(Growth{0, 2, 0, 1, false});
  cls.L = l2.limit();
  if (std::isinf(cls.K)) {
    cls.label = "a";
    cls.resolved = true;
    cls.diagnostic = Diagnostic::RatioC;
    cls.predicted = 1.0;
    return cls;
  }
  if (cls.K > 0) {
    cls.label = "b";
    cls.resolved = true;
    cls.diagnostic = Diagnostic::RatioC;
    cls.M = fixed_point_poly(cls.K, law).M;
    cls.predicted = cls.M;
    return cls;
  }
  if (std::isinf(cls.L)) {
    cls.label = "c";
    cls.resolved = true;
    cls.diagnostic = Diagnostic::RatioSqrtCMu;
    cls.predicted = 1.0;
    return cls;
  }
  // K = 0, L finite: the sigma_k d_k regime, defined only below the critical
  // migration exponent
  if (cls.a < 1.0) {
    cls.label = "d";
    cls.resolved = true;
    cls.diagnostic = Diagnostic::SigmaD;
    cls.M = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * cls.L / ((1.0 - cls.a) * (1.0 - cls.a))));
    cls.predicted = cls.M;
    return cls;
  }
  if (cls.a == 1.0) {
    cls.label = "e";
    cls.note = "critical migration exponent: no scaling result exists";
    return cls;
  }
  cls.note = "migration sums converge (coexistence side); scaling theory does not apply";
  return cls;
}

inline ScalingClass classify_exponential(const SeqSpec& c, const SeqSpec& mu, const EnvLaw& law) {
  if (c.kind == SeqSpec::Explicit || mu.kind == SeqSpec::Explicit)
    throw std::invalid_argument("scaling classification needs generated families");
  if (c.base == 1.0 && mu.base == 1.0) return classify_polynomial(c, mu, law);
  ScalingClass cls;
  cls.exponential_family = true;
  cls.cbase = c.base;
  cls.mubase = mu.base;
  cls.a = c.power;
  cls.b = mu.power;
  Growth gm = growth_of(mu);
  if (gm.zero) {
    cls.note = "no resampling: volatility follows the pure-migration recursion";
    return cls;
  }
  // subexponential parts: strip the bases
  Growth bc{0, c.power, c.logpow, c.scale, false};
  Growth bm{0, mu.power, mu.logpow, mu.scale, false};
  Growth bratio = bm.over(bc);
  cls.Kbar = bratio.limit();
  double cb = c.base, mb = mu.base;
  if (cb < mb || (cb == mb && std::isinf(cls.Kbar))) {
    cls.label = "A";
    cls.resolved = true;
    cls.diagnostic = Diagnostic::RatioC;
    cls.predicted = 1.0 / cb;
    return cls;
  }
  if (cb == mb && cls.Kbar > 0) {
    cls.label = "B";
    cls.resolved = true;
    cls.diagnostic = Diagnostic::RatioC;
    cls.M = fixed_point_exp(cb, cls.Kbar, law).M;
    cls.predicted = cls.M / cb;
    return cls;
  }
  if (cb == mb) {  // Kbar = 0
    if (cb < 1.0) {
      cls.label = "C1";
      cls.resolved = true;
      cls.diagnostic = Diagnostic::RatioC;
      cls.predicted = (1.0 - cb) / cb;
      return cls;
    }
    if (cb > 1.0) {
      if (!series_converges(bratio)) {
        cls.label = "C2";
        cls.resolved = true;
        cls.diagnostic = Diagnostic::RatioMu;
        cls.predicted = 1.0 / (mb - 1.0);
        Growth kk = bratio.times(Growth{0, 1, 0, 1, false});
        cls.kK_limit = kk.limit();
        return cls;
      }
      cls.note = "equal bases above 1 with summable ratio: outside the case list";
      return cls;
    }
    // cb == 1: both subexponential; fall through to the polynomial classifier
    return classify_polynomial(SeqSpec::polynomial(c.scale, c.power, c.shift, c.logpow),
                               SeqSpec::polynomial(mu.scale, mu.power, mu.shift, mu.logpow), law);
  }
  // cb > mb: only the vanishing-subexponential-ratio corner is classified
  if (cls.Kbar == 0) {
    if (cb < 1.0) {
      cls.label = "C3";
      cls.resolved = true;
      cls.diagnostic = Diagnostic::SigmaD;
      cls.predicted = 1.0;
      return cls;
    }
    if (cb == 1.0) {
      if (cls.a < 1.0) {
        cls.label = "C3";
        cls.resolved = true;
        cls.diagnostic = Diagnostic::SigmaD;
        cls.predicted = 1.0;
        return cls;
      }
      if (cls.a == 1.0) {
        cls.note = "critical migration exponent: no scaling result exists";
        return cls;
      }
      cls.note = "migration sums converge (coexistence side); scaling theory does not apply";
      return cls;
    }
    cls.note = "dominant growing migration (coexistence side); scaling theory does not apply";
    return cls;
  }
  cls.note = "parameters fall outside the classified cases";
  return cls;
}

// dispatch on the family shapes; mu_k = lambda_k / 2
inline ScalingClass classify_family(const ParamFamily& p, const EnvLaw& law) {
  SeqSpec mu = scaled_seq(p.lambda, 0.5);
  if (p.c.kind == SeqSpec::Exponential || mu.kind == SeqSpec::Exponential ||
      p.c.base != 1.0 || mu.base != 1.0)
    return classify_exponential(p.c, mu, law);
  return classify_polynomial(p.c, mu, law);
}

struct ScalingVerdict {
  double observed = 0;
  double predicted = 0;
  double gap = 0;             // |observed - predicted| at the window end
  double window_max_gap = 0;  // worst deviation across the window
  int k_at = 0;
};

inline ScalingVerdict verify_scaling(const VolatilityTrace& t, const ScalingClass& cls,
                                     const ParamFamily& p, int k_lo, int k_hi) {
  if (!cls.resolved) throw std::invalid_argument("unresolved scaling class has no prediction");
  if (k_hi >= (int)t.d.size() || k_lo > k_hi)
    throw std::out_of_range("verification window beyond trace length");
  auto diag = [&](int k) -> double {
    switch (cls.diagnostic) {
      case Diagnostic::RatioC: return t.ratio_c[k];
      case Diagnostic::RatioSqrtCMu: return t.ratio_sqrt[k];
      case Diagnostic::SigmaD: return t.sigma_d[k];
      case Diagnostic::RatioMu: return t.d[k] / p.mu_at(k);
    }
    return 0;
  };
  ScalingVerdict v;
  v.predicted = cls.predicted;
  v.k_at = k_hi;
  v.observed = diag(k_hi);
  v.gap = std::abs(v.observed - v.predicted);
  for (int k = k_lo; k <= k_hi; ++k) {
    double g = std::abs(diag(k) - v.predicted);
    if (g > v.window_max_gap) v.window_max_gap = g;
  }
  return v;
}

struct Substitution {
  std::vector<double> r;  // effective environment factor per level
  double max_dev = 0;     // max |d(substituted) - d(direct)| over the trace
};

// replaces the random rho by the deterministic r_k that reproduces the averaged
// recursion exactly, then reruns the degenerate-law recursion as a cross-check
inline Substitution stability_substitution(const ParamFamily& p, const EnvLaw& law, double d0,
                                           int kmax) {
  VolatilityTrace t = recurse(p, law, d0, kmax);
  Substitution s;
  s.r.resize(kmax);
  double dt = d0;
  for (int k = 0; k < kmax; ++k) {
    double c = p.c_at(k), mu = p.mu_at(k);
    double num = 0, den = 0;
    for (size_t i = 0; i < law.atoms.size(); ++i) {
      double inv = 1.0 / (c + mu * law.atoms[i] + t.d[k]);
      num += law.weights[i] * law.atoms[i] * inv;
      den += law.weights[i] * inv;
    }
    s.r[k] = num / den;
    double m = mu * s.r[k] + dt;
    dt = c * m / (c + m);
    double dev = std::abs(dt - t.d[k + 1]);
    if (dev > s.max_dev) s.max_dev = dev;
  }
  return s;
}

}  // namespace hiercan

#pragma once
// Longtime behaviour seen from one tagged colony: the per-level variance
// split of the interaction chain, the five cluster-formation classes with
// their scaling windows, the interface sums Delta(j), and the averaging
// check that justifies replacing quenched sums by their means.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "environment.hpp"
#include "hiergroup.hpp"
#include "params.hpp"
#include "renorm.hpp"
#include "rng.hpp"

namespace hiercan {

// ---------------------------------------------------------------- variance

// Share of var_theta(f) still carried by fluctuations below each level.
// factor_k = 2c_k / (2c_k + lambda_k rho_k + 2 d_k); the product over
// k <= j is the equilibrium variance of the level-j chain state relative
// to var_theta(f). Annealed variant freezes rho at 1.
struct VarianceProfile {
  int j = 0;
  std::vector<double> rho;               // realized rho_k on the spine of eta
  std::vector<double> factors;           // quenched factors, k = 0..j
  std::vector<double> annealed_factors;  // rho == 1
  double product = 1.0;
  double annealed_product = 1.0;
};

inline VarianceProfile variance_profile(const Environment& env, const ParamFamily& p,
                                        const VolatilityTrace& trace, int j,
                                        const HierAddress& eta) {
  if (j < 0) throw std::invalid_argument("level must be >= 0");
  if (j >= (int)trace.d.size())
    throw std::invalid_argument("volatility trace shorter than requested level");
  VarianceProfile out;
  out.j = j;
  out.rho.resize(j + 1);
  out.factors.resize(j + 1);
  out.annealed_factors.resize(j + 1);
  for (int k = 0; k <= j; ++k) {
    double ck = p.c_at(k), lk = p.lambda_at(k), dk = trace.d[k];
    if (ck <= 0) throw std::invalid_argument("migration rates must be positive");
    double rho = env.rho_at(TreeAddress(eta, k));
    out.rho[k] = rho;
    out.factors[k] = 2.0 * ck / (2.0 * ck + lk * rho + 2.0 * dk);
    out.annealed_factors[k] = 2.0 * ck / (2.0 * ck + lk + 2.0 * dk);
    out.product *= out.factors[k];
    out.annealed_product *= out.annealed_factors[k];
  }
  return out;
}

// ----------------------------------------------------------- cluster class

enum class ClusterRegime { I1, I2, II1, II2, II3, Unclassified };

inline const char* regime_tag(ClusterRegime r) {
  switch (r) {
    case ClusterRegime::I1: return "I1";
    case ClusterRegime::I2: return "I2";
    case ClusterRegime::II1: return "II1";
    case ClusterRegime::II2: return "II2";
    case ClusterRegime::II3: return "II3";
    default: return "unclassified";
  }
}

// Descriptive record of the cluster-formation class reached from a scaling
// classification. The limit dynamics are reported, not simulated.
struct ClusterClass {
  ClusterRegime regime = ClusterRegime::Unclassified;
  std::string label;        // scaling-class label this was derived from
  bool resolved = false;
  std::string description;  // limit object in words
  std::string window;       // cluster-scale window k_alpha(j)
  std::string time_change;  // ell(alpha) for the II regimes
  std::string volume;       // cluster volume order at time N^t
  double Mt = 0;            // I2 kernel drift constant
  double Kt = 0;            // I2 kernel environment coupling (0: env drops out)
  double R = 0;             // II2 exponent
  std::string caveat;       // convergence-mode caveat where it applies
  std::string note;
};

inline ClusterClass cluster_class(const ScalingClass& s) {
  ClusterClass c;
  c.label = s.label;
  const std::string in_probability =
      "limit holds in P-probability over the environment, not P-a.s.";
  if (s.label.empty()) {
    c.note = "no classification: " + (s.note.empty() ? std::string("scaling class unresolved") : s.note);
    return c;
  }
  if (s.label == "e") {
    c.regime = ClusterRegime::II3;
    c.resolved = false;
    c.volume = "N^(o(t))";
    c.description = "slow clustering expected; conjecture only, no scaling function exists";
    c.note = "critical migration exponent sits outside the proved classes";
    return c;
  }
  if (s.label == "a" || s.label == "A") {
    c.regime = ClusterRegime::I1;
    c.resolved = true;
    c.description = "trap kernel: theta-mixture of point masses, K(theta,.) = int theta(du) delta_{delta_u}";
    c.window = "k_alpha(j) = max(0, j + 1 - alpha), alpha a nonnegative integer";
    c.volume = "N^t";
    return c;
  }
  if (s.label == "b" || s.label == "B" || s.label == "C1" ||
      (s.label == "C3" && s.cbase < 1.0)) {
    c.regime = ClusterRegime::I2;
    c.resolved = true;
    c.window = "k_alpha(j) = max(0, j + 1 - alpha), alpha a nonnegative integer";
    c.volume = "Z*N^t";
    if (s.label == "b") {
      c.Mt = s.M;
      c.Kt = s.K;
    } else if (s.label == "B") {
      c.Mt = s.M / s.cbase;  // fixed point measured on the migration clock
      c.Kt = s.Kbar;
    } else {  // C1 and the geometric branch of C3: environment drops out
      c.Mt = (1.0 - s.cbase) / s.cbase;
      c.Kt = 0.0;
    }
    c.description =
        "environment-driven chain with kernels K_alpha = nu(1, " + std::to_string(c.Mt) +
        ", 2*" + std::to_string(c.Kt) + "*chi_alpha)_theta";
    if (c.Kt == 0.0) c.note = "kernel unaffected by the environment";
    return c;
  }
  if (s.label == "c") {
    c.regime = ClusterRegime::II1;
    c.resolved = true;
    c.window = "k_alpha(j) = j + 1 - alpha/sqrt(K_j), h(j) = 1/sqrt(K_j)";
    c.time_change = "ell(alpha) = alpha";
    c.description = "time-changed Fleming-Viot Z(0,1,0)_theta evaluated at ell(alpha)";
    c.volume = "N^(t-o(t))";
    c.caveat = in_probability;
    return c;
  }
  if (s.label == "C2") {
    double f = s.mubase / (s.mubase - 1.0);
    if (std::isinf(s.kK_limit)) {
      c.regime = ClusterRegime::II1;
      c.resolved = true;
      c.window = "k_alpha(j) = j + 1 - alpha/Kbar_j, h(j) = 1/Kbar_j";
      c.time_change = "ell(alpha) = alpha*mu/(mu-1) = alpha*" + std::to_string(f);
      c.description = "time-changed Fleming-Viot Z(0,1,0)_theta evaluated at ell(alpha)";
      c.volume = "N^(t-o(t))";
      c.caveat = in_probability;
      return c;
    }
    if (s.kK_limit > 0) {
      c.regime = ClusterRegime::II2;
      c.resolved = true;
      c.R = s.kK_limit * f;
      c.window = "k_alpha(j) = (1 - alpha)(j + 1), alpha in [0,1)";
      c.time_change = "ell(alpha) = log(1/(1-alpha)^R)";
      c.description = "time-changed Fleming-Viot Z(0,1,0)_theta evaluated at ell(alpha)";
      c.volume = "N^(Z*t)";
      c.caveat = in_probability;
      return c;
    }
    c.note = "no classification: k*Kbar_k tends to 0, below every covered cluster scale";
    return c;
  }
  if (s.label == "d" || s.label == "C3") {
    c.regime = ClusterRegime::II2;
    c.resolved = true;
    c.R = (s.label == "d") ? s.M * (1.0 - s.a) : (1.0 - s.a);
    c.window = "k_alpha(j) = (1 - alpha)(j + 1), alpha in [0,1)";
    c.time_change = "ell(alpha) = log(1/(1-alpha)^R)";
    c.description = "time-changed Fleming-Viot Z(0,1,0)_theta evaluated at ell(alpha)";
    c.volume = "N^(Z*t)";
    c.caveat = in_probability;
    return c;
  }
  c.note = "no classification: unrecognized scaling label " + s.label;
  return c;
}

// --------------------------------------------------------------- Delta(j)

// Interface sum over the cluster-scale window [k_lo, k_hi]: terms
// w_k exp(-sum_{l=k+1..k_hi} e_l) accumulated from the top end down.
struct DeltaResult {
  double delta = 0;
  double limit = 0;
  double gap = 0;
  long k_lo = 0, k_hi = -1;  // empty window when k_hi < k_lo
};

namespace detail {

template <class W, class E>
inline double window_sum(long lo, long hi, W&& w, E&& e) {
  double out = 0.0, tot = 0.0;
  for (long k = hi; k >= lo; --k) {
    out += w(k) * std::exp(-tot);
    tot += e(k);
  }
  return out;
}

}  // namespace detail

// Finite interface sum for the diffusive classes and its closed-form limit.
// alpha2 <= alpha1; equal endpoints give the empty window.
inline DeltaResult delta_limit(const ParamFamily& p, const ScalingClass& s, double alpha1,
                               double alpha2, long j) {
  if (!(alpha2 <= alpha1)) throw std::invalid_argument("window endpoints must satisfy alpha2 <= alpha1");
  if (alpha2 < 0) throw std::invalid_argument("window endpoints must be nonnegative");
  if (j < 2) throw std::invalid_argument("level too small for a cluster window");
  bool d_family = (s.label == "d") || (s.label == "C3" && s.cbase == 1.0);
  bool c_case = (s.label == "c");
  bool c2_case = (s.label == "C2");
  if (!(d_family || c_case || c2_case))
    throw std::invalid_argument("scaling class has no interface-sum limit");
  DeltaResult out;
  if (alpha1 == alpha2) return out;

  auto ratio = [&](long k) { return p.mu_at((int)k) / p.c_at((int)k); };

  if (c_case || c2_case) {
    // window width 1/sqrt(K_j) resp. 1/Kbar_j
    double Kj = ratio(j);
    if (!(Kj > 0)) throw std::invalid_argument("resampling/migration ratio must be positive");
    double f = 1.0, h = 0.0;
    if (c_case) {
      h = 1.0 / std::sqrt(Kj);
    } else {
      f = s.mubase / (s.mubase - 1.0);
      h = 1.0 / Kj;  // bases match in this class, so the bare ratio is Kbar
    }
    long lo = std::max<long>(1, (long)std::ceil((double)(j + 1) - alpha1 * h));
    long hi = (long)std::floor((double)(j + 1) - alpha2 * h);
    out.k_lo = lo;
    out.k_hi = hi;
    if (c_case) {
      out.delta = detail::window_sum(lo, hi,
                                     [&](long k) { return std::sqrt(ratio(k)); },
                                     [&](long k) { return ratio(k) + std::sqrt(ratio(k)); });
      out.limit = 1.0 - std::exp(-(alpha1 - alpha2));
    } else {
      out.delta = detail::window_sum(lo, hi, [&](long k) { return f * ratio(k); },
                                     [&](long k) { return f * ratio(k); });
      out.limit = 1.0 - std::exp(-f * (alpha1 - alpha2));
    }
  } else {
    if (alpha1 >= 1.0) throw std::invalid_argument("window endpoint must lie in [0,1)");
    double R = (s.label == "d") ? s.M * (1.0 - s.a) : (1.0 - s.a);
    long lo = std::max<long>(1, (long)std::ceil((1.0 - alpha1) * (double)(j + 1)));
    long hi = (long)std::floor((1.0 - alpha2) * (double)(j + 1));
    out.k_lo = lo;
    out.k_hi = hi;
    out.delta = detail::window_sum(lo, hi, [&](long k) { return R / (double)k; },
                                   [&](long k) { return ratio(k) + R / (double)k; });
    out.limit = 1.0 - std::pow((1.0 - alpha1) / (1.0 - alpha2), R);
  }
  out.gap = std::abs(out.delta - out.limit);
  return out;
}

// Same sum with the recursion's own volatilities in place of the class
// asymptotics: sum over [k_lo, k_hi] of (d_{k+1}/c_k) exp(-sum (mu_l+d_l)/c_l).
inline double delta_raw(const ParamFamily& p, const VolatilityTrace& trace, long k_lo,
                        long k_hi) {
  if (k_hi + 1 >= (long)trace.d.size())
    throw std::invalid_argument("volatility trace shorter than requested window");
  if (k_lo < 0) throw std::invalid_argument("window start must be nonnegative");
  return detail::window_sum(
      k_lo, k_hi, [&](long k) { return trace.d[k + 1] / p.c_at((int)k); },
      [&](long k) { return (p.mu_at((int)k) + trace.d[k]) / p.c_at((int)k); });
}

// ------------------------------------------------------------------- WLLN

// Concentration of the quenched hazard sum S(j1,j2) = sum m_k around its
// mean over environment replicas.
struct WllnResult {
  double es = 0;          // E[S]
  double mean_ratio = 0;  // sample mean of S/E[S]
  double var_ratio = 0;   // sample variance of S/E[S]
  double max_chi = 0;     // largest single-level weight in the sum
  int replicas = 0;
};

inline WllnResult wlln_check(const EnvLaw& law, const ParamFamily& p, int j1, int j2,
                             int replicas, u64 master_seed, double d0 = 1.0) {
  if (j2 <= j1 || j1 < 0) throw std::invalid_argument("need 0 <= j1 < j2");
  if (replicas < 2) throw std::invalid_argument("need at least 2 replicas");
  law.validate();
  VolatilityTrace trace = recurse(p, law, d0, j2);
  int n = j2 - j1 + 1;
  std::vector<double> base(n), wrand(n);  // m_k = wrand_k * rho_k + base_k
  std::vector<u64> ah(n);                 // address hash of the spine node at height k
  double es = 0, mean_rho = law.mean(), max_chi = 0;
  HierAddress origin = HierAddress::zero(2);
  for (int k = j1; k <= j2; ++k) {
    double ck = p.c_at(k);
    if (ck <= 0) throw std::invalid_argument("migration rates must be positive");
    base[k - j1] = trace.d[k] / ck;
    wrand[k - j1] = p.mu_at(k) / ck;
    ah[k - j1] = fnv1a64(serialize(TreeAddress(origin, k)));
    es += wrand[k - j1] * mean_rho + base[k - j1];
  }
  if (!(es > 0)) throw std::invalid_argument("sum has no mass on the requested window");
  for (int k = 0; k < n; ++k) max_chi = std::max(max_chi, wrand[k] / es);

  double sum = 0, sumsq = 0;
  for (int r = 0; r < replicas; ++r) {
    Environment env(law, derive_seed(master_seed, (u64)r));
    double s = 0;
    for (int k = 0; k < n; ++k) s += wrand[k] * env.rho_at_hash(ah[k]) + base[k];
    double ratio = s / es;
    sum += ratio;
    sumsq += ratio * ratio;
  }
  WllnResult out;
  out.es = es;
  out.replicas = replicas;
  out.mean_ratio = sum / replicas;
  out.var_ratio = (sumsq - sum * sum / replicas) / (replicas - 1);
  out.max_chi = max_chi;
  return out;
}

}  // namespace hiercan

#pragma once
// Quenched random environment: one rho value per tree node, i.i.d. across nodes,
// realized as a pure function of (master seed, node address) so every worker and
// every replay sees the same environment without storing it.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiergroup.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace hiercan {

// law of the mass factor rho, nonnegative with mean 1 in the standard setup;
// atomic so the inverse CDF is exact
struct EnvLaw {
  std::vector<double> atoms;    // nonnegative values
  std::vector<double> weights;  // nonnegative, summing to 1

  static EnvLaw dirac(double v) { return EnvLaw{{v}, {1.0}}; }
  static EnvLaw two_point(double lo, double hi, double p_hi) {
    return EnvLaw{{lo, hi}, {1.0 - p_hi, p_hi}};
  }

  void validate() const {
    if (atoms.empty() || atoms.size() != weights.size())
      throw std::invalid_argument("environment law needs matching atoms/weights");
    double tot = 0;
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (atoms[i] < 0.0 || !std::isfinite(atoms[i]))
        throw std::invalid_argument("environment atom must be finite and nonnegative");
      if (weights[i] < 0.0) throw std::invalid_argument("negative environment weight");
      tot += weights[i];
    }
    if (std::abs(tot - 1.0) > 1e-9)
      throw std::invalid_argument("environment weights sum to " + std::to_string(tot));
  }

  double mean() const {
    double m = 0;
    for (size_t i = 0; i < atoms.size(); ++i) m += atoms[i] * weights[i];
    return m;
  }
  double second_moment() const {
    double m = 0;
    for (size_t i = 0; i < atoms.size(); ++i) m += atoms[i] * atoms[i] * weights[i];
    return m;
  }
  double variance() const {
    double m = mean();
    return second_moment() - m * m;
  }
  bool degenerate() const { return atoms.size() == 1 || variance() < 1e-15; }

  // exact inverse CDF on the atom list
  double quantile(double u) const {
    double acc = 0;
    for (size_t i = 0; i + 1 < atoms.size(); ++i) {
      acc += weights[i];
      if (u < acc) return atoms[i];
    }
    return atoms.back();
  }
};

// shape of one block resampling event: atom i picked with weight w_i / W,
// then each lineage in the block participates independently with probability r_i.
// W = sum_i w_i / r_i^2 normalizes pair rates.
struct ChiAtom {
  double r = 1.0;  // participation probability, in (0,1]
  double w = 1.0;  // raw weight
};

struct ChiShape {
  std::vector<ChiAtom> atoms;

  static ChiShape single(double r) { return ChiShape{{ChiAtom{r, 1.0}}}; }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("block event shape needs at least one atom");
    for (auto& a : atoms) {
      if (a.r <= 0.0 || a.r > 1.0)
        throw std::invalid_argument("participation probability outside (0,1]");
      if (a.w < 0.0) throw std::invalid_argument("negative block atom weight");
    }
  }

  // total event intensity per unit lambda: sum w_i / r_i^2
  double event_weight() const {
    double W = 0;
    for (auto& a : atoms) W += a.w / (a.r * a.r);
    return W;
  }
  // per ordered pair coalescence weight: sum w_i (each pair merges w.p. r^2 at atom i)
  double pair_weight() const {
    double s = 0;
    for (auto& a : atoms) s += a.w;
    return s;
  }
  // mean participation mass sum w_i / r_i (single-lineage relocation weight)
  double single_weight() const {
    double s = 0;
    for (auto& a : atoms) s += a.w / a.r;
    return s;
  }
};

// rate at which a FIXED set of l out of b blocks merges in one event:
// lambda_{b,l} = sum_i w_i r_i^l (1-r_i)^(b-l) / r_i^2 (per unit level rate;
// no binomial factor, so lambda_{b,l} = lambda_{b+1,l} + lambda_{b+1,l+1})
inline double coalescence_rate(int b, int l, const ChiShape& chi) {
  if (l < 2 || l > b) return 0.0;
  double s = 0;
  for (auto& a : chi.atoms) {
    double t = a.w / (a.r * a.r);
    t *= std::pow(a.r, (double)l) * std::pow(1.0 - a.r, (double)(b - l));
    s += t;
  }
  return s;
}

// the quenched environment itself: rho at node xi is a deterministic hash of
// (seed, serialized address) pushed through the law's inverse CDF
class Environment {
 public:
  Environment(EnvLaw law, u64 master_seed) : law_(std::move(law)), seed_(master_seed) {
    law_.validate();
  }

  double rho_at(const TreeAddress& xi) const {
    return rho_at_hash(fnv1a64(serialize(xi)));
  }

  // same value, from a precomputed address hash (hot loops reuse the hash
  // across many seeds/replicas)
  double rho_at_hash(u64 addr_hash) const {
    if (law_.atoms.size() == 1) return law_.atoms[0];
    u64 h = hash_combine(seed_, addr_hash);
    // one mix -> uniform in [0,1)
    double u = (double)(mix64(h) >> 11) * 0x1.0p-53;
    return law_.quantile(u);
  }

  const EnvLaw& law() const { return law_; }
  u64 seed() const { return seed_; }

 private:
  EnvLaw law_;
  u64 seed_;
};

// block resampling intensity at a tree site: level rate scaled by the local mass
inline double lambda_at(const Environment& env, const ParamFamily& p, const TreeAddress& xi) {
  return p.lambda_at(xi.height) * env.rho_at(xi);
}

// the modulated offspring measure at a tree site; total mass equals rho_at
inline ChiShape chi_at(const Environment& env, const ChiShape& base, const TreeAddress& xi) {
  ChiShape out = base;
  double rho = env.rho_at(xi);
  double tot = 0;
  for (auto& a : out.atoms) tot += a.w;
  // base shapes are normalized to mass 1; rescale defensively if not
  double f = tot > 0 ? rho / tot : 0.0;
  for (auto& a : out.atoms) a.w *= f;
  return out;
}

// report-only sanity check of a full model specification: growth conditions on
// both rate families for the given N, moment conditions on the law, and the
// stronger two-sided support bound some of the limit statements need
struct ModelReport {
  double c_growth = 0, lambda_growth = 0, log_n = 0;
  bool c_growth_ok = false, lambda_growth_ok = false;
  double mean = 0, second_moment = 0;
  bool mean_one = false, second_moment_finite = false;
  bool bounded_support = false;
  double delta = 0;  // delta <= rho <= 1/delta when bounded_support
  bool ok = false;
  std::string note;
};

inline ModelReport validate_model(const ParamFamily& p, const EnvLaw& law, int N) {
  ModelReport r;
  r.log_n = std::log((double)N);
  r.c_growth = growth_rate(p.c);
  r.lambda_growth = growth_rate(p.lambda);
  r.c_growth_ok = r.c_growth < r.log_n;
  r.lambda_growth_ok = r.lambda_growth < r.log_n;
  r.mean = law.mean();
  r.second_moment = law.second_moment();
  r.mean_one = std::abs(r.mean - 1.0) < 1e-12;
  r.second_moment_finite = std::isfinite(r.second_moment);
  double lo = 1e300, hi = 0;
  for (double a : law.atoms) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (lo > 0) {
    r.bounded_support = true;
    r.delta = std::min(lo, hi > 0 ? 1.0 / hi : 1.0);
  }
  if (hi == 0) r.note = "zero environment; valid only as comparison baseline";
  r.ok = r.c_growth_ok && r.lambda_growth_ok && r.mean_one && r.second_moment_finite;
  return r;
}

}  // namespace hiercan

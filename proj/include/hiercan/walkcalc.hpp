#pragma once
// Closed forms for the homogeneous hierarchical random walk whose level-k jump
// relocates uniformly over the k-ball at rate cbar_{k-1}/N^{k-1}, where
// cbar_k = c_k + lambda_{k+1}/N folds the block-resampling relocations into
// the migration.  Everything here is a function of the relaxation rates
//   H_j = sum_{i>=j} cbar_{i-1} N^{1-i},
// the exact eigenvalues of the generator on the distance-j character modes.
// The r_j / h_j / D fields are the unit-jump-rate display quantities
// (D h_j -> H_j as N grows); time-domain formulas use H_j directly.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "params.hpp"

namespace hiercan {

// lambda beyond an explicit table is zero (level-truncated systems);
// explicit migration tables extend by their final entry (tail estimation only)
inline double lambda_tail(const ParamFamily& p, int k) {
  if (p.lambda.kind == SeqSpec::Explicit && k >= (int)p.lambda.values.size()) return 0.0;
  return p.lambda_at(k);
}
inline double c_extended(const ParamFamily& p, int k) {
  if (p.c.kind == SeqSpec::Explicit && k >= (int)p.c.values.size()) {
    if (p.c.values.empty()) throw std::invalid_argument("empty migration table");
    return p.c.values.back();
  }
  return p.c_at(k);
}
inline double cbar_at(const ParamFamily& p, int N, int k) {
  return c_extended(p, k) + lambda_tail(p, k + 1) / N;
}

struct WalkProfile {
  int N = 2;
  int jmax = 0;
  std::vector<double> cbar;  // cbar[k], k = 0..jmax
  std::vector<double> rate;  // rate[j] = H_j, j = 1..jmax; rate[0] unused
  std::vector<double> r;     // r[j]: fraction of jumps landing at distance exactly j
  std::vector<double> h;     // h[j]: hazard weights on the unit-jump-rate clock
  double D = 0;              // total position-changing jump rate
  double tail_bound = 0;     // relative jump mass neglected beyond jmax
};

// number of sites at hierarchical distance exactly k
inline double radial_count(int N, int k) {
  if (k == 0) return 1.0;
  return std::pow((double)N, k - 1) * (N - 1);
}

// coefficient of the e^{-H_j t} mode in p_t(0, eta) at distance k
inline double mode_coeff(int N, int j, int k) {
  if (j < 1 || j < k) return 0.0;
  if (k > 0 && j == k) return -1.0;
  return (double)(N - 1);  // j > k, or k = 0 with j >= 1
}

inline WalkProfile profile(const ParamFamily& params, int N, int jmax) {
  if (N < 2) throw std::invalid_argument("hierarchy order must be >= 2");
  if (jmax < 2) throw std::invalid_argument("jmax must be >= 2");
  int jext = jmax + 64;  // extension levels for the tails of the level sums

  std::vector<double> cb(jext + 1);
  for (int k = 0; k <= jext; ++k) cb[k] = cbar_at(params, N, k);

  // decay check on the per-level jump rates cbar_{i-1} N^{1-i}
  auto term = [&](int i) { return cb[i - 1] * std::pow((double)N, 1 - i); };
  double t_last = term(jext), t_prev = term(jext - 1);
  double rho = t_prev > 0 ? t_last / t_prev : 0.0;
  if (rho >= 0.999)
    throw std::invalid_argument("migration rates grow too fast: level sums do not converge");
  double geo = rho < 1.0 ? rho / (1.0 - rho) : 0.0;

  WalkProfile w;
  w.N = N;
  w.jmax = jmax;
  w.cbar.assign(cb.begin(), cb.begin() + jmax + 1);
  w.rate.assign(jmax + 1, 0.0);
  w.r.assign(jmax + 1, 0.0);
  w.h.assign(jmax + 1, 0.0);

  // H_j by downward recurrence, seeded with a geometric tail estimate
  std::vector<double> H(jext + 2, 0.0);
  H[jext + 1] = t_last * geo;
  for (int j = jext; j >= 1; --j) H[j] = H[j + 1] + term(j);
  for (int j = 1; j <= jmax; ++j) w.rate[j] = H[j];

  // T_j = sum_{i>=j} cbar_{i-1} N^{1-2i}; u_j = ((N-1)/N) N^j T_j is the rate
  // of jumps landing at distance exactly j, D the total moving rate
  std::vector<double> T(jext + 2, 0.0);
  double tt_last = cb[jext - 1] * std::pow((double)N, 1 - 2 * jext);
  T[jext + 1] = tt_last * geo / (N * N);
  for (int j = jext; j >= 1; --j) T[j] = T[j + 1] + cb[j - 1] * std::pow((double)N, 1 - 2 * j);

  std::vector<double> u(jext + 1, 0.0);
  double D = 0;
  double frac = (double)(N - 1) / N;
  for (int j = 1; j <= jext; ++j) {
    u[j] = frac * std::pow((double)N, j) * T[j];
    D += u[j];
  }
  w.D = D;
  double tail_u = u[jext] > 0 && u[jext - 1] > 0 ? u[jext] * (u[jext] / u[jext - 1]) : 0.0;
  double tail_sum = 0;
  for (int j = jmax + 1; j <= jext; ++j) tail_sum += u[j];
  w.tail_bound = (tail_sum + tail_u) / D;

  for (int j = 1; j <= jmax; ++j) w.r[j] = u[j] / D;
  // h_j = ((N-1)/N) r_j + sum_{i>j} r_i, accumulated downward over the extension
  double acc = 0;
  for (int j = jext; j >= 1; --j) {
    if (j <= jmax) w.h[j] = frac * (u[j] / D) + acc;
    acc += u[j] / D;
  }
  return w;
}

// p_t(0, eta) for eta at hierarchical distance k
inline double transition_prob(const WalkProfile& w, double t, int k) {
  if (t < 0) throw std::invalid_argument("negative time");
  if (k < 0) throw std::invalid_argument("negative distance");
  if (k > w.jmax) return 0.0;  // below truncation tolerance by construction
  double p = 0;
  int j0 = k > 0 ? k : 1;
  for (int j = w.jmax; j >= j0; --j)
    p += mode_coeff(w.N, j, k) * std::pow((double)w.N, -j) * std::exp(-w.rate[j] * t);
  return p;
}

struct GreenResult {
  double value = 0;
  bool finite = true;
};

// G((0,0),(eta_p, eta_q)) = int_0^inf p_t(0,eta_p) p_t(0,eta_q) dt for two
// independent walks: the exact mode double sum, on the raw (unscaled) clock
inline GreenResult green_pair(const WalkProfile& w, int p, int q) {
  if (p < 0 || q < 0) throw std::invalid_argument("negative distance");
  GreenResult g;
  if (p > w.jmax || q > w.jmax) return g;
  int i0 = p > 0 ? p : 1, j0 = q > 0 ? q : 1;
  for (int i = i0; i <= w.jmax; ++i) {
    double a = mode_coeff(w.N, i, p) * std::pow((double)w.N, -i);
    for (int j = j0; j <= w.jmax; ++j) {
      double b = mode_coeff(w.N, j, q) * std::pow((double)w.N, -j);
      double den = w.rate[i] + w.rate[j];
      if (den <= 0) {
        g.finite = false;
        return g;
      }
      g.value += a * b / den;
    }
  }
  // the diagonal terms behave like N^{-2j}/(2 H_j); when they stop decaying
  // (migration dying off faster than N^{-j}) the untruncated sum diverges
  double ratio = w.rate[w.jmax - 1] / w.rate[w.jmax] / ((double)w.N * (double)w.N);
  if (ratio >= 1.0) g.finite = false;
  return g;
}

// the large-N display form, on the unit-total-jump-rate clock (multiply the
// exact value by D to compare): cbar_0 / ((1 + 1_{p=q}) cbar_{p^q} N^{p v q})
inline double green_pair_asymptotic(const WalkProfile& w, int p, int q) {
  int lo = p < q ? p : q, hi = p < q ? q : p;
  double dup = p == q ? 2.0 : 1.0;
  return w.cbar[0] / (dup * w.cbar[lo] * std::pow((double)w.N, hi));
}

// occupation time of the distance class m by the difference of two independent
// walks started together, per target point, over [0, T]: the difference walk
// has the same mode structure with doubled rates
inline double pair_distance_occupation(const WalkProfile& w, double T, int m) {
  if (m < 0 || m > w.jmax) return 0.0;
  double q = 0;
  int j0 = m > 0 ? m : 1;
  for (int j = w.jmax; j >= j0; --j) {
    double r2 = 2.0 * w.rate[j];
    q += mode_coeff(w.N, j, m) * std::pow((double)w.N, -j) * (-std::expm1(-r2 * T)) / r2;
  }
  return q;
}

// expected accumulated coalescence hazard of a co-located pair over [0, T] in
// the level-truncated system: block events at heights k <= M hit the pair at
// rate lambda_k N^{-k} while their distance is <= k
inline double hazard_horizon(const ParamFamily& params, int N, int M, double T,
                             const WalkProfile& w) {
  double total = 0;
  for (int k = 0; k <= M; ++k) {
    double lam = lambda_tail(params, k);
    if (lam == 0) continue;
    double occ = 0;
    for (int m = 0; m <= k; ++m) occ += radial_count(N, m) * pair_distance_occupation(w, T, m);
    total += lam * std::pow((double)N, -k) * occ;
  }
  return total;
}

struct HazardSeries {
  double value = 0;
  bool tail_growing = false;  // partial-sum terms not decaying at the cut
};

// mean accumulated hazard proxy: sum_{k<=M} (1/cbar_k) [sum_{l<k} lambda_l + lambda_k/2]
inline HazardSeries mean_hazard(const ParamFamily& params, int N, int M) {
  HazardSeries s;
  double inner = 0, prev_term = -1;
  for (int k = 0; k <= M; ++k) {
    double lam = lambda_tail(params, k);
    double t = (inner + 0.5 * lam) / cbar_at(params, N, k);
    s.value += t;
    inner += lam;
    if (k == M && prev_term >= 0) s.tail_growing = t >= 0.999 * prev_term && t > 0;
    prev_term = t;
  }
  return s;
}

struct TransienceDegree {
  double gamma = 0;   // log c / log(N/c)
  double degree = 0;  // 2 log N / log(N/c)
};

inline TransienceDegree transience_degree(double c, int N) {
  if (c <= 0) throw std::invalid_argument("migration base must be positive");
  if (c >= N) throw std::invalid_argument("migration base must be below the hierarchy order");
  double den = std::log((double)N / c);
  return {std::log(c) / den, 2.0 * std::log((double)N) / den};
}

}  // namespace hiercan

#pragma once
// Individual-based forward dynamics on the truncated hierarchical space:
// N^K colonies of fixed size, swap migration, quenched block events with
// bootstrap reshuffling, per-colony Moran resampling, optional immigration
// from the mean type measure. Colonies are exchangeable, so the state is
// kept as per-colony type counts. Also the single-colony particle system
// for the mean-field equilibrium and the two-level rescaling check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "environment.hpp"
#include "hiergroup.hpp"
#include "params.hpp"
#include "renorm.hpp"
#include "rng.hpp"
#include "walkcalc.hpp"

namespace hiercan {

struct ForwardConfig {
  ParamFamily params;
  ChiShape chi = ChiShape::single(1.0);
  int N = 2;
  int K = 1;        // hierarchy height; N^K colonies
  int M_ind = 2;    // individuals per colony
  int q = 2;        // type count
  std::vector<double> theta;  // initial/source type distribution
  double d0 = 0;
  double immigration = 0;  // per-individual replacement by a theta draw
  double horizon = 0;

  void validate() const {
    if (N < 2 || N > 255) throw std::invalid_argument("order must be in [2,255]");
    if (K < 0 || std::pow((double)N, K) > 1e7)
      throw std::invalid_argument("colony count out of range");
    if (M_ind < 2) throw std::invalid_argument("need at least 2 individuals per colony");
    if (q < 2) throw std::invalid_argument("need at least 2 types");
    if ((int)theta.size() != q) throw std::invalid_argument("type distribution size mismatch");
    double s = 0;
    for (double t : theta) {
      if (t < 0) throw std::invalid_argument("type distribution must be nonnegative");
      s += t;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("type distribution must sum to 1");
    if (d0 < 0 || immigration < 0 || horizon < 0)
      throw std::invalid_argument("rates and horizon must be >= 0");
    chi.validate();
  }
};

struct ForwardState {
  double time = 0;
  int N = 2, K = 0, q = 2, M_ind = 0, colonies = 0;
  std::vector<int> counts;  // colony-major: counts[colony * q + type]

  int count(int colony, int type) const { return counts[(std::size_t)colony * q + type]; }
};

// colony id of a leaf address inside the truncated space
inline int colony_index(const HierAddress& eta, int K) {
  if ((int)eta.digits.size() > K)
    throw std::invalid_argument("address lies outside the truncated space");
  int id = 0;
  for (int i = K - 1; i >= 0; --i) id = id * eta.N + eta.digit(i);
  return id;
}

// empirical type distribution over the level-k block around eta
inline std::vector<double> block_average(const ForwardState& st, const HierAddress& eta,
                                         int k) {
  if (k < 0 || k > st.K) throw std::invalid_argument("block level out of range");
  int span = 1;
  for (int i = 0; i < k; ++i) span *= st.N;
  int base = (colony_index(eta, st.K) / span) * span;
  std::vector<double> avg(st.q, 0.0);
  long tot = 0;
  for (int c = base; c < base + span; ++c)
    for (int t = 0; t < st.q; ++t) {
      avg[t] += st.count(c, t);
      tot += st.count(c, t);
    }
  for (auto& v : avg) v /= (double)tot;
  return avg;
}

namespace detail {

inline int draw_type(const std::vector<int>& counts, std::size_t off, int q, int total,
                     Rng& rng) {
  double u = rng.next_unit() * total;
  for (int t = 0; t < q - 1; ++t) {
    u -= counts[off + t];
    if (u < 0) return t;
  }
  return q - 1;
}

}  // namespace detail

// Event-driven trajectory; on_sample(state) fires on a fixed time grid
// (piecewise-constant interpolation) and once at the horizon.
template <class F>
inline ForwardState simulate_forward_cb(const ForwardConfig& cfg, const Environment& env,
                                        u64 seed, double sample_dt, F&& on_sample) {
  cfg.validate();
  Rng rng(seed);
  int C = 1;
  for (int i = 0; i < cfg.K; ++i) C *= cfg.N;
  const int q = cfg.q, M = cfg.M_ind;

  ForwardState st;
  st.N = cfg.N;
  st.K = cfg.K;
  st.q = q;
  st.M_ind = M;
  st.colonies = C;
  st.counts.assign((std::size_t)C * q, 0);
  // initial colonies: independent theta draws per slot
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < M; ++i) {
      double u = rng.next_unit();
      int t = q - 1;
      for (int s = 0; s < q - 1; ++s) {
        u -= cfg.theta[s];
        if (u < 0) {
          t = s;
          break;
        }
      }
      st.counts[(std::size_t)c * q + t]++;
    }

  // migration levels 1..K with walk weights c_{k-1} N^{1-k}
  std::vector<double> mig_w(cfg.K);
  std::vector<int> mig_span(cfg.K);
  double mig_per_ind = 0;
  {
    double npow = 1.0;
    int span = 1;
    for (int k = 1; k <= cfg.K; ++k) {
      mig_w[k - 1] = c_extended(cfg.params, k - 1) * npow;
      span *= cfg.N;
      mig_span[k - 1] = span;
      mig_per_ind += mig_w[k - 1];
      npow /= (double)cfg.N;
    }
  }

  // static block-event table over all tree nodes up to height K
  struct BlockClock {
    double rate;
    int level, span, base;
  };
  std::vector<BlockClock> clocks;
  double block_total = 0;
  {
    double npow = 1.0;
    int span = 1;
    for (int k = 0; k <= cfg.K; ++k) {
      double lam = lambda_tail(cfg.params, k);
      if (lam > 0) {
        double W = cfg.chi.event_weight();
        int nblocks = C / span;
        for (int b = 0; b < nblocks; ++b) {
          HierAddress first = HierAddress::zero(cfg.N);
          int id = b * span;
          for (int i = 0; i < cfg.K; ++i) {
            if (id == 0) break;
            if (id % cfg.N) {
              if ((int)first.digits.size() <= i) first.digits.resize(i + 1, 0);
              first.digits[i] = (std::uint8_t)(id % cfg.N);
            }
            id /= cfg.N;
          }
          first.canonicalize();
          double rho = env.rho_at(TreeAddress(first, k));
          double r = lam * npow * rho * W;
          if (r > 0) {
            clocks.push_back({r, k, span, b * span});
            block_total += r;
          }
        }
      }
      npow /= (double)cfg.N;
      span *= cfg.N;
    }
  }

  const double mig_total = mig_per_ind * (double)M * C;
  const double moran_total = cfg.d0 * (double)C * M * (M - 1);
  const double imm_total = cfg.immigration * (double)M * C;
  const double total = mig_total + moran_total + imm_total + block_total;

  std::vector<int> pool(q);
  double next_sample = 0.0;
  auto emit_until = [&](double upto) {
    while (sample_dt > 0 && next_sample <= upto && next_sample <= cfg.horizon) {
      st.time = next_sample;
      on_sample(st);
      next_sample += sample_dt;
    }
  };

  double t = 0;
  while (t < cfg.horizon) {
    if (total <= 0) break;
    double dt = rng.exponential(total);
    if (t + dt > cfg.horizon) break;
    emit_until(t + dt);
    t += dt;

    double u = rng.next_unit() * total;
    if (u < mig_total) {
      // swap two individuals between a colony and a uniform colony in its ball
      int src = (int)rng.below((u64)C);
      double v = rng.next_unit() * mig_per_ind;
      int level = cfg.K;
      for (int k = 1; k <= cfg.K; ++k) {
        v -= mig_w[k - 1];
        if (v <= 0) {
          level = k;
          break;
        }
      }
      int span = mig_span[level - 1];
      int dst = (src / span) * span + (int)rng.below((u64)span);
      if (dst != src) {
        int a = detail::draw_type(st.counts, (std::size_t)src * q, q, M, rng);
        int b = detail::draw_type(st.counts, (std::size_t)dst * q, q, M, rng);
        if (a != b) {
          st.counts[(std::size_t)src * q + a]--;
          st.counts[(std::size_t)src * q + b]++;
          st.counts[(std::size_t)dst * q + b]--;
          st.counts[(std::size_t)dst * q + a]++;
        }
      }
      continue;
    }
    u -= mig_total;
    if (u < moran_total) {
      // within one colony: an ordered pair, first copies onto second
      int c = (int)rng.below((u64)C);
      std::size_t off = (std::size_t)c * q;
      int a = detail::draw_type(st.counts, off, q, M, rng);
      // second draw excludes the sampled source individual
      double v = rng.next_unit() * (M - 1);
      int b = q - 1;
      for (int s = 0; s < q - 1; ++s) {
        v -= st.counts[off + s] - (s == a ? 1 : 0);
        if (v < 0) {
          b = s;
          break;
        }
      }
      if (a != b) {
        st.counts[off + b]--;
        st.counts[off + a]++;
      }
      continue;
    }
    u -= moran_total;
    if (u < imm_total) {
      int c = (int)rng.below((u64)C);
      std::size_t off = (std::size_t)c * q;
      int a = detail::draw_type(st.counts, off, q, M, rng);
      double v = rng.next_unit();
      int b = q - 1;
      for (int s = 0; s < q - 1; ++s) {
        v -= cfg.theta[s];
        if (v < 0) {
          b = s;
          break;
        }
      }
      if (a != b) {
        st.counts[off + a]--;
        st.counts[off + b]++;
      }
      continue;
    }
    u -= imm_total;
    // block event: pick the node, bootstrap-reshuffle its colonies, then
    // replace a binomial share by one parental type
    if (clocks.empty()) continue;
    std::size_t bi = 0;
    for (; bi + 1 < clocks.size(); ++bi) {
      u -= clocks[bi].rate;
      if (u < 0) break;
    }
    const auto& bc = clocks[bi];
    std::fill(pool.begin(), pool.end(), 0);
    long tot = (long)bc.span * M;
    for (int c = bc.base; c < bc.base + bc.span; ++c)
      for (int s = 0; s < q; ++s) pool[s] += st.counts[(std::size_t)c * q + s];
    // reshuffle: every slot refilled by a uniform draw from the pre-event pool
    for (int c = bc.base; c < bc.base + bc.span; ++c) {
      std::size_t off = (std::size_t)c * q;
      for (int s = 0; s < q; ++s) st.counts[off + s] = 0;
      for (int i = 0; i < M; ++i) {
        double v = rng.next_unit() * (double)tot;
        int s = q - 1;
        for (int x = 0; x < q - 1; ++x) {
          v -= pool[x];
          if (v < 0) {
            s = x;
            break;
          }
        }
        st.counts[off + s]++;
      }
    }
    // resampling: atom by w/r^2, parent from the current block empirical
    double w = rng.next_unit() * cfg.chi.event_weight();
    double r_sel = cfg.chi.atoms.back().r;
    for (auto& at : cfg.chi.atoms) {
      w -= at.w / (at.r * at.r);
      if (w <= 0) {
        r_sel = at.r;
        break;
      }
    }
    std::fill(pool.begin(), pool.end(), 0);
    for (int c = bc.base; c < bc.base + bc.span; ++c)
      for (int s = 0; s < q; ++s) pool[s] += st.counts[(std::size_t)c * q + s];
    double v = rng.next_unit() * (double)tot;
    int a = q - 1;
    for (int x = 0; x < q - 1; ++x) {
      v -= pool[x];
      if (v < 0) {
        a = x;
        break;
      }
    }
    for (int c = bc.base; c < bc.base + bc.span; ++c) {
      std::size_t off = (std::size_t)c * q;
      int moved = 0;
      for (int s = 0; s < q; ++s) {
        if (s == a) continue;
        int keep = 0;
        for (int i = 0; i < st.counts[off + s]; ++i)
          if (rng.next_unit() >= r_sel) ++keep;
        moved += st.counts[off + s] - keep;
        st.counts[off + s] = keep;
      }
      st.counts[off + a] += moved;
    }
  }
  emit_until(cfg.horizon);
  st.time = cfg.horizon;
  return st;
}

struct ForwardResult {
  std::vector<double> times;
  std::vector<std::vector<int>> snapshots;  // copies of the counts vector
  ForwardState final_state;
};

inline ForwardResult simulate_forward(const ForwardConfig& cfg, const Environment& env,
                                      u64 seed, double sample_dt = 0) {
  ForwardResult out;
  out.final_state = simulate_forward_cb(cfg, env, seed, sample_dt, [&](const ForwardState& s) {
    out.times.push_back(s.time);
    out.snapshots.push_back(s.counts);
  });
  return out;
}

// ------------------------------------------------- single-colony particles

// n-particle mean-field system: theta draws at rate c per particle, ordered
// pair copies at rate d per pair, block events from the atom measure on the
// whole colony. Reports time-averaged moments with batch-mean errors.
struct MkvResult {
  std::vector<double> mean_freq;  // per type, time-averaged
  double mean_se = 0;             // batch-mean standard error of type-0 frequency
  double var_f = 0;               // time-averaged variance of the type-0 indicator mean
  double var_se = 0;
  int samples = 0;
};

inline MkvResult mkv_particle(double c, double d, const ChiShape& chi,
                              const std::vector<double>& theta, int n, double horizon,
                              double burn, double sample_dt, u64 seed) {
  if (n < 2) throw std::invalid_argument("need at least 2 particles");
  if (c < 0 || d < 0 || horizon <= burn || sample_dt <= 0)
    throw std::invalid_argument("bad particle-system arguments");
  chi.validate();
  int q = (int)theta.size();
  if (q < 2) throw std::invalid_argument("need at least 2 types");

  Rng rng(seed);
  std::vector<int> counts(q, 0);
  for (int i = 0; i < n; ++i) {
    double u = rng.next_unit();
    int t = q - 1;
    for (int s = 0; s < q - 1; ++s) {
      u -= theta[s];
      if (u < 0) {
        t = s;
        break;
      }
    }
    counts[t]++;
  }

  const double theta_total = c * n;
  const double moran_total = d * (double)n * (n - 1);
  const double lam_total = chi.event_weight();
  const double total = theta_total + moran_total + lam_total;

  std::vector<double> samples_x;
  double t = 0, next_sample = burn;
  std::vector<double> type_sum(q, 0.0);
  while (t < horizon) {
    double dt = total > 0 ? rng.exponential(total) : (horizon - t) + 1.0;
    double t_next = t + dt;
    while (next_sample <= std::min(t_next, horizon)) {
      samples_x.push_back((double)counts[0] / n);
      for (int s = 0; s < q; ++s) type_sum[s] += (double)counts[s] / n;
      next_sample += sample_dt;
    }
    if (t_next >= horizon) break;
    t = t_next;

    double u = rng.next_unit() * total;
    if (u < theta_total) {
      int a = detail::draw_type(counts, 0, q, n, rng);
      double v = rng.next_unit();
      int b = q - 1;
      for (int s = 0; s < q - 1; ++s) {
        v -= theta[s];
        if (v < 0) {
          b = s;
          break;
        }
      }
      if (a != b) {
        counts[a]--;
        counts[b]++;
      }
      continue;
    }
    u -= theta_total;
    if (u < moran_total) {
      int a = detail::draw_type(counts, 0, q, n, rng);
      double v = rng.next_unit() * (n - 1);
      int b = q - 1;
      for (int s = 0; s < q - 1; ++s) {
        v -= counts[s] - (s == a ? 1 : 0);
        if (v < 0) {
          b = s;
          break;
        }
      }
      if (a != b) {
        counts[b]--;
        counts[a]++;
      }
      continue;
    }
    // block event on the whole colony
    double w = rng.next_unit() * lam_total;
    double r_sel = chi.atoms.back().r;
    for (auto& at : chi.atoms) {
      w -= at.w / (at.r * at.r);
      if (w <= 0) {
        r_sel = at.r;
        break;
      }
    }
    int a = detail::draw_type(counts, 0, q, n, rng);
    int moved = 0;
    for (int s = 0; s < q; ++s) {
      if (s == a) continue;
      int keep = 0;
      for (int i = 0; i < counts[s]; ++i)
        if (rng.next_unit() >= r_sel) ++keep;
      moved += counts[s] - keep;
      counts[s] = keep;
    }
    counts[a] += moved;
  }

  MkvResult out;
  out.samples = (int)samples_x.size();
  if (out.samples < 8) throw std::invalid_argument("horizon too short for the sample grid");
  out.mean_freq.resize(q);
  for (int s = 0; s < q; ++s) out.mean_freq[s] = type_sum[s] / out.samples;
  double xbar = out.mean_freq[0];
  double vsum = 0;
  for (double x : samples_x) vsum += (x - xbar) * (x - xbar);
  out.var_f = vsum / out.samples;

  // batch means over 32 batches for the error bars
  int B = std::min(32, out.samples / 4);
  int per = out.samples / B;
  double ms = 0, mss = 0, vs = 0, vss = 0;
  for (int b = 0; b < B; ++b) {
    double bm = 0, bv = 0;
    for (int i = b * per; i < (b + 1) * per; ++i) {
      bm += samples_x[i];
      bv += (samples_x[i] - xbar) * (samples_x[i] - xbar);
    }
    bm /= per;
    bv /= per;
    ms += bm;
    mss += bm * bm;
    vs += bv;
    vss += bv * bv;
  }
  out.mean_se = std::sqrt(std::max(0.0, (mss - ms * ms / B) / (B - 1) / B));
  out.var_se = std::sqrt(std::max(0.0, (vss - vs * vs / B) / (B - 1) / B));
  return out;
}

// ------------------------------------------------------- two-level check

// Quadratic variation of the 1-block average on the sped-up clock against
// the one-step renormalized volatility.
struct BlockscaleReport {
  std::vector<int> Ns;
  double d1_pred = 0;
  std::vector<double> d1_hat;
  std::vector<double> gap;  // |d1_hat - d1_pred| / d1_pred
};

inline BlockscaleReport blockscale_check(const ForwardConfig& base, const EnvLaw& law,
                                         const std::vector<int>& Ns, int replicas,
                                         double t_rescaled, double dtau, double burn_rescaled,
                                         u64 seed, int workers = 1) {
  if (Ns.empty() || replicas < 1) throw std::invalid_argument("need N values and replicas");
  if (dtau <= 0 || t_rescaled <= dtau) throw std::invalid_argument("bad rescaled grid");
  BlockscaleReport rep;
  rep.Ns = Ns;
  rep.d1_pred = mobius_step(c_extended(base.params, 0), 0.5 * lambda_tail(base.params, 0),
                            base.d0, law);

  for (int N : Ns) {
    ForwardConfig cfg = base;
    cfg.N = N;
    cfg.K = 2;
    cfg.horizon = (burn_rescaled + t_rescaled) * N;
    double abs_dt = dtau * N;

    std::vector<double> num(replicas, 0.0), den(replicas, 0.0);
    auto body = [&](int r) {
      Environment env(law, derive_seed(seed, 1000 + (u64)N));
      std::vector<double> xs;
      simulate_forward_cb(cfg, env, derive_seed(seed, ((u64)N << 20) + (u64)r), abs_dt,
                          [&](const ForwardState& s) {
                            xs.push_back(block_average(s, HierAddress::zero(N), 1)[0]);
                          });
      std::size_t skip = (std::size_t)std::llround(burn_rescaled / dtau);
      for (std::size_t i = skip; i + 1 < xs.size(); ++i) {
        double dx = xs[i + 1] - xs[i];
        num[r] += dx * dx;
        den[r] += 2.0 * xs[i] * (1.0 - xs[i]) * dtau;
      }
    };
    workers = std::max(1, workers);
    if (workers == 1) {
      for (int r = 0; r < replicas; ++r) body(r);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) {
        int lo = (int)((long)replicas * w / workers);
        int hi = (int)((long)replicas * (w + 1) / workers);
        pool.emplace_back([lo, hi, &body] {
          for (int r = lo; r < hi; ++r) body(r);
        });
      }
      for (auto& th : pool) th.join();
    }
    double ns = std::accumulate(num.begin(), num.end(), 0.0);
    double ds = std::accumulate(den.begin(), den.end(), 0.0);
    double hat = ds > 0 ? ns / ds : 0.0;
    rep.d1_hat.push_back(hat);
    rep.gap.push_back(rep.d1_pred > 0 ? std::abs(hat - rep.d1_pred) / rep.d1_pred : hat);
  }
  return rep;
}

}  // namespace hiercan

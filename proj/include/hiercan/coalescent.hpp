#pragma once
// Event-driven simulator of the spatial multi-merger coalescent in a quenched
// environment on the hierarchical group: lineages migrate as hierarchical
// walks, every tree node carries a block-event clock whose events reshuffle
// all blocks in the ball and merge a marked subset, co-located pairs merge at
// the local Moran rate, and the tagged pair accumulates its merge hazard.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "environment.hpp"
#include "hiergroup.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "walkcalc.hpp"

namespace hiercan {

// -------------------------------------------------------------- structure

struct LineageBlock {
  std::vector<int> members;  // sorted original lineage labels
  HierAddress loc;
};

struct LabelledPartition {
  int n = 0;
  std::vector<LineageBlock> blocks;
};

struct CoalEvent {
  double t = 0;
  char kind = 'm';   // 'm' migration, 'b' block event, 'k' local pair merge
  int level = 0;     // jump level / node height
  std::string node;  // tree address of the firing node (block events)
  int merged = 0;    // blocks merged away by this event
  std::string detail;  // locations after the event, ';'-joined
};

struct CoalescentState {
  LabelledPartition partition;
  double clock = 0;
  double hazard = 0;            // accumulated merge hazard of the tagged pair (labels 0,1)
  bool pair_merged = false;
  double pair_merge_time = -1;  // < 0: not merged within the horizon
  long events = 0;
  double neglected_rate_share = 0;  // block rate dropped by the level cut
  std::vector<CoalEvent> event_log;
};

struct CoalescentConfig {
  ParamFamily params;
  ChiShape chi = ChiShape::single(1.0);
  double d0 = 0;
  int N = 2;
  int level_cut = 8;
  double horizon = 0;
  bool log_events = false;
  bool run_to_horizon = false;  // keep simulating after the partition is a single block
};

// quenched per-level migration rate seen by one lineage: the walk rate plus
// the relocation kick from the block events one level up (normalized shape)
inline double effective_migration(const Environment& env, const ParamFamily& p,
                                  const HierAddress& eta, int k, int N) {
  if (k < 0) throw std::invalid_argument("level must be >= 0");
  double lam = lambda_tail(p, k + 1);
  if (lam == 0.0) return c_extended(p, k);
  double rho = env.rho_at(TreeAddress(eta, k + 1));
  return c_extended(p, k) + lam * rho / (double)N;
}

// -------------------------------------------------- migration level kernel

// per-lineage walk kernel: level k jump at weight c_{k-1} N^{1-k};
// truncated where the remaining tail is below 1e-15 of the mass
struct MigrationKernel {
  double total = 0;
  std::vector<double> weight;  // index 0 <-> jump level 1
};

inline MigrationKernel migration_kernel(const ParamFamily& p, int N) {
  MigrationKernel m;
  double npow = 1.0;  // N^(1-k) for k = 1
  for (int k = 1; k <= 100000; ++k) {
    double w = c_extended(p, k - 1) * npow;
    npow /= (double)N;
    if (w > 0 && w < 1e-15 * m.total) break;
    if (w == 0 && k > 64) break;  // dead tail (zero family or underflowed weight)
    m.weight.push_back(w);
    m.total += w;
    if (k > 64 && w > m.total * 0.5)
      throw std::invalid_argument("migration rates grow too fast for a finite walk rate");
  }
  return m;
}

// smallest truncation height whose neglected block rate is below tol of the
// kept rate (per lineage, mean environment)
inline int level_cut_for(const ParamFamily& p, int N, double tol = 1e-8) {
  std::vector<double> term;
  double sum = 0, npow = 1.0;
  for (int k = 0; k <= 100000; ++k) {
    double w = lambda_tail(p, k) * npow;
    npow /= (double)N;
    term.push_back(w);
    sum += w;
    if (k > 64 && w > 0.5 * sum)
      throw std::invalid_argument("resampling rates grow too fast for a finite truncation");
    if (k > 8 && w < 1e-18 * sum) break;
    if (w == 0 && k > 64) break;
  }
  double tail = 0;
  int cut = (int)term.size() - 1;
  for (int k = (int)term.size() - 1; k >= 1; --k) {
    tail += term[k];
    if (tail > tol * (sum - tail)) break;
    cut = k - 1;
  }
  return std::max(cut, 0);
}

// ------------------------------------------------------------- simulation

namespace detail {

// structural key of the height-k node above loc; distinct from every other
// (height, ball) pair with overwhelming probability
inline u64 node_key(const HierAddress& loc, int k) {
  u64 h = 1469598103934665603ull;
  auto eat = [&](u64 v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  eat((u64)k + 0x9e37);
  for (std::size_t i = (std::size_t)k; i < loc.digits.size(); ++i) eat((u64)loc.digits[i] + 1);
  return h;
}

struct ActiveNode {
  double rate = 0;
  int count = 0;
  int level = 0;
};

struct Sim {
  const CoalescentConfig& cfg;
  const Environment& env;
  Rng& rng;
  MigrationKernel mig;
  std::vector<double> level_rate0;  // N^{-k} lambda_k * W, before rho
  double pair_over_event;           // pair weight / event weight
  std::vector<LineageBlock> blocks;
  std::map<u64, ActiveNode> active;
  std::map<u64, double> rho_cache;  // node key -> realized rho
  std::map<u64, int> leaf_count;    // co-location counts (only kept when d0 > 0)
  double block_total = 0;
  double king_total = 0;
  int tagged_a = -1, tagged_b = -1;  // block indices carrying labels 0 and 1

  Sim(const CoalescentConfig& c, const Environment& e, Rng& r)
      : cfg(c), env(e), rng(r), mig(migration_kernel(c.params, c.N)) {
    double W = c.chi.event_weight();
    pair_over_event = c.chi.pair_weight() / W;
    level_rate0.resize(cfg.level_cut + 1);
    double npow = 1.0;
    for (int k = 0; k <= cfg.level_cut; ++k) {
      level_rate0[k] = lambda_tail(cfg.params, k) * npow * W;
      npow /= (double)cfg.N;
    }
  }

  double rho_of(const HierAddress& loc, int k, u64 key) {
    auto it = rho_cache.find(key);
    if (it != rho_cache.end()) return it->second;
    double r = env.rho_at(TreeAddress(loc, k));
    rho_cache.emplace(key, r);
    return r;
  }

  void add_block_nodes(const LineageBlock& b, int upto) {
    for (int k = 0; k <= upto; ++k) {
      u64 key = node_key(b.loc, k);
      auto& node = active[key];
      if (node.count == 0) {
        node.level = k;
        node.rate = level_rate0[k] == 0 ? 0.0 : level_rate0[k] * rho_of(b.loc, k, key);
      }
      node.count++;
      if (node.count == 1) block_total += node.rate;
    }
  }

  void remove_block_nodes(const LineageBlock& b, int upto) {
    for (int k = 0; k <= upto; ++k) {
      u64 key = node_key(b.loc, k);
      auto it = active.find(key);
      it->second.count--;
      if (it->second.count == 0) {
        block_total -= it->second.rate;
        active.erase(it);
      }
    }
  }

  void leaf_add(const LineageBlock& b, int delta) {
    if (cfg.d0 <= 0) return;
    u64 key = node_key(b.loc, 0);
    int& cnt = leaf_count[key];
    king_total -= cfg.d0 * cnt * (cnt - 1);
    cnt += delta;
    king_total += cfg.d0 * cnt * (cnt - 1);
    if (cnt == 0) leaf_count.erase(key);
  }

  void refresh_tagged() {
    tagged_a = tagged_b = -1;
    for (int i = 0; i < (int)blocks.size(); ++i) {
      for (int m : blocks[i].members) {
        if (m == 0 && tagged_a < 0) tagged_a = i;
        if (m == 1 && tagged_b < 0) tagged_b = i;
      }
    }
  }

  // merge-intensity of the tagged pair at the current placement
  double pair_rate() const {
    if (tagged_a < 0 || tagged_b < 0 || tagged_a == tagged_b) return 0.0;
    const HierAddress& xa = blocks[tagged_a].loc;
    int d = distance(xa, blocks[tagged_b].loc);
    double r = 0;
    for (int k = std::max(d, 0); k <= cfg.level_cut; ++k) {
      auto it = active.find(node_key(xa, k));
      if (it != active.end()) r += it->second.rate;
    }
    r *= pair_over_event;
    if (d == 0) r += 2.0 * cfg.d0;
    return r;
  }

  void move_block(int i, int level) {
    int upto = std::min(level - 1, cfg.level_cut);
    remove_block_nodes(blocks[i], upto);
    leaf_add(blocks[i], -1);
    blocks[i].loc = uniform_in_block(blocks[i].loc, level, rng);
    add_block_nodes(blocks[i], upto);
    leaf_add(blocks[i], +1);
  }

  void merge_into(int keep, std::vector<int>& gone, CoalescentState& st) {
    // detect the tagged merge before indices shift
    std::sort(gone.begin(), gone.end());
    auto hit = [&](int idx) {
      return idx == keep || std::binary_search(gone.begin(), gone.end(), idx);
    };
    if (!st.pair_merged && tagged_a != tagged_b && tagged_a >= 0 && hit(tagged_a) && hit(tagged_b)) {
      st.pair_merged = true;
      st.pair_merge_time = st.clock;
    }
    for (auto it = gone.rbegin(); it != gone.rend(); ++it) {
      int g = *it;
      remove_block_nodes(blocks[g], cfg.level_cut);
      leaf_add(blocks[g], -1);
      auto mem = std::move(blocks[g].members);
      blocks.erase(blocks.begin() + g);
      if (keep > g) --keep;
      auto& tgt = blocks[keep].members;
      tgt.insert(tgt.end(), mem.begin(), mem.end());
      std::sort(tgt.begin(), tgt.end());
    }
    refresh_tagged();
  }
};

}  // namespace detail

// exact event-driven trajectory; same (environment, seed) gives the same log
inline CoalescentState simulate(const CoalescentConfig& cfg,
                                const std::vector<HierAddress>& start, const Environment& env,
                                u64 seed) {
  if (start.empty()) throw std::invalid_argument("need at least one lineage");
  if (cfg.level_cut < 0) throw std::invalid_argument("level cut must be >= 0");
  if (cfg.horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (cfg.d0 < 0) throw std::invalid_argument("local rate must be >= 0");
  cfg.chi.validate();
  for (auto& a : start)
    if (a.N != cfg.N) throw std::invalid_argument("start location order mismatch");

  Rng rng(seed);
  detail::Sim sim(cfg, env, rng);
  CoalescentState st;
  st.partition.n = (int)start.size();
  for (int i = 0; i < (int)start.size(); ++i)
    sim.blocks.push_back({{i}, start[i]});
  for (auto& b : sim.blocks) {
    sim.add_block_nodes(b, cfg.level_cut);
    sim.leaf_add(b, +1);
  }
  sim.refresh_tagged();

  // share of per-lineage block rate lost to the level cut, mean environment
  {
    double kept = 0, npow = 1.0;
    for (int k = 0; k <= cfg.level_cut; ++k) {
      kept += lambda_tail(cfg.params, k) * npow;
      npow /= (double)cfg.N;
    }
    double tail = 0;
    for (int k = cfg.level_cut + 1; k <= cfg.level_cut + 400; ++k) {
      double w = lambda_tail(cfg.params, k) * npow;
      npow /= (double)cfg.N;
      tail += w;
    }
    st.neglected_rate_share = (kept + tail) > 0 ? tail / (kept + tail) : 0.0;
  }

  const bool may_stop = start.size() > 1 && !cfg.run_to_horizon;
  while (st.clock < cfg.horizon) {
    if (may_stop && sim.blocks.size() == 1) break;
    double mig_total = sim.mig.total * (double)sim.blocks.size();
    double total = mig_total + sim.block_total + sim.king_total;
    double prate = st.pair_merged ? 0.0 : sim.pair_rate();
    if (total <= 0) {
      st.hazard += prate * (cfg.horizon - st.clock);
      st.clock = cfg.horizon;
      break;
    }
    double dt = rng.exponential(total);
    double step_end = std::min(st.clock + dt, cfg.horizon);
    st.hazard += prate * (step_end - st.clock);
    if (st.clock + dt > cfg.horizon) {
      st.clock = cfg.horizon;
      break;
    }
    st.clock += dt;
    st.events++;

    double u = rng.next_unit() * total;
    if (u < mig_total) {
      // one lineage jumps: pick block, then level
      int bi = (int)rng.below(sim.blocks.size());
      double v = rng.next_unit() * sim.mig.total;
      int level = 1;
      for (std::size_t k = 0; k < sim.mig.weight.size(); ++k) {
        v -= sim.mig.weight[k];
        if (v <= 0) {
          level = (int)k + 1;
          break;
        }
        if (k + 1 == sim.mig.weight.size()) level = (int)k + 1;
      }
      sim.move_block(bi, level);
      if (cfg.log_events)
        st.event_log.push_back(
            {st.clock, 'm', level, "", 0, serialize(sim.blocks[bi].loc)});
      continue;
    }
    u -= mig_total;
    if (u < sim.block_total) {
      // block event: select the firing node by rate
      u64 sel_key = 0;
      int sel_level = 0;
      double acc = 0;
      bool found = false;
      for (auto& kv : sim.active) {
        if (kv.second.count == 0) continue;
        acc += kv.second.rate;
        if (u < acc) {
          sel_key = kv.first;
          sel_level = kv.second.level;
          found = true;
          break;
        }
      }
      if (!found) continue;  // numerical edge of the scan

      // members of the ball, then reshuffle them all
      std::vector<int> in_ball;
      for (int i = 0; i < (int)sim.blocks.size(); ++i)
        if (detail::node_key(sim.blocks[i].loc, sel_level) == sel_key) in_ball.push_back(i);
      std::string node_str;
      if (cfg.log_events && !in_ball.empty())
        node_str = serialize(TreeAddress(sim.blocks[in_ball[0]].loc, sel_level));
      for (int i : in_ball) sim.move_block(i, sel_level);

      // draw the event shape atom, mark blocks, merge the marked ones
      double w = rng.next_unit() * cfg.chi.event_weight();
      double r_sel = cfg.chi.atoms.back().r;
      for (auto& a : cfg.chi.atoms) {
        w -= a.w / (a.r * a.r);
        if (w <= 0) {
          r_sel = a.r;
          break;
        }
      }
      std::vector<int> marked;
      for (int i : in_ball)
        if (rng.next_unit() < r_sel) marked.push_back(i);
      int merged = 0;
      if (marked.size() >= 2) {
        merged = (int)marked.size() - 1;
        int keep = marked.front();
        std::vector<int> gone(marked.begin() + 1, marked.end());
        sim.merge_into(keep, gone, st);
      }
      if (cfg.log_events) {
        std::string locs;
        for (int i = 0; i < (int)sim.blocks.size(); ++i) {
          if (i) locs += ';';
          locs += serialize(sim.blocks[i].loc);
        }
        st.event_log.push_back({st.clock, 'b', sel_level, node_str, merged, locs});
      }
      continue;
    }
    u -= sim.block_total;
    // local pair merge: pick the leaf, then an unordered co-located pair
    u64 leaf = 0;
    bool found = false;
    for (auto& kv : sim.leaf_count) {
      u -= cfg.d0 * (double)kv.second * (double)(kv.second - 1);
      if (u <= 0) {
        leaf = kv.first;
        found = true;
        break;
      }
    }
    if (!found) continue;
    std::vector<int> here;
    for (int i = 0; i < (int)sim.blocks.size(); ++i)
      if (detail::node_key(sim.blocks[i].loc, 0) == leaf) here.push_back(i);
    if (here.size() < 2) continue;
    int ia = (int)rng.below(here.size());
    int ib = (int)rng.below(here.size() - 1);
    if (ib >= ia) ++ib;
    int keep = here[std::min(ia, ib)];
    std::vector<int> gone{here[std::max(ia, ib)]};
    sim.merge_into(keep, gone, st);
    if (cfg.log_events)
      st.event_log.push_back({st.clock, 'k', 0, "", 1, serialize(sim.blocks[keep].loc)});
  }

  st.partition.blocks = std::move(sim.blocks);
  return st;
}

// ------------------------------------------------- tagged-pair estimation

struct PairCoalescence {
  std::vector<double> horizons;
  std::vector<double> prob;  // P(tagged pair merged by horizon)
  std::vector<double> se;
  double hazard_mean = 0;  // accumulated hazard at the longest horizon
  double hazard_var = 0;
  int replicas = 0;
};

namespace detail {

template <class F>
inline void run_sharded(int replicas, int workers, F&& body) {
  workers = std::max(1, workers);
  if (workers == 1) {
    for (int r = 0; r < replicas; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    int lo = (int)((long)replicas * w / workers);
    int hi = (int)((long)replicas * (w + 1) / workers);
    pool.emplace_back([lo, hi, &body] {
      for (int r = lo; r < hi; ++r) body(r);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// two lineages from the origin: empirical merge probability along a horizon
// schedule plus first and second moments of the accumulated hazard
inline PairCoalescence pair_coalescence_estimate(const CoalescentConfig& cfg,
                                                 const Environment& env,
                                                 std::vector<double> horizons, int replicas,
                                                 u64 seed, int workers = 1) {
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  if (horizons.empty()) throw std::invalid_argument("need at least one horizon");
  std::sort(horizons.begin(), horizons.end());
  CoalescentConfig run = cfg;
  run.horizon = horizons.back();
  run.log_events = false;
  std::vector<HierAddress> start{HierAddress::zero(cfg.N), HierAddress::zero(cfg.N)};

  std::vector<double> merge_time(replicas), hazard(replicas);
  detail::run_sharded(replicas, workers, [&](int r) {
    CoalescentState st = simulate(run, start, env, derive_seed(seed, (u64)r));
    merge_time[r] = st.pair_merged ? st.pair_merge_time : std::numeric_limits<double>::infinity();
    hazard[r] = st.hazard;
  });

  PairCoalescence out;
  out.horizons = horizons;
  out.replicas = replicas;
  double hs = 0, hss = 0;
  for (double h : hazard) {
    hs += h;
    hss += h * h;
  }
  out.hazard_mean = hs / replicas;
  out.hazard_var = replicas > 1 ? (hss - hs * hs / replicas) / (replicas - 1) : 0.0;
  for (double h : horizons) {
    long cnt = 0;
    for (double t : merge_time)
      if (t <= h) ++cnt;
    double p = (double)cnt / replicas;
    out.prob.push_back(p);
    out.se.push_back(std::sqrt(p * (1.0 - p) / replicas));
  }
  return out;
}

// ------------------------------------------- hazard of two independent walks

struct HazardMc {
  std::vector<double> horizons;
  std::vector<double> mean;  // mean accumulated hazard at each horizon
  std::vector<double> se;
  int replicas = 0;
};

// Two non-interacting lineages, each migrating and feeling its own
// block-event relocations; the integral of the pairwise merge intensity
// over the trajectory is recorded at each horizon. Block levels above M
// carry no rate, matching the truncated analytic series.
inline HazardMc hazard_mc(const ParamFamily& params, const ChiShape& chi,
                          const Environment& env, int N, int M,
                          std::vector<double> horizons, int replicas, u64 seed,
                          int workers = 1) {
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  if (horizons.empty()) throw std::invalid_argument("need at least one horizon");
  if (M < 0 || M >= 64) throw std::invalid_argument("level truncation must be in [0, 64)");
  chi.validate();
  std::sort(horizons.begin(), horizons.end());
  double T = horizons.back();
  double W = chi.event_weight();
  double pair_w = chi.pair_weight();
  MigrationKernel mig = migration_kernel(params, N);

  std::vector<double> lam_npow(M + 1);
  {
    double npow = 1.0;
    for (int k = 0; k <= M; ++k) {
      lam_npow[k] = lambda_tail(params, k) * npow;
      npow /= (double)N;
    }
  }

  int H = (int)horizons.size();
  std::vector<double> acc(replicas * H, 0.0);
  detail::run_sharded(replicas, workers, [&](int rep) {
    Rng rng = derive_stream(seed, (u64)rep);
    HierAddress x[2] = {HierAddress::zero(N), HierAddress::zero(N)};
    double t = 0, haz = 0;
    int next_h = 0;
    while (next_h < H) {
      // per-walk relocation rates at the realized environment
      double reloc[2] = {0, 0}, rate_k[2][64];
      for (int w = 0; w < 2; ++w)
        for (int k = 0; k <= M; ++k) {
          double r = lam_npow[k] == 0
                         ? 0.0
                         : lam_npow[k] * W * env.rho_at(TreeAddress(x[w], k));
          rate_k[w][k] = r;
          reloc[w] += r;
        }
      int d = distance(x[0], x[1]);
      double hrate = 0;
      for (int k = d; k <= M; ++k)
        hrate += lam_npow[k] == 0 ? 0.0
                                  : lam_npow[k] * env.rho_at(TreeAddress(x[0], k));
      hrate *= pair_w;

      double total = 2.0 * mig.total + reloc[0] + reloc[1];
      double dt = total > 0 ? rng.exponential(total) : (T - t) + 1.0;
      double t_next = t + dt;
      while (next_h < H && horizons[next_h] <= t_next) {
        acc[(std::size_t)rep * H + next_h] = haz + hrate * (horizons[next_h] - t);
        ++next_h;
      }
      if (next_h >= H) break;
      haz += hrate * dt;
      t = t_next;

      double u = rng.next_unit() * total;
      if (u < 2.0 * mig.total) {
        int w = u < mig.total ? 0 : 1;
        if (w == 1) u -= mig.total;
        int level = 1;
        for (std::size_t k = 0; k < mig.weight.size(); ++k) {
          u -= mig.weight[k];
          if (u <= 0) {
            level = (int)k + 1;
            break;
          }
          if (k + 1 == mig.weight.size()) level = (int)k + 1;
        }
        x[w] = uniform_in_block(x[w], level, rng);
      } else {
        u -= 2.0 * mig.total;
        int w = u < reloc[0] ? 0 : 1;
        if (w == 1) u -= reloc[0];
        int level = M;
        for (int k = 0; k <= M; ++k) {
          u -= rate_k[w][k];
          if (u <= 0) {
            level = k;
            break;
          }
        }
        x[w] = uniform_in_block(x[w], level, rng);
      }
    }
  });

  HazardMc out;
  out.horizons = horizons;
  out.replicas = replicas;
  for (int h = 0; h < H; ++h) {
    double s = 0, ss = 0;
    for (int r = 0; r < replicas; ++r) {
      double v = acc[(std::size_t)r * H + h];
      s += v;
      ss += v * v;
    }
    double mean = s / replicas;
    double var = replicas > 1 ? (ss - s * s / replicas) / (replicas - 1) : 0.0;
    out.mean.push_back(mean);
    out.se.push_back(std::sqrt(std::max(var, 0.0) / replicas));
  }
  return out;
}

}  // namespace hiercan

// command-line front end: loads a run configuration, dispatches one of the
// analysis/simulation commands, and writes CSV/JSON artifacts plus the fully
// resolved config into the output directory.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiercan/hiercan.hpp"

using namespace hiercan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Artifacts {
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::pair<std::string, json>> summaries;
};

json law_json(const EnvLaw& law) {
  json j;
  j["atoms"] = law.atoms;
  j["weights"] = law.weights;
  j["mean"] = law.mean();
  j["second_moment"] = law.second_moment();
  return j;
}

json verdict_json(const DichotomyVerdict& v) {
  json j;
  j["regime"] = regime_name(v.regime);
  j["finite_N"] = v.finite_N;
  if (v.N > 0) j["N"] = v.N;
  j["regularity"] = v.regularity;
  j["detail"] = v.detail;
  j["checkpoint_k"] = v.checkpoint_k;
  j["partial_sums"] = v.partial_sums;
  return j;
}

json scaling_json(const ScalingClass& s) {
  json j;
  j["label"] = s.label;
  j["resolved"] = s.resolved;
  j["exponential_family"] = s.exponential_family;
  j["predicted"] = s.predicted;
  j["K"] = s.K;
  j["L"] = s.L;
  j["Kbar"] = s.Kbar;
  j["cbase"] = s.cbase;
  j["mubase"] = s.mubase;
  j["M"] = s.M;
  j["kK_limit"] = s.kK_limit;
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

json cluster_json(const ClusterClass& c) {
  json j;
  j["regime"] = regime_tag(c.regime);
  j["from_label"] = c.label;
  j["resolved"] = c.resolved;
  j["description"] = c.description;
  j["window"] = c.window;
  j["time_change"] = c.time_change;
  j["volume"] = c.volume;
  j["M"] = c.Mt;
  j["K"] = c.Kt;
  j["R"] = c.R;
  if (!c.caveat.empty()) j["caveat"] = c.caveat;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

json model_report_json(const ModelReport& r) {
  json j;
  j["c_growth_rate"] = r.c_growth;
  j["lambda_growth_rate"] = r.lambda_growth;
  j["log_N"] = r.log_n;
  j["c_growth_ok"] = r.c_growth_ok;
  j["lambda_growth_ok"] = r.lambda_growth_ok;
  j["law_mean"] = r.mean;
  j["law_second_moment"] = r.second_moment;
  j["mean_one"] = r.mean_one;
  j["bounded_support"] = r.bounded_support;
  j["support_delta"] = r.delta;
  j["ok"] = r.ok;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

// transience degree only makes sense against a geometric migration envelope;
// report it when the c family has one
json try_transience(const ParamFamily& p, int N) {
  json j;
  try {
    double base = p.c.kind == SeqSpec::Explicit ? 0.0 : p.c.base;
    if (base <= 0 || p.c.kind == SeqSpec::Explicit) return j;
    TransienceDegree t = transience_degree(base, N);
    j["c_base"] = base;
    j["gamma"] = t.gamma;
    j["degree"] = t.degree;
  } catch (const std::exception&) {
    j = json();
  }
  return j;
}

void cmd_classify(const RunConfig& cfg, Artifacts& art) {
  ParamFamily p = params_from(cfg);
  EnvLaw law = law_from(cfg);
  int N = (int)cfg.integer("model.N", 2);
  double d0 = cfg.num("model.d0", 1.0);
  int kmax = (int)cfg.integer("run.kmax", 400);
  check_positive(p, std::min(kmax, 64));

  json out;
  out["model_report"] = model_report_json(validate_model(p, law, N));
  out["law"] = law_json(law);
  DichotomyVerdict fin = classify_finite_N(p, N);
  DichotomyVerdict lim = classify_limit(p);
  out["regime"] = regime_name(fin.regime);
  out["dichotomy_finite"] = verdict_json(fin);
  out["dichotomy_limit"] = verdict_json(lim);

  ScalingClass sc = classify_family(p, law);
  out["scaling"] = scaling_json(sc);
  ClusterClass cc = cluster_class(sc);
  out["cluster"] = cluster_json(cc);

  if (sc.resolved) {
    VolatilityTrace tr = recurse(p, law, d0, kmax);
    ScalingVerdict v = verify_scaling(tr, sc, p, kmax / 2, kmax);
    json jv;
    jv["observed"] = v.observed;
    jv["predicted"] = v.predicted;
    jv["gap"] = v.gap;
    jv["window_max_gap"] = v.window_max_gap;
    jv["k_at"] = v.k_at;
    out["scaling_observed"] = jv;
  }
  json td = try_transience(p, N);
  if (!td.empty()) out["transience"] = td;
  art.summaries.push_back({"classify", out});
}

void cmd_recursion(const RunConfig& cfg, Artifacts& art) {
  ParamFamily p = params_from(cfg);
  EnvLaw law = law_from(cfg);
  double d0 = cfg.num("model.d0", 1.0);
  int kmax = (int)cfg.integer("run.kmax", 1000);
  if (kmax < 1) throw ConfigError("run.kmax", "must be at least 1");
  VolatilityTrace t = recurse(p, law, d0, kmax);

  Table tab;
  tab.header = {"k", "c", "lambda", "mu", "d", "d_lo", "d_hi",
                "sigma", "ratio_c", "ratio_sqrt_cmu", "sigma_d"};
  for (int k = 0; k <= kmax; ++k) {
    tab.add_row({std::to_string(k), fmt_g17(p.c_at(k)), fmt_g17(p.lambda_at(k)),
                 fmt_g17(p.mu_at(k)), fmt_g17(t.d[k]), fmt_g17(t.d_lo[k]),
                 fmt_g17(t.d_hi[k]), fmt_g17(t.sigma[k]), fmt_g17(t.ratio_c[k]),
                 fmt_g17(t.ratio_sqrt[k]), fmt_g17(t.sigma_d[k])});
  }
  art.tables.push_back({"recursion", tab});

  Substitution sub = stability_substitution(p, law, d0, std::min(kmax, 500));
  json out;
  out["kmax"] = kmax;
  out["d_final"] = t.d[kmax];
  out["substitution_max_dev"] = sub.max_dev;
  ScalingClass sc = classify_family(p, law);
  out["scaling"] = scaling_json(sc);
  art.summaries.push_back({"recursion", out});
}

void cmd_coalescent(const RunConfig& cfg, Artifacts& art, int workers) {
  CoalescentConfig cc;
  cc.params = params_from(cfg);
  cc.chi = chi_from(cfg);
  cc.N = (int)cfg.integer("model.N", 2);
  cc.d0 = cfg.num("model.d0", 0.0);
  cc.level_cut = (int)cfg.integer("run.level_cut", level_cut_for(cc.params, cc.N));
  std::vector<double> horizons = cfg.list("run.horizons", {1.0, 4.0, 16.0});
  int replicas = (int)cfg.integer("run.replicas", 1000);
  u64 seed = (u64)cfg.integer("run.seed", 1);
  Environment env = env_from(cfg);

  PairCoalescence pc = pair_coalescence_estimate(cc, env, horizons, replicas, seed, workers);
  Table tab;
  tab.header = {"horizon", "prob", "se"};
  for (size_t i = 0; i < pc.horizons.size(); ++i)
    tab.add_row({fmt_g17(pc.horizons[i]), fmt_g17(pc.prob[i]), fmt_g17(pc.se[i])});
  art.tables.push_back({"pair_coalescence", tab});

  // one logged sample path for inspection
  CoalescentConfig one = cc;
  one.log_events = true;
  one.horizon = horizons.back();
  std::vector<HierAddress> start{HierAddress::zero(cc.N), HierAddress::zero(cc.N)};
  CoalescentState st = simulate(one, start, env, derive_seed(seed, 0));
  Table ev;
  ev.header = {"t", "kind", "level", "node", "merged"};
  for (auto& e : st.event_log)
    ev.add_row({fmt_g17(e.t), std::string(1, e.kind), std::to_string(e.level), e.node,
                std::to_string(e.merged)});
  art.tables.push_back({"trajectory", ev});

  json out;
  out["replicas"] = pc.replicas;
  out["hazard_mean"] = pc.hazard_mean;
  out["hazard_var"] = pc.hazard_var;
  out["level_cut"] = cc.level_cut;
  out["sample_events"] = st.events;
  out["sample_neglected_rate_share"] = st.neglected_rate_share;
  art.summaries.push_back({"coalescent", out});
}

void cmd_hazard(const RunConfig& cfg, Artifacts& art, int workers) {
  ParamFamily p = params_from(cfg);
  ChiShape chi = chi_from(cfg);
  Environment env = env_from(cfg);
  int N = (int)cfg.integer("model.N", 2);
  int M = (int)cfg.integer("model.K", 3);
  std::vector<double> horizons = cfg.list("run.horizons", {5.0, 10.0, 20.0});
  int replicas = (int)cfg.integer("run.replicas", 2000);
  u64 seed = (u64)cfg.integer("run.seed", 1);

  // deep mode cut: truncating the eigen-sum at j leaves O(T N^-j) of hazard
  WalkProfile w = profile(p, N, std::max(M + 2, 48));
  HazardMc mc = hazard_mc(p, chi, env, N, M, horizons, replicas, seed, workers);
  double pw = chi.pair_weight();

  Table tab;
  tab.header = {"T", "analytic", "mc_mean", "mc_se", "z"};
  for (size_t i = 0; i < horizons.size(); ++i) {
    double ana = pw * hazard_horizon(p, N, M, horizons[i], w);
    double z = mc.se[i] > 0 ? (mc.mean[i] - ana) / mc.se[i] : 0.0;
    tab.add_row({fmt_g17(horizons[i]), fmt_g17(ana), fmt_g17(mc.mean[i]),
                 fmt_g17(mc.se[i]), fmt_g17(z)});
  }
  art.tables.push_back({"hazard", tab});

  HazardSeries hs = mean_hazard(p, N, M);
  json out;
  out["replicas"] = mc.replicas;
  out["mean_hazard_proxy"] = hs.value;
  out["mean_hazard_tail_growing"] = hs.tail_growing;
  json td = try_transience(p, N);
  if (!td.empty()) out["transience"] = td;
  art.summaries.push_back({"hazard", out});
}

void cmd_forward(const RunConfig& cfg, Artifacts& art) {
  ForwardConfig fc;
  fc.params = params_from(cfg);
  fc.chi = chi_from(cfg);
  fc.N = (int)cfg.integer("model.N", 2);
  fc.K = (int)cfg.integer("model.K", 1);
  fc.M_ind = (int)cfg.integer("model.M", 2);
  fc.q = (int)cfg.integer("model.q", 2);
  fc.theta = cfg.list("model.theta", std::vector<double>(fc.q, 1.0 / fc.q));
  fc.d0 = cfg.num("model.d0", 0.0);
  fc.immigration = cfg.num("run.immigration", 0.0);
  fc.horizon = cfg.num("run.horizon", 10.0);
  double sample_dt = cfg.num("run.sample_dt", fc.horizon / 50.0);
  int block_level = (int)cfg.integer("run.block_level", fc.K);
  if (block_level < 0 || block_level > fc.K)
    throw ConfigError("run.block_level", "must lie in [0, K]");
  u64 seed = (u64)cfg.integer("run.seed", 1);
  Environment env = env_from(cfg);
  fc.validate();

  ForwardResult res = simulate_forward(fc, env, seed, sample_dt);
  HierAddress origin = HierAddress::zero(fc.N);
  Table tab;
  tab.header = {"time", "block"};
  for (int a = 0; a < fc.q; ++a) tab.header.push_back("freq_" + std::to_string(a));
  for (size_t i = 0; i < res.times.size(); ++i) {
    ForwardState st{res.times[i], fc.N,        fc.K, fc.q,
                    fc.M_ind,     res.final_state.colonies, res.snapshots[i]};
    for (int k = block_level; k <= fc.K; ++k) {
      std::vector<double> f = block_average(st, origin, k);
      std::vector<std::string> row{fmt_g17(res.times[i]),
                                   serialize(TreeAddress(origin, k))};
      for (double v : f) row.push_back(fmt_g17(v));
      tab.add_row(row);
    }
  }
  art.tables.push_back({"forward", tab});

  json out;
  out["final_time"] = res.final_state.time;
  std::vector<double> glob = block_average(res.final_state, origin, fc.K);
  out["final_top_block_freq"] = glob;
  out["colonies"] = res.final_state.colonies;
  art.summaries.push_back({"forward", out});
}

void cmd_mkv(const RunConfig& cfg, Artifacts& art) {
  double c = cfg.num("run.c", 1.0);
  double d = cfg.num("run.d", 0.25);
  ChiShape chi = chi_from(cfg);
  int q = (int)cfg.integer("model.q", 2);
  std::vector<double> theta = cfg.list("model.theta", std::vector<double>(q, 1.0 / q));
  int n = (int)cfg.integer("run.n_particles", 1000);
  double horizon = cfg.num("run.horizon", 100.0);
  double burn = cfg.num("run.burn", 10.0);
  double sample_dt = cfg.num("run.sample_dt", 0.5);
  u64 seed = (u64)cfg.integer("run.seed", 1);

  MkvResult res = mkv_particle(c, d, chi, theta, n, horizon, burn, sample_dt, seed);
  double lam = chi.pair_weight();
  double pred = theta.empty() ? 0.0
                              : (lam + 2 * d) / (2 * c + lam + 2 * d) * theta[0] *
                                    (1.0 - theta[0]);
  json out;
  out["mean_freq"] = res.mean_freq;
  out["mean_se"] = res.mean_se;
  out["var_type0"] = res.var_f;
  out["var_se"] = res.var_se;
  out["var_predicted_equilibrium"] = pred;
  out["samples"] = res.samples;
  art.summaries.push_back({"mkv", out});
}

void cmd_delta(const RunConfig& cfg, Artifacts& art) {
  ParamFamily p = params_from(cfg);
  EnvLaw law = law_from(cfg);
  long j = cfg.integer("run.j", 1000);
  double alpha2 = cfg.num("run.alpha2", 0.0);
  std::vector<double> alphas = cfg.list("run.alphas", {0.2, 0.4, 0.6, 0.8});
  ScalingClass sc = classify_family(p, law);

  Table tab;
  tab.header = {"alpha1", "alpha2", "j", "delta", "limit", "gap"};
  for (double a1 : alphas) {
    DeltaResult r = delta_limit(p, sc, a1, alpha2, j);
    tab.add_row({fmt_g17(a1), fmt_g17(alpha2), std::to_string(j), fmt_g17(r.delta),
                 fmt_g17(r.limit), fmt_g17(r.gap)});
  }
  art.tables.push_back({"delta", tab});

  json out;
  out["scaling"] = scaling_json(sc);
  out["j"] = j;
  art.summaries.push_back({"delta", out});
}

void cmd_report(const RunConfig& cfg, Artifacts& art) {
  ParamFamily p = params_from(cfg);
  EnvLaw law = law_from(cfg);
  int N = (int)cfg.integer("model.N", 2);
  double d0 = cfg.num("model.d0", 1.0);
  int kmax = (int)cfg.integer("run.kmax", 400);

  json out;
  out["model_report"] = model_report_json(validate_model(p, law, N));
  out["law"] = law_json(law);
  DichotomyVerdict fin = classify_finite_N(p, N);
  out["regime"] = regime_name(fin.regime);
  out["dichotomy_finite"] = verdict_json(fin);
  out["dichotomy_limit"] = verdict_json(classify_limit(p));
  ScalingClass sc = classify_family(p, law);
  out["scaling"] = scaling_json(sc);
  out["cluster"] = cluster_json(cluster_class(sc));
  VolatilityTrace tr = recurse(p, law, d0, kmax);
  out["d_final"] = tr.d[kmax];
  out["sigma_d_final"] = tr.sigma_d[kmax];
  Substitution sub = stability_substitution(p, law, d0, std::min(kmax, 500));
  out["substitution_max_dev"] = sub.max_dev;
  int M = (int)cfg.integer("model.K", 3);
  HazardSeries hs = mean_hazard(p, N, M);
  out["mean_hazard_proxy"] = hs.value;
  out["mean_hazard_tail_growing"] = hs.tail_growing;
  json td = try_transience(p, N);
  if (!td.empty()) out["transience"] = td;
  art.summaries.push_back({"report", out});
}

int resolve_workers(const RunConfig& cfg, int flag_workers) {
  if (flag_workers > 0) return flag_workers;
  double from_cfg = cfg.volatile_num("run.workers", 0);
  if (from_cfg > 0) return (int)from_cfg;
  if (const char* env = std::getenv("HIERCAN_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void write_artifacts(const RunConfig& cfg, const Artifacts& art, const std::string& dir,
                     const std::string& format) {
  fs::create_directories(dir);
  std::string hash = cfg.config_hash_hex();
  bool want_csv = format == "csv" || format == "both";
  bool want_json = format == "json" || format == "both";
  for (auto& [name, tab] : art.tables) {
    if (want_csv) write_file(dir + "/" + name + ".csv", csv_string(tab, hash));
    if (want_json)
      write_file(dir + "/" + name + ".json", json_string(table_json(tab), hash));
  }
  for (auto& [name, j] : art.summaries)
    write_file(dir + "/" + name + "_summary.json", json_string(j, hash));
  json resolved;
  resolved["resolved"] = cfg.resolved();
  write_file(dir + "/resolved_config.json", json_string(resolved, hash));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical Cannings process: renormalization analysis and simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, format, seed_str;
  int workers = 0;
  app.add_option("--config", config_path, "run configuration file (text or JSON)");
  app.add_option("--seed", seed_str, "override run.seed");
  app.add_option("--workers", workers, "worker thread count (HIERCAN_WORKERS as fallback)");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--format", format, "table output format")
      ->check(CLI::IsMember({"csv", "json", "both"}));

  auto* c_classify = app.add_subcommand("classify", "dichotomy, scaling class, cluster regime");
  auto* c_recursion = app.add_subcommand("recursion", "volatility recursion trace");
  auto* c_coalescent = app.add_subcommand("coalescent", "spatial coalescent pair estimates");
  auto* c_hazard = app.add_subcommand("hazard", "analytic vs Monte Carlo hazard table");
  auto* c_forward = app.add_subcommand("forward", "forward population simulation");
  auto* c_mkv = app.add_subcommand("mkv", "mean-field particle system equilibrium");
  auto* c_delta = app.add_subcommand("delta", "interface sums over scaling windows");
  auto* c_report = app.add_subcommand("report", "aggregate verdict JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json err;
    err["error"] = "config";
    err["message"] = e.what();
    std::cout << err.dump(2) << "\n";
    return 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::load(config_path);
    if (!seed_str.empty()) cfg.set("run.seed", seed_str);
    if (workers > 0) cfg.set("run.workers", std::to_string(workers));
    if (!out_dir.empty()) cfg.set("output.dir", out_dir);
    if (!format.empty()) cfg.set("output.format", format);

    int nworkers = resolve_workers(cfg, workers);
    std::string dir = cfg.volatile_str("output.dir", "out");
    std::string fmt = cfg.str("output.format", "both");
    if (fmt != "csv" && fmt != "json" && fmt != "both")
      throw ConfigError("output.format", "must be csv, json, or both");

    Artifacts art;
    if (*c_classify) cmd_classify(cfg, art);
    else if (*c_recursion) cmd_recursion(cfg, art);
    else if (*c_coalescent) cmd_coalescent(cfg, art, nworkers);
    else if (*c_hazard) cmd_hazard(cfg, art, nworkers);
    else if (*c_forward) cmd_forward(cfg, art);
    else if (*c_mkv) cmd_mkv(cfg, art);
    else if (*c_delta) cmd_delta(cfg, art);
    else if (*c_report) cmd_report(cfg, art);

    write_artifacts(cfg, art, dir, fmt);
    return 0;
  } catch (const ConfigError& e) {
    json err;
    err["error"] = "config";
    err["key"] = e.key;
    err["message"] = e.what();
    std::cout << err.dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err;
    err["error"] = "runtime";
    err["message"] = e.what();
    std::cout << err.dump(2) << "\n";
    return 1;
  }
}

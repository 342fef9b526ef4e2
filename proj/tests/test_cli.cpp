// end-to-end checks of the command-line tool: artifact layout, verdict
// content, machine-readable failures, and byte-stable reruns

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_fails = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++g_fails;
    std::cout << "FAIL: " << what << "\n";
  }
}

struct RunOut {
  int code = -1;
  std::string out;
};

RunOut run(const std::string& cmd) {
  RunOut r;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int rc = pclose(p);
  if (WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing " + p.string() + ">";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    expect(false, what + ": JSON parse failed: " + e.what());
    return json::object();
  }
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(cur);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cout << "usage: test_cli <cli-path> <scratch-dir>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  // ---- classify: verdicts for the canonical two-point model
  const fs::path classify_cfg = scratch / "classify.ini";
  write(classify_cfg,
        "[params]\n"
        "c.kind = constant\nc.scale = 1\n"
        "lambda.kind = constant\nlambda.scale = 1\n"
        "[environment]\n"
        "law = two_point\nlaw.lo = 0.5\nlaw.hi = 1.5\nlaw.p_hi = 0.5\n"
        "[model]\nN = 2\nd0 = 1\n"
        "[run]\nkmax = 200\n");
  {
    fs::path dir = scratch / "classify_out";
    RunOut r = run(cli + " classify --config " + classify_cfg.string() + " --out " +
                   dir.string());
    expect(r.code == 0, "classify exits 0, got " + std::to_string(r.code) + "\n" + r.out);
    json j = parse(slurp(dir / "classify_summary.json"), "classify summary");
    expect(j.value("regime", "") == "clustering", "classify regime is clustering");
    expect(j["scaling"].value("label", "") == "b", "scaling label is b");
    expect(j["cluster"].value("regime", "") == "I2", "cluster regime is I2");
    expect(j["model_report"].value("ok", false), "model report accepts the input");
    expect(j.value("config_hash", "").size() == 16, "summary carries the config hash");
    expect(j.contains("scaling_observed") &&
               j["scaling_observed"].value("gap", 1.0) < 1e-4,
           "observed volatility ratio sits on the predicted constant");

    json rc = parse(slurp(dir / "resolved_config.json"), "resolved config");
    auto& res = rc["resolved"];
    expect(res.contains("model.N") && res["model.N"] == "2", "resolved records model.N");
    expect(!res.contains("run.workers"), "worker count stays out of the resolved view");
    expect(!res.contains("output.dir"), "output dir stays out of the resolved view");
  }

  // ---- recursion: flat migration with no resampling gives d_k = 1/(1+k)
  const fs::path rec_cfg = scratch / "recursion.ini";
  write(rec_cfg,
        "[params]\n"
        "c.kind = constant\nc.scale = 1\n"
        "lambda.kind = constant\nlambda.scale = 0\n"
        "[model]\nd0 = 1\n"
        "[run]\nkmax = 50\n");
  {
    fs::path dir = scratch / "recursion_out";
    RunOut r = run(cli + " recursion --config " + rec_cfg.string() + " --out " + dir.string());
    expect(r.code == 0, "recursion exits 0\n" + r.out);
    std::string csv = slurp(dir / "recursion.csv");
    expect(csv.rfind("# config_hash=", 0) == 0, "csv leads with the config hash");
    auto rows = csv_rows(csv);
    expect(rows.size() == 52, "header plus 51 rows");
    bool all_ok = rows.size() == 52;
    for (size_t i = 1; all_ok && i < rows.size(); ++i) {
      double k = std::stod(rows[i][0]);
      double d = std::stod(rows[i][4]);
      if (std::abs(d - 1.0 / (1.0 + k)) > 1e-12) all_ok = false;
    }
    expect(all_ok, "volatility column follows 1/(1+k)");
    json js = parse(slurp(dir / "recursion_summary.json"), "recursion summary");
    expect(std::abs(js.value("d_final", 0.0) - 1.0 / 51.0) < 1e-12, "d_final matches");
    expect(js.value("substitution_max_dev", 1.0) < 1e-12,
           "substituted recursion agrees with the direct one");
  }

  // ---- malformed configs produce exit 2 and name the key on stdout
  {
    const fs::path bad = scratch / "bad.ini";
    write(bad, "[params]\nc.knd = constant\n");
    RunOut r = run(cli + " classify --config " + bad.string());
    expect(r.code == 2, "unknown key exits 2, got " + std::to_string(r.code));
    json j = parse(r.out, "unknown-key error");
    expect(j.value("error", "") == "config", "error tagged as config");
    expect(j.value("key", "") == "params.c.knd", "offending key reported");

    const fs::path bad2 = scratch / "bad2.ini";
    write(bad2, "[environment]\nlaw = gamma\n");
    RunOut r2 = run(cli + " classify --config " + bad2.string());
    expect(r2.code == 2, "unknown law exits 2");
    expect(parse(r2.out, "unknown-law error").value("key", "") == "environment.law",
           "law key reported");

    RunOut r3 = run(cli + " --config " + classify_cfg.string());
    expect(r3.code == 2, "missing subcommand exits 2");
    RunOut r4 = run(cli + " recursion --config " + rec_cfg.string() + " --format xml");
    expect(r4.code == 2, "unknown format exits 2");
  }

  // ---- coalescent runs are byte-identical across reruns and worker counts
  const fs::path coal_cfg = scratch / "coalescent.ini";
  write(coal_cfg,
        "[params]\n"
        "c.kind = constant\nc.scale = 1\n"
        "lambda.kind = constant\nlambda.scale = 1\n"
        "[environment]\n"
        "law = two_point\nlaw.lo = 0.5\nlaw.hi = 1.5\nlaw.p_hi = 0.5\n"
        "seed = 99\n"
        "[model]\nN = 2\nd0 = 0.1\n"
        "[run]\nseed = 5\nreplicas = 200\nhorizons = 1, 2\nlevel_cut = 6\n");
  const std::vector<std::string> coal_files = {
      "pair_coalescence.csv", "pair_coalescence.json", "trajectory.csv",
      "coalescent_summary.json", "resolved_config.json"};
  {
    fs::path d1 = scratch / "coal_w1";
    fs::path d2 = scratch / "coal_w3";
    fs::path d3 = scratch / "coal_again";
    RunOut r1 = run(cli + " coalescent --config " + coal_cfg.string() + " --out " +
                    d1.string() + " --workers 1");
    RunOut r2 = run(cli + " coalescent --config " + coal_cfg.string() + " --out " +
                    d2.string() + " --workers 3");
    RunOut r3 = run(cli + " coalescent --config " + coal_cfg.string() + " --out " +
                    d3.string() + " --workers 1");
    expect(r1.code == 0 && r2.code == 0 && r3.code == 0, "coalescent runs exit 0");
    for (const auto& f : coal_files) {
      std::string a = slurp(d1 / f);
      expect(a == slurp(d2 / f), f + " identical across worker counts");
      expect(a == slurp(d3 / f), f + " identical across reruns");
      expect(a.find("<missing") != 0, f + " exists");
    }

    // seed override changes the results but not the layout
    fs::path d4 = scratch / "coal_seed6";
    RunOut r4 = run(cli + " coalescent --config " + coal_cfg.string() + " --out " +
                    d4.string() + " --seed 6");
    expect(r4.code == 0, "seed override run exits 0");
    expect(slurp(d4 / "pair_coalescence.csv") != slurp(d1 / "pair_coalescence.csv"),
           "different seed changes the estimates");

    // worker count through the environment variable also leaves bytes alone
    setenv("HIERCAN_WORKERS", "2", 1);
    fs::path d5 = scratch / "coal_envw";
    RunOut r5 = run(cli + " coalescent --config " + coal_cfg.string() + " --out " +
                    d5.string());
    unsetenv("HIERCAN_WORKERS");
    expect(r5.code == 0, "env worker run exits 0");
    expect(slurp(d5 / "pair_coalescence.csv") == slurp(d1 / "pair_coalescence.csv"),
           "env-provided workers leave bytes unchanged");
  }

  // ---- format selection gates the table flavors
  {
    fs::path dc = scratch / "rec_csv";
    fs::path dj = scratch / "rec_json";
    run(cli + " recursion --config " + rec_cfg.string() + " --out " + dc.string() +
        " --format csv");
    run(cli + " recursion --config " + rec_cfg.string() + " --out " + dj.string() +
        " --format json");
    expect(fs::exists(dc / "recursion.csv") && !fs::exists(dc / "recursion.json"),
           "csv format writes only the csv table");
    expect(!fs::exists(dj / "recursion.csv") && fs::exists(dj / "recursion.json"),
           "json format writes only the json table");
    expect(fs::exists(dc / "recursion_summary.json"), "summaries always emitted");
    json t = parse(slurp(dj / "recursion.json"), "recursion table json");
    expect(t["columns"].size() == 11 && t["rows"].size() == 51, "table json shape");
  }

  // ---- mkv: prediction field and moments present
  {
    const fs::path cfg = scratch / "mkv.ini";
    write(cfg,
          "[run]\nn_particles = 60\nhorizon = 30\nburn = 2\nsample_dt = 0.5\nseed = 4\n");
    fs::path dir = scratch / "mkv_out";
    RunOut r = run(cli + " mkv --config " + cfg.string() + " --out " + dir.string());
    expect(r.code == 0, "mkv exits 0\n" + r.out);
    json j = parse(slurp(dir / "mkv_summary.json"), "mkv summary");
    expect(std::abs(j.value("var_predicted_equilibrium", 0.0) - 0.10714285714285714) < 1e-15,
           "equilibrium prediction for the default rates");
    expect(j["mean_freq"].size() == 2, "mean frequencies per type");
    expect(j.value("samples", 0) > 8, "sample count recorded");
  }

  // ---- delta: window sums approach the closed-form limit
  {
    const fs::path cfg = scratch / "delta.ini";
    write(cfg,
          "[params]\n"
          "c.kind = constant\nc.scale = 1\n"
          "lambda.kind = polynomial\nlambda.scale = 2\nlambda.power = -1\n"
          "[run]\nj = 1000\nalphas = 0.5\n");
    fs::path dir = scratch / "delta_out";
    RunOut r = run(cli + " delta --config " + cfg.string() + " --out " + dir.string());
    expect(r.code == 0, "delta exits 0\n" + r.out);
    auto rows = csv_rows(slurp(dir / "delta.csv"));
    expect(rows.size() == 2, "one alpha row");
    if (rows.size() == 2) {
      double limit = std::stod(rows[1][4]);
      double gap = std::stod(rows[1][5]);
      expect(std::abs(limit - (1.0 - std::exp(-0.5))) < 1e-12, "limit column exact");
      expect(gap < 0.02, "window sum close to the limit at j = 1000");
    }
  }

  // ---- forward: trajectory table shape and a config guard
  {
    const fs::path cfg = scratch / "forward.ini";
    write(cfg,
          "[params]\n"
          "c.kind = constant\nc.scale = 1\n"
          "lambda.kind = constant\nlambda.scale = 1\n"
          "[model]\nN = 2\nK = 1\nM = 3\nq = 2\nd0 = 0.1\n"
          "[run]\nhorizon = 2\nsample_dt = 0.5\nblock_level = 0\nseed = 8\n");
    fs::path dir = scratch / "forward_out";
    RunOut r = run(cli + " forward --config " + cfg.string() + " --out " + dir.string());
    expect(r.code == 0, "forward exits 0\n" + r.out);
    auto rows = csv_rows(slurp(dir / "forward.csv"));
    expect(!rows.empty() && rows[0].size() == 4, "forward table has 4 columns");
    expect(rows.size() == 1 + 5 * 2, "5 sample times, block levels 0 and 1");
    json j = parse(slurp(dir / "forward_summary.json"), "forward summary");
    expect(j.value("colonies", 0) == 2, "colony count reported");
    double tot = 0;
    for (double v : j["final_top_block_freq"]) tot += v;
    expect(std::abs(tot - 1.0) < 1e-12, "global frequencies sum to 1");

    const fs::path bad = scratch / "forward_bad.ini";
    write(bad,
          "[model]\nN = 2\nK = 1\nM = 3\n"
          "[run]\nblock_level = 5\n");
    RunOut rb = run(cli + " forward --config " + bad.string());
    expect(rb.code == 2, "out-of-range block level exits 2");
    expect(parse(rb.out, "block level error").value("key", "") == "run.block_level",
           "block level key reported");
  }

  // ---- hazard: analytic and Monte Carlo columns agree through the CLI path
  {
    const fs::path cfg = scratch / "hazard.ini";
    write(cfg,
          "[params]\n"
          "c.kind = constant\nc.scale = 1\n"
          "lambda.kind = constant\nlambda.scale = 1\n"
          "[model]\nN = 3\nK = 3\n"
          "[run]\nreplicas = 300\nhorizons = 2, 5\nseed = 12\n");
    fs::path dir = scratch / "hazard_out";
    RunOut r = run(cli + " hazard --config " + cfg.string() + " --out " + dir.string());
    expect(r.code == 0, "hazard exits 0\n" + r.out);
    auto rows = csv_rows(slurp(dir / "hazard.csv"));
    expect(rows.size() == 3, "two horizon rows");
    for (size_t i = 1; i < rows.size(); ++i) {
      double z = std::stod(rows[i][4]);
      expect(std::abs(z) < 5.0, "hazard z-score within 5 at row " + std::to_string(i));
    }
  }

  // ---- report: aggregate verdicts in one document
  {
    fs::path dir = scratch / "report_out";
    RunOut r = run(cli + " report --config " + classify_cfg.string() + " --out " +
                   dir.string());
    expect(r.code == 0, "report exits 0\n" + r.out);
    json j = parse(slurp(dir / "report_summary.json"), "report summary");
    expect(j.value("regime", "") == "clustering", "report regime");
    expect(j["scaling"].value("label", "") == "b", "report scaling label");
    expect(j.value("d_final", 0.0) > 0, "report d_final");
    expect(j.contains("mean_hazard_proxy"), "report mean hazard proxy");
    expect(j.contains("substitution_max_dev"), "report substitution deviation");
  }

  if (g_fails == 0) {
    std::cout << "cli: all checks passed\n";
    return 0;
  }
  std::cout << "cli: " << g_fails << " check(s) failed\n";
  return 1;
}

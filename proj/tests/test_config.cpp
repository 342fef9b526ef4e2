#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

#include "hiercan/config.hpp"

using namespace hiercan;

namespace {

const char* kIniSample =
    "# sample run\n"
    "[params]\n"
    "c.kind = polynomial\n"
    "c.scale = 2.0\n"
    "c.power = -1\n"
    "[environment]\n"
    "law = two_point\n"
    "law.lo = 0.5\n"
    "law.hi = 1.5\n"
    "law.p_hi = 0.5\n"
    "[model]\n"
    "N = 3\n"
    "[run]\n"
    "seed = 42\n"
    "log_events = true\n"
    "horizons = 1, 2, 4\n";

std::string expect_key(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.key;
  }
  return "<no throw>";
}

}  // namespace

TEST_CASE("ini text parses sections, comments and typed getters") {
  RunConfig cfg = RunConfig::parse_text(kIniSample);
  REQUIRE(cfg.has("params.c.kind"));
  REQUIRE(cfg.str("params.c.kind", "") == "polynomial");
  REQUIRE(cfg.num("params.c.scale", 0) == Catch::Approx(2.0));
  REQUIRE(cfg.integer("model.N", 0) == 3);
  REQUIRE(cfg.integer("run.seed", 0) == 42);
  REQUIRE(cfg.boolean("run.log_events", false));
  REQUIRE(cfg.list("run.horizons") == std::vector<double>{1, 2, 4});
  // defaults flow through and get recorded
  REQUIRE(cfg.num("model.d0", 0.25) == Catch::Approx(0.25));
  REQUIRE(cfg.str("output.format", "json") == "json");
}

TEST_CASE("ini structural errors") {
  REQUIRE_THROWS_AS(RunConfig::parse_text("[params\nc.kind = constant\n"), ConfigError);
  REQUIRE_THROWS_AS(RunConfig::parse_text("[]\n"), ConfigError);
  REQUIRE_THROWS_AS(RunConfig::parse_text("just words\n"), ConfigError);
  REQUIRE_THROWS_AS(RunConfig::parse_text("= 3\n"), ConfigError);
}

TEST_CASE("unknown and duplicate keys name the offender") {
  REQUIRE(expect_key([] {
            RunConfig::parse_text("[params]\nc.knd = constant\n");
          }) == "params.c.knd");
  REQUIRE(expect_key([] {
            RunConfig::parse_text("[model]\nN = 2\nN = 3\n");
          }) == "model.N");
  REQUIRE(expect_key([] {
            RunConfig::parse_json("{\"model\":{\"banana\":1}}");
          }) == "model.banana");
}

TEST_CASE("type errors name the key") {
  RunConfig cfg = RunConfig::parse_text(
      "[model]\nN = abc\nd0 = 2.5\n[run]\nlog_events = maybe\nhorizons = 1,,3\n");
  REQUIRE(expect_key([&] { cfg.num("model.N", 0); }) == "model.N");
  REQUIRE(expect_key([&] { cfg.integer("model.d0", 0); }) == "model.d0");
  REQUIRE(expect_key([&] { cfg.boolean("run.log_events", false); }) == "run.log_events");
  REQUIRE(expect_key([&] { cfg.list("run.horizons"); }) == "run.horizons");
  REQUIRE(expect_key([&] { cfg.str_req("run.j"); }) == "run.j");
}

TEST_CASE("json document is equivalent to the ini form") {
  RunConfig a = RunConfig::parse_text(kIniSample);
  RunConfig b = RunConfig::parse_json(
      "{\"params\":{\"c\":{\"kind\":\"polynomial\",\"scale\":2.0,\"power\":-1}},"
      "\"environment\":{\"law\":\"two_point\",\"law.lo\":0.5,\"law.hi\":1.5,"
      "\"law.p_hi\":0.5},"
      "\"model\":{\"N\":3},"
      "\"run\":{\"seed\":42,\"log_events\":true,\"horizons\":[1,2,4]}}");

  auto read_all = [](const RunConfig& c) {
    params_from(c);
    law_from(c);
    c.integer("model.N", 2);
    c.integer("run.seed", 0);
    c.boolean("run.log_events", false);
    c.list("run.horizons");
  };
  read_all(a);
  read_all(b);
  REQUIRE(a.dump_resolved() == b.dump_resolved());
  REQUIRE(a.config_hash() == b.config_hash());
  REQUIRE(a.config_hash_hex().size() == 16);
}

TEST_CASE("json value guards") {
  REQUIRE_THROWS_AS(RunConfig::parse_json("not json"), ConfigError);
  REQUIRE_THROWS_AS(RunConfig::parse_json("[1,2]"), ConfigError);
  REQUIRE(expect_key([] {
            RunConfig::parse_json("{\"run\":{\"horizons\":[1,\"x\"]}}");
          }) == "run.horizons");
  REQUIRE(expect_key([] {
            RunConfig::parse_json("{\"model\":{\"N\":null}}");
          }) == "model.N");
}

TEST_CASE("worker count and output location stay out of the hash") {
  std::string base =
      "[model]\nN = 4\n[run]\nseed = 7\n";
  RunConfig plain = RunConfig::parse_text(base);
  RunConfig noisy = RunConfig::parse_text(
      base + "workers = 8\n[output]\ndir = /tmp/elsewhere\n");

  auto read_all = [](const RunConfig& c) {
    c.integer("model.N", 2);
    c.integer("run.seed", 0);
    (void)c.volatile_num("run.workers", 1);
    (void)c.volatile_str("output.dir", ".");
  };
  read_all(plain);
  read_all(noisy);
  REQUIRE(noisy.volatile_num("run.workers", 1) == Catch::Approx(8));
  REQUIRE(noisy.volatile_str("output.dir", ".") == "/tmp/elsewhere");
  REQUIRE(plain.dump_resolved() == noisy.dump_resolved());
  REQUIRE(plain.config_hash() == noisy.config_hash());
  REQUIRE(plain.dump_resolved().find("workers") == std::string::npos);
  REQUIRE(plain.dump_resolved().find("output.dir") == std::string::npos);
}

TEST_CASE("resolved dump is sorted and read-order independent") {
  RunConfig a = RunConfig::parse_text("[model]\nN = 3\nd0 = 1\n[run]\nseed = 9\n");
  RunConfig b = RunConfig::parse_text("[model]\nN = 3\nd0 = 1\n[run]\nseed = 9\n");
  a.integer("model.N", 2);
  a.num("model.d0", 0);
  a.integer("run.seed", 0);
  b.integer("run.seed", 0);
  b.num("model.d0", 0);
  b.integer("model.N", 2);
  REQUIRE(a.dump_resolved() == b.dump_resolved());
  REQUIRE(a.config_hash() == b.config_hash());
  std::string d = a.dump_resolved();
  REQUIRE(d.find("model.N") < d.find("model.d0"));
  REQUIRE(d.find("model.d0") < d.find("run.seed"));
}

TEST_CASE("cli overrides land like file values") {
  RunConfig cfg = RunConfig::parse_text("[run]\nseed = 1\n");
  cfg.set("run.seed", "77");
  REQUIRE(cfg.integer("run.seed", 0) == 77);
}

TEST_CASE("sequence builder covers every kind") {
  RunConfig none = RunConfig::parse_text("");
  SeqSpec dflt = seq_from(none, "params.c");
  REQUIRE(dflt.at(0) == Catch::Approx(1.0));
  REQUIRE(dflt.at(5) == Catch::Approx(1.0));

  RunConfig cfg = RunConfig::parse_text(
      "[params]\n"
      "c.kind = polynomial\nc.scale = 2\nc.power = -1\nc.shift = 0\n"
      "lambda.kind = exponential\nlambda.scale = 3\nlambda.base = 2\n");
  SeqSpec c = seq_from(cfg, "params.c");
  REQUIRE(c.at(1) == Catch::Approx(2.0));
  REQUIRE(c.at(4) == Catch::Approx(0.5));
  SeqSpec l = seq_from(cfg, "params.lambda");
  REQUIRE(l.at(0) == Catch::Approx(3.0));
  REQUIRE(l.at(3) == Catch::Approx(24.0));

  RunConfig ex = RunConfig::parse_text("[params]\nc.kind = explicit\nc.values = 1, 2, 4\n");
  SeqSpec e = seq_from(ex, "params.c");
  REQUIRE(e.at(2) == Catch::Approx(4.0));
  REQUIRE_THROWS_AS(e.at(3), std::out_of_range);

  REQUIRE(expect_key([] {
            RunConfig c2 = RunConfig::parse_text("[params]\nc.kind = explicit\n");
            seq_from(c2, "params.c");
          }) == "params.c.values");
  REQUIRE(expect_key([] {
            RunConfig c3 = RunConfig::parse_text("[params]\nc.kind = fancy\n");
            seq_from(c3, "params.c");
          }) == "params.c.kind");
}

TEST_CASE("environment builders") {
  RunConfig none = RunConfig::parse_text("");
  EnvLaw d = law_from(none);
  REQUIRE(d.degenerate());
  REQUIRE(d.mean() == Catch::Approx(1.0));

  RunConfig tp = RunConfig::parse_text(
      "[environment]\nlaw = two_point\nlaw.lo = 0.25\nlaw.hi = 1.75\nlaw.p_hi = 0.5\n");
  EnvLaw t = law_from(tp);
  REQUIRE(t.mean() == Catch::Approx(1.0));
  REQUIRE(t.atoms == std::vector<double>{0.25, 1.75});

  RunConfig at = RunConfig::parse_text(
      "[environment]\nlaw = atoms\nlaw.atoms = 0, 1, 2\nlaw.weights = 0.25, 0.5, 0.25\n");
  EnvLaw a = law_from(at);
  REQUIRE(a.variance() == Catch::Approx(0.5));

  REQUIRE(expect_key([] {
            law_from(RunConfig::parse_text(
                "[environment]\nlaw = atoms\nlaw.atoms = 1\nlaw.weights = 0.4\n"));
          }) == "environment.law");
  REQUIRE(expect_key([] {
            law_from(RunConfig::parse_text("[environment]\nlaw = gamma\n"));
          }) == "environment.law");

  ChiShape chi0 = chi_from(none);
  REQUIRE(chi0.atoms.size() == 1);
  REQUIRE(chi0.atoms[0].r == Catch::Approx(1.0));
  REQUIRE(chi0.pair_weight() == Catch::Approx(1.0));

  RunConfig ch = RunConfig::parse_text(
      "[environment]\nchi.r = 0.25, 0.5\nchi.w = 1, 2\n");
  ChiShape chi = chi_from(ch);
  REQUIRE(chi.pair_weight() == Catch::Approx(3.0));
  REQUIRE(chi.event_weight() == Catch::Approx(1.0 / 0.0625 + 2.0 / 0.25));

  REQUIRE(expect_key([] {
            chi_from(RunConfig::parse_text("[environment]\nchi.r = 0.5\nchi.w = 1, 2\n"));
          }) == "environment.chi.w");
  REQUIRE(expect_key([] {
            chi_from(RunConfig::parse_text("[environment]\nchi.r = 0\nchi.w = 1\n"));
          }) == "environment.chi.r");

  Environment env = env_from(tp);
  double r0 = env.rho_at(TreeAddress(HierAddress::zero(2), 1));
  REQUIRE((r0 == 0.25 || r0 == 1.75));
}

TEST_CASE("file loader picks the format from the content") {
  std::string ini_path = "/tmp/hiercan_cfg_test.ini";
  std::string json_path = "/tmp/hiercan_cfg_test.json";
  {
    std::ofstream(ini_path) << "[model]\nN = 5\n";
    std::ofstream(json_path) << "\n  {\"model\":{\"N\":6}}\n";
  }
  RunConfig a = RunConfig::load(ini_path);
  REQUIRE(a.integer("model.N", 0) == 5);
  RunConfig b = RunConfig::load(json_path);
  REQUIRE(b.integer("model.N", 0) == 6);
  REQUIRE_THROWS_AS(RunConfig::load("/tmp/does_not_exist_hiercan.cfg"), ConfigError);
  std::remove(ini_path.c_str());
  std::remove(json_path.c_str());
}

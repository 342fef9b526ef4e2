#pragma once
// Run configuration: flat dotted keys grouped in sections (params, environment,
// model, run, output), loadable from an INI-style text file or a JSON document.
// Every value a command actually reads is recorded (defaults included) so the
// run can emit the fully resolved config and a stable hash of it.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "environment.hpp"
#include "params.hpp"
#include "rng.hpp"

#include "json.hpp"

namespace hiercan {

// carries the offending key so the CLI can report it machine-readably
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& msg)
      : std::runtime_error(k.empty() ? msg : k + ": " + msg), key(std::move(k)) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace((unsigned char)s[a])) ++a;
  while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
  return s.substr(a, b - a);
}

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_num(const std::string& key, const std::string& raw) {
  try {
    size_t pos = 0;
    double v = std::stod(raw, &pos);
    while (pos < raw.size() && std::isspace((unsigned char)raw[pos])) ++pos;
    if (pos != raw.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got \"" + raw + "\"");
  }
}

inline std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : raw) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cur = trim(cur);
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

// every key any command understands; typos fail loudly at load time
inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "params.c.kind", "params.c.scale", "params.c.base", "params.c.power",
      "params.c.logpow", "params.c.shift", "params.c.values",
      "params.lambda.kind", "params.lambda.scale", "params.lambda.base",
      "params.lambda.power", "params.lambda.logpow", "params.lambda.shift",
      "params.lambda.values",
      "environment.law", "environment.law.value", "environment.law.lo",
      "environment.law.hi", "environment.law.p_hi", "environment.law.atoms",
      "environment.law.weights", "environment.chi.r", "environment.chi.w",
      "environment.seed",
      "model.N", "model.K", "model.d0", "model.q", "model.theta", "model.M",
      "run.seed", "run.workers", "run.replicas", "run.horizon", "run.horizons",
      "run.level_cut", "run.kmax", "run.j", "run.j1", "run.j2", "run.alpha1",
      "run.alpha2", "run.alphas", "run.tol", "run.sample_dt", "run.burn",
      "run.t_rescaled", "run.dtau", "run.Ns", "run.n_particles", "run.c",
      "run.d", "run.T", "run.d0", "run.immigration", "run.log_events",
      "run.block_level", "run.trunc",
      "output.dir", "output.format",
  };
  return keys;
}

}  // namespace detail

class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("", "line " + std::to_string(lineno) + ": unterminated section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError("", "line " + std::to_string(lineno) + ": empty section name");
        continue;
      }
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
      std::string key = detail::trim(line.substr(0, eq));
      std::string val = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      cfg.set_checked(key, val);
    }
    return cfg;
  }

  static RunConfig parse_json(const std::string& text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("", "config JSON must be an object");
    RunConfig cfg;
    cfg.flatten_json("", doc);
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    size_t i = 0;
    while (i < text.size() && std::isspace((unsigned char)text[i])) ++i;
    if (i < text.size() && text[i] == '{') return parse_json(text);
    return parse_text(text);
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  // override from CLI flags; recorded like any file value
  void set(const std::string& key, const std::string& val) { kv_[key] = val; }

  std::string str(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    std::string v = it == kv_.end() ? def : it->second;
    resolved_[key] = v;
    return v;
  }

  std::string str_req(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(key, "required key missing");
    resolved_[key] = it->second;
    return it->second;
  }

  double num(const std::string& key, double def) const {
    auto it = kv_.find(key);
    double v = it == kv_.end() ? def : detail::parse_num(key, it->second);
    resolved_[key] = detail::fmt_num(v);
    return v;
  }

  long long integer(const std::string& key, long long def) const {
    double v = num(key, (double)def);
    long long n = (long long)v;
    if ((double)n != v) throw ConfigError(key, "expected an integer");
    resolved_[key] = std::to_string(n);
    return n;
  }

  bool boolean(const std::string& key, bool def) const {
    auto it = kv_.find(key);
    bool v = def;
    if (it != kv_.end()) {
      const std::string& raw = it->second;
      if (raw == "true" || raw == "1" || raw == "yes") v = true;
      else if (raw == "false" || raw == "0" || raw == "no") v = false;
      else throw ConfigError(key, "expected true/false, got \"" + raw + "\"");
    }
    resolved_[key] = v ? "true" : "false";
    return v;
  }

  std::vector<double> list(const std::string& key, std::vector<double> def = {}) const {
    auto it = kv_.find(key);
    std::vector<double> v;
    if (it == kv_.end()) {
      v = std::move(def);
    } else {
      for (auto& tok : detail::split_list(it->second)) {
        if (tok.empty()) throw ConfigError(key, "empty list entry");
        v.push_back(detail::parse_num(key, tok));
      }
    }
    std::string canon;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) canon += ",";
      canon += detail::fmt_num(v[i]);
    }
    resolved_[key] = canon;
    return v;
  }

  // values a run depends on for reproducibility exclude these: worker count
  // and output location must not change result bytes
  double volatile_num(const std::string& key, double def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : detail::parse_num(key, it->second);
  }
  std::string volatile_str(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
  }

  // the resolved view: everything read so far, defaults filled in
  std::string dump_resolved() const {
    std::string out;
    for (auto& [k, v] : resolved_) out += k + " = " + v + "\n";
    return out;
  }

  u64 config_hash() const { return fnv1a64(dump_resolved()); }

  std::string config_hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)config_hash());
    return buf;
  }

  const std::map<std::string, std::string>& raw() const { return kv_; }
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  void set_checked(const std::string& key, const std::string& val) {
    if (!detail::known_keys().count(key)) throw ConfigError(key, "unknown key");
    if (kv_.count(key)) throw ConfigError(key, "duplicate key");
    kv_[key] = val;
  }

  void flatten_json(const std::string& prefix, const nlohmann::json& node) {
    if (node.is_object()) {
      for (auto it = node.begin(); it != node.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        flatten_json(key, it.value());
      }
      return;
    }
    std::string val;
    if (node.is_array()) {
      for (size_t i = 0; i < node.size(); ++i) {
        const auto& el = node[i];
        if (!el.is_number())
          throw ConfigError(prefix, "arrays may only hold numbers");
        if (i) val += ",";
        val += detail::fmt_num(el.get<double>());
      }
    } else if (node.is_number()) {
      val = detail::fmt_num(node.get<double>());
    } else if (node.is_boolean()) {
      val = node.get<bool>() ? "true" : "false";
    } else if (node.is_string()) {
      val = node.get<std::string>();
    } else {
      throw ConfigError(prefix, "unsupported JSON value type");
    }
    set_checked(prefix, val);
  }

  std::map<std::string, std::string> kv_;
  mutable std::map<std::string, std::string> resolved_;
};

// ---- section builders ----

inline SeqSpec seq_from(const RunConfig& cfg, const std::string& prefix) {
  std::string kind = cfg.str(prefix + ".kind", "constant");
  if (kind == "constant") {
    return SeqSpec::constant(cfg.num(prefix + ".scale", 1.0));
  }
  if (kind == "polynomial") {
    return SeqSpec::polynomial(cfg.num(prefix + ".scale", 1.0),
                               cfg.num(prefix + ".power", 0.0),
                               cfg.num(prefix + ".shift", 1.0),
                               cfg.num(prefix + ".logpow", 0.0));
  }
  if (kind == "exponential") {
    return SeqSpec::exponential(cfg.num(prefix + ".scale", 1.0),
                                cfg.num(prefix + ".base", 1.0),
                                cfg.num(prefix + ".power", 0.0),
                                cfg.num(prefix + ".shift", 1.0),
                                cfg.num(prefix + ".logpow", 0.0));
  }
  if (kind == "explicit") {
    std::vector<double> v = cfg.list(prefix + ".values");
    if (v.empty()) throw ConfigError(prefix + ".values", "explicit sequence needs values");
    return SeqSpec::explicit_values(std::move(v));
  }
  throw ConfigError(prefix + ".kind",
                    "unknown sequence kind \"" + kind +
                        "\" (constant, polynomial, exponential, explicit)");
}

inline ParamFamily params_from(const RunConfig& cfg) {
  ParamFamily p;
  p.c = seq_from(cfg, "params.c");
  p.lambda = seq_from(cfg, "params.lambda");
  return p;
}

inline EnvLaw law_from(const RunConfig& cfg) {
  std::string kind = cfg.str("environment.law", "dirac");
  EnvLaw law;
  if (kind == "dirac") {
    law = EnvLaw::dirac(cfg.num("environment.law.value", 1.0));
  } else if (kind == "two_point") {
    law = EnvLaw::two_point(cfg.num("environment.law.lo", 0.5),
                            cfg.num("environment.law.hi", 1.5),
                            cfg.num("environment.law.p_hi", 0.5));
  } else if (kind == "atoms") {
    law.atoms = cfg.list("environment.law.atoms");
    law.weights = cfg.list("environment.law.weights");
  } else {
    throw ConfigError("environment.law",
                      "unknown law \"" + kind + "\" (dirac, two_point, atoms)");
  }
  try {
    law.validate();
  } catch (const std::exception& e) {
    throw ConfigError("environment.law", e.what());
  }
  return law;
}

inline ChiShape chi_from(const RunConfig& cfg) {
  std::vector<double> r = cfg.list("environment.chi.r", {1.0});
  std::vector<double> w = cfg.list("environment.chi.w", {1.0});
  if (r.size() != w.size())
    throw ConfigError("environment.chi.w", "chi.r and chi.w need equal lengths");
  ChiShape chi;
  chi.atoms.clear();
  for (size_t i = 0; i < r.size(); ++i) chi.atoms.push_back({r[i], w[i]});
  try {
    chi.validate();
  } catch (const std::exception& e) {
    throw ConfigError("environment.chi.r", e.what());
  }
  return chi;
}

inline Environment env_from(const RunConfig& cfg) {
  return Environment(law_from(cfg), (u64)cfg.integer("environment.seed", 1234));
}

}  // namespace hiercan

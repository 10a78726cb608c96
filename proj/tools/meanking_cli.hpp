// Copyright 2026 The meanking Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. run_cli() takes the arguments without the program
// name and writes to the given streams, so tests can drive it in-process.
//
// Exit codes: 0 pass, 1 usage or I/O error, 2 validation or solve failure,
// 3 protocol aborted.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "meanking/attack.hpp"
#include "meanking/bases.hpp"
#include "meanking/io.hpp"
#include "meanking/protocol.hpp"
#include "meanking/retrodiction.hpp"
#include "meanking/security.hpp"

#ifndef MEANKING_VERSION
#define MEANKING_VERSION "0.0.0"
#endif

namespace meanking::cli {

using io::Json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;
inline constexpr int kExitAborted = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(kHex[md[k] >> 4]);
    out.push_back(kHex[md[k] & 0xF]);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\" for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out << content;
  if (!out) throw IoError("write to \"" + path + "\" failed");
}

/// Default tolerance, overridable with MEANKING_TOL.
inline double default_tolerance() {
  const char* v = std::getenv("MEANKING_TOL");
  if (v == nullptr || *v == '\0') return kDefaultTol;
  char* end = nullptr;
  const double t = std::strtod(v, &end);
  if (end == v || *end != '\0' || !std::isfinite(t) || t <= 0.0) {
    throw UsageError("MEANKING_TOL must be a positive number, got \"" + std::string(v) + "\"");
  }
  return t;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Attack specifications: name[:key=value[,key=value...]].

struct AttackSpec {
  std::string name = "none";
  std::map<std::string, double> params;

  double get(const std::string& key) const { return params.at(key); }
};

namespace detail {

inline double parse_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || !std::isfinite(v)) throw UsageError(what + ": not a number: \"" + text + "\"");
  return v;
}

struct AttackKind {
  const char* name;
  std::vector<std::pair<std::string, std::optional<double>>> keys;  // key, default (nullopt = required)
  const char* sweep_key;  // parameter swept by --curve, or nullptr
};

inline const std::vector<AttackKind>& attack_kinds() {
  static const std::vector<AttackKind> kinds = {
      {"none", {}, nullptr},
      {"identity", {}, nullptr},
      {"intercept-resend", {{"b", 1.0}, {"p", 1.0}}, "p"},
      {"source-replace", {{"eps", std::nullopt}}, "eps"},
      {"probe", {{"theta", std::nullopt}}, "theta"},
  };
  return kinds;
}

inline const AttackKind& attack_kind(const std::string& name) {
  for (const auto& k : attack_kinds()) {
    if (name == k.name) return k;
  }
  throw UsageError("unknown attack \"" + name + "\" (expected none, identity, intercept-resend, source-replace, probe)");
}

}  // namespace detail

inline AttackSpec parse_attack_spec(const std::string& text) {
  AttackSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  const auto& kind = detail::attack_kind(spec.name);
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("attack parameter \"" + item + "\" is not key=value");
      const std::string key = item.substr(0, eq);
      bool known = false;
      for (const auto& k : kind.keys) known = known || k.first == key;
      if (!known) throw UsageError("attack \"" + spec.name + "\" has no parameter \"" + key + "\"");
      spec.params[key] = detail::parse_number(item.substr(eq + 1), "attack parameter " + key);
    }
  }
  for (const auto& [key, fallback] : kind.keys) {
    if (spec.params.count(key)) continue;
    if (!fallback) throw UsageError("attack \"" + spec.name + "\" requires parameter \"" + key + "\"");
    spec.params[key] = *fallback;
  }
  return spec;
}

/// Builds the attack for the given basis set; "none" gives no model. The
/// basis parameter b is 1-based.
inline std::optional<AttackModel> make_attack(const AttackSpec& spec, const BasisSet& bs, std::size_t n) {
  if (spec.name == "none") return std::nullopt;
  if (spec.name == "identity") return identity_attack(bs.dim(), n);
  if (spec.name == "intercept-resend") {
    const double b = spec.get("b");
    if (b < 1.0 || b > static_cast<double>(bs.count()) || b != std::floor(b)) {
      throw UsageError("intercept-resend: b must be an integer in [1, " + std::to_string(bs.count()) + "]");
    }
    const double p = spec.get("p");
    if (p < 0.0 || p > 1.0) throw UsageError("intercept-resend: p must lie in [0, 1]");
    return intercept_resend(bs, n, static_cast<std::size_t>(b) - 1, p);
  }
  if (spec.name == "source-replace") {
    const double eps = spec.get("eps");
    if (eps < 0.0 || eps > 1.0) throw UsageError("source-replace: eps must lie in [0, 1]");
    return source_replace(bs.dim(), n, eps);
  }
  return probe_entangle(bs.dim(), n, spec.get("theta"));
}

inline Json attack_spec_to_json(const AttackSpec& spec) {
  Json params = Json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  return Json{{"name", spec.name}, {"params", std::move(params)}};
}

// ---------------------------------------------------------------------------
// Per-invocation state shared by the commands.

struct Context {
  std::vector<std::string> argv;
  std::ostringstream out;
  std::ostream* err = nullptr;
  std::string command;
  Json config = Json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  std::string load(const std::string& path) {
    inputs.push_back(path);
    return read_file(path);
  }
  void save(const std::string& path, const std::string& content) {
    write_file(path, content);
    outputs.push_back(path);
  }
};

namespace detail {

inline Json file_digests(const std::vector<std::string>& paths) {
  Json out = Json::array();
  for (const auto& p : paths) out.push_back(Json{{"path", p}, {"sha256", sha256_hex(read_file(p))}});
  return out;
}

inline Json manifest(const Context& ctx, int code) {
  return Json{{"tool", "meanking"},
              {"version", MEANKING_VERSION},
              {"command", ctx.command},
              {"argv", ctx.argv},
              {"config", ctx.config},
              {"seed", ctx.seed ? Json(*ctx.seed) : Json(nullptr)},
              {"inputs", file_digests(ctx.inputs)},
              {"outputs", file_digests(ctx.outputs)},
              {"stdout_sha256", sha256_hex(ctx.out.str())},
              {"exit_code", code}};
}

/// Echo of every option of a (sub)command: given values or defaults.
inline void echo_options(const CLI::App& app, Json& config) {
  for (const CLI::Option* opt : app.get_options()) {
    const std::string key = opt->get_single_name();
    if (key == "help" || key == "manifest") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      config[key] = r.size() == 1 ? Json(r.front()) : Json(r);
    } else {
      const std::string def = opt->get_default_str();
      config[key] = def.empty() ? Json(nullptr) : Json(def);
    }
  }
}

inline BasisSet load_bases(Context& ctx, const std::string& path) {
  return io::basis_set_from_json(io::parse(ctx.load(path)));
}

inline constexpr double kStrategyFileTol = 1e-6;

inline Strategy load_strategy(Context& ctx, const std::string& path) {
  Strategy s = io::strategy_from_json(io::parse(ctx.load(path)));
  if (s.weights.minCoeff() < 0.0) throw io::FormatError("strategy file has negative weights");
  const double r = completeness_residual(s);
  if (r > kStrategyFileTol) {
    throw Infeasible("strategy file is not a complete measurement (residual " + std::to_string(r) + ")");
  }
  return s;
}

inline Strategy strategy_from_options(Context& ctx, const std::string& path, std::size_t dim, double tol) {
  if (!path.empty()) return load_strategy(ctx, path);
  if (dim == 0) throw UsageError("either --strategy or --dim is required");
  return build_strategy(gen_mub(dim), tol);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands.

struct BasesOptions {
  std::size_t dim = 0;
  std::string in;
  std::string out;
  double tol = kDefaultTol;
};

inline int cmd_bases_gen(Context& ctx, const BasesOptions& o) {
  if (o.dim == 0) throw UsageError("bases gen: --dim is required");
  const BasisSet bs = gen_mub(o.dim);
  const std::string text = dump(io::basis_set_to_json(bs));
  if (o.out.empty()) {
    ctx.out << text;
  } else {
    ctx.save(o.out, text);
    ctx.out << dump(Json{{"dim", bs.dim()}, {"bases", bs.count()}, {"out", o.out}});
  }
  return kExitOk;
}

inline int cmd_bases_check(Context& ctx, const BasesOptions& o) {
  BasisSet bs;
  if (!o.in.empty()) {
    bs = detail::load_bases(ctx, o.in);
  } else if (o.dim != 0) {
    bs = gen_mub(o.dim);
  } else {
    throw UsageError("bases check: --in or --dim is required");
  }
  const auto rep = validate(bs, o.tol);
  Json j = io::validation_report_to_json(rep);
  j["dim"] = bs.dim();
  j["bases"] = bs.count();
  j["tol"] = o.tol;
  ctx.out << dump(j);
  return rep.passed() ? kExitOk : kExitFailure;
}

struct StrategyOptions {
  std::string bases;
  std::size_t dim = 0;
  std::string out;
  double tol = kDefaultTol;
};

inline int cmd_strategy_build(Context& ctx, const StrategyOptions& o) {
  BasisSet bs;
  if (!o.bases.empty()) {
    bs = detail::load_bases(ctx, o.bases);
  } else if (o.dim != 0) {
    bs = gen_mub(o.dim);
  } else {
    throw UsageError("strategy build: --bases or --dim is required");
  }
  const Strategy s = build_strategy(bs, o.tol);
  const std::string text = dump(io::strategy_to_json(s));
  if (o.out.empty()) {
    ctx.out << text;
    return kExitOk;
  }
  ctx.save(o.out, text);
  double worst = 0.0;
  for (const auto& sv : s.safe_vectors) worst = std::max(worst, sv.residual);
  ctx.out << dump(Json{{"dim", s.dim()},
                       {"bases", s.basis_count()},
                       {"entries", s.size()},
                       {"min_weight", s.weights.minCoeff()},
                       {"completeness_residual", completeness_residual(s)},
                       {"max_safe_vector_residual", worst},
                       {"out", o.out}});
  return kExitOk;
}

struct RunOptions {
  std::string strategy;
  std::size_t dim = 0;
  std::size_t rounds = 1000;
  std::size_t n = 1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  std::string attack = "none";
  std::string attack_file;
  std::string out;
  std::string summary;
  double tol = kDefaultTol;
};

inline int cmd_run(Context& ctx, const RunOptions& o) {
  const Strategy s = detail::strategy_from_options(ctx, o.strategy, o.dim, o.tol);
  ProtocolConfig cfg{s.dim(), o.n, o.rounds, o.test_fraction, o.seed};
  ctx.seed = o.seed;
  try {
    validate_config(cfg);
  } catch (const ProtocolError& e) {
    throw UsageError(e.what());
  }

  std::optional<AttackModel> attack;
  Json attack_echo;
  if (!o.attack_file.empty()) {
    attack = io::attack_from_json(io::parse(ctx.load(o.attack_file)));
    attack_echo = Json{{"name", attack->name}, {"file", o.attack_file}};
  } else {
    const AttackSpec spec = parse_attack_spec(o.attack);
    attack = make_attack(spec, s.basis_set, o.n);
    attack_echo = attack_spec_to_json(spec);
  }

  const Transcript t = run_protocol(cfg, s, attack);
  const auto sift = sift_and_test(t);
  std::size_t failures = 0;
  for (auto k : sift.test_indices) failures += t.records[k].agrees() ? 0 : 1;
  const std::size_t tests = sift.test_indices.size();

  if (!o.out.empty()) {
    std::ostringstream ss;
    io::write_transcript(ss, t);
    ctx.save(o.out, ss.str());
  }
  const Json summary{
      {"d", cfg.d},
      {"n", cfg.n},
      {"rounds", cfg.rounds},
      {"instances", t.records.size()},
      {"test_fraction", cfg.test_fraction},
      {"seed", cfg.seed},
      {"attack", attack_echo},
      {"agreement_rate", agreement_rate(t)},
      {"test_count", tests},
      {"test_failures", failures},
      {"test_error_rate", tests == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(tests)},
      {"accepted", sift.accepted},
      {"key_length", sift.keys.alice_key.size()},
      {"keys_match", sift.keys.alice_key == sift.keys.bob_key},
      {"transcript", o.out.empty() ? Json(nullptr) : Json(o.out)}};
  const std::string text = dump(summary);
  if (!o.summary.empty()) ctx.save(o.summary, text);
  ctx.out << text;
  return sift.accepted ? kExitOk : kExitAborted;
}

struct SecurityOptions {
  std::size_t dim = 2;
  std::size_t n = 1;
  std::string strategy;
  std::string attack = "none";
  std::string attack_file;
  std::size_t curve = 0;
  double tol = kDefaultTol;
};

inline int cmd_security_lemma(Context& ctx, const SecurityOptions& o) {
  const Strategy s = detail::strategy_from_options(ctx, o.strategy, o.dim, o.tol);
  const auto rep = lemma2_check(s, o.n, o.tol);
  ctx.out << dump(io::commutant_report_to_json(rep));
  return kExitOk;
}

inline Json evaluate_to_json(const ProductStrategy& ps, const AttackModel& am) {
  Json j = io::attack_report_to_json(evaluate_attack(ps, am));
  j["d_E"] = am.d_E;
  return j;
}

inline int cmd_security_attack_eval(Context& ctx, const SecurityOptions& o) {
  const Strategy s = detail::strategy_from_options(ctx, o.strategy, o.dim, o.tol);
  const ProductStrategy ps(s, o.n);
  Json report{{"d", s.dim()}, {"n", o.n}};
  std::optional<AttackSpec> spec;
  std::optional<AttackModel> am;
  if (!o.attack_file.empty()) {
    am = io::attack_from_json(io::parse(ctx.load(o.attack_file)));
    if (am->d != s.dim() || am->n != o.n) {
      throw UsageError("attack file (d=" + std::to_string(am->d) + ", n=" + std::to_string(am->n) +
                       ") does not match --dim/--strategy and --n");
    }
    report["attack"] = Json{{"name", am->name}, {"file", o.attack_file}};
  } else {
    spec = parse_attack_spec(o.attack);
    am = make_attack(*spec, s.basis_set, o.n);
    report["attack"] = attack_spec_to_json(*spec);
  }
  // No attack is the honest source with an untouched channel.
  const AttackModel model = am ? *am : identity_attack(s.dim(), o.n);
  report.update(evaluate_to_json(ps, model));

  Json curve = Json::array();
  if (o.curve > 0) {
    const char* key = spec ? detail::attack_kind(spec->name).sweep_key : nullptr;
    if (key == nullptr) throw UsageError("--curve needs a canned attack with a strength parameter");
    const double top = spec->get(key);
    for (std::size_t j = 0; j <= o.curve; ++j) {
      AttackSpec point = *spec;
      point.params[key] = top * static_cast<double>(j) / static_cast<double>(o.curve);
      const auto rep = evaluate_attack(ps, *make_attack(point, s.basis_set, o.n));
      curve.push_back(Json{{"parameter", point.params[key]},
                           {"detection_probability", rep.detection_probability},
                           {"leakage", rep.leakage}});
    }
  }
  report["curve"] = std::move(curve);
  ctx.out << dump(report);
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ReplayOptions {
  std::string manifest;
};

namespace detail {

inline std::vector<std::string> strip_manifest_flag(const std::vector<std::string>& argv) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < argv.size(); ++k) {
    if (argv[k] == "--manifest") {
      ++k;
      continue;
    }
    if (argv[k].rfind("--manifest=", 0) == 0) continue;
    out.push_back(argv[k]);
  }
  return out;
}

}  // namespace detail

inline int cmd_replay(Context& ctx, const ReplayOptions& o) {
  const Json m = io::parse(ctx.load(o.manifest));
  const auto argv = io::field<std::vector<std::string>>(m, "argv");
  Json mismatches = Json::array();
  for (const auto& f : m.at("inputs")) {
    const auto path = io::field<std::string>(f, "path");
    if (sha256_hex(read_file(path)) != io::field<std::string>(f, "sha256")) {
      mismatches.push_back(Json{{"input", path}});
    }
  }
  int code = -1;
  if (mismatches.empty()) {
    std::ostringstream rerun_out;
    std::ostringstream rerun_err;
    code = run_cli(detail::strip_manifest_flag(argv), rerun_out, rerun_err);
    if (code != io::field<int>(m, "exit_code")) mismatches.push_back(Json{{"exit_code", code}});
    if (sha256_hex(rerun_out.str()) != io::field<std::string>(m, "stdout_sha256")) {
      mismatches.push_back(Json{{"stdout", "digest differs"}});
    }
    for (const auto& f : m.at("outputs")) {
      const auto path = io::field<std::string>(f, "path");
      if (sha256_hex(read_file(path)) != io::field<std::string>(f, "sha256")) {
        mismatches.push_back(Json{{"output", path}});
      }
    }
  }
  const bool ok = mismatches.empty();
  ctx.out << dump(Json{{"manifest", o.manifest},
                       {"command", m.value("command", "")},
                       {"exit_code", code},
                       {"reproduced", ok},
                       {"mismatches", std::move(mismatches)}});
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void print_error(std::ostream& err, const std::string& kind, const std::string& what,
                        std::optional<double> residual = std::nullopt) {
  Json j{{"error", kind}, {"message", what}};
  if (residual) j["residual"] = *residual;
  err << j.dump() << '\n';
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrodiction-based key distribution toolkit", "meanking"};
  app.set_version_flag("--version", std::string(MEANKING_VERSION));
  app.require_subcommand(1);

  Context ctx;
  ctx.argv = args;
  ctx.err = &err;

  double tol = 0.0;
  try {
    tol = default_tolerance();
  } catch (const UsageError& e) {
    detail::print_error(err, "usage", e.what());
    return kExitUsage;
  }

  std::string manifest_path;
  auto add_manifest = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest_path, "Write a run manifest to this path");
  };

  BasesOptions bo;
  bo.tol = tol;
  auto* bases = app.add_subcommand("bases", "Generate or validate basis sets");
  bases->require_subcommand(1);
  auto* bgen = bases->add_subcommand("gen", "Write the complete set of mutually unbiased bases");
  bgen->add_option("--dim", bo.dim, "Dimension (prime, at most 7)")->required();
  bgen->add_option("--out", bo.out, "Output basis-set file (default: stdout)");
  auto* bcheck = bases->add_subcommand("check", "Validate a basis-set file");
  bcheck->add_option("--in", bo.in, "Basis-set file");
  bcheck->add_option("--dim", bo.dim, "Check the generated set for this dimension instead");
  bcheck->add_option("--tol", bo.tol, "Tolerance")->capture_default_str();
  add_manifest(bgen);
  add_manifest(bcheck);

  StrategyOptions so;
  so.tol = tol;
  auto* strategy = app.add_subcommand("strategy", "Build retrodiction strategies");
  strategy->require_subcommand(1);
  auto* sbuild = strategy->add_subcommand("build", "Solve safe vectors and measurement weights");
  sbuild->add_option("--bases", so.bases, "Basis-set file");
  sbuild->add_option("--dim", so.dim, "Use the generated bases for this dimension");
  sbuild->add_option("--out", so.out, "Output strategy file (default: stdout)");
  sbuild->add_option("--tol", so.tol, "Tolerance")->capture_default_str();
  add_manifest(sbuild);

  RunOptions ro;
  ro.tol = tol;
  auto* run = app.add_subcommand("run", "Simulate the key distribution protocol");
  run->add_option("--strategy", ro.strategy, "Strategy file");
  run->add_option("--dim", ro.dim, "Build the strategy from generated bases instead");
  run->add_option("--rounds", ro.rounds, "Number of blocks")->capture_default_str();
  run->add_option("--n", ro.n, "Instances per block")->capture_default_str();
  run->add_option("--test-fraction", ro.test_fraction, "Fraction of instances disclosed for testing")
      ->capture_default_str();
  run->add_option("--seed", ro.seed, "Random seed")->capture_default_str();
  auto* run_attack = run->add_option("--attack", ro.attack, "Canned attack, e.g. intercept-resend:b=1,p=1")
                         ->capture_default_str();
  run->add_option("--attack-file", ro.attack_file, "Attack model file")->excludes(run_attack);
  run->add_option("--out", ro.out, "Transcript output (JSON lines)");
  run->add_option("--summary", ro.summary, "Summary output (default: stdout only)");
  run->add_option("--tol", ro.tol, "Tolerance")->capture_default_str();
  add_manifest(run);

  SecurityOptions sec;
  sec.tol = tol;
  auto* security = app.add_subcommand("security", "Security checks");
  security->require_subcommand(1);
  auto* lemma = security->add_subcommand("lemma", "Commutant dimension of the safe product vectors");
  lemma->add_option("--dim", sec.dim, "Dimension")->capture_default_str();
  lemma->add_option("--n", sec.n, "Block length")->capture_default_str();
  lemma->add_option("--strategy", sec.strategy, "Strategy file (overrides --dim)");
  lemma->add_option("--tol", sec.tol, "Tolerance")->capture_default_str();
  add_manifest(lemma);
  auto* aeval = security->add_subcommand("attack-eval", "Exact detection probability and leakage of an attack");
  aeval->add_option("--dim", sec.dim, "Dimension")->capture_default_str();
  aeval->add_option("--n", sec.n, "Block length")->capture_default_str();
  aeval->add_option("--strategy", sec.strategy, "Strategy file (overrides --dim)");
  auto* eval_attack = aeval->add_option("--attack", sec.attack, "Canned attack")->capture_default_str();
  aeval->add_option("--attack-file", sec.attack_file, "Attack model file")->excludes(eval_attack);
  aeval->add_option("--curve", sec.curve, "Sweep the attack strength over this many steps")->capture_default_str();
  aeval->add_option("--tol", sec.tol, "Tolerance")->capture_default_str();
  add_manifest(aeval);

  ReplayOptions rp;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest and compare outputs");
  replay->add_option("--manifest", rp.manifest, "Manifest file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* leaf = &app;
  while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
  ctx.command = leaf->get_name();
  for (CLI::App* p = leaf->get_parent(); p != nullptr && p != &app; p = p->get_parent()) {
    ctx.command = p->get_name() + " " + ctx.command;
  }
  detail::echo_options(*leaf, ctx.config);

  int code = kExitOk;
  try {
    if (leaf == bgen) {
      code = cmd_bases_gen(ctx, bo);
    } else if (leaf == bcheck) {
      code = cmd_bases_check(ctx, bo);
    } else if (leaf == sbuild) {
      code = cmd_strategy_build(ctx, so);
    } else if (leaf == run) {
      code = cmd_run(ctx, ro);
    } else if (leaf == lemma) {
      code = cmd_security_lemma(ctx, sec);
    } else if (leaf == aeval) {
      code = cmd_security_attack_eval(ctx, sec);
    } else {
      code = cmd_replay(ctx, rp);
    }
    if (leaf != replay && !manifest_path.empty()) {
      write_file(manifest_path, dump(detail::manifest(ctx, code)));
    }
  } catch (const ResidualTooLarge& e) {
    detail::print_error(err, "solve", e.what(), e.residual());
    return kExitFailure;
  } catch (const NotMaximal& e) {
    detail::print_error(err, "not-maximal", e.what());
    return kExitFailure;
  } catch (const Infeasible& e) {
    detail::print_error(err, "infeasible", e.what());
    return kExitFailure;
  } catch (const AttackModelError& e) {
    detail::print_error(err, "invalid-attack", e.what());
    return kExitFailure;
  } catch (const SpanningError& e) {
    detail::print_error(err, "spanning", e.what());
    return kExitFailure;
  } catch (const ZeroProbabilityOutcome& e) {
    detail::print_error(err, "zero-probability", e.what());
    return kExitFailure;
  } catch (const UnsupportedDimension& e) {
    detail::print_error(err, "unsupported dimension", e.what());
    return kExitUsage;
  } catch (const io::FormatError& e) {
    detail::print_error(err, "format", e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    detail::print_error(err, "format", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    detail::print_error(err, "io", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    detail::print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    detail::print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const UsageError& e) {
    detail::print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const ResourceLimitError& e) {
    detail::print_error(err, "resource-limit", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    detail::print_error(err, "failure", e.what());
    return kExitFailure;
  }
  out << ctx.out.str();
  return code;
}

}  // namespace meanking::cli

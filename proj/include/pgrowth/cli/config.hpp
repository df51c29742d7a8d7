#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pgrowth/cli/expression.hpp"
#include "pgrowth/core/error.hpp"
#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"audit",     "solve",   "excess",       "decay", "caccioppoli",
                                              "compare",   "linearize", "manufactured", "flags"};
  return names;
}

/// Read-only view of one JSON object that knows its dotted path and rejects keys nobody asked about.
class ConfigNode {
 public:
  ConfigNode(const nlohmann::json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + ": expected an object");
  }

  [[nodiscard]] std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
  [[nodiscard]] bool has(const std::string& name) const { return j_->contains(name); }

  /// Throws on any key outside `allowed`.
  void allow_only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
        throw ConfigError("unknown key '" + key(it.key()) + "'");
  }

  [[nodiscard]] const nlohmann::json& raw(const std::string& name) const {
    if (!has(name)) throw ConfigError("missing required key '" + key(name) + "'");
    return (*j_)[name];
  }

  [[nodiscard]] ConfigNode child(const std::string& name) const { return ConfigNode(raw(name), key(name)); }
  [[nodiscard]] std::optional<ConfigNode> optional_child(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return child(name);
  }

  [[nodiscard]] double number(const std::string& name) const { return as_number(raw(name), key(name)); }
  [[nodiscard]] double number(const std::string& name, double fallback) const { return has(name) ? number(name) : fallback; }
  [[nodiscard]] std::optional<double> optional_number(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return number(name);
  }

  [[nodiscard]] int integer(const std::string& name) const {
    const auto& v = raw(name);
    if (!v.is_number_integer()) throw ConfigError(key(name) + ": expected an integer");
    return v.get<int>();
  }
  [[nodiscard]] int integer(const std::string& name, int fallback) const { return has(name) ? integer(name) : fallback; }

  [[nodiscard]] bool boolean(const std::string& name, bool fallback) const {
    if (!has(name)) return fallback;
    const auto& v = raw(name);
    if (!v.is_boolean()) throw ConfigError(key(name) + ": expected true or false");
    return v.get<bool>();
  }

  [[nodiscard]] std::string string(const std::string& name) const {
    const auto& v = raw(name);
    if (!v.is_string()) throw ConfigError(key(name) + ": expected a string");
    return v.get<std::string>();
  }
  [[nodiscard]] std::string string(const std::string& name, const std::string& fallback) const {
    return has(name) ? string(name) : fallback;
  }

  /// List of numbers; the string "inf" stands for infinity where allowed.
  [[nodiscard]] std::vector<double> numbers(const std::string& name, bool allow_inf = false) const {
    const auto& v = raw(name);
    if (!v.is_array()) throw ConfigError(key(name) + ": expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string k = key(name) + "[" + std::to_string(i) + "]";
      if (allow_inf && v[i].is_string() && v[i].get<std::string>() == "inf") {
        out.push_back(std::numeric_limits<double>::infinity());
      } else {
        out.push_back(as_number(v[i], k));
      }
    }
    return out;
  }

  [[nodiscard]] std::vector<std::string> strings(const std::string& name) const {
    const auto& v = raw(name);
    if (!v.is_array()) throw ConfigError(key(name) + ": expected a list of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw ConfigError(key(name) + "[" + std::to_string(i) + "]: expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  /// One expression per component.
  [[nodiscard]] std::vector<Expression> expressions(const std::string& name, int dim) const {
    const auto list = strings(name);
    if (static_cast<int>(list.size()) != dim)
      throw ConfigError(key(name) + ": expected " + std::to_string(dim) + " component expressions");
    std::vector<Expression> out;
    for (int i = 0; i < dim; ++i) out.push_back(Expression::parse(list[i], dim, key(name) + "[" + std::to_string(i) + "]"));
    return out;
  }

  /// dim x dim matrix given as nested rows.
  [[nodiscard]] std::vector<double> matrix(const nlohmann::json& v, const std::string& k, int dim) const {
    if (!v.is_array() || static_cast<int>(v.size()) != dim) throw ConfigError(k + ": expected " + std::to_string(dim) + " rows");
    std::vector<double> out;
    for (int i = 0; i < dim; ++i) {
      const auto& row = v[i];
      if (!row.is_array() || static_cast<int>(row.size()) != dim)
        throw ConfigError(k + "[" + std::to_string(i) + "]: expected " + std::to_string(dim) + " entries");
      for (int j = 0; j < dim; ++j) out.push_back(as_number(row[j], k + "[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
    }
    return out;
  }

  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }

  static double as_number(const nlohmann::json& v, const std::string& k) {
    if (!v.is_number()) throw ConfigError(k + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(k + ": must be finite");
    return d;
  }

  const nlohmann::json* j_;
  std::string path_;
};

struct BallConfig {
  std::vector<double> center;
  double radius = 0.0;
};

struct MeshConfig {
  std::vector<double> lower;
  std::vector<double> upper;
  int cells = 16;
};

struct ElasticConfig {
  std::string kind = "identity";  // identity | isotropic | full
  double lambda = 0.0;
  double shear = 0.5;
  std::vector<double> entries;    // full: dim^4 values, C_ijkl with l fastest
};

struct SolverConfig {
  double grad_tol = 1e-9;
  int max_iters = 200;
  bool allow_unconverged = false;
  std::optional<std::vector<double>> L_schedule;
};

struct ProblemConfig {
  int dim = 2;
  double p = 2.0;
  double mu = 0.0;
  double kappa = 0.0;
  MeshConfig mesh;
  ElasticConfig elastic;
  std::vector<Expression> g;
  std::vector<Expression> dirichlet;
  std::optional<double> L;
  SolverConfig solver;
  int quadrature_order = 2;
  std::optional<std::string> field;  // snapshot to analyse instead of solving

  [[nodiscard]] GrowthParams params() const { return GrowthParams{p, mu, kappa, dim}; }
};

struct AuditConfig {
  std::vector<std::string> lemmas;  // empty: every lemma
  std::size_t samples = 10000;
  std::vector<double> p_values{1.3, 1.5, 2.0, 3.0, 4.0};
  std::vector<double> mu_values{0.0, 0.1, 1.0};
  std::vector<int> dims{2, 3};
  std::vector<double> gammas{-0.45, -0.25, 0.5};
  std::vector<double> tails{0.0, 1.0};
};

struct ThresholdConfig {
  std::optional<double> v_oscillation, v_divergence, u_oscillation, u_divergence, grad_divergence;
};

struct DiagnosticsConfig {
  std::vector<BallConfig> balls;
  std::vector<double> radii;
  std::optional<std::vector<double>> center;
  std::optional<double> r0;
  double tau = 0.5;
  int levels = 3;
  double c_bound = 1.5;
  std::vector<double> lambdas;           // Caccioppoli exponents
  ThresholdConfig thresholds;
  std::vector<double> lambda_sequence;   // linearization
  std::vector<double> base_strain;       // row-major dim x dim
  std::vector<Expression> perturbation;
  std::vector<std::vector<double>> xi_list;
  std::vector<Expression> target;        // manufactured u*
  std::vector<int> cells_sequence;
  AuditConfig audit;
};

struct OutputConfig {
  std::string directory = "out";
  std::set<std::string> formats{"json", "csv", "plot", "snapshot"};
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string command;
  ProblemConfig problem;
  bool has_problem = false;
  DiagnosticsConfig diagnostics;
  OutputConfig output;
  std::filesystem::path base_dir;  // relative paths in the config resolve against this
  nlohmann::json source;           // the parsed document, echoed into the manifest

  [[nodiscard]] std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

namespace config_detail {

inline void check_point(const std::vector<double>& v, int dim, const std::string& key) {
  if (static_cast<int>(v.size()) != dim) throw ConfigError(key + ": expected " + std::to_string(dim) + " coordinates");
}

inline std::vector<Expression> zero_expressions(int dim) { return std::vector<Expression>(dim, Expression::parse("0", dim)); }

inline ProblemConfig parse_problem(const ConfigNode& n, const std::string& command, const std::filesystem::path& base) {
  n.allow_only({"dim", "params", "mesh", "elastic", "g", "dirichlet", "L", "solver", "quadrature_order", "field"});
  ProblemConfig pc;
  pc.dim = n.integer("dim", 2);
  if (pc.dim != 2 && pc.dim != 3) throw ConfigError(n.key("dim") + ": must be 2 or 3");
  const auto params = n.child("params");
  params.allow_only({"p", "mu", "kappa"});
  pc.p = params.number("p");
  pc.mu = params.number("mu", 0.0);
  pc.kappa = params.number("kappa", 0.0);
  if (!(pc.p > 1.0)) throw ConfigError(params.key("p") + ": must be > 1");
  if (!(pc.mu >= 0.0)) throw ConfigError(params.key("mu") + ": must be >= 0");
  if (!(pc.kappa >= 0.0)) throw ConfigError(params.key("kappa") + ": must be >= 0");

  const auto mesh = n.child("mesh");
  mesh.allow_only({"lower", "upper", "cells"});
  pc.mesh.lower = mesh.has("lower") ? mesh.numbers("lower") : std::vector<double>(pc.dim, 0.0);
  pc.mesh.upper = mesh.has("upper") ? mesh.numbers("upper") : std::vector<double>(pc.dim, 1.0);
  check_point(pc.mesh.lower, pc.dim, mesh.key("lower"));
  check_point(pc.mesh.upper, pc.dim, mesh.key("upper"));
  for (int d = 0; d < pc.dim; ++d)
    if (!(pc.mesh.upper[d] > pc.mesh.lower[d])) throw ConfigError(mesh.key("upper") + ": must exceed lower on every axis");
  pc.mesh.cells = mesh.integer("cells");
  if (pc.mesh.cells < 2 || pc.mesh.cells > 4096) throw ConfigError(mesh.key("cells") + ": must lie in [2, 4096]");

  if (auto el = n.optional_child("elastic")) {
    el->allow_only({"kind", "lambda", "shear", "entries"});
    pc.elastic.kind = el->string("kind", "identity");
    if (pc.elastic.kind == "isotropic") {
      pc.elastic.lambda = el->number("lambda");
      pc.elastic.shear = el->number("shear");
    } else if (pc.elastic.kind == "full") {
      pc.elastic.entries = el->numbers("entries");
      const std::size_t want = static_cast<std::size_t>(std::pow(pc.dim, 4));
      if (pc.elastic.entries.size() != want) throw ConfigError(el->key("entries") + ": expected " + std::to_string(want) + " values");
    } else if (pc.elastic.kind != "identity") {
      throw ConfigError(el->key("kind") + ": must be identity, isotropic or full");
    }
  }
  pc.g = n.has("g") ? n.expressions("g", pc.dim) : zero_expressions(pc.dim);
  pc.dirichlet = n.has("dirichlet") ? n.expressions("dirichlet", pc.dim) : zero_expressions(pc.dim);
  if (n.has("L")) {
    pc.L = n.number("L");
    if (!(*pc.L > 0.0)) throw ConfigError(n.key("L") + ": must be > 0");
  }
  if (auto s = n.optional_child("solver")) {
    s->allow_only({"grad_tol", "max_iters", "allow_unconverged", "L_schedule"});
    pc.solver.grad_tol = s->number("grad_tol", pc.solver.grad_tol);
    pc.solver.max_iters = s->integer("max_iters", pc.solver.max_iters);
    pc.solver.allow_unconverged = s->boolean("allow_unconverged", false);
    if (!(pc.solver.grad_tol > 0.0)) throw ConfigError(s->key("grad_tol") + ": must be > 0");
    if (pc.solver.max_iters < 1) throw ConfigError(s->key("max_iters") + ": must be >= 1");
    if (s->has("L_schedule")) {
      pc.solver.L_schedule = s->numbers("L_schedule", true);
      const auto& l = *pc.solver.L_schedule;
      if (l.empty() || !std::isinf(l.back())) throw ConfigError(s->key("L_schedule") + ": must end with \"inf\"");
      for (std::size_t k = 0; k < l.size(); ++k)
        if (!(l[k] > 0.0) || (k > 0 && !(l[k] > l[k - 1]))) throw ConfigError(s->key("L_schedule") + ": must be positive and increasing");
    }
  }
  pc.quadrature_order = n.integer("quadrature_order", 2);
  if (pc.quadrature_order < 2 || pc.quadrature_order > 12) throw ConfigError(n.key("quadrature_order") + ": must lie in [2, 12]");
  if (n.has("field")) {
    if (command == "solve" || command == "manufactured" || command == "linearize")
      throw ConfigError(n.key("field") + ": not used by the " + command + " command");
    pc.field = n.string("field");
    const auto path = std::filesystem::path(*pc.field).is_absolute() ? std::filesystem::path(*pc.field) : base / *pc.field;
    if (!std::filesystem::exists(path)) throw ConfigError(n.key("field") + ": file '" + path.string() + "' does not exist");
  }
  return pc;
}

inline AuditConfig parse_audit(const ConfigNode& n) {
  n.allow_only({"lemmas", "samples", "p", "mu", "dims", "gamma", "r"});
  AuditConfig a;
  if (n.has("lemmas")) {
    a.lemmas = n.strings("lemmas");
    if (a.lemmas.size() == 1 && a.lemmas[0] == "all") a.lemmas.clear();
  }
  if (n.has("samples")) {
    const int s = n.integer("samples");
    if (s < 1) throw ConfigError(n.key("samples") + ": must be >= 1");
    a.samples = static_cast<std::size_t>(s);
  }
  if (n.has("p")) a.p_values = n.numbers("p");
  if (n.has("mu")) a.mu_values = n.numbers("mu");
  if (n.has("dims")) {
    a.dims.clear();
    for (double d : n.numbers("dims")) {
      if (d != 2.0 && d != 3.0) throw ConfigError(n.key("dims") + ": entries must be 2 or 3");
      a.dims.push_back(static_cast<int>(d));
    }
  }
  if (n.has("gamma")) a.gammas = n.numbers("gamma");
  if (n.has("r")) a.tails = n.numbers("r");
  for (double p : a.p_values)
    if (!(p > 1.0)) throw ConfigError(n.key("p") + ": entries must be > 1");
  for (double mu : a.mu_values)
    if (!(mu >= 0.0)) throw ConfigError(n.key("mu") + ": entries must be >= 0");
  for (double g : a.gammas)
    if (!(g > -0.5)) throw ConfigError(n.key("gamma") + ": entries must be > -1/2");
  for (double r : a.tails)
    if (!(r >= 0.0)) throw ConfigError(n.key("r") + ": entries must be >= 0");
  return a;
}

inline DiagnosticsConfig parse_diagnostics(const ConfigNode& n, int dim) {
  n.allow_only({"balls", "radii", "center", "r0", "tau", "levels", "c_bound", "lambda", "thresholds", "lambda_sequence",
                "base_strain", "perturbation", "xi", "target", "cells_sequence", "audit"});
  DiagnosticsConfig d;
  if (n.has("balls")) {
    const auto& list = n.raw("balls");
    if (!list.is_array()) throw ConfigError(n.key("balls") + ": expected a list of balls");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const ConfigNode b(list[i], n.key("balls") + "[" + std::to_string(i) + "]");
      b.allow_only({"center", "radius"});
      BallConfig bc{b.numbers("center"), b.number("radius")};
      check_point(bc.center, dim, b.key("center"));
      if (!(bc.radius > 0.0)) throw ConfigError(b.key("radius") + ": must be > 0");
      d.balls.push_back(bc);
    }
  }
  if (n.has("radii")) {
    d.radii = n.numbers("radii");
    for (double r : d.radii)
      if (!(r > 0.0)) throw ConfigError(n.key("radii") + ": entries must be > 0");
  }
  if (n.has("center")) {
    d.center = n.numbers("center");
    check_point(*d.center, dim, n.key("center"));
  }
  d.r0 = n.optional_number("r0");
  d.tau = n.number("tau", 0.5);
  if (!(d.tau > 0.0 && d.tau < 1.0)) throw ConfigError(n.key("tau") + ": must lie in (0,1)");
  d.levels = n.integer("levels", 3);
  if (d.levels < 1) throw ConfigError(n.key("levels") + ": must be >= 1");
  d.c_bound = n.number("c_bound", 1.5);
  if (!(d.c_bound > 0.0)) throw ConfigError(n.key("c_bound") + ": must be > 0");
  if (n.has("lambda")) {
    const auto& v = n.raw("lambda");
    d.lambdas = v.is_array() ? n.numbers("lambda") : std::vector<double>{n.number("lambda")};
  }
  if (auto t = n.optional_child("thresholds")) {
    t->allow_only({"v_oscillation", "v_divergence", "u_oscillation", "u_divergence", "grad_divergence"});
    auto read = [&](const char* k) -> std::optional<double> {
      if (!t->has(k)) return std::nullopt;
      const auto& v = t->raw(k);
      if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
      const double x = t->number(k);
      if (!(x >= 0.0)) throw ConfigError(t->key(k) + ": must be >= 0");
      return x;
    };
    d.thresholds = {read("v_oscillation"), read("v_divergence"), read("u_oscillation"), read("u_divergence"), read("grad_divergence")};
  }
  if (n.has("lambda_sequence")) d.lambda_sequence = n.numbers("lambda_sequence");
  if (n.has("base_strain")) {
    d.base_strain = n.matrix(n.raw("base_strain"), n.key("base_strain"), dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < i; ++j)
        if (d.base_strain[i * dim + j] != d.base_strain[j * dim + i]) throw ConfigError(n.key("base_strain") + ": must be symmetric");
  }
  if (n.has("perturbation")) d.perturbation = n.expressions("perturbation", dim);
  if (n.has("xi")) {
    const auto& list = n.raw("xi");
    if (!list.is_array()) throw ConfigError(n.key("xi") + ": expected a list of matrices");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string k = n.key("xi") + "[" + std::to_string(i) + "]";
      auto m = n.matrix(list[i], k, dim);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < a; ++b)
          if (m[a * dim + b] != m[b * dim + a]) throw ConfigError(k + ": must be symmetric");
      d.xi_list.push_back(std::move(m));
    }
  }
  if (n.has("target")) d.target = n.expressions("target", dim);
  if (n.has("cells_sequence")) {
    for (double c : n.numbers("cells_sequence")) {
      if (c != std::floor(c) || c < 2 || c > 4096) throw ConfigError(n.key("cells_sequence") + ": entries must be integers in [2, 4096]");
      d.cells_sequence.push_back(static_cast<int>(c));
    }
  }
  if (auto a = n.optional_child("audit")) d.audit = parse_audit(*a);
  return d;
}

// keys each command needs beyond the problem block
inline void require_for_command(const ExperimentConfig& cfg, const ConfigNode& root) {
  const std::string& c = cfg.command;
  auto need = [&](bool ok, const std::string& key) {
    if (!ok) throw ConfigError("missing required key '" + key + "' for the " + c + " command");
  };
  if (c != "audit") need(cfg.has_problem, "problem");
  if (c == "audit") return;
  const auto& d = cfg.diagnostics;
  const bool diag = root.has("diagnostics");
  if (c == "excess") {
    need(diag && d.center.has_value(), "diagnostics.center");
    need(d.r0.has_value(), "diagnostics.r0");
  } else if (c == "decay") {
    need(diag && d.center.has_value(), "diagnostics.center");
    need(d.radii.size() >= 3, "diagnostics.radii");
  } else if (c == "caccioppoli") {
    need(diag && !d.balls.empty(), "diagnostics.balls");
    need(!d.lambdas.empty(), "diagnostics.lambda");
  } else if (c == "compare") {
    need(diag && !d.balls.empty(), "diagnostics.balls");
  } else if (c == "linearize") {
    need(diag && !d.balls.empty(), "diagnostics.balls");
    need(!d.lambda_sequence.empty(), "diagnostics.lambda_sequence");
    need(!d.base_strain.empty(), "diagnostics.base_strain");
    need(!d.perturbation.empty(), "diagnostics.perturbation");
  } else if (c == "manufactured") {
    need(diag && !d.target.empty(), "diagnostics.target");
  } else if (c == "flags") {
    need(diag && !d.radii.empty(), "diagnostics.radii");
  }
}

}  // namespace config_detail

/// Parses a configuration document. Unknown keys, missing keys and out-of-range values raise
/// ConfigError naming the dotted key.
inline ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".") {
  using namespace config_detail;
  const ConfigNode root(doc, "");
  root.allow_only({"command", "problem", "diagnostics", "output"});
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.source = doc;
  cfg.command = root.string("command");
  if (std::find(command_names().begin(), command_names().end(), cfg.command) == command_names().end())
    throw ConfigError("command: unknown command '" + cfg.command + "'");
  int dim = 2;
  if (root.has("problem")) {
    cfg.problem = parse_problem(root.child("problem"), cfg.command, base_dir);
    cfg.has_problem = true;
    dim = cfg.problem.dim;
  }
  if (root.has("diagnostics")) cfg.diagnostics = parse_diagnostics(root.child("diagnostics"), dim);
  if (auto out = root.optional_child("output")) {
    out->allow_only({"directory", "formats", "seed"});
    cfg.output.directory = out->string("directory", cfg.output.directory);
    if (out->has("formats")) {
      cfg.output.formats.clear();
      for (const auto& f : out->strings("formats")) {
        if (f != "json" && f != "csv" && f != "plot" && f != "snapshot")
          throw ConfigError(out->key("formats") + ": unknown format '" + f + "'");
        cfg.output.formats.insert(f);
      }
    }
    if (out->has("seed")) {
      const auto& s = out->raw("seed");
      if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
        throw ConfigError(out->key("seed") + ": expected a non-negative integer");
      cfg.output.seed = s.get<std::uint64_t>();
    }
  }
  require_for_command(cfg, root);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace pgrowth

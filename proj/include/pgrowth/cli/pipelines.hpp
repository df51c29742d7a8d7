#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pgrowth/cli/artifacts.hpp"
#include "pgrowth/cli/config.hpp"
#include "pgrowth/cli/plots.hpp"
#include "pgrowth/core/random.hpp"
#include "pgrowth/diagnostics/caccioppoli.hpp"
#include "pgrowth/diagnostics/comparison_report.hpp"
#include "pgrowth/diagnostics/excess.hpp"
#include "pgrowth/diagnostics/flags.hpp"
#include "pgrowth/diagnostics/linearization.hpp"
#include "pgrowth/diagnostics/manufactured.hpp"
#include "pgrowth/fem/snapshot.hpp"
#include "pgrowth/solver/minimize.hpp"
#include "pgrowth/tensor/audit.hpp"

namespace pgrowth {

/// Command-line overrides of the configuration.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
};

struct RunResult {
  std::filesystem::path directory;
  nlohmann::json manifest;
  nlohmann::json summary;  // small command-specific digest, also stored in the manifest
};

namespace pipeline_detail {

template <int D>
Vec<D> to_vec(const std::vector<double>& v) {
  Vec<D> out;
  for (int i = 0; i < D; ++i) out(i) = v[i];
  return out;
}

template <int D>
SymMatrix<D> to_sym(const std::vector<double>& row_major) {
  Mat<D> m;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = row_major[i * D + j];
  return SymMatrix<D>::from(m);
}

template <int D>
std::function<Vec<D>(const Vec<D>&)> vector_function(const std::vector<Expression>& comps) {
  return [comps](const Vec<D>& x) {
    Vec<D> out;
    for (int i = 0; i < D; ++i) out(i) = comps[i].at(x);
    return out;
  };
}

template <int D>
ElasticTensor<D> make_elastic(const ElasticConfig& ec) {
  if (ec.kind == "isotropic") return ElasticTensor<D>::isotropic(ec.lambda, ec.shear);
  if (ec.kind == "full") {
    Tensor4<D> c;
    std::size_t k = 0;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) c(i, j, a, b) = ec.entries[k++];
    try {
      return ElasticTensor<D>(c);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("problem.elastic.entries: ") + e.what());
    }
  }
  return ElasticTensor<D>::identity();
}

template <int D>
MeshPtr<D> make_mesh(const ProblemConfig& pc, int cells) {
  return Mesh<D>::build(to_vec<D>(pc.mesh.lower), to_vec<D>(pc.mesh.upper), cells);
}

template <int D>
ProblemSpec<D> make_spec(const ProblemConfig& pc, const MeshPtr<D>& mesh) {
  auto spec = ProblemSpec<D>::make(mesh, pc.params(), make_elastic<D>(pc.elastic));
  spec.set_g(vector_function<D>(pc.g));
  spec.set_dirichlet(vector_function<D>(pc.dirichlet));
  spec.L = pc.L;
  spec.quadrature_order = pc.quadrature_order;
  return spec;
}

inline SolverOptions solver_options(const ProblemConfig& pc) {
  SolverOptions o;
  o.grad_tol = pc.solver.grad_tol;
  o.max_iters = pc.solver.max_iters;
  o.allow_unconverged = pc.solver.allow_unconverged;
  if (pc.solver.L_schedule) o.L_schedule = *pc.solver.L_schedule;
  return o;
}

inline nlohmann::json params_json(const GrowthParams& p) {
  return {{"p", p.p}, {"mu", p.mu}, {"kappa", p.kappa}, {"dim", p.dim}};
}

template <int D>
nlohmann::json solution_json(const Solution<D>& s) {
  nlohmann::json path = nlohmann::json::array();
  for (const auto& [L, e] : s.L_path_energies) path.push_back({{"L", std::isinf(L) ? nlohmann::json("inf") : nlohmann::json(L)}, {"energy", e}});
  return {{"iterations", s.iterations}, {"energy", s.energy}, {"final_grad_norm", s.final_grad_norm},
          {"converged", s.converged},   {"L_path", path}};
}

template <int D>
void add_coordinates(CsvTable::Row& row, const Vec<D>& x) {
  for (int i = 0; i < D; ++i) row << x(i);
}

inline std::vector<std::string> coordinate_names(int dim, const std::string& prefix) {
  std::vector<std::string> out;
  for (int i = 0; i < dim; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// Solves the configured problem, or loads the configured snapshot onto the problem mesh.
template <int D>
Solution<D> obtain_solution(const ExperimentConfig& cfg, const ProblemSpec<D>& spec, const SolverOptions& opts,
                            ArtifactWriter& out, std::vector<TraceRow>* trace = nullptr) {
  if (cfg.problem.field) {
    const auto loaded = read_snapshot<D>(cfg.resolve(*cfg.problem.field).string());
    if (!loaded.mesh().same_as(*spec.mesh)) throw MeshMismatch("problem.field: snapshot mesh differs from problem.mesh");
    Solution<D> s;
    s.field = DiscreteField<D>(spec.mesh, loaded.values());
    s.energy = assemble_energy(s.field, spec);
    s.converged = true;
    return s;
  }
  SolverOptions o = opts;
  if (trace) o.trace = [trace](const TraceRow& r) { trace->push_back(r); };
  auto s = minimize(spec, o);
  out.json("solution.json", solution_json(s));
  return s;
}

// ---------------------------------------------------------------- audit

inline nlohmann::json run_audit(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const AuditConfig& a = cfg.diagnostics.audit;
  std::vector<Lemma> lemmas;
  if (a.lemmas.empty()) {
    lemmas.assign(all_lemmas.begin(), all_lemmas.end());
  } else {
    for (const auto& name : a.lemmas) {
      try {
        lemmas.push_back(parse_lemma(name));
      } catch (const UnsupportedLemma& e) {
        throw UnsupportedLemma(std::string("diagnostics.audit.lemmas: ") + e.what());
      }
    }
  }
  CsvTable table({"dim", "p", "mu", "lemma", "gamma", "r", "samples", "skipped", "violations", "empirical_lo", "empirical_hi",
                  "violated", "status"});
  nlohmann::json audits = nlohmann::json::array();
  std::size_t index = 0;
  std::size_t hard = 0;
  std::size_t not_run = 0;
  for (int dim : a.dims)
    for (double p : a.p_values)
      for (double mu : a.mu_values)
        for (Lemma lemma : lemmas) {
          std::vector<std::pair<double, double>> shapes{{0.0, 0.0}};
          if (lemma == Lemma::tecnico || lemma == Lemma::tecnico2) {
            shapes.clear();
            for (double g : a.gammas) {
              if (lemma == Lemma::tecnico) {
                for (double r : a.tails) shapes.emplace_back(g, r);
              } else {
                shapes.emplace_back(g, 0.0);
              }
            }
          }
          for (const auto& [gamma, tail] : shapes) {
            SampleSpec spec;
            spec.count = a.samples;
            spec.params = GrowthParams{p, mu, 0.0, dim};
            spec.seed = mix_seed(cfg.output.seed, index++);
            spec.gamma = gamma;
            spec.r = tail;
            nlohmann::json entry{{"dim", dim}, {"p", p}, {"mu", mu}, {"gamma", gamma}, {"r", tail}};
            try {
              const auto res = inequality_audit(lemma, spec);
              entry.update(res.to_json());
              entry["status"] = "ok";
              hard += res.violations;
              table.row() << dim << p << mu << res.lemma_id << gamma << tail << res.samples << res.skipped << res.violations
                          << res.empirical_lo << res.empirical_hi << res.violated << "ok";
            } catch (const DomainError& e) {
              // e.g. blow-up audits need mu > 0; recorded, not run
              ++not_run;
              entry["lemma_id"] = std::string(lemma_name(lemma));
              entry["status"] = std::string("not run: ") + e.what();
              table.row() << dim << p << mu << std::string(lemma_name(lemma)) << gamma << tail << std::size_t{0} << std::size_t{0}
                          << std::size_t{0} << std::nan("") << std::nan("") << false << "not_run";
            }
            audits.push_back(entry);
          }
        }
  const nlohmann::json summary{{"audit_count", audits.size()}, {"hard_violations", hard}, {"not_run", not_run}};
  out.json("audit.json", {{"summary", summary}, {"audits", audits}});
  out.csv("audit.csv", table);
  out.plot("plot_audit.py",
           "#!/usr/bin/env python3\n"
           "# Empirical ratio ranges per lemma against p, from audit.csv.\n"
           "import csv, os, sys\n"
           "import matplotlib\n"
           "matplotlib.use(\"Agg\")\n"
           "import matplotlib.pyplot as plt\n"
           "here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))\n"
           "rows = [r for r in csv.DictReader(open(os.path.join(here, \"audit.csv\"))) if r[\"status\"] == \"ok\"]\n"
           "fig, ax = plt.subplots(figsize=(8, 5))\n"
           "for lemma in sorted({r[\"lemma\"] for r in rows}):\n"
           "    sel = [r for r in rows if r[\"lemma\"] == lemma]\n"
           "    ax.scatter([float(r[\"p\"]) for r in sel], [float(r[\"empirical_hi\"]) for r in sel], s=8, label=lemma)\n"
           "ax.set_yscale(\"symlog\")\n"
           "ax.set_xlabel(\"p\")\n"
           "ax.set_ylabel(\"largest sampled ratio\")\n"
           "ax.legend(fontsize=6, ncol=2)\n"
           "fig.savefig(os.path.join(here, \"audit.png\"), dpi=150)\n");
  return summary;
}

// ---------------------------------------------------------------- problem commands

template <int D>
nlohmann::json run_solve(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  std::vector<TraceRow> trace;
  const auto sol = obtain_solution<D>(cfg, spec, solver_options(cfg.problem), out, &trace);
  CsvTable t({"iteration", "energy", "grad_norm", "step", "L"});
  for (const auto& r : trace) t.row() << r.iteration << r.energy << r.grad_norm << r.step << r.L;
  out.csv("trace.csv", t);
  out.plot("plot_trace.py", plot_script("trace.csv", "iteration", {{"grad_norm", "gradient norm"}}, "Newton convergence", false,
                                        true, "trace.png"));
  CsvTable nodes(concat(concat({"node"}, coordinate_names(D, "x")), coordinate_names(D, "u")));
  for (int n = 0; n < mesh->node_count(); ++n) {
    auto row = nodes.row();
    row << n;
    add_coordinates<D>(row, mesh->node(n));
    add_coordinates<D>(row, sol.field.at_node(n));
  }
  out.csv("field.csv", nodes);
  if (out.wants("snapshot")) {
    std::ostringstream bytes;
    write_snapshot(bytes, sol.field, params_json(spec.params));
    out.binary("field.pgfs", bytes.str());
  }
  return solution_json(sol);
}

template <int D>
nlohmann::json run_excess(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  const auto sol = obtain_solution<D>(cfg, spec, solver_options(cfg.problem), out);
  const auto table = excess_decay_table(sol.field, spec.params, to_vec<D>(*d.center), *d.r0, d.tau, d.levels, d.c_bound);
  out.json("excess_table.json", table.to_json());
  CsvTable t({"level", "radius", "excess", "mean_strain_norm", "ratio_to_next", "flagged"});
  for (std::size_t k = 0; k < table.radii.size(); ++k) {
    const bool has_next = k + 1 < table.radii.size();
    t.row() << k << table.radii[k] << table.excess[k] << table.mean_strain[k].norm() << (has_next ? table.ratio[k] : std::nan(""))
            << (has_next && table.flagged[k]);
  }
  out.csv("excess_table.csv", t);
  out.plot("plot_excess.py", plot_script("excess_table.csv", "radius", {{"excess", "Exc(x, r)"}}, "Excess decay", true, true,
                                         "excess.png", "2"));
  out.plot("plot_excess_ratio.py",
           plot_script("excess_table.csv", "level", {{"ratio_to_next", "Exc(tau r) / Exc(r)"}}, "Excess ratios", false, false,
                       "excess_ratio.png", "", csv_number(table.ratio_bound)));
  int flagged = 0;
  for (bool f : table.flagged) flagged += f ? 1 : 0;
  nlohmann::json summary{{"levels", table.radii.size()}, {"flagged_levels", flagged}, {"ratio_bound", table.ratio_bound}};
  if (!d.balls.empty()) {
    CsvTable b(concat(concat({"ball"}, coordinate_names(D, "c")), {"radius", "excess"}));
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < d.balls.size(); ++i) {
      const Ball<D> ball{to_vec<D>(d.balls[i].center), d.balls[i].radius};
      const double e = excess(sol.field, spec.params, ball);
      auto row = b.row();
      row << i;
      add_coordinates<D>(row, ball.center);
      row << ball.radius << e;
      list.push_back({{"center", vec_to_json(ball.center)}, {"radius", ball.radius}, {"excess", e}});
    }
    out.csv("excess_balls.csv", b);
    out.json("excess_balls.json", list);
  }
  return summary;
}

template <int D>
nlohmann::json run_decay(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  const auto sol = obtain_solution<D>(cfg, spec, solver_options(cfg.problem), out);
  const auto fit = decay_exponent(sol.field, spec.params, to_vec<D>(*d.center), d.radii);
  out.json("decay.json", fit.to_json());
  CsvTable t({"radius", "mass"});
  for (std::size_t k = 0; k < fit.radii.size(); ++k) t.row() << fit.radii[k] << fit.mass[k];
  out.csv("decay.csv", t);
  out.plot("plot_decay.py", plot_script("decay.csv", "radius", {{"mass", "int_B |V|^2"}}, "L2 decay of V", true, true, "decay.png",
                                        csv_number(fit.fitted_gamma)));
  return {{"fitted_gamma", fit.fitted_gamma}, {"residual", fit.residual}};
}

template <int D>
nlohmann::json run_caccioppoli(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  const auto sol = obtain_solution<D>(cfg, spec, solver_options(cfg.problem), out);
  CsvTable terms(concat(concat({"ball"}, coordinate_names(D, "c")), {"radius", "lambda", "regime", "quantity", "value"}));
  CsvTable summary_table({"ball", "radius", "lambda", "lhs", "rhs_total", "empirical_c"});
  nlohmann::json reports = nlohmann::json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < d.balls.size(); ++i) {
    const Vec<D> center = to_vec<D>(d.balls[i].center);
    for (double lambda : d.lambdas) {
      const auto rep = caccioppoli_report(sol.field, spec, center, d.balls[i].radius, lambda);
      auto j = rep.to_json();
      j["center"] = vec_to_json(center);
      reports.push_back(j);
      auto emit = [&](const std::string& q, double v) {
        auto row = terms.row();
        row << i;
        add_coordinates<D>(row, center);
        row << rep.radius << lambda << rep.regime << q << v;
      };
      emit("lhs", rep.lhs);
      for (const auto& t : rep.rhs_terms) emit(t.name, t.value);
      emit("empirical_c", rep.empirical_c);
      summary_table.row() << i << rep.radius << lambda << rep.lhs << rep.rhs_total() << rep.empirical_c;
      worst = std::max(worst, rep.empirical_c);
    }
  }
  out.json("caccioppoli.json", reports);
  out.csv("caccioppoli.csv", terms);
  out.csv("caccioppoli_summary.csv", summary_table);
  out.plot("plot_caccioppoli.py", plot_script("caccioppoli_summary.csv", "radius", {{"empirical_c", "empirical constant"}},
                                              "Caccioppoli constants", true, true, "caccioppoli.png"));
  return {{"reports", reports.size()}, {"max_empirical_c", worst}};
}

template <int D>
nlohmann::json run_compare(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  const auto opts = solver_options(cfg.problem);
  const auto sol = obtain_solution<D>(cfg, spec, opts, out);
  std::vector<SymMatrix<D>> xi;
  for (const auto& m : d.xi_list) xi.push_back(to_sym<D>(m));
  CsvTable balls(concat(concat({"ball"}, coordinate_names(D, "c")),
                        {"radius", "lhs2", "gap2", "lhs2_over_gap2", "excess_u", "excess_w", "excess_ratio", "mean_strain_drift",
                         "bridge_min", "bridge_max"}));
  CsvTable refs({"ball", "reference", "lhs1", "rhs1", "ratio"});
  nlohmann::json reports = nlohmann::json::array();
  double worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.balls.size(); ++i) {
    const Ball<D> ball{to_vec<D>(d.balls[i].center), d.balls[i].radius};
    auto refs_here = xi;
    if (refs_here.empty()) {
      // default reference: the mean strain of u on the ball
      const BallRegion<D> region(spec.mesh, ball);
      refs_here.push_back(excess_on(region, element_strain(sol.field), spec.params).mean_strain);
    }
    const auto rep = comparison_report(sol, spec, ball, refs_here, opts);
    reports.push_back(rep.to_json());
    auto row = balls.row();
    row << i;
    add_coordinates<D>(row, ball.center);
    row << ball.radius << rep.lhs2 << rep.gap2 << rep.lhs2_over_gap2 << rep.excess_u << rep.excess_w << rep.excess_ratio
        << rep.mean_strain_drift << rep.bridge_min << rep.bridge_max;
    for (std::size_t k = 0; k < rep.references.size(); ++k)
      refs.row() << i << k << rep.references[k].lhs1 << rep.references[k].rhs1 << rep.references[k].ratio;
    worst_gap = std::min(worst_gap, rep.gap2);
  }
  out.json("comparison.json", reports);
  out.csv("comparison.csv", balls);
  out.csv("comparison_references.csv", refs);
  out.plot("plot_comparison.py", plot_script("comparison.csv", "radius",
                                             {{"lhs2_over_gap2", "int |V(e u) - V(e w)|^2 / gap"}, {"excess_ratio", "Exc_w / Exc_u"}},
                                             "Energy comparison", true, true, "comparison.png"));
  return {{"balls", reports.size()}, {"min_gap2", worst_gap}};
}

template <int D>
nlohmann::json run_linearize(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  const auto pert = DiscreteField<D>::interpolate(mesh, vector_function<D>(d.perturbation));
  const Ball<D> ball{to_vec<D>(d.balls.front().center), d.balls.front().radius};
  const auto rep = linearization_experiment(to_sym<D>(d.base_strain), pert, d.lambda_sequence, spec, ball, solver_options(cfg.problem));
  out.json("linearization.json", rep.to_json());
  CsvTable t({"lambda", "rescaled_error", "iterations"});
  for (std::size_t k = 0; k < rep.lambda_sequence.size(); ++k)
    t.row() << rep.lambda_sequence[k] << rep.rescaled_error[k] << rep.iterations[k];
  out.csv("linearization.csv", t);
  out.plot("plot_linearization.py", plot_script("linearization.csv", "lambda", {{"rescaled_error", "rescaled error"}},
                                                "Blow-up linearization", true, true, "linearization.png", "2"));
  const double last_over_first = rep.rescaled_error.front() > 0.0 ? rep.rescaled_error.back() / rep.rescaled_error.front() : 0.0;
  return {{"decreasing", rep.decreasing}, {"last_over_first", last_over_first}, {"linear_residual", rep.linear_residual}};
}

template <int D>
nlohmann::json run_manufactured(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  ManufacturedField<D> target;
  target.value = vector_function<D>(d.target);
  std::vector<Expression> partials;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) partials.push_back(d.target[i].derivative(j));
  target.jacobian = [partials](const Vec<D>& x) {
    Mat<D> m;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) m(i, j) = partials[i * D + j].at(x);
    return m;
  };
  std::vector<int> cells = d.cells_sequence.empty() ? std::vector<int>{cfg.problem.mesh.cells} : d.cells_sequence;
  const auto opts = solver_options(cfg.problem);
  const auto elastic = make_elastic<D>(cfg.problem.elastic);
  CsvTable t({"cells", "h", "max_error", "rate", "iterations", "degenerate_nodes"});
  nlohmann::json rows = nlohmann::json::array();
  double prev_err = 0.0, prev_h = 0.0;
  std::vector<double> rates;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto mesh = make_mesh<D>(cfg.problem, cells[k]);
    auto mp = manufactured_problem(target, cfg.problem.params(), elastic, mesh);
    mp.spec.L = cfg.problem.L;
    mp.spec.quadrature_order = cfg.problem.quadrature_order;
    const auto sol = minimize(mp.spec, opts);
    double err = 0.0;
    for (int n = 0; n < mesh->node_count(); ++n)
      err = std::max(err, (sol.field.at_node(n) - target.value(mesh->node(n))).cwiseAbs().maxCoeff());
    const double h = mesh->max_spacing();
    const double rate = k > 0 && err > 0.0 && prev_err > 0.0 ? std::log(prev_err / err) / std::log(prev_h / h) : std::nan("");
    if (k > 0) rates.push_back(prev_err / err);
    t.row() << cells[k] << h << err << rate << sol.iterations << mp.degenerate_nodes;
    rows.push_back({{"cells", cells[k]},
                    {"h", h},
                    {"max_error", err},
                    {"rate", std::isfinite(rate) ? nlohmann::json(rate) : nlohmann::json(nullptr)},
                    {"iterations", sol.iterations},
                    {"degenerate_nodes", mp.degenerate_nodes}});
    prev_err = err;
    prev_h = h;
  }
  out.json("manufactured.json", rows);
  out.csv("manufactured.csv", t);
  out.plot("plot_manufactured.py", plot_script("manufactured.csv", "h", {{"max_error", "nodal max error"}}, "Manufactured convergence",
                                               true, true, "manufactured.png", "2"));
  double worst = std::numeric_limits<double>::infinity();
  for (double r : rates) worst = std::min(worst, r);
  return {{"meshes", cells.size()}, {"min_error_reduction", rates.empty() ? nlohmann::json(nullptr) : nlohmann::json(worst)}};
}

template <int D>
nlohmann::json run_flags(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& d = cfg.diagnostics;
  const auto mesh = make_mesh<D>(cfg.problem, cfg.problem.mesh.cells);
  const auto spec = make_spec<D>(cfg.problem, mesh);
  const auto sol = obtain_solution<D>(cfg, spec, solver_options(cfg.problem), out);
  FlagThresholds th;
  th.v_oscillation = d.thresholds.v_oscillation;
  th.v_divergence = d.thresholds.v_divergence;
  th.u_oscillation = d.thresholds.u_oscillation;
  th.u_divergence = d.thresholds.u_divergence;
  th.grad_divergence = d.thresholds.grad_divergence;
  const auto f = singular_flags(sol.field, spec.params, d.radii, th);
  out.json("flags.json", f.to_json());
  CsvTable t(concat(concat({"node"}, coordinate_names(D, "x")), {"evaluated", "sigma1", "sigma2", "sigma3", "sigma4"}));
  for (int n = 0; n < mesh->node_count(); ++n) {
    auto row = t.row();
    row << n;
    add_coordinates<D>(row, mesh->node(n));
    row << static_cast<bool>(f.evaluated[n]) << static_cast<bool>(f.sigma1[n]) << static_cast<bool>(f.sigma2[n])
        << static_cast<bool>(f.sigma3[n]) << static_cast<bool>(f.sigma4[n]);
  }
  out.csv("flags.csv", t);
  out.plot("plot_flags.py",
           "#!/usr/bin/env python3\n"
           "# Flagged nodes (first two coordinates) from flags.csv.\n"
           "import csv, os, sys\n"
           "import matplotlib\n"
           "matplotlib.use(\"Agg\")\n"
           "import matplotlib.pyplot as plt\n"
           "here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))\n"
           "rows = list(csv.DictReader(open(os.path.join(here, \"flags.csv\"))))\n"
           "fig, ax = plt.subplots()\n"
           "ev = [r for r in rows if r[\"evaluated\"] == \"1\"]\n"
           "ax.scatter([float(r[\"x1\"]) for r in ev], [float(r[\"x2\"]) for r in ev], s=2, c=\"lightgray\", label=\"evaluated\")\n"
           "for k, m in ((\"sigma1\", \"o\"), (\"sigma2\", \"s\"), (\"sigma3\", \"^\"), (\"sigma4\", \"x\")):\n"
           "    sel = [r for r in rows if r[k] == \"1\"]\n"
           "    ax.scatter([float(r[\"x1\"]) for r in sel], [float(r[\"x2\"]) for r in sel], s=10, marker=m, label=k)\n"
           "ax.set_aspect(\"equal\")\n"
           "ax.legend()\n"
           "fig.savefig(os.path.join(here, \"flags.png\"), dpi=150)\n");
  return {{"evaluated", SingularFlags::count(f.evaluated)},
          {"sigma1", SingularFlags::count(f.sigma1)},
          {"sigma2", SingularFlags::count(f.sigma2)},
          {"sigma3", SingularFlags::count(f.sigma3)},
          {"sigma4", SingularFlags::count(f.sigma4)}};
}

template <int D>
nlohmann::json run_problem_command(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const std::string& c = cfg.command;
  if (c == "solve") return run_solve<D>(cfg, out);
  if (c == "excess") return run_excess<D>(cfg, out);
  if (c == "decay") return run_decay<D>(cfg, out);
  if (c == "caccioppoli") return run_caccioppoli<D>(cfg, out);
  if (c == "compare") return run_compare<D>(cfg, out);
  if (c == "linearize") return run_linearize<D>(cfg, out);
  if (c == "manufactured") return run_manufactured<D>(cfg, out);
  if (c == "flags") return run_flags<D>(cfg, out);
  throw ConfigError("command: unknown command '" + c + "'");
}

}  // namespace pipeline_detail

/// Runs one experiment and writes its artifacts; manifest.json is written last.
inline RunResult run(ExperimentConfig cfg, const RunOverrides& overrides = {}) {
  if (overrides.seed) cfg.output.seed = *overrides.seed;
  if (overrides.out) cfg.output.directory = *overrides.out;
  if (overrides.threads < 1) throw ConfigError("--threads must be >= 1");
  set_thread_count(overrides.threads);
  ArtifactWriter out(cfg.output.directory, cfg.output.formats);
  nlohmann::json summary;
  if (cfg.command == "audit") {
    summary = pipeline_detail::run_audit(cfg, out);
  } else if (cfg.problem.dim == 2) {
    summary = pipeline_detail::run_problem_command<2>(cfg, out);
  } else {
    summary = pipeline_detail::run_problem_command<3>(cfg, out);
  }
  // where the run was written is not part of what was run
  nlohmann::json canonical = cfg.source;
  if (canonical.contains("output")) canonical["output"].erase("directory");
  canonical["output"]["seed"] = cfg.output.seed;
  nlohmann::json header{{"command", cfg.command},
                        {"seed", cfg.output.seed},
                        {"config_sha256", sha256_hex(canonical.dump())},
                        {"summary", summary}};
  RunResult res;
  res.directory = cfg.output.directory;
  res.summary = summary;
  res.manifest = out.finish(header);
  return res;
}

}  // namespace pgrowth

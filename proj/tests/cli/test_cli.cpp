#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pgrowth/cli/app.hpp"

namespace fs = std::filesystem;
using namespace pgrowth;

namespace {

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "pgrowth_cli_tests" / (std::string(info->name()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

nlohmann::json affine_problem() {
  return nlohmann::json::parse(R"json({
    "dim": 2,
    "params": {"p": 2.0, "mu": 0.0, "kappa": 0.0},
    "mesh": {"cells": 8},
    "dirichlet": ["0.5*x - 0.25*y", "0.375*x + 0.125*y"]
  })json");
}

nlohmann::json smooth_problem(int cells = 16) {
  auto j = nlohmann::json::parse(R"json({
    "dim": 2,
    "params": {"p": 3.0, "mu": 0.1, "kappa": 1.0},
    "g": ["0.2*sin(pi*x)*sin(pi*y)", "0.1*x*y"],
    "dirichlet": ["0.1*x", "-0.05*y"]
  })json");
  j["mesh"] = {{"cells", cells}};
  return j;
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "pgrowth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

// ---------------------------------------------------------------- expressions

TEST(Expression, PrecedenceAndAssociativity) {
  const double origin[3] = {0, 0, 0};
  EXPECT_EQ(Expression::parse("-2^2", 2)(origin), -4.0);
  EXPECT_EQ(Expression::parse("2^3^2", 2)(origin), 512.0);
  EXPECT_EQ(Expression::parse("1 - 2 - 3", 2)(origin), -4.0);
  EXPECT_EQ(Expression::parse("8 / 2 / 2", 2)(origin), 2.0);
  EXPECT_EQ(Expression::parse("2 * (3 + 4)", 2)(origin), 14.0);
  EXPECT_EQ(Expression::parse("2^-1", 2)(origin), 0.5);
}

TEST(Expression, VariablesConstantsAndTypography) {
  const double pt[3] = {0.25, -1.5, 2.0};
  EXPECT_DOUBLE_EQ(Expression::parse("x + 10*y + 100*z", 3)(pt), 0.25 - 15.0 + 200.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x1 * x2", 2)(pt), 0.25 * -1.5);
  EXPECT_DOUBLE_EQ(Expression::parse("sin(pi*x) + cos(0) + exp(1) - e", 2)(pt), std::sin(M_PI * 0.25) + 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x \xE2\x88\x92 y \xC3\x97 2 \xC3\xB7 4", 2)(pt), 0.25 + 0.75);
}

TEST(Expression, RejectionsNameTheKey) {
  auto fails_with = [](const std::string& text, int dim, const std::string& fragment) {
    try {
      (void)Expression::parse(text, dim, "problem.g[1]");
      ADD_FAILURE() << "accepted " << text;
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      EXPECT_NE(what.find("problem.g[1]"), std::string::npos) << what;
      EXPECT_NE(what.find(fragment), std::string::npos) << what;
    }
  };
  fails_with("z + 1", 2, "does not exist");
  fails_with("foo(x)", 2, "unknown name");
  fails_with("(x + 1", 2, "missing ')'");
  fails_with("x +", 2, "unexpected end");
  fails_with("x $ y", 2, "unexpected '$'");
  fails_with("sin x", 2, "expected '('");
}

TEST(Expression, SymbolicDerivativeMatchesCentralDifferences) {
  const std::vector<std::string> cases{"sin(pi*x)*y^2", "exp(-8*((x-0.5)^2 + (y-0.5)^2))", "x^y", "(x + 2) / (1 + y*y)",
                                       "cos(x*y) - 3*x^3"};
  const std::vector<std::array<double, 3>> points{{0.3, 0.7, 0}, {1.2, 0.4, 0}, {0.9, 1.6, 0}};
  for (const auto& text : cases) {
    const auto f = Expression::parse(text, 2);
    for (int var = 0; var < 2; ++var) {
      const auto df = f.derivative(var);
      for (auto p : points) {
        const double h = 1e-6;
        auto plus = p, minus = p;
        plus[var] += h;
        minus[var] -= h;
        const double fd = (f(plus.data()) - f(minus.data())) / (2 * h);
        EXPECT_NEAR(df(p.data()), fd, 1e-7 * std::max(1.0, std::abs(fd))) << text << " d/dx" << var + 1;
      }
    }
  }
  EXPECT_TRUE(Expression::parse("3*y + 2", 2).derivative(0).is_constant());
}

// ---------------------------------------------------------------- configuration

TEST(Config, MissingExponentNamesDottedKey) {
  auto doc = nlohmann::json{{"command", "solve"}, {"problem", affine_problem()}};
  doc["problem"]["params"].erase("p");
  try {
    (void)parse_config(doc);
    FAIL() << "accepted a config without p";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("problem.params.p"), std::string::npos) << e.what();
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const auto base = nlohmann::json{{"command", "solve"}, {"problem", affine_problem()}};
  auto expect_key = [](const nlohmann::json& doc, const std::string& key) {
    try {
      (void)parse_config(doc);
      ADD_FAILURE() << "accepted " << doc.dump();
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  auto doc = base;
  doc["problem"]["params"]["q"] = 1.0;
  expect_key(doc, "problem.params.q");
  doc = base;
  doc["problem"]["params"]["p"] = 1.0;
  expect_key(doc, "problem.params.p");
  doc = base;
  doc["problem"]["mesh"]["cells"] = 2.5;
  expect_key(doc, "problem.mesh.cells");
  doc = base;
  doc["problem"]["g"] = {"x"};
  expect_key(doc, "problem.g");
  doc = base;
  doc["problem"]["solver"] = {{"L_schedule", {1.0, 10.0}}};
  expect_key(doc, "problem.solver.L_schedule");
  doc = base;
  doc["command"] = "excess";
  expect_key(doc, "diagnostics.center");
  doc = base;
  doc["command"] = "shrink";
  expect_key(doc, "command");
  doc = base;
  doc["output"] = {{"formats", {"json", "xml"}}};
  expect_key(doc, "output.formats");
  doc = base;
  doc["problem"]["field"] = "field.pgfs";
  expect_key(doc, "problem.field");
}

TEST(Config, ParsesDefaultsAndInfinityInSchedules) {
  auto doc = nlohmann::json{{"command", "solve"}, {"problem", affine_problem()}};
  doc["problem"]["solver"] = {{"L_schedule", {10.0, 100.0, "inf"}}};
  const auto cfg = parse_config(doc);
  EXPECT_EQ(cfg.problem.mesh.lower, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(cfg.problem.mesh.upper, (std::vector<double>{1.0, 1.0}));
  ASSERT_TRUE(cfg.problem.solver.L_schedule);
  EXPECT_TRUE(std::isinf(cfg.problem.solver.L_schedule->back()));
  EXPECT_EQ(cfg.output.directory, "out");
  EXPECT_EQ(cfg.output.formats.size(), 4u);
}

// ---------------------------------------------------------------- artifacts

TEST(Artifacts, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Artifacts, CsvNumbersRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(csv_number(x)), x);
  EXPECT_EQ(csv_number(std::nan("")), "nan");
  CsvTable t({"a", "b"});
  t.row() << 1.0;
  EXPECT_THROW((void)t.str(), IoError);
}

// ---------------------------------------------------------------- pipelines

TEST(Pipelines, AffineSnapshotEqualsInterpolant) {
  const auto dir = scratch("out");
  auto cfg = parse_config({{"command", "solve"}, {"problem", affine_problem()}, {"output", {{"directory", dir.string()}}}});
  const auto res = run(cfg);
  EXPECT_TRUE(res.summary["converged"].get<bool>());
  const auto field = read_snapshot<2>((dir / "field.pgfs").string());
  double worst = 0.0;
  for (int n = 0; n < field.mesh().node_count(); ++n) {
    const Vec<2> x = field.mesh().node(n);
    const Vec<2> exact(0.5 * x(0) - 0.25 * x(1), 0.375 * x(0) + 0.125 * x(1));
    worst = std::max(worst, (field.at_node(n) - exact).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Pipelines, ManifestHashesMatchFiles) {
  const auto dir = scratch("out");
  auto cfg = parse_config({{"command", "solve"}, {"problem", smooth_problem(8)}, {"output", {{"directory", dir.string()}}}});
  const auto res = run(cfg);
  ASSERT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "manifest.json")), res.manifest);
  ASSERT_EQ(res.manifest["files"].size(), 5u);
  for (const auto& f : res.manifest["files"]) {
    const std::string bytes = slurp(dir / f["path"].get<std::string>());
    EXPECT_EQ(sha256_hex(bytes), f["sha256"].get<std::string>()) << f["path"];
    EXPECT_EQ(bytes.size(), f["bytes"].get<std::size_t>());
  }
}

TEST(Pipelines, FormatsRestrictOutputs) {
  const auto dir = scratch("out");
  auto cfg = parse_config({{"command", "solve"},
                           {"problem", affine_problem()},
                           {"output", {{"directory", dir.string()}, {"formats", {"json", "plot"}}}}});
  const auto res = run(cfg);
  ASSERT_EQ(res.manifest["files"].size(), 1u);  // plots need their csv
  EXPECT_EQ(res.manifest["files"][0]["path"], "solution.json");
}

TEST(Pipelines, SmallAuditHasNoViolations) {
  const auto dir = scratch("out");
  auto doc = nlohmann::json::parse(R"json({
    "command": "audit",
    "diagnostics": {"audit": {"samples": 300, "p": [1.5, 3.0], "mu": [0.0, 0.5], "dims": [2]}}
  })json");
  doc["output"] = {{"directory", dir.string()}, {"seed", 11}};
  const auto res = run(parse_config(doc));
  EXPECT_EQ(res.summary["hard_violations"].get<int>(), 0);
  EXPECT_GT(res.summary["not_run"].get<int>(), 0);  // blow-up audits at mu = 0
  const auto bundle = nlohmann::json::parse(slurp(dir / "audit.json"));
  for (const auto& a : bundle["audits"]) {
    if (a["status"] != "ok") {
      EXPECT_EQ(a["mu"].get<double>(), 0.0);
      continue;
    }
    EXPECT_FALSE(a["violated"].get<bool>()) << a.dump();
  }
}

TEST(Pipelines, RepeatedRunsGiveIdenticalManifests) {
  const auto a = scratch("a");
  const auto b = scratch("b");
  auto doc = nlohmann::json{{"command", "flags"}, {"problem", smooth_problem(32)}, {"diagnostics", {{"radii", {0.2, 0.15}}}}};
  doc["output"] = {{"directory", a.string()}};
  const auto first = run(parse_config(doc));
  doc["output"] = {{"directory", b.string()}};
  RunOverrides ov;
  ov.threads = 3;
  const auto second = run(parse_config(doc), ov);
  EXPECT_EQ(first.manifest["files"], second.manifest["files"]);
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(Pipelines, AuditSeedChangesSamplesButNotVerdict) {
  auto doc = nlohmann::json::parse(R"json({"command": "audit", "diagnostics": {"audit": {"samples": 200, "p": [3.0], "mu": [0.5], "dims": [2], "lemmas": ["tecnico"]}}})json");
  const auto a = scratch("a");
  doc["output"] = {{"directory", a.string()}, {"seed", 1}};
  const auto first = run(parse_config(doc));
  RunOverrides ov;
  ov.seed = 2;
  ov.out = scratch("b").string();
  const auto second = run(parse_config(doc), ov);
  EXPECT_EQ(second.manifest["seed"].get<std::uint64_t>(), 2u);
  EXPECT_NE(first.manifest["files"], second.manifest["files"]);
  EXPECT_EQ(second.summary["hard_violations"].get<int>(), 0);
}

TEST(Pipelines, SnapshotInputReproducesSolvedAnalysis) {
  const auto solve_dir = scratch("solve");
  run(parse_config({{"command", "solve"}, {"problem", smooth_problem(32)}, {"output", {{"directory", solve_dir.string()}}}}));

  const auto diag = nlohmann::json{{"center", {0.5, 0.5}}, {"radii", {0.4, 0.3, 0.2}}};
  const auto solved = run(parse_config(
      {{"command", "decay"}, {"problem", smooth_problem(32)}, {"diagnostics", diag}, {"output", {{"directory", scratch("x").string()}}}}));
  auto from_file = smooth_problem(32);
  from_file["field"] = (solve_dir / "field.pgfs").string();
  const auto loaded = run(parse_config(
      {{"command", "decay"}, {"problem", from_file}, {"diagnostics", diag}, {"output", {{"directory", scratch("y").string()}}}}));
  EXPECT_DOUBLE_EQ(solved.summary["fitted_gamma"].get<double>(), loaded.summary["fitted_gamma"].get<double>());

  auto wrong_mesh = smooth_problem(16);
  wrong_mesh["field"] = (solve_dir / "field.pgfs").string();
  EXPECT_THROW(run(parse_config({{"command", "decay"},
                                 {"problem", wrong_mesh},
                                 {"diagnostics", {{"center", {0.5, 0.5}}, {"radii", {0.4, 0.3, 0.25}}}},
                                 {"output", {{"directory", scratch("z").string()}}}})),
               MeshMismatch);
}

TEST(Pipelines, ManufacturedErrorsShrinkUnderRefinement) {
  auto problem = smooth_problem(8);
  problem.erase("g");
  problem.erase("dirichlet");
  const auto doc = nlohmann::json{{"command", "manufactured"},
                                  {"problem", problem},
                                  {"diagnostics", {{"target", {"0.3*sin(pi*x)*y", "0.2*x*x*y - 0.1*y"}}, {"cells_sequence", {8, 16, 32}}}},
                                  {"output", {{"directory", scratch("out").string()}}}};
  const auto res = run(parse_config(doc));
  EXPECT_GT(res.summary["min_error_reduction"].get<double>(), 3.0);
}

// ---------------------------------------------------------------- command line

TEST(CommandLine, MissingExponentExitsWithConfigCode) {
  const auto dir = scratch("cfg");
  auto doc = nlohmann::json{{"command", "solve"}, {"problem", affine_problem()}};
  doc["problem"]["params"].erase("p");
  std::string err;
  EXPECT_EQ(cli({"solve", "--config", write_config(dir, doc).string(), "--out", (dir / "out").string()}, &err), 2);
  EXPECT_NE(err.find("problem.params.p"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(CommandLine, ExitCodesFollowErrorFamilies) {
  const auto dir = scratch("cfg");
  const auto solve = write_config(dir, {{"command", "solve"}, {"problem", affine_problem()}}, "solve.json");
  const auto out = (dir / "out").string();
  EXPECT_EQ(cli({"solve", "-c", solve.string(), "-o", out}), 0);
  EXPECT_EQ(cli({"run", "-c", solve.string(), "-o", out}), 0);
  EXPECT_EQ(cli({"audit", "-c", solve.string(), "-o", out}), 2);          // command mismatch
  EXPECT_EQ(cli({"solve", "-c", (dir / "absent.json").string()}), 7);     // unreadable config
  EXPECT_EQ(cli({"solve"}), 2);                                           // --config missing
  EXPECT_EQ(cli({"solve", "-c", solve.string(), "--threads", "0"}), 2);

  // linearization requires kappa = 0
  auto lin = nlohmann::json::parse(R"json({
    "command": "linearize",
    "problem": {"dim": 2, "params": {"p": 3.0, "mu": 0.5, "kappa": 1.0}, "mesh": {"cells": 8}},
    "diagnostics": {"balls": [{"center": [0.5, 0.5], "radius": 0.4}], "base_strain": [[0.1, 0], [0, 0]],
                    "perturbation": ["x*y", "0"], "lambda_sequence": [0.1, 0.05]}
  })json");
  EXPECT_EQ(cli({"run", "-c", write_config(dir, lin, "lin.json").string(), "-o", out}), 3);

  // ball too small for the mesh
  auto flags = nlohmann::json{{"command", "flags"}, {"problem", affine_problem()}, {"diagnostics", {{"radii", {0.3, 0.2}}}}};
  EXPECT_EQ(cli({"run", "-c", write_config(dir, flags, "flags.json").string(), "-o", out}), 6);

  // solver budget exhausted
  auto tight = nlohmann::json{{"command", "solve"}, {"problem", smooth_problem(8)}};
  tight["problem"]["solver"] = {{"max_iters", 1}, {"grad_tol", 1e-14}};
  EXPECT_EQ(cli({"run", "-c", write_config(dir, tight, "tight.json").string(), "-o", out}), 5);
}

TEST(CommandLine, ShippedConfigsParse) {
  const fs::path configs = fs::path(PGROWTH_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(configs)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    EXPECT_NO_THROW((void)load_config(entry.path())) << entry.path();
  }
  EXPECT_GE(seen, 9);
}

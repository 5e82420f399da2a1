#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "stratum/experiments.hpp"

using namespace stratum;
using namespace stratum::experiments;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// Runs the parser and returns (line, field) of the expected failure.
std::pair<int, std::string> failure(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return {e.line(), e.field()};
  }
  return {-1, ""};
}

std::string result_csv(const ExperimentConfig& cfg, const RunOutput& out) {
  std::ostringstream os;
  write_result_csv(os, cfg.hash(), out.rows);
  return os.str();
}

const char* kSmall =
    "n = 2\n"
    "eps_list = 0.25, 0.125, 0.0625\n"
    "quad_transverse_cells = 4\n";

}  // namespace

TEST_CASE("config errors carry line and field") {
  CHECK(failure("n = 2\nfoo = 1\n") == std::pair<int, std::string>{2, "foo"});
  CHECK(failure("# comment\n\nlambda = abc\n") == std::pair<int, std::string>{3, "lambda"});
  CHECK(failure("lambda = 1.5\n").second == "lambda");
  CHECK(failure("n = 2\nn = 3\n") == std::pair<int, std::string>{2, "n"});
  CHECK(failure("eps_list = 0.1, 0.2, 0.05\n").second == "eps_list");
  CHECK(failure("eps_list = 0.1, 0.05\n").second == "eps_list");
  CHECK(failure("eps_list = 0.1,,0.05\n").second == "eps_list");
  CHECK(failure("example = laminate\n").second == "F");
  CHECK(failure("example = nope\n").second == "example");
  CHECK(failure("just words\n").first == 1);
  CHECK(failure("n = 4\n").second == "n");
  CHECK(failure("example = wrinkling\ncurve = circle\n").second == "curve");
  CHECK(failure("shear = 1, 2, 3\n").second == "shear");
  CHECK(failure("include_non_admissible = maybe\n").second == "include_non_admissible");
  CHECK(failure("cell_m = 1\n").second == "cell");
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("config defaults and derived settings") {
  ExperimentConfig c = parse("");
  CHECK(c.n == 2);
  CHECK(c.p == 2.0);
  CHECK(c.shear.size() == 2);
  c = parse("density = svk\n");
  CHECK(c.p == 4.0);
  c = parse("example = wrinkling\n");
  CHECK(c.curve == CurveKind::Wrinkle);
  c = parse("seed = 9\n");
  CHECK(c.cell.seed == 9u);
  c = parse("example = laminate\nF = 1, 0.5, 0, 1\n");
  CHECK(c.F.size() == 4);
}

TEST_CASE("config hash ignores layout and output path") {
  const ExperimentConfig a = parse("n = 2\nlambda = 0.5\noutput = a.csv\n");
  const ExperimentConfig b = parse("# same run\n  lambda=0.50   \n\nn=2\noutput = elsewhere.csv\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash().size() == 16);
  CHECK(parse("seed = 2\n").hash() != parse("seed = 3\n").hash());
  CHECK(parse("lambda = 0.4\n").hash() != a.hash());
  CHECK(a.canonical().find("output") == std::string::npos);
}

TEST_CASE("csv round trip") {
  const double awkward = 0.1 + 0.2;
  CHECK(std::stod(format_double(awkward)) == awkward);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");

  std::vector<ResultRow> rows(2);
  rows[0].experiment = "scaling/bending";
  rows[0].kind = "eps";
  rows[0].eps = 0.125;
  rows[0].stiff_energy = awkward;
  rows[0].metadata = "a=1;b=\"x,y\"";
  rows[1].experiment = "scaling/bending";
  rows[1].kind = "summary";
  rows[1].slope = 2.0;

  std::ostringstream os;
  write_result_csv(os, "00ff", rows);
  std::istringstream in(os.str());
  const CsvTable t = read_csv(in);
  CHECK(t.schema == kSchemaVersion);
  REQUIRE(t.rows.size() == 2);
  REQUIRE(t.header.size() == 13);
  CHECK(t.header[0] == "config_hash");
  CHECK(t.rows[0][0] == "00ff");
  CHECK(t.rows[0][3] == "0.125");
  CHECK(std::stod(t.rows[0][5]) == awkward);
  CHECK(t.rows[0][12] == rows[0].metadata);
  CHECK(t.rows[1][3].empty());

  CsvTable other = t;
  const CsvTable both = aggregate({t, other});
  CHECK(both.rows.size() == 4);
  other.rows[0][0] = "beef";
  CHECK_THROWS_AS(aggregate({t, other}), std::invalid_argument);
  other = t;
  other.schema = 2;
  CHECK_THROWS_AS(aggregate({t, other}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);

  std::istringstream broken("config_hash,a\n");
  CHECK_THROWS(read_csv(broken));
}

TEST_CASE("cell csv layout") {
  CellRow r;
  r.kind = "F";
  r.F = Mat::Identity(2, 2);
  r.w_cell = 1.5;
  std::ostringstream os;
  write_cell_csv(os, "ab", 2, {r});
  std::istringstream in(os.str());
  const CsvTable t = read_csv(in);
  REQUIRE(t.header.size() == 2 + 4 + 7);
  CHECK(t.header[2] == "F_11");
  CHECK(t.header[5] == "F_22");
  CHECK(t.rows[0][2] == "1");
  CHECK(t.rows[0][3] == "0");
}

TEST_CASE("scaling runs: bending power law, rotation exact") {
  ExperimentConfig cfg = parse(kSmall);
  RunOutput out = run_scaling(cfg, 1);
  REQUIRE(out.rows.size() == 4);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(out.rows[k].kind == "eps");
    CHECK(out.rows[k].metadata == "within_bound=1");
  }
  CHECK(out.rows.back().kind == "summary");
  CHECK(*out.rows.back().slope == doctest::Approx(2.0).epsilon(0.05));

  cfg = parse(std::string(kSmall) + "example = rotation\nrotation_rate = 1\n");
  out = run_scaling(cfg, 1);
  CHECK(out.rows.back().metadata == "verdict=exact_rigidity");
  CHECK_FALSE(out.rows.back().slope.has_value());
}

TEST_CASE("runs are identical across thread counts") {
  const ExperimentConfig cfg = parse(std::string(kSmall) + "example = recovery\nrotation_rate = 0.8\nshear = 0.3, 0\n");
  CHECK(result_csv(cfg, run_scaling(cfg, 1)) == result_csv(cfg, run_scaling(cfg, 3)));
  const RunOutput p1 = run_pipeline(cfg, 1);
  const RunOutput p3 = run_pipeline(cfg, 3);
  CHECK(result_csv(cfg, p1) == result_csv(cfg, p3));
  CHECK(p1.extra_csv == p3.extra_csv);
  CHECK(p1.extra_csv.rfind("schema=", 0) == 0);
}

TEST_CASE("weak convergence of the laminate") {
  const ExperimentConfig cfg = parse(std::string(kSmall) + "example = laminate\nF = 1, 0.5, 0, 1\n");
  const RunOutput out = run_weak_convergence(cfg, 1);
  for (const auto& r : out.rows) {
    if (r.kind == "mean_d1u") CHECK(*r.weak_error < 1e-12);
    if (r.kind == "test_field") CHECK(*r.weak_error <= 0.5 * *r.eps);
  }
  CHECK(out.converged);
}

TEST_CASE("pipeline flags the bending limit and tracks rotations") {
  ExperimentConfig cfg = parse(kSmall);
  RunOutput out = run_pipeline(cfg, 1);
  bool saw_limit = false;
  for (const auto& r : out.rows)
    if (r.kind == "limit_form") {
      saw_limit = true;
      CHECK(r.metadata.find("limit_form=0") != std::string::npos);
    }
  CHECK(saw_limit);

  cfg = parse(std::string(kSmall) + "example = rotation\nrotation_rate = 1\n");
  out = run_pipeline(cfg, 1);
  int shifts = 0;
  for (const auto& r : out.rows) {
    if (r.kind == "shift") ++shifts;
    if (r.kind == "eps") CHECK(r.metadata.find("value=max_dev_strip") == 0);
  }
  CHECK(shifts > 0);
}

TEST_CASE("cell sweep marks non-admissible gradients") {
  const ExperimentConfig cfg = parse(
      "shear_values = 0, 1\ninclude_non_admissible = true\ncell_m = 5\ncell_mn = 5\ncell_restarts = 1\n");
  const RunOutput out = run_cell_sweep(cfg, 2);
  REQUIRE(out.cell_rows.size() == 4);
  CHECK(*out.cell_rows[1].w_convex == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(*out.cell_rows[1].w_cell == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(std::isinf(*out.cell_rows[2].w_convex));
  CHECK(out.cell_rows[2].metadata.find("infinite=1") != std::string::npos);
  CHECK(out.cell_rows.back().kind == "summary");
  CHECK(out.cell_rows.back().metadata.find("monotone_in_shear=1") != std::string::npos);
  CHECK(out.converged);

  std::ostringstream a, b;
  write_cell_csv(a, cfg.hash(), 2, out.cell_rows);
  write_cell_csv(b, cfg.hash(), 2, run_cell_sweep(cfg, 1).cell_rows);
  CHECK(a.str() == b.str());
}

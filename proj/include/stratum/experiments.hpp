#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratum/constructions.hpp"
#include "stratum/homogenization.hpp"
#include "stratum/rigidity_pipeline.hpp"

namespace stratum::experiments {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& field, const std::string& what);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

enum class Example { Bending, VolumeBending, Wrinkling, Rotation, Laminate, Recovery };
enum class CurveKind { Straight, Circle, Wrinkle };
enum class DensityKind { Quadratic, SVK, Polyconvex };

struct ExperimentConfig {
  int n = 2;
  double p = 2.0;
  double lambda = 0.5;
  std::vector<double> eps_list{0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  Example example = Example::Bending;
  CurveKind curve = CurveKind::Circle;
  double wrinkle_amplitude = 0.5;
  double beta = 1.0;
  double gamma = 0.5;
  std::vector<double> F;               // row-major, laminate example
  double rotation_angle = 0.0;         // theta(t) = angle + rate t + curvature t^2
  double rotation_rate = 0.0;
  double rotation_curvature = 0.0;
  std::vector<double> shear;           // d(t) = shear + t shear_rate
  std::vector<double> shear_rate;
  QuadratureSpec quadrature{2, 16, 3};
  std::vector<double> xi_list{0.015625, 0.03125, 0.0625, 0.125, 0.25};
  DensityKind density = DensityKind::Quadratic;
  SVKParams svk{1.0, 1.0};
  std::vector<double> shear_values{0.0, 0.5, 1.0, 1.5, 2.0};
  bool include_non_admissible = false;
  CellDiscretization cell{};
  unsigned seed = 1;
  std::string output;

  /// Sorted key=value lines of every resolved setting except the output path.
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, malformed
/// values and inconsistent settings raise ConfigError with the line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// ---------------------------------------------------------------------------
// CSV output: a `schema=1` line, a header, then rows that all start with the
// config hash.

inline constexpr int kSchemaVersion = 1;

struct ResultRow {
  std::string experiment;
  std::string kind;
  std::optional<double> eps;
  std::optional<double> xi;
  std::optional<double> stiff_energy;
  std::optional<double> soft_energy;
  std::optional<double> approx_error;
  std::optional<double> weak_error;
  std::optional<double> value;
  std::optional<double> bound;
  std::optional<double> slope;
  std::string metadata;
};

struct CellRow {
  std::string kind;
  Mat F;
  std::optional<double> w_convex;
  std::optional<double> w_cell;
  std::optional<double> w_cell_rigid;
  std::optional<double> delta;
  bool converged = true;
  int iterations = 0;
  std::string metadata;
};

std::string format_double(double v);
void write_result_csv(std::ostream& os, const std::string& hash, const std::vector<ResultRow>& rows);
void write_cell_csv(std::ostream& os, const std::string& hash, int n, const std::vector<CellRow>& rows);

struct CsvTable {
  int schema = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);
/// Concatenates tables produced by the same configuration; throws when the
/// schema, header or config hash differ.
CsvTable aggregate(const std::vector<CsvTable>& tables);

// ---------------------------------------------------------------------------

struct RunOutput {
  std::vector<ResultRow> rows;
  std::vector<CellRow> cell_rows;
  std::string extra_csv;  // per-strip rotations for pipeline runs
  bool converged = true;
};

RunOutput run_scaling(const ExperimentConfig& cfg, int threads);
RunOutput run_weak_convergence(const ExperimentConfig& cfg, int threads);
RunOutput run_pipeline(const ExperimentConfig& cfg, int threads);
RunOutput run_cell_sweep(const ExperimentConfig& cfg, int threads);

/// The layered field of the configured example at one period.
struct ExampleField {
  DeformationField field;
  DeformationField limit;
  double d11_bound = 0.0;
};
ExampleField build_example(const ExperimentConfig& cfg, double eps);
EnergyDensity make_density(const ExperimentConfig& cfg);

}  // namespace stratum::experiments

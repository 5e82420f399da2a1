#pragma once

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "stratum/constructions.hpp"

namespace stratum {

/// Integral of dist(grad u, SO(n))^p over the stiff layers.
double stiff_energy(const DeformationField& field, double p, const QuadratureSpec& res = {});

struct StripRotation {
  long index;
  Rotation rotation;
  Vec translation;
  bool degenerate;
};

/// Strip-wise rigid approximant w(x) = R^i x + b^i on eps[i, i+1).
struct PiecewiseRotationField {
  std::vector<StripRotation> strips;
  LayerConfig cfg;
  double a = 0.0;  // union of the strips along x_n
  double b = 0.0;

  const StripRotation* find(long index) const;
  /// Throws when x_n lies in no recorded strip.
  Vec operator()(const Vec& x) const;
  /// The piecewise-constant rotation field of one variable.
  Mat sigma(double t) const;
};

/// For each full strip: Procrustes fit of the mean stiff gradient, and the
/// stiff mean of u - R x as translation.
PiecewiseRotationField layerwise_procrustes(const DeformationField& field, const QuadratureSpec& res = {});

/// ||u - w||_{L^p} over the domain with one eps-strip removed at the top and
/// the bottom.
double approx_error(const DeformationField& field, const PiecewiseRotationField& w, double p,
                    const QuadratureSpec& res = {});

/// L^p norm of Sigma(. + xi) - Sigma over J = (a, b - xi), computed exactly
/// from the strip breakpoints.
double sigma_shift_modulus(const PiecewiseRotationField& sigma, double xi, double p);

/// Writes i, R entries row-major, b entries, degenerate.
void write_rotations_csv(std::ostream& os, const PiecewiseRotationField& w);

struct ScalingReport {
  std::vector<std::pair<double, double>> samples;  // (eps, energy)
  bool exact_rigidity = false;  // every energy at or below the zero threshold
  double fitted_slope = 0.0;
  double fitted_intercept = 0.0;
  double residual = 0.0;        // root-mean-square log residual
  std::vector<double> zero_eps;  // samples excluded from the fit as exactly rigid
};

/// Least-squares line through (log eps, log energy). Energies at or below
/// zero_threshold count as exact rigidity and are not fitted.
ScalingReport fit_scaling(const std::vector<std::pair<double, double>>& samples, double zero_threshold = 1e-20);

struct ReversePoincare {
  double lhs = 0.0;
  double ratio = 0.0;
  bool degenerate = false;
  Vec translation;  // the minimizing d
};

/// min over d of the integral of |(R2 - R1) x + d|^p over P, and its ratio to
/// l^p |P| |R2 - R1|^p where l is the side of the cross-section cube.
ReversePoincare reverse_poincare_check(const Rotation& R1, const Rotation& R2, const CuboidDomain& P, double p);

struct IncompressibilityReport {
  int samples = 0;
  double det_min = 0.0;
  double det_max = 0.0;
  double det_mean = 0.0;
  bool volume_preserving = false;   // |det - 1| <= tol everywhere
  bool limit_form = false;          // grad u = R + d (x) e_n with R depending on x_n only
  bool a_normal_zero = false;       // a_n = 0 everywhere
  double a_normal_max = 0.0;
  bool rotation_normal_constant = false;  // R e_n independent of x
  double rotation_normal_spread = 0.0;
  // Two-dimensional shear form grad u = Q (I + gamma e_1 (x) e_2).
  std::optional<Mat> shear_rotation;
  double gamma_min = 0.0;
  double gamma_max = 0.0;
};

/// Samples grad u on a tensor grid of `per_axis` points per axis of the
/// field's domain and writes grad u = R (I + a (x) e_n).
IncompressibilityReport incompressibility_report(const DeformationField& limit, int per_axis = 9,
                                                 double tol = 1e-8);
/// The same for u = R(x_n) x + b(x_n) given R and b'.
IncompressibilityReport incompressibility_report(const RotationCurve& R, const ShearProfile& db,
                                                 const CuboidDomain& dom, int per_axis = 9, double tol = 1e-8);

}  // namespace stratum

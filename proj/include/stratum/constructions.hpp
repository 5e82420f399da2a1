#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stratum/layered_geometry.hpp"
#include "stratum/mat_core.hpp"

namespace stratum {

/// u and its gradient, with the layering they were built for (if any).
struct DeformationField {
  int n = 2;
  std::function<Vec(const Vec&)> u;
  std::function<Mat(const Vec&)> grad_u;
  CuboidDomain domain;
  std::optional<LayerConfig> cfg;
};

/// Largest relative mismatch between grad_u and central differences of u
/// at `samples` random points kept at least `margin` away from layer
/// interfaces. Relative to max(1, |grad_u|).
double gradient_consistency_error(const DeformationField& field, int samples, unsigned seed,
                                  double h = 1e-5);

/// Writes x_1..x_n, u_1..u_n, g_11..g_nn (row-major), phase.
void write_samples_csv(std::ostream& os, const DeformationField& field, const std::vector<Vec>& points);

// ---------------------------------------------------------------------------
// Curves in the (e_1, e_n) plane. Components are (e_1 part, e_n part).

struct CurveSpec {
  std::function<Eigen::Vector2d(double)> g;
  std::function<Eigen::Vector2d(double)> dg;
  std::function<Eigen::Vector2d(double)> d2g;
  bool arc_length = true;
  std::optional<double> period;  // period of g', if any
  double curvature_bound = 0.0;  // sup |g''|
};

/// Throws if an arc-length claim fails on 1000 samples of [0, 1].
void validate_curve(const CurveSpec& c);

CurveSpec straight_curve();
/// g(t) = (sin(t - 1/2), cos(t - 1/2)).
CurveSpec circular_curve();
/// Arc-length curve with g' = (cos theta, sin theta), theta(t) = a sin(2 pi t).
/// g' is 1-periodic and g(1) - g(0) = (J_0(a), 0).
CurveSpec wrinkle_curve(double amplitude);

/// c_1 e_1 + c_2 e_n.
inline Vec embed(int n, const Eigen::Vector2d& c) {
  Vec v = Vec::Zero(n);
  v(0) = c(0);
  v(n - 1) = c(1);
  return v;
}

// ---------------------------------------------------------------------------
// Profiles f on [0,1]^{n-1} x [0,2] feeding the layer builder.

struct ProfileField {
  int n = 2;
  std::function<Vec(const Vec&)> f;
  std::function<Vec(const Vec&)> d1f;
  std::function<Vec(const Vec&)> d11f;
  std::function<Vec(const Vec&)> dnf;
  double d11_bound = 0.0;   // sup |d11 f|, used for the energy bound
  DeformationField limit;   // the weak limit of the built sequence
};

/// Throws if |d1 f| != 1, d1 f leaves span{e_1, e_n}, or d_i f != e_i for a
/// middle coordinate, on a sample of the profile's domain.
void validate_profile(const ProfileField& f);

/// Stiff layers: u = f(x^) + (x_n - [x_n]) (d1 f)^perp(x^), x^ = (x', [x_n]).
/// Soft layers: linear interpolation along e_n between the neighbouring
/// stiff layers. Gradients are closed-form.
DeformationField build_layer_deformation(const ProfileField& f, const LayerConfig& cfg, const CuboidDomain& dom);

ProfileField example_uniform_bending(int n, const CurveSpec& g);
ProfileField example_volume_bending(int n, const CurveSpec& g);
ProfileField example_wrinkling(int n, const CurveSpec& g, double beta, double gamma, double eps);

struct VolumeBendingDeterminant {
  double det;          // determinant of the limit gradient
  double g_dot_gperp;  // g' . g^perp at the same point
};
VolumeBendingDeterminant volume_bending_determinant(int n, const CurveSpec& g, const Vec& x);

// ---------------------------------------------------------------------------
// Rotation curves t -> SO(n).

struct RotationCurve {
  std::function<Mat(double)> sigma;
  std::function<Mat(double)> dsigma;
  double a = 0.0;
  double b = 1.0;

  Rotation at(double t) const { return Rotation(sigma(t)); }
};

void validate_rotation_curve(const RotationCurve& R, int samples = 101);
RotationCurve constant_rotation_curve(const Rotation& R0, double a, double b);
/// t -> planar rotation by theta(t) in the (e_1, e_n) plane.
RotationCurve angle_rotation_curve(int n, std::function<double(double)> theta,
                                   std::function<double(double)> dtheta, double a, double b);
/// Extends a curve past its interval ends by reflection.
RotationCurve reflect_extend(const RotationCurve& R);

ProfileField example_layer_rotation(int n, const RotationCurve& R);

// ---------------------------------------------------------------------------

/// Gradient R_F on stiff layers and F_lambda on soft layers; continuous and
/// mean zero over dom.
DeformationField build_laminate(const Mat& F, const LayerConfig& cfg, const CuboidDomain& dom);

/// Piecewise-affine reparametrization: slope 1/lambda on soft layers, the
/// constant eps*ceil(t/eps) on stiff layers.
class ReparamPhi {
 public:
  explicit ReparamPhi(const LayerConfig& cfg) : cfg_(cfg) {}
  double operator()(double t) const;
  double derivative(double t) const;
  const LayerConfig& config() const { return cfg_; }

 private:
  LayerConfig cfg_;
};

inline ReparamPhi reparam_phi(const LayerConfig& cfg) { return ReparamPhi(cfg); }

using ShearProfile = std::function<Vec(double)>;

/// u_eps(x) = Sigma(phi_eps(x_n)) x + b_eps(x_n), with b_eps' = d / lambda on
/// soft layers and 0 on stiff layers (composite Simpson per layer).
DeformationField build_recovery_sequence(const RotationCurve& sigma, const ShearProfile& d, const LayerConfig& cfg,
                                         const CuboidDomain& dom, int simpson_panels = 8);

/// (grad u)_lambda = R + (1/lambda)(R' x + d) (x) e_n for the limit u = R x + b.
Mat recovery_target_gradient(const RotationCurve& sigma, const ShearProfile& d, double lambda, const Vec& x);

}  // namespace stratum

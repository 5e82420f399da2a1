#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stratum/constructions.hpp"
#include "stratum/mat_core.hpp"

namespace stratum {

struct EnergyDensity {
  std::string name;
  std::function<double(const Mat&)> W;
  std::function<Mat(const Mat&)> dW;  // optional; central differences otherwise
  double p = 2.0;
  bool convex = false;
  std::optional<double> growth_c;  // c |F|^p - 1/C <= W <= C (1 + |F|^p)
  std::optional<double> growth_C;
  std::optional<double> lipschitz_L;
  /// Optional convex function g of the minors with g(minors(F)) <= W(F).
  std::function<double(const MinorsVector<double>&)> polyconvex_lower;

  double operator()(const Mat& F) const { return W(F); }
  Mat gradient(const Mat& F) const;
};

/// Throws unless W >= 0 on 10^4 samples and, when declared convex, midpoint
/// convexity holds on 10^3 pairs to 1e-9.
void validate_density(const EnergyDensity& W, int n, unsigned seed = 7);

struct SVKParams {
  double lam = 1.0;
  double mu = 1.0;

  SVKParams() = default;
  SVKParams(double lam_, double mu_);
};

/// (lam/4) |F^T F - I|^2 + (mu/8) (|F|^2 - n)^2.
double svk(const Mat& F, const SVKParams& params);

EnergyDensity svk_density(const SVKParams& params);
/// |F|^2.
EnergyDensity quadratic_density();
/// dist(F, SO(n))^p, the stiff-phase density.
EnergyDensity stiff_density(double p);
/// |F| declared with growth exponent p; used to exercise the hypothesis report.
EnergyDensity norm_density(double declared_p);
/// |F|^2 + (det F - 1)^2: nonconvex but polyconvex, with itself as the
/// convex-in-minors lower bound.
EnergyDensity polyconvex_density();

/// lambda W(F_lambda); +inf off the admissible set. Throws for a density not
/// flagged convex.
double w_hom_convex(const Mat& F, const EnergyDensity& W, double lambda);

struct CellDiscretization {
  int m = 17;               // nodes per transverse axis
  int m_n = 9;              // nodes along x_n
  int gauss_order = 2;      // per axis and element
  int max_iterations = 3000;
  double gradient_tol = 1e-10;
  int restarts = 4;         // random starts on top of the zero start
  unsigned seed = 1;
  double restart_amplitude = 0.05;
  int threads = 1;

  void validate() const;
};

struct CellSolution {
  double value = 0.0;              // lambda times the minimized mean energy
  double perturbation_norm = 0.0;  // mean-square H^1 norm of the optimal perturbation
  bool converged = false;
  bool infinite = false;
  int iterations = 0;
  // Nodal perturbation of the best start, node-major with n components each.
  std::vector<double> nodes;
  int m = 0;
  int m_n = 0;
};

/// lambda * min over zero-boundary multilinear perturbations phi on
/// Y_soft = (0,1)^{n-1} x (0,lambda) of the mean of W(F_lambda + grad phi).
/// `warm` (a solution on a coarser nested grid) is prolonged and used as an
/// extra start.
CellSolution cell_minimize(const Mat& F, const EnergyDensity& W, double lambda, const CellDiscretization& disc,
                           const CellSolution* warm = nullptr);

/// Cell formula with a rigid stiff phase: +inf off the admissible set,
/// otherwise the stiff phase is held at R_F by the piecewise-affine corrector
/// and perturbations supported in the soft layer (periodic across the
/// transverse faces, zero on the stiff interfaces) are minimized.
CellSolution cell_formula_rigid(const Mat& F, const EnergyDensity& W, double lambda, const CellDiscretization& disc);

struct EnvelopeSpec {
  Mat center;
  double radius = 1.0;
  int resolution = 5;   // nodes per matrix entry
  int directions = 32;  // unit vectors per factor of a (x) b
  int max_steps = 0;    // segment lengths k h, k = 1..max_steps; 0 means resolution - 1
  std::vector<double> thetas{0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875};
  int threads = 1;
};

struct EnvelopeGrid {
  EnvelopeSpec spec;
  int n = 2;
  int iterations = 0;
  std::vector<double> values;                // current iterate at every node
  std::vector<std::vector<double>> history;  // iterate 0 (= W) .. iterations

  std::size_t size() const { return values.size(); }
  Mat node(std::size_t index) const;
  /// Multilinear interpolation; throws when F lies outside the grid box.
  double value_at(const Mat& F) const;
};

/// Iterated rank-one lamination over a tensor grid in matrix space.
EnvelopeGrid lamination_envelope(const EnergyDensity& W, const EnvelopeSpec& spec, int iters);

/// Writes F entries row-major, value.
void write_envelope_csv(std::ostream& os, const EnvelopeGrid& grid);

struct HypothesisReport {
  int samples = 0;
  double growth_upper_ratio = 0.0;  // max W / (1 + |F|^p)
  double growth_lower_ratio = 0.0;  // min W / |F|^p over |F| >= 1
  int growth_lower_violations = 0;  // against declared (c, C)
  int growth_upper_violations = 0;
  double lipschitz_ratio = 0.0;     // max |W(F)-W(G)| / ((1+|F|^{p-1}+|G|^{p-1})|F-G|)
  int lipschitz_violations = 0;     // against declared L
  std::optional<double> stiff_ratio_min;  // min W_stiff / dist^p
  std::optional<double> stiff_ratio_max;
};

/// Samples matrix pairs in the ball of radius 5 and checks the growth,
/// local Lipschitz and (for `stiff`) the coercivity-to-SO(n) conditions.
HypothesisReport validate_hypotheses(const EnergyDensity& W, int n, unsigned seed = 11, int samples = 10000,
                                     const EnergyDensity* stiff = nullptr);

/// Integral over the domain of lambda W^qc((grad u)_lambda); +inf when the
/// field is not of the form grad u = R(x_n) + d (x) e_n at some quadrature node.
double hom_energy(const DeformationField& limit, const EnergyDensity& W, double lambda,
                  const CellDiscretization& disc = {}, const QuadratureSpec& res = {});
double hom_energy(const RotationCurve& R, const ShearProfile& db, const EnergyDensity& W, double lambda,
                  const CuboidDomain& dom, const CellDiscretization& disc = {}, const QuadratureSpec& res = {});

struct LayeredEnergy {
  double stiff = 0.0;  // integral of dist^p over the stiff phase
  double soft = 0.0;   // integral of W_soft over the soft phase
  double total = 0.0;  // eps^{-alpha} stiff + soft
};

LayeredEnergy layered_energy(const DeformationField& field, const EnergyDensity& W_soft, double alpha, double p,
                             const QuadratureSpec& res = {});

}  // namespace stratum

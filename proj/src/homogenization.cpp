#include "stratum/homogenization.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "stratum/rigidity_pipeline.hpp"

namespace stratum {

namespace {

// Cell-problem values keyed by F_lambda rounded to 1e-9.
class CellCache {
 public:
  CellCache(const EnergyDensity& W, double lambda, const CellDiscretization& disc)
      : W_(W), lambda_(lambda), disc_(disc) {}

  double operator()(const Mat& F) {
    std::vector<long long> key;
    for (Eigen::Index i = 0; i < F.size(); ++i) key.push_back(std::llround(F.data()[i] * 1e9));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = cell_minimize(F, W_, lambda_, disc_).value;
    cache_.emplace(std::move(key), v);
    return v;
  }

 private:
  const EnergyDensity& W_;
  double lambda_;
  CellDiscretization disc_;
  std::map<std::vector<long long>, double> cache_;
};

}  // namespace

double hom_energy(const DeformationField& limit, const EnergyDensity& W, double lambda,
                  const CellDiscretization& disc, const QuadratureSpec& res) {
  if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("hom_energy: lambda must lie in (0,1)");
  const int n = limit.n;
  const CuboidDomain& dom = limit.domain;
  // A single period spanning the domain turns the layered rule into a plain
  // tensor rule.
  const LayerConfig whole(0.5, 2 * dom.height());
  const Vec mid = dom.center();
  CellCache cache(W, lambda, disc);
  bool admissible = true;
  const double value = layered_integral(
      dom, whole, PhaseFilter::Both,
      [&](const Vec& x) {
        if (!admissible) return 0.0;
        const auto dec = decompose_a(limit.grad_u(x));
        Vec y = mid;
        y(n - 1) = x(n - 1);
        const auto ref = decompose_a(limit.grad_u(y));
        if (!dec || !ref || (dec->rotation.matrix() - ref->rotation.matrix()).norm() > 1e-8) {
          admissible = false;
          return 0.0;
        }
        const Mat F = dec->reconstruct();
        return W.convex ? w_hom_convex(F, W, lambda) : cache(F);
      },
      res);
  return admissible ? value : std::numeric_limits<double>::infinity();
}

double hom_energy(const RotationCurve& R, const ShearProfile& db, const EnergyDensity& W, double lambda,
                  const CuboidDomain& dom, const CellDiscretization& disc, const QuadratureSpec& res) {
  DeformationField f;
  f.n = dom.dim();
  f.domain = dom;
  const int n = f.n;
  f.grad_u = [R, db, n](const Vec& x) {
    const double t = x(n - 1);
    Mat G = R.sigma(t);
    G.col(n - 1) += R.dsigma(t) * x + db(t);
    return G;
  };
  return hom_energy(f, W, lambda, disc, res);
}

LayeredEnergy layered_energy(const DeformationField& field, const EnergyDensity& W_soft, double alpha, double p,
                             const QuadratureSpec& res) {
  if (!field.cfg) throw std::invalid_argument("layered_energy: field carries no layer configuration");
  LayeredEnergy e;
  e.stiff = stiff_energy(field, p, res);
  e.soft = layered_integral(
      field.domain, *field.cfg, PhaseFilter::Soft, [&](const Vec& x) { return W_soft(field.grad_u(x)); }, res);
  e.total = std::pow(field.cfg->eps, -alpha) * e.stiff + e.soft;
  return e;
}

}  // namespace stratum

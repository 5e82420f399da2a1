#include "stratum/layered_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stratum {

CuboidDomain::CuboidDomain(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() < 2 || lower.size() > kMaxDim)
    throw std::invalid_argument("CuboidDomain: corners must share dimension 2 or 3");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower(i) < upper(i))) throw std::invalid_argument("CuboidDomain: lower must be below upper");
}

CuboidDomain CuboidDomain::unit(int n) { return CuboidDomain(Vec::Zero(n), Vec::Ones(n)); }

double CuboidDomain::volume() const { return (upper - lower).prod(); }

CuboidDomain CuboidDomain::with_height(double lo, double hi) const {
  Vec a = lower;
  Vec b = upper;
  a(dim() - 1) = lo;
  b(dim() - 1) = hi;
  return CuboidDomain(a, b);
}

Phase phase(double xn, const LayerConfig& cfg) {
  const double s = xn / cfg.eps;
  const double frac = s - std::floor(s);
  return (frac > 0 && frac < cfg.lambda) ? Phase::Soft : Phase::Stiff;
}

double midsection(double t, const LayerConfig& cfg) {
  return cfg.eps * std::ceil(t / cfg.eps) - cfg.eps + 0.5 * (1 + cfg.lambda) * cfg.eps;
}

void QuadratureSpec::validate() const {
  if (cells_per_layer < 1) throw std::invalid_argument("quadrature: cells_per_layer must be >= 1");
  if (transverse_cells < 1) throw std::invalid_argument("quadrature: transverse_cells must be >= 1");
  if (gauss_points < 1 || gauss_points > 5) throw std::invalid_argument("quadrature: gauss_points must be in 1..5");
}

const GaussRule& gauss_rule(int points) {
  static const std::array<GaussRule, 5> rules = [] {
    std::array<GaussRule, 5> r{};
    r[0] = {{0.0}, {2.0}, 1};
    r[1] = {{-0.57735026918962576, 0.57735026918962576}, {1.0, 1.0}, 2};
    r[2] = {{-0.77459666924148338, 0.0, 0.77459666924148338},
            {0.55555555555555556, 0.88888888888888889, 0.55555555555555556},
            3};
    r[3] = {{-0.86113631159405258, -0.33998104358485626, 0.33998104358485626, 0.86113631159405258},
            {0.34785484513745386, 0.65214515486254614, 0.65214515486254614, 0.34785484513745386},
            4};
    r[4] = {{-0.90617984593866399, -0.53846931010568309, 0.0, 0.53846931010568309, 0.90617984593866399},
            {0.23692688505618909, 0.47862867049936647, 0.56888888888888889, 0.47862867049936647,
             0.23692688505618909},
            5};
    return r;
  }();
  if (points < 1 || points > 5) throw std::invalid_argument("gauss_rule: points must be in 1..5");
  return rules[points - 1];
}

std::vector<LayerSegment> layer_segments(double lo, double hi, const LayerConfig& cfg) {
  std::vector<LayerSegment> out;
  const double tiny = 1e-13 * cfg.eps;
  const long k0 = static_cast<long>(std::floor(lo / cfg.eps)) - 1;
  const long k1 = static_cast<long>(std::ceil(hi / cfg.eps)) + 1;
  auto push = [&](double a, double b, Phase ph) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (b - a > tiny) out.push_back({a, b, ph});
  };
  for (long k = k0; k <= k1; ++k) {
    const double start = static_cast<double>(k) * cfg.eps;
    const double mid = (static_cast<double>(k) + cfg.lambda) * cfg.eps;
    const double end = static_cast<double>(k + 1) * cfg.eps;
    push(start, mid, Phase::Soft);
    push(mid, end, Phase::Stiff);
  }
  return out;
}

StripSet strips(const CuboidDomain& dom, const LayerConfig& cfg) {
  StripSet out;
  const int n = dom.dim();
  const double lo = dom.lower(n - 1);
  const double hi = dom.upper(n - 1);
  const double slack = 1e-9;
  const long first = static_cast<long>(std::floor(lo / cfg.eps + slack));
  const long last = static_cast<long>(std::ceil(hi / cfg.eps - slack));
  for (long i = first; i < last; ++i) {
    const double a = static_cast<double>(i) * cfg.eps;
    const double b = static_cast<double>(i + 1) * cfg.eps;
    const bool inside = a >= lo - slack * cfg.eps && b <= hi + slack * cfg.eps;
    const double ca = std::max(a, lo);
    const double cb = std::min(b, hi);
    if (!(cb - ca > slack * cfg.eps)) continue;
    Strip s{i, dom.with_height(ca, cb)};
    (inside ? out.full : out.partial).push_back(s);
  }
  return out;
}

}  // namespace stratum

#include "stratum/rigidity_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace stratum {

namespace {

const LayerConfig& require_layers(const DeformationField& field) {
  if (!field.cfg) throw std::invalid_argument("field carries no layer configuration");
  return *field.cfg;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double stiff_energy(const DeformationField& field, double p, const QuadratureSpec& res) {
  if (!(p >= 1)) throw std::invalid_argument("stiff_energy: p must be >= 1");
  const LayerConfig& cfg = require_layers(field);
  return layered_integral(
      field.domain, cfg, PhaseFilter::Stiff, [&](const Vec& x) { return std::pow(dist_so(field.grad_u(x)), p); },
      res);
}

const StripRotation* PiecewiseRotationField::find(long index) const {
  auto it = std::lower_bound(strips.begin(), strips.end(), index,
                             [](const StripRotation& s, long i) { return s.index < i; });
  return (it != strips.end() && it->index == index) ? &*it : nullptr;
}

Vec PiecewiseRotationField::operator()(const Vec& x) const {
  const long i = static_cast<long>(std::floor(x(x.size() - 1) / cfg.eps));
  const StripRotation* s = find(i);
  if (!s) throw std::out_of_range("rigid approximant: point lies outside the fitted strips");
  return s->rotation.matrix() * x + s->translation;
}

Mat PiecewiseRotationField::sigma(double t) const {
  const StripRotation* s = find(static_cast<long>(std::floor(t / cfg.eps)));
  if (!s) throw std::out_of_range("rotation field: parameter lies outside the fitted strips");
  return s->rotation.matrix();
}

PiecewiseRotationField layerwise_procrustes(const DeformationField& field, const QuadratureSpec& res) {
  const LayerConfig& cfg = require_layers(field);
  if (res.cells_per_layer * res.gauss_points < 2)
    throw std::invalid_argument("layerwise_procrustes: need at least two sample planes per layer");
  const StripSet set = strips(field.domain, cfg);
  if (set.full.empty()) throw std::invalid_argument("layerwise_procrustes: no full strip in the domain");
  PiecewiseRotationField out;
  out.cfg = cfg;
  out.a = static_cast<double>(set.full.front().index) * cfg.eps;
  out.b = static_cast<double>(set.full.back().index + 1) * cfg.eps;
  for (const Strip& s : set.full) {
    const double vol =
        layered_integral(s.box, cfg, PhaseFilter::Stiff, [](const Vec&) { return 1.0; }, res);
    const Mat mean = layered_integral(s.box, cfg, PhaseFilter::Stiff, field.grad_u, res) / vol;
    const auto fit = procrustes_rotation(mean);
    const Mat R = fit.rotation.matrix();
    const Vec b =
        layered_integral(s.box, cfg, PhaseFilter::Stiff, [&](const Vec& x) { return Vec(field.u(x) - R * x); }, res) /
        vol;
    out.strips.push_back({s.index, fit.rotation, b, fit.degenerate});
  }
  return out;
}

double approx_error(const DeformationField& field, const PiecewiseRotationField& w, double p,
                    const QuadratureSpec& res) {
  if (!(p >= 1)) throw std::invalid_argument("approx_error: p must be >= 1");
  const LayerConfig& cfg = require_layers(field);
  const int n = field.domain.dim();
  const double lo = field.domain.lower(n - 1) + cfg.eps;
  const double hi = field.domain.upper(n - 1) - cfg.eps;
  if (!(hi > lo)) throw std::invalid_argument("approx_error: domain is too thin for the shrink");
  const CuboidDomain inner = field.domain.with_height(lo, hi);
  const double integral = layered_integral(
      inner, cfg, PhaseFilter::Both, [&](const Vec& x) { return std::pow((field.u(x) - w(x)).norm(), p); }, res);
  return std::pow(integral, 1.0 / p);
}

double sigma_shift_modulus(const PiecewiseRotationField& sigma, double xi, double p) {
  if (!(p >= 1)) throw std::invalid_argument("sigma_shift_modulus: p must be >= 1");
  if (sigma.strips.empty()) throw std::invalid_argument("sigma_shift_modulus: empty rotation field");
  const double length = sigma.b - sigma.a;
  if (!(xi >= 0) || !(xi < length)) throw std::invalid_argument("sigma_shift_modulus: shift out of range");
  if (xi == 0) return 0.0;
  const double eps = sigma.cfg.eps;
  const double lo = sigma.a;
  const double hi = sigma.b - xi;
  std::vector<double> cuts{lo, hi};
  for (const StripRotation& s : sigma.strips) {
    for (double edge : {static_cast<double>(s.index) * eps, static_cast<double>(s.index + 1) * eps}) {
      if (edge > lo && edge < hi) cuts.push_back(edge);
      if (edge - xi > lo && edge - xi < hi) cuts.push_back(edge - xi);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    if (len <= 0) continue;
    const double t = 0.5 * (cuts[k] + cuts[k + 1]);
    total += std::pow((sigma.sigma(t + xi) - sigma.sigma(t)).norm(), p) * len;
  }
  return std::pow(total, 1.0 / p);
}

void write_rotations_csv(std::ostream& os, const PiecewiseRotationField& w) {
  if (w.strips.empty()) return;
  const int n = w.strips.front().rotation.dim();
  os << "i";
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) os << ",R_" << r + 1 << c + 1;
  for (int r = 0; r < n; ++r) os << ",b_" << r + 1;
  os << ",degenerate\n";
  for (const StripRotation& s : w.strips) {
    os << s.index;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) os << ',' << g17(s.rotation.matrix()(r, c));
    for (int r = 0; r < n; ++r) os << ',' << g17(s.translation(r));
    os << ',' << (s.degenerate ? 1 : 0) << '\n';
  }
}

ScalingReport fit_scaling(const std::vector<std::pair<double, double>>& samples, double zero_threshold) {
  if (samples.size() < 3) throw std::invalid_argument("fit_scaling: need at least three samples");
  ScalingReport rep;
  rep.samples = samples;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [eps, e] : samples) {
    if (!(eps > 0)) throw std::invalid_argument("fit_scaling: eps must be positive");
    if (!(e >= 0)) throw std::invalid_argument("fit_scaling: energies must be nonnegative");
    if (e <= zero_threshold) {
      rep.zero_eps.push_back(eps);
      continue;
    }
    xs.push_back(std::log(eps));
    ys.push_back(std::log(e));
  }
  if (xs.empty()) {
    rep.exact_rigidity = true;
    return rep;
  }
  if (xs.size() < 2) throw std::invalid_argument("fit_scaling: fewer than two positive energies");
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sx += xs[i], sy += ys[i];
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0)) throw std::invalid_argument("fit_scaling: eps values must differ");
  rep.fitted_slope = sxy / sxx;
  rep.fitted_intercept = my - rep.fitted_slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (rep.fitted_intercept + rep.fitted_slope * xs[i]);
    ss += r * r;
  }
  rep.residual = std::sqrt(ss / m);
  return rep;
}

namespace {

// Tensor Gauss rule over a box: 4 cells x 5 points per axis.
struct BoxRule {
  std::vector<Vec> x;
  std::vector<double> w;
};

BoxRule box_rule(const CuboidDomain& P) {
  const int n = P.dim();
  const GaussRule& g = gauss_rule(5);
  const int cells = 4;
  std::vector<std::vector<std::pair<double, double>>> axis(n);
  for (int j = 0; j < n; ++j) {
    const double h = (P.upper(j) - P.lower(j)) / cells;
    for (int c = 0; c < cells; ++c)
      for (int q = 0; q < g.size; ++q)
        axis[j].emplace_back(P.lower(j) + (c + 0.5) * h + 0.5 * h * g.x[q], 0.5 * h * g.w[q]);
  }
  const std::size_t per = axis[0].size();
  std::size_t total = 1;
  for (int j = 0; j < n; ++j) total *= per;
  BoxRule r;
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec x(n);
    double w = 1;
    std::size_t rem = flat;
    for (int j = 0; j < n; ++j) {
      x(j) = axis[j][rem % per].first;
      w *= axis[j][rem % per].second;
      rem /= per;
    }
    r.x.push_back(x);
    r.w.push_back(w);
  }
  return r;
}

double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1) / 2;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

ReversePoincare reverse_poincare_check(const Rotation& R1, const Rotation& R2, const CuboidDomain& P, double p) {
  if (!(p >= 1)) throw std::invalid_argument("reverse_poincare_check: p must be >= 1");
  const int n = P.dim();
  if (R1.dim() != n || R2.dim() != n) throw std::invalid_argument("reverse_poincare_check: dimension mismatch");
  const Vec sides = P.upper - P.lower;
  const double l = sides(0);
  for (int j = 1; j < n - 1; ++j)
    if (std::abs(sides(j) - l) > 1e-12 * l)
      throw std::invalid_argument("reverse_poincare_check: cross-section must be a cube");
  const Mat A = R2.matrix() - R1.matrix();
  const double normA = A.norm();
  ReversePoincare out;
  out.translation = Vec::Zero(n);
  if (normA <= 1e-14) {
    out.degenerate = true;
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double vol = P.volume();
  Vec d = -A * P.center();
  double lhs = 0;
  if (p == 2) {
    for (int j = 0; j < n; ++j) lhs += A.col(j).squaredNorm() * sides(j) * sides(j) / 12.0;
    lhs *= vol;
  } else {
    const BoxRule rule = box_rule(P);
    auto objective = [&](const Vec& dd) {
      double s = 0;
      for (std::size_t k = 0; k < rule.x.size(); ++k) s += rule.w[k] * std::pow((A * rule.x[k] + dd).norm(), p);
      return s;
    };
    const double radius = normA * sides.norm();
    for (int sweep = 0; sweep < 500; ++sweep) {
      double change = 0;
      for (int j = 0; j < n; ++j) {
        const double old = d(j);
        auto line = [&](double v) {
          Vec dd = d;
          dd(j) = v;
          return objective(dd);
        };
        d(j) = golden_min(line, old - radius, old + radius, 1e-12);
        change = std::max(change, std::abs(d(j) - old));
      }
      if (change < 1e-10) break;
    }
    lhs = objective(d);
  }
  out.lhs = lhs;
  out.translation = d;
  out.ratio = lhs / (std::pow(l, p) * vol * std::pow(normA, p));
  return out;
}

IncompressibilityReport incompressibility_report(const DeformationField& limit, int per_axis, double tol) {
  const int n = limit.n;
  const CuboidDomain& dom = limit.domain;
  IncompressibilityReport rep;
  rep.det_min = std::numeric_limits<double>::infinity();
  rep.det_max = -std::numeric_limits<double>::infinity();
  rep.limit_form = true;
  rep.gamma_min = std::numeric_limits<double>::infinity();
  rep.gamma_max = -std::numeric_limits<double>::infinity();
  std::vector<Mat> first_in_plane(per_axis);
  std::vector<bool> seen(per_axis, false);
  std::optional<Vec> normal0;
  std::optional<Mat> R0;
  bool rotation_constant = true;
  double det_sum = 0;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= per_axis;
  for (int flat = 0; flat < total; ++flat) {
    Vec x(n);
    int rem = flat;
    int plane = 0;
    for (int i = 0; i < n; ++i) {
      const int k = rem % per_axis;
      rem /= per_axis;
      x(i) = dom.lower(i) + (k + 0.5) / per_axis * (dom.upper(i) - dom.lower(i));
      if (i == n - 1) plane = k;
    }
    const Mat G = limit.grad_u(x);
    const double det = G.determinant();
    det_sum += det;
    rep.det_min = std::min(rep.det_min, det);
    rep.det_max = std::max(rep.det_max, det);
    ++rep.samples;
    const auto dec = decompose_a(G, tol);
    if (!dec) {
      rep.limit_form = false;
      continue;
    }
    const Mat R = dec->rotation.matrix();
    if (!seen[plane]) {
      seen[plane] = true;
      first_in_plane[plane] = R;
    } else if ((R - first_in_plane[plane]).norm() > tol) {
      rep.limit_form = false;
    }
    const Vec a = R.transpose() * dec->shear;
    rep.a_normal_max = std::max(rep.a_normal_max, std::abs(a(n - 1)));
    if (!normal0) normal0 = R.col(n - 1);
    rep.rotation_normal_spread = std::max(rep.rotation_normal_spread, (R.col(n - 1) - *normal0).norm());
    if (!R0) R0 = R;
    else if ((R - *R0).norm() > tol) rotation_constant = false;
    rep.gamma_min = std::min(rep.gamma_min, a(0));
    rep.gamma_max = std::max(rep.gamma_max, a(0));
  }
  rep.det_mean = det_sum / rep.samples;
  rep.volume_preserving = std::abs(rep.det_min - 1) <= tol && std::abs(rep.det_max - 1) <= tol;
  rep.a_normal_zero = rep.limit_form && rep.a_normal_max <= tol;
  rep.rotation_normal_constant = rep.limit_form && rep.rotation_normal_spread <= tol;
  if (n == 2 && rep.limit_form && rotation_constant && rep.a_normal_zero) rep.shear_rotation = *R0;
  return rep;
}

IncompressibilityReport incompressibility_report(const RotationCurve& R, const ShearProfile& db,
                                                 const CuboidDomain& dom, int per_axis, double tol) {
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
  return incompressibility_report(f, per_axis, tol);
}

}  // namespace stratum

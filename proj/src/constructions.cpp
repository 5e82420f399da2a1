#include "stratum/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>
#include <stdexcept>

namespace stratum {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool near_interface(double t, double h, const LayerConfig& cfg) {
  return phase(t - h, cfg) != phase(t, cfg) || phase(t + h, cfg) != phase(t, cfg);
}

}  // namespace

double gradient_consistency_error(const DeformationField& field, int samples, unsigned seed, double h) {
  const int n = field.n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double margin = 10 * h;
  double worst = 0.0;
  int taken = 0;
  int attempts = 0;
  while (taken < samples && attempts < 100 * samples) {
    ++attempts;
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      const double lo = field.domain.lower(i) + margin;
      const double hi = field.domain.upper(i) - margin;
      x(i) = lo + (hi - lo) * unit(rng);
    }
    if (field.cfg && near_interface(x(n - 1), margin, *field.cfg)) continue;
    ++taken;
    const Mat G = field.grad_u(x);
    Mat fd(n, n);
    for (int j = 0; j < n; ++j) {
      Vec xp = x;
      Vec xm = x;
      xp(j) += h;
      xm(j) -= h;
      fd.col(j) = (field.u(xp) - field.u(xm)) / (2 * h);
    }
    worst = std::max(worst, (fd - G).norm() / std::max(1.0, G.norm()));
  }
  return worst;
}

void write_samples_csv(std::ostream& os, const DeformationField& field, const std::vector<Vec>& points) {
  const int n = field.n;
  for (int i = 0; i < n; ++i) os << "x_" << i + 1 << ',';
  for (int i = 0; i < n; ++i) os << "u_" << i + 1 << ',';
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << "g_" << i + 1 << j + 1 << ',';
  os << "phase\n";
  for (const Vec& x : points) {
    const Vec u = field.u(x);
    const Mat G = field.grad_u(x);
    for (int i = 0; i < n; ++i) os << g17(x(i)) << ',';
    for (int i = 0; i < n; ++i) os << g17(u(i)) << ',';
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) os << g17(G(i, j)) << ',';
    if (!field.cfg) os << "none\n";
    else os << (phase(x, *field.cfg) == Phase::Soft ? "soft\n" : "stiff\n");
  }
}

void validate_profile(const ProfileField& pf) {
  const int n = pf.n;
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("profile: dimension must be 2 or 3");
  if (!pf.f || !pf.d1f || !pf.d11f || !pf.dnf) throw std::invalid_argument("profile: missing callable");
  const int per_axis = 5;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= per_axis;
  for (int flat = 0; flat < total; ++flat) {
    Vec x(n);
    int rem = flat;
    for (int i = 0; i < n; ++i) {
      const double s = static_cast<double>(rem % per_axis) / (per_axis - 1);
      rem /= per_axis;
      x(i) = (i == n - 1) ? 2.0 * s : s;
    }
    const Vec t = pf.d1f(x);
    if (!(std::abs(t.norm() - 1.0) <= 1e-8)) throw std::invalid_argument("profile: |d1 f| != 1");
    for (int i = 1; i < n - 1; ++i) {
      if (!(std::abs(t(i)) <= 1e-8)) throw std::invalid_argument("profile: d1 f leaves span{e_1, e_n}");
      const double h = 1e-6;
      Vec xp = x;
      Vec xm = x;
      xp(i) += h;
      xm(i) -= h;
      const Vec di = (pf.f(xp) - pf.f(xm)) / (2 * h);
      if (!((di - unit_vector(n, i)).norm() <= 1e-6)) throw std::invalid_argument("profile: d_i f != e_i");
    }
  }
}

DeformationField build_layer_deformation(const ProfileField& pf, const LayerConfig& cfg, const CuboidDomain& dom) {
  validate_profile(pf);
  const int n = pf.n;
  if (dom.dim() != n) throw std::invalid_argument("build_layer_deformation: dimension mismatch");
  const double eps = cfg.eps;
  const double lam = cfg.lambda;
  const double top = 0.5 * (1 - lam) * eps;  // offset from a midsection to its layer face
  const double mix = (1 - lam) / (2 * lam);
  auto f = pf.f;
  auto d1f = pf.d1f;
  auto d11f = pf.d11f;

  DeformationField out;
  out.n = n;
  out.domain = dom;
  out.cfg = cfg;
  out.u = [=](const Vec& x) -> Vec {
    const double t = x(n - 1);
    Vec xh = x;
    xh(n - 1) = midsection(t, cfg);
    if (phase(t, cfg) == Phase::Stiff) return f(xh) + (t - xh(n - 1)) * perp(d1f(xh));
    Vec xl = xh;
    xl(n - 1) -= eps;
    const Vec lower_face = f(xl) + top * perp(d1f(xl));
    const Vec upper_face = f(xh) - top * perp(d1f(xh));
    const double s = t - (eps * std::ceil(t / eps) - eps);
    return lower_face + (s / (lam * eps)) * (upper_face - lower_face);
  };
  out.grad_u = [=](const Vec& x) -> Mat {
    const double t = x(n - 1);
    Vec xh = x;
    xh(n - 1) = midsection(t, cfg);
    Mat G = Mat::Identity(n, n);
    if (phase(t, cfg) == Phase::Stiff) {
      G.col(0) = d1f(xh) + (t - xh(n - 1)) * perp(d11f(xh));
      G.col(n - 1) = perp(d1f(xh));
      return G;
    }
    Vec xl = xh;
    xl(n - 1) -= eps;
    const double s = t - eps * std::ceil(t / eps) + eps;
    const Vec a_hi = d1f(xh);
    const Vec a_lo = d1f(xl);
    const Vec k_hi = perp(d11f(xh));
    const Vec k_lo = perp(d11f(xl));
    G.col(0) = a_lo + top * k_lo + (s / (lam * eps)) * (a_hi - a_lo) - mix * s * (k_hi + k_lo);
    G.col(n - 1) = (f(xh) - f(xl)) / (lam * eps) - mix * (perp(a_hi) + perp(a_lo));
    return G;
  };
  return out;
}

namespace {

// Limit field whose gradient is [d1 f | e_2 .. e_{n-1} | dn f] and u = f.
DeformationField profile_limit(int n, std::function<Vec(const Vec&)> f, std::function<Vec(const Vec&)> d1f,
                               std::function<Vec(const Vec&)> dnf) {
  DeformationField lim;
  lim.n = n;
  lim.domain = CuboidDomain::unit(n);
  lim.u = std::move(f);
  lim.grad_u = [n, d1f, dnf](const Vec& x) {
    Mat G = Mat::Identity(n, n);
    G.col(0) = d1f(x);
    G.col(n - 1) = dnf(x);
    return G;
  };
  return lim;
}

Vec middle_identity(const Vec& x) {
  const int n = static_cast<int>(x.size());
  Vec v = Vec::Zero(n);
  for (int i = 1; i < n - 1; ++i) v(i) = x(i);
  return v;
}

}  // namespace

ProfileField example_uniform_bending(int n, const CurveSpec& g) {
  validate_curve(g);
  if (!g.arc_length) throw std::invalid_argument("uniform bending: curve must be arc-length");
  ProfileField pf;
  pf.n = n;
  pf.f = [n, g](const Vec& x) {
    Vec v = embed(n, g.g(x(0))) + middle_identity(x);
    v(n - 1) += x(n - 1);
    return v;
  };
  pf.d1f = [n, g](const Vec& x) { return embed(n, g.dg(x(0))); };
  pf.d11f = [n, g](const Vec& x) { return embed(n, g.d2g(x(0))); };
  pf.dnf = [n](const Vec&) { return unit_vector(n, n - 1); };
  pf.d11_bound = g.curvature_bound;
  pf.limit = profile_limit(n, pf.f, pf.d1f, pf.dnf);
  return pf;
}

ProfileField example_volume_bending(int n, const CurveSpec& g) {
  validate_curve(g);
  if (!g.arc_length) throw std::invalid_argument("volume bending: curve must be arc-length");
  ProfileField pf;
  pf.n = n;
  pf.f = [n, g](const Vec& x) {
    const double s = x(n - 1) + 1;
    return Vec(s * embed(n, g.g(x(0) / s)) + middle_identity(x));
  };
  pf.d1f = [n, g](const Vec& x) { return embed(n, g.dg(x(0) / (x(n - 1) + 1))); };
  pf.d11f = [n, g](const Vec& x) {
    const double s = x(n - 1) + 1;
    return Vec(embed(n, g.d2g(x(0) / s)) / s);
  };
  pf.dnf = [n, g](const Vec& x) {
    const double tau = x(0) / (x(n - 1) + 1);
    return embed(n, g.g(tau) - tau * g.dg(tau));
  };
  pf.d11_bound = g.curvature_bound;
  pf.limit = profile_limit(n, pf.f, pf.d1f, pf.dnf);
  return pf;
}

VolumeBendingDeterminant volume_bending_determinant(int n, const CurveSpec& g, const Vec& x) {
  const ProfileField pf = example_volume_bending(n, g);
  const double tau = x(0) / (x(n - 1) + 1);
  const Vec gv = embed(n, g.g(tau));
  const Vec dg = embed(n, g.dg(tau));
  return {pf.limit.grad_u(x).determinant(), dg.dot(perp(gv))};
}

ProfileField example_wrinkling(int n, const CurveSpec& g, double beta, double gamma, double eps) {
  validate_curve(g);
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("wrinkling: gamma must lie in (0,1)");
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("wrinkling: eps must lie in (0,1)");
  if (!g.arc_length || !g.period || *g.period != 1.0)
    throw std::invalid_argument("wrinkling: curve must be arc-length with 1-periodic derivative");
  for (int i = 0; i < 100; ++i) {
    const double t = i / 100.0;
    if (!((g.dg(t + 1) - g.dg(t)).norm() <= 1e-10)) throw std::invalid_argument("wrinkling: g' is not 1-periodic");
  }
  const double scale = std::pow(eps, gamma);
  ProfileField pf;
  pf.n = n;
  pf.f = [=](const Vec& x) {
    Vec v = scale * embed(n, g.g(x(0) / scale)) + middle_identity(x);
    v(n - 1) += beta * x(n - 1);
    return v;
  };
  pf.d1f = [=](const Vec& x) { return embed(n, g.dg(x(0) / scale)); };
  pf.d11f = [=](const Vec& x) { return Vec(embed(n, g.d2g(x(0) / scale)) / scale); };
  pf.dnf = [=](const Vec&) { return Vec(beta * unit_vector(n, n - 1)); };
  pf.d11_bound = g.curvature_bound / scale;

  const Vec chord = embed(n, g.g(1.0) - g.g(0.0));
  Mat F = Mat::Identity(n, n);
  F.col(0) = chord;
  F(n - 1, n - 1) = beta;
  DeformationField lim;
  lim.n = n;
  lim.domain = CuboidDomain::unit(n);
  lim.u = [F](const Vec& x) { return Vec(F * x); };
  lim.grad_u = [F](const Vec&) { return F; };
  pf.limit = lim;
  return pf;
}

ProfileField example_layer_rotation(int n, const RotationCurve& Rc) {
  validate_rotation_curve(Rc);
  if (!(Rc.a <= 0.0 && Rc.b >= 2.0)) throw std::invalid_argument("layer rotation: curve must cover [0, 2]");
  for (int k = 0; k <= 100; ++k) {
    const double t = 2.0 * k / 100;
    const Mat R = Rc.sigma(t);
    for (int i = 1; i < n - 1; ++i)
      if (!((R.col(i) - unit_vector(n, i)).norm() <= 1e-10))
        throw std::invalid_argument("layer rotation: R must fix e_2 .. e_{n-1}");
  }
  const RotationCurve R = reflect_extend(Rc);
  const Vec e1 = unit_vector(n, 0);
  const Vec en = unit_vector(n, n - 1);
  ProfileField pf;
  pf.n = n;
  pf.f = [=](const Vec& x) {
    Vec v = (x(0) - 0.5) * (R.sigma(x(n - 1)) * e1) + 0.5 * e1 + middle_identity(x);
    v(n - 1) += x(n - 1);
    return v;
  };
  pf.d1f = [=](const Vec& x) { return Vec(R.sigma(x(n - 1)) * e1); };
  pf.d11f = [n](const Vec&) { return Vec(Vec::Zero(n)); };
  pf.dnf = [=](const Vec& x) { return Vec((x(0) - 0.5) * (R.dsigma(x(n - 1)) * e1) + en); };
  pf.d11_bound = 0.0;

  // u = R(x_n) x + b(x_n) with b(t) = (e_1 - R e_1)/2 + t (e_n - R e_n),
  // which reproduces f exactly.
  DeformationField lim;
  lim.n = n;
  lim.domain = CuboidDomain::unit(n);
  lim.u = [=](const Vec& x) {
    const double t = x(n - 1);
    const Mat M = R.sigma(t);
    return Vec(M * x + 0.5 * (e1 - M * e1) + t * (en - M * en));
  };
  lim.grad_u = [=](const Vec& x) {
    const double t = x(n - 1);
    const Mat M = R.sigma(t);
    const Mat D = R.dsigma(t);
    const Vec db = -0.5 * (D * e1) + en - M * en - t * (D * en);
    Mat G = M;
    G.col(n - 1) += D * x + db;
    return G;
  };
  pf.limit = lim;
  return pf;
}

DeformationField build_laminate(const Mat& F, const LayerConfig& cfg, const CuboidDomain& dom) {
  const auto dec = decompose_a(F);
  if (!dec) throw std::invalid_argument("build_laminate: F is not in the admissible set");
  const int n = dom.dim();
  if (F.rows() != n) throw std::invalid_argument("build_laminate: dimension mismatch");
  const Mat R = dec->rotation.matrix();
  const Vec d = dec->shear;
  const Mat Fl = f_lambda(*dec, cfg.lambda);
  const double eps = cfg.eps;
  const double lam = cfg.lambda;

  // Soft measure of (0, t).
  auto soft_measure = [eps, lam](double t) {
    const double k = std::floor(t / eps);
    const double r = t - k * eps;
    return k * lam * eps + std::min(r, lam * eps);
  };
  // Mean of soft_measure over the domain height: it is piecewise linear, so
  // the trapezoid rule on each layer is exact.
  const double lo = dom.lower(n - 1);
  const double hi = dom.upper(n - 1);
  double integral = 0.0;
  for (const LayerSegment& s : layer_segments(lo, hi, cfg))
    integral += 0.5 * (s.b - s.a) * (soft_measure(s.a) + soft_measure(s.b));
  const Vec shift = R * dom.center() + (d / lam) * (integral / (hi - lo));

  DeformationField out;
  out.n = n;
  out.domain = dom;
  out.cfg = cfg;
  out.u = [=](const Vec& x) { return Vec(R * x + (d / lam) * soft_measure(x(n - 1)) - shift); };
  out.grad_u = [=](const Vec& x) { return phase(x, cfg) == Phase::Soft ? Fl : R; };
  return out;
}

double ReparamPhi::operator()(double t) const {
  const double eps = cfg_.eps;
  if (phase(t, cfg_) == Phase::Soft) {
    const double start = std::floor(t / eps) * eps;
    return start + (t - start) / cfg_.lambda;
  }
  return eps * std::ceil(t / eps);
}

double ReparamPhi::derivative(double t) const { return phase(t, cfg_) == Phase::Soft ? 1.0 / cfg_.lambda : 0.0; }

namespace {

Vec simpson(const ShearProfile& d, double a, double b, int panels) {
  const int m = 2 * panels;
  const double h = (b - a) / m;
  Vec acc = d(a) + d(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * d(a + i * h);
  return acc * (h / 3);
}

struct CumulativeShear {
  std::vector<LayerSegment> segs;
  std::vector<Vec> start;  // b_eps at each segment's lower end
  ShearProfile d;
  double lambda;
  int panels;
  Vec offset;

  Vec raw(double t) const {
    auto it = std::upper_bound(segs.begin(), segs.end(), t,
                               [](double v, const LayerSegment& s) { return v < s.a; });
    const std::size_t i = it == segs.begin() ? 0 : static_cast<std::size_t>(it - segs.begin()) - 1;
    const LayerSegment& s = segs[i];
    if (s.phase == Phase::Stiff) return start[i];
    const double upto = std::min(t, s.b);
    if (upto <= s.a) return start[i];
    return start[i] + simpson(d, s.a, upto, panels) / lambda;
  }
  Vec operator()(double t) const { return raw(t) - offset; }
};

}  // namespace

DeformationField build_recovery_sequence(const RotationCurve& sigma, const ShearProfile& d, const LayerConfig& cfg,
                                         const CuboidDomain& dom, int simpson_panels) {
  validate_rotation_curve(sigma);
  if (!d) throw std::invalid_argument("recovery sequence: missing shear profile");
  if (simpson_panels < 1) throw std::invalid_argument("recovery sequence: simpson_panels must be >= 1");
  const int n = dom.dim();
  const double lo = dom.lower(n - 1);
  const double hi = dom.upper(n - 1);
  if (sigma.a > lo + 1e-12 || sigma.b < hi - 1e-12)
    throw std::invalid_argument("recovery sequence: rotation curve must cover the domain height");
  if (sigma.b - sigma.a < cfg.eps) throw std::invalid_argument("recovery sequence: eps exceeds the curve interval");
  const RotationCurve R = reflect_extend(sigma);
  const ReparamPhi phi(cfg);

  auto table = std::make_shared<CumulativeShear>();
  table->segs = layer_segments(lo - cfg.eps, hi + cfg.eps, cfg);
  table->d = d;
  table->lambda = cfg.lambda;
  table->panels = simpson_panels;
  table->offset = Vec::Zero(n);
  Vec acc = Vec::Zero(n);
  for (const LayerSegment& s : table->segs) {
    table->start.push_back(acc);
    if (s.phase == Phase::Soft) acc += simpson(d, s.a, s.b, simpson_panels) / cfg.lambda;
  }
  table->offset = table->raw(lo);

  const double lam = cfg.lambda;
  DeformationField out;
  out.n = n;
  out.domain = dom;
  out.cfg = cfg;
  out.u = [=](const Vec& x) {
    const double t = x(n - 1);
    return Vec(R.sigma(phi(t)) * x + (*table)(t));
  };
  out.grad_u = [=](const Vec& x) {
    const double t = x(n - 1);
    const double s = phi(t);
    Mat G = R.sigma(s);
    if (phase(t, cfg) == Phase::Soft) G.col(n - 1) += (R.dsigma(s) * x) / lam + d(t) / lam;
    return G;
  };
  return out;
}

Mat recovery_target_gradient(const RotationCurve& sigma, const ShearProfile& d, double lambda, const Vec& x) {
  const int n = static_cast<int>(x.size());
  const double t = x(n - 1);
  Mat G = sigma.sigma(t);
  G.col(n - 1) += (sigma.dsigma(t) * x + d(t)) / lambda;
  return G;
}

}  // namespace stratum

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stratum/experiments.hpp"

using namespace stratum;
namespace ex = stratum::experiments;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Appends to the detail line and folds the condition into the verdict.
void require(Outcome& o, bool ok, const std::string& what) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
  if (!ok) {
    o.pass = false;
    o.detail += " [failed]";
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ex::ExperimentConfig config(const std::string& text) {
  std::istringstream in(text);
  return ex::parse_config(in);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Vec> uniform_points(int n, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    out.push_back(x);
  }
  return out;
}

Mat rot2(double a) { return planar_rotation(2, a).matrix(); }

Outcome exact_rigidity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = config(
      "example = rotation\nrotation_angle = 0.2\nrotation_rate = 0.7\nrotation_curvature = 0.3\n"
      "eps_list = 0.125, 0.0625, 0.03125, 0.015625\n");
  const ex::RunOutput out = ex::run_scaling(cfg, 1);
  double worst = 0;
  for (const auto& r : out.rows)
    if (r.kind == "eps") worst = std::max(worst, *r.stiff_energy);
  Outcome o;
  require(o, worst <= 1e-20, "max stiff_energy " + num(worst));
  const double t = seconds_since(t0);
  require(o, t < 10, "runtime " + num(t) + " s");
  return o;
}

Outcome bending_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = config("example = bending\ncurve = circle\np = 2\n");
  const ex::RunOutput out = ex::run_scaling(cfg, 1);
  Outcome o;
  bool bounded = true;
  for (const auto& r : out.rows)
    if (r.kind == "eps" && *r.stiff_energy > 4 * *r.eps * *r.eps) bounded = false;
  require(o, bounded, "stiff_energy <= 4 eps^2 at every eps");
  const auto& s = out.rows.back();
  const double slope = s.slope.value_or(NAN);
  require(o, slope >= 1.9 && slope <= 2.2, "slope " + num(slope));
  const double t = seconds_since(t0);
  require(o, t < 60, "runtime " + num(t) + " s");
  return o;
}

Outcome wrinkling() {
  const double a = 1.0;
  const auto cfg = config(
      "example = wrinkling\ngamma = 0.5\np = 2\nwrinkle_amplitude = 1\nquad_transverse_cells = 256\n");
  const ex::RunOutput out = ex::run_scaling(cfg, 1);
  Outcome o;
  const double slope = out.rows.back().slope.value_or(NAN);
  require(o, slope >= 0.85 && slope <= 1.15, "slope " + num(slope));

  // Mean of d1 u . e1 at eps = 2^-7 against the chord of the periodic curve.
  const double eps = std::ldexp(1.0, -7);
  const ex::ExampleField f = ex::build_example(cfg, eps);
  const double mean = layered_integral(
                          f.field.domain, *f.field.cfg, PhaseFilter::Both,
                          [&](const Vec& x) { return f.field.grad_u(x)(0, 0); }, cfg.quadrature) /
                      f.field.domain.volume();
  const CurveSpec g = wrinkle_curve(a);
  const Eigen::Vector2d chord = g.g(1.0) - g.g(0.0);
  const double bessel = std::cyl_bessel_j(0.0, a);
  require(o, std::abs(mean - bessel) <= 0.05, "mean d1u " + num(mean) + " vs J0(1) " + num(bessel));
  require(o, chord.norm() < 1.0, "|mean g'| " + num(chord.norm()));
  return o;
}

Outcome procrustes_oracle() {
  // |F - R(a)|^2 = |F|^2 + 2 - 2 (cos a (F11 + F22) + sin a (F21 - F12)).
  const int N = 1000000;
  std::vector<double> c(N), s(N);
  for (int k = 0; k < N; ++k) {
    const double a = 2 * std::numbers::pi * k / N;
    c[k] = std::cos(a);
    s[k] = std::sin(a);
  }
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    Mat F(2, 2);
    F << u(rng), u(rng), u(rng), u(rng);
    const double tr = F(0, 0) + F(1, 1);
    const double sk = F(1, 0) - F(0, 1);
    double best = 1e300;
    for (int k = 0; k < N; ++k) best = std::min(best, -(c[k] * tr + s[k] * sk));
    const double grid = std::sqrt(std::max(0.0, F.squaredNorm() + 2 + 2 * best));
    worst = std::max(worst, std::abs(dist_so(F) - grid));
  }
  Outcome o;
  require(o, worst <= 1e-6, "max |dist_SO - grid| " + num(worst));

  // Strip-wise rigid motions.
  const LayerConfig cfg(0.4, 0.125);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::vector<Mat> R;
  std::vector<Vec> b;
  for (int i = 0; i < 8; ++i) {
    R.push_back(rot2(ang(rng)));
    b.push_back((Vec(2) << u(rng), u(rng)).finished());
  }
  auto strip = [&](const Vec& x) {
    return static_cast<std::size_t>(std::clamp<long>(cell_index(x(1), cfg), 0, 7));
  };
  DeformationField f;
  f.n = 2;
  f.domain = CuboidDomain::unit(2);
  f.cfg = cfg;
  f.u = [&](const Vec& x) { return Vec(R[strip(x)] * x + b[strip(x)]); };
  f.grad_u = [&](const Vec& x) { return R[strip(x)]; };
  const PiecewiseRotationField w = layerwise_procrustes(f);
  double err = w.strips.size() == 8 ? 0.0 : 1.0;
  for (const auto& st : w.strips) {
    err = std::max(err, (st.rotation.matrix() - R[st.index]).norm());
    err = std::max(err, (st.translation - b[st.index]).norm());
  }
  require(o, err <= 1e-10, "strip recovery error " + num(err));
  return o;
}

Outcome recovery_sequence() {
  const int n = 2;
  const RotationCurve R = angle_rotation_curve(
      n, [](double t) { return 0.4 * t + 0.3 * t * t; }, [](double t) { return 0.4 + 0.6 * t; }, 0, 1);
  const ShearProfile d = [](double t) { return Vec((Vec(2) << 0.5 + 0.2 * t, 0.1 * std::sin(3 * t)).finished()); };
  const CuboidDomain dom = CuboidDomain::unit(n);
  const double lambda = 0.5;
  auto soft_error = [&](double eps) {
    const LayerConfig cfg(lambda, eps);
    const DeformationField u = build_recovery_sequence(R, d, cfg, dom);
    return std::sqrt(layered_integral(
        dom, cfg, PhaseFilter::Soft,
        [&](const Vec& x) { return (u.grad_u(x) - recovery_target_gradient(R, d, lambda, x)).squaredNorm(); },
        QuadratureSpec{2, 4, 3}));
  };
  const double coarse = soft_error(0.25);
  const double fine = soft_error(std::ldexp(1.0, -7));

  const LayerConfig cfg(lambda, std::ldexp(1.0, -7));
  const DeformationField u = build_recovery_sequence(R, d, cfg, dom);
  double so = 0;
  for (const Vec& x : uniform_points(n, 5000, 5))
    if (phase(x, cfg) == Phase::Stiff) so = std::max(so, dist_so(u.grad_u(x)));
  const double curl = gradient_consistency_error(u, 1000, 9);

  Outcome o;
  require(o, so <= 1e-12, "max stiff dist_SO " + num(so));
  require(o, fine < 0.1 * coarse, "soft L2 error " + num(fine) + " vs " + num(coarse));
  require(o, curl <= 1e-5, "gradient consistency " + num(curl));
  return o;
}

Outcome reparametrization() {
  Outcome o;
  double worst = 0;
  int slope_misses = 0;
  for (double lambda : {0.3, 0.5, 0.75}) {
    for (double eps : {0.1, std::ldexp(1.0, -5)}) {
      const LayerConfig cfg(lambda, eps);
      const ReparamPhi phi = reparam_phi(cfg);
      std::mt19937_64 rng(41);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double sup = 0;
      for (int k = 0; k < 10000; ++k) {
        const double t = u(rng);
        sup = std::max(sup, std::abs(phi(t) - t));
        // Skip points within rounding of a breakpoint.
        const double r = t / eps - std::floor(t / eps);
        if (r < 1e-9 || std::abs(r - lambda) < 1e-9 || r > 1 - 1e-9) continue;
        const double expected = r < lambda ? 1 / lambda : 0.0;
        if (phi.derivative(t) != expected) ++slope_misses;
      }
      worst = std::max(worst, sup / eps);
    }
  }
  require(o, slope_misses == 0, "derivative mismatches " + std::to_string(slope_misses));
  require(o, worst <= 1.0, "max sup|phi - id| / eps " + num(worst));
  return o;
}

Outcome convex_cell() {
  const EnergyDensity W = quadratic_density();
  Mat F = Mat::Identity(2, 2);
  F(0, 1) = 1.0;
  const CellDiscretization disc;  // 17 x 9
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  const CellSolution a = cell_minimize(F, W, 0.5, disc);
  const double ta = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const CellSolution b = cell_formula_rigid(F, W, 0.5, disc);
  const double tb = seconds_since(t0);
  require(o, std::abs(a.value - 3.0) <= 1e-3, "cell_minimize " + num(a.value));
  require(o, std::abs(b.value - 3.0) <= 1e-3, "cell_formula_rigid " + num(b.value));
  require(o, a.perturbation_norm <= 1e-4 && b.perturbation_norm <= 1e-4,
          "perturbation norms " + num(a.perturbation_norm) + ", " + num(b.perturbation_norm));
  require(o, ta < 30 && tb < 30, "runtimes " + num(ta) + " s, " + num(tb) + " s");
  Mat G = Mat::Identity(2, 2);
  G(0, 0) = 2.0;
  const bool inf = cell_minimize(G, W, 0.5, disc).infinite && cell_formula_rigid(G, W, 0.5, disc).infinite &&
                   std::isinf(w_hom_convex(G, W, 0.5));
  require(o, inf, "non-admissible input infinite");
  return o;
}

Outcome svk_envelope() {
  const EnergyDensity W = svk_density({1.0, 1.0});
  EnvelopeSpec spec;
  spec.center = Mat::Zero(2, 2);
  spec.radius = 1.0;
  spec.resolution = 5;
  const EnvelopeGrid grid = lamination_envelope(W, spec, 3);
  Outcome o;
  const double at0 = grid.value_at(Mat::Zero(2, 2));
  require(o, grid.iterations >= 3 && at0 < svk(Mat::Zero(2, 2), {1.0, 1.0}),
          "value at 0 " + num(at0) + " after " + std::to_string(grid.iterations) + " iterations");
  double rot = 0;
  for (double a : {0.0, std::numbers::pi / 2, std::numbers::pi, -std::numbers::pi / 2})
    rot = std::max(rot, std::abs(grid.value_at(rot2(a))));
  require(o, rot <= 1e-12, "max value at grid rotations " + num(rot));
  bool below = true, monotone = true;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.values[k] > W(grid.node(k)) + 1e-14) below = false;
    for (std::size_t it = 1; it < grid.history.size(); ++it)
      if (grid.history[it][k] > grid.history[it - 1][k]) monotone = false;
  }
  require(o, below, "envelope <= W");
  require(o, monotone, "iterates nonincreasing");
  return o;
}

Outcome reverse_poincare() {
  Outcome o;
  const ReversePoincare rp =
      reverse_poincare_check(Rotation::identity(2), Rotation(rot2(std::numbers::pi)), CuboidDomain::unit(2), 2);
  require(o, std::abs(rp.lhs - 2.0 / 3) <= 1e-10 && std::abs(rp.ratio - 1.0 / 12) <= 1e-10,
          "lhs " + num(rp.lhs) + ", ratio " + num(rp.ratio));
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::vector<std::pair<double, double>> pairs;
  for (int k = 0; k < 1000; ++k) pairs.emplace_back(u(rng), u(rng));
  std::vector<double> mins;
  for (double h : {1.0, 0.1, 0.01, 0.001}) {
    const CuboidDomain slab(Vec::Zero(2), (Vec(2) << 1.0, h).finished());
    double m = 1e300;
    for (const auto& [a, b] : pairs) {
      const auto r = reverse_poincare_check(Rotation(rot2(a)), Rotation(rot2(b)), slab, 2);
      if (!r.degenerate) m = std::min(m, r.ratio);
    }
    mins.push_back(m);
  }
  const auto [lo, hi] = std::minmax_element(mins.begin(), mins.end());
  require(o, *lo > 0 && *hi / *lo <= 4.0, "min ratio spread " + num(*hi / *lo));
  return o;
}

Outcome gamma_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = 0.5, alpha = 3.0, p = 2.0;
  const double eps = std::ldexp(1.0, -7);
  const Mat R = rot2(0.3);
  const Vec d = (Vec(2) << 0.5, 0.2).finished();
  Mat F = R;
  F.col(1) += d;
  const EnergyDensity W = quadratic_density();
  const CuboidDomain dom = CuboidDomain::unit(2);
  const LayerConfig cfg(lambda, eps);

  // Convex W: W_hom(F) = lambda |R + d/lambda (x) e_2|^2.
  Mat Fl = R;
  Fl.col(1) += d / lambda;
  const double w_hom = lambda * Fl.squaredNorm();

  const RotationCurve constant = constant_rotation_curve(Rotation(R), 0, 1);
  const DeformationField u = build_recovery_sequence(constant, [d](double) { return d; }, cfg, dom);
  const LayeredEnergy e = layered_energy(u, W, alpha, p);
  const double target = dom.volume() * w_hom;
  Outcome o;
  require(o, std::abs(e.total - target) <= 0.02 * target, "energy " + num(e.total) + " vs " + num(target));
  require(o, std::abs(w_hom_convex(F, W, lambda) - w_hom) <= 1e-12, "closed-form W_hom " + num(w_hom));
  const double stiff = std::pow(eps, -alpha) * e.stiff;
  require(o, stiff < 1e-6, "eps^-alpha stiff " + num(stiff));
  const double t = seconds_since(t0);
  require(o, t < 60, "runtime " + num(t) + " s");
  return o;
}

Outcome determinism() {
  const auto cfg = config(
      "example = recovery\nrotation_rate = 0.8\nshear = 0.3, 0.1\neps_list = 0.25, 0.125, 0.0625, 0.03125\n"
      "quad_transverse_cells = 4\nshear_values = 0, 0.5, 1\ncell_m = 9\ncell_mn = 5\ncell_restarts = 2\n"
      "density = svk\nseed = 5\n");
  const std::string hash = cfg.hash();
  auto results = [&](int threads) {
    std::ostringstream os;
    ex::write_result_csv(os, hash, ex::run_scaling(cfg, threads).rows);
    const ex::RunOutput p = ex::run_pipeline(cfg, threads);
    ex::write_result_csv(os, hash, p.rows);
    os << p.extra_csv;
    ex::write_cell_csv(os, hash, cfg.n, ex::run_cell_sweep(cfg, threads).cell_rows);
    return os.str();
  };
  const std::string a = results(1);
  const std::string b = results(1);
  const std::string c = results(8);
  Outcome o;
  require(o, a == b, "repeat run identical");
  require(o, a == c, "threads 1 vs 8 identical (" + std::to_string(a.size()) + " bytes)");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact rigidity of layer rotations", exact_rigidity},
      {"bending energy scaling", bending_scaling},
      {"wrinkling scaling and weak limit", wrinkling},
      {"distance to SO(2) and strip-wise Procrustes", procrustes_oracle},
      {"recovery sequence", recovery_sequence},
      {"reparametrization contract", reparametrization},
      {"convex cell problem", convex_cell},
      {"SVK lamination envelope", svk_envelope},
      {"reverse Poincare", reverse_poincare},
      {"recovery energy matches W_hom", gamma_consistency},
      {"determinism across threads", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stratum/experiments.hpp"

namespace stratum::experiments {

namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
// writes only its own output slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < count; i += workers) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

const char* experiment_name(Example e) {
  switch (e) {
    case Example::Bending: return "bending";
    case Example::VolumeBending: return "volume_bending";
    case Example::Wrinkling: return "wrinkling";
    case Example::Rotation: return "rotation";
    case Example::Laminate: return "laminate";
    case Example::Recovery: return "recovery";
  }
  return "";
}

CurveSpec make_curve(const ExperimentConfig& cfg) {
  switch (cfg.curve) {
    case CurveKind::Straight: return straight_curve();
    case CurveKind::Circle: return circular_curve();
    case CurveKind::Wrinkle: return wrinkle_curve(cfg.wrinkle_amplitude);
  }
  return straight_curve();
}

RotationCurve make_rotation_curve(const ExperimentConfig& cfg, double a, double b) {
  const double t0 = cfg.rotation_angle;
  const double w = cfg.rotation_rate;
  const double k = cfg.rotation_curvature;
  return angle_rotation_curve(
      cfg.n, [=](double t) { return t0 + w * t + k * t * t; }, [=](double t) { return w + 2 * k * t; }, a, b);
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string flag(bool b) { return b ? "1" : "0"; }

bool finite_rows(const std::vector<ResultRow>& rows) {
  auto ok = [](const std::optional<double>& v) { return !v || !std::isnan(*v); };
  for (const auto& r : rows)
    if (!ok(r.eps) || !ok(r.stiff_energy) || !ok(r.soft_energy) || !ok(r.approx_error) || !ok(r.weak_error) ||
        !ok(r.value))
      return false;
  return true;
}

ResultRow summary_row(const std::string& experiment, const ScalingReport& rep,
                      const char* zero_verdict = "exact_rigidity") {
  ResultRow s;
  s.experiment = experiment;
  s.kind = "summary";
  std::ostringstream meta;
  if (rep.exact_rigidity) {
    meta << "verdict=" << zero_verdict;
  } else {
    s.slope = rep.fitted_slope;
    s.value = rep.fitted_intercept;
    meta << "verdict=power_law;residual=" << format_double(rep.residual) << ";zero_samples=" << rep.zero_eps.size();
  }
  s.metadata = meta.str();
  return s;
}

// Monomials of degree <= 2 in n variables, with their names.
std::vector<std::pair<std::string, std::function<double(const Vec&)>>> test_monomials(int n) {
  std::vector<std::pair<std::string, std::function<double(const Vec&)>>> out;
  out.emplace_back("1", [](const Vec&) { return 1.0; });
  for (int i = 0; i < n; ++i)
    out.emplace_back("x" + std::to_string(i + 1), [i](const Vec& x) { return x(i); });
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      out.emplace_back("x" + std::to_string(i + 1) + "x" + std::to_string(j + 1),
                       [i, j](const Vec& x) { return x(i) * x(j); });
  return out;
}

}  // namespace

EnergyDensity make_density(const ExperimentConfig& cfg) {
  switch (cfg.density) {
    case DensityKind::Quadratic: return quadratic_density();
    case DensityKind::SVK: return svk_density(cfg.svk);
    case DensityKind::Polyconvex: return polyconvex_density();
  }
  return quadratic_density();
}

ExampleField build_example(const ExperimentConfig& cfg, double eps) {
  const int n = cfg.n;
  const CuboidDomain dom = CuboidDomain::unit(n);
  const LayerConfig lc(cfg.lambda, eps);
  ExampleField out;
  auto from_profile = [&](const ProfileField& pf) {
    out.field = build_layer_deformation(pf, lc, dom);
    out.limit = pf.limit;
    out.limit.domain = dom;
    out.d11_bound = pf.d11_bound;
  };
  switch (cfg.example) {
    case Example::Bending:
      from_profile(example_uniform_bending(n, make_curve(cfg)));
      break;
    case Example::VolumeBending:
      from_profile(example_volume_bending(n, make_curve(cfg)));
      break;
    case Example::Wrinkling:
      from_profile(example_wrinkling(n, make_curve(cfg), cfg.beta, cfg.gamma, eps));
      break;
    case Example::Rotation:
      from_profile(example_layer_rotation(n, make_rotation_curve(cfg, 0.0, 2.0)));
      break;
    case Example::Laminate: {
      Mat F(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) F(i, j) = cfg.F[static_cast<std::size_t>(i * n + j)];
      out.field = build_laminate(F, lc, dom);
      out.limit.n = n;
      out.limit.domain = dom;
      out.limit.u = [F](const Vec& x) { return Vec(F * x); };
      out.limit.grad_u = [F](const Vec&) { return F; };
      break;
    }
    case Example::Recovery: {
      const RotationCurve R = make_rotation_curve(cfg, 0.0, 1.0);
      const Vec d0 = to_vec(cfg.shear);
      const Vec d1 = to_vec(cfg.shear_rate);
      const ShearProfile d = [d0, d1](double t) { return Vec(d0 + t * d1); };
      out.field = build_recovery_sequence(R, d, lc, dom);
      out.limit.n = n;
      out.limit.domain = dom;
      out.limit.u = [R, d0, d1, n](const Vec& x) {
        const double t = x(n - 1);
        return Vec(R.sigma(t) * x + t * d0 + 0.5 * t * t * d1);
      };
      out.limit.grad_u = [R, d, n](const Vec& x) {
        const double t = x(n - 1);
        Mat G = R.sigma(t);
        G.col(n - 1) += R.dsigma(t) * x + d(t);
        return G;
      };
      break;
    }
  }
  return out;
}

RunOutput run_scaling(const ExperimentConfig& cfg, int threads) {
  const std::string name = std::string("scaling/") + experiment_name(cfg.example);
  const EnergyDensity W = make_density(cfg);
  const std::size_t m = cfg.eps_list.size();
  std::vector<ResultRow> rows(m);
  parallel_for(m, threads, [&](std::size_t k) {
    const double eps = cfg.eps_list[k];
    const ExampleField ex = build_example(cfg, eps);
    ResultRow& r = rows[k];
    r.experiment = name;
    r.kind = "eps";
    r.eps = eps;
    r.stiff_energy = stiff_energy(ex.field, cfg.p, cfg.quadrature);
    r.soft_energy = layered_integral(
        ex.field.domain, *ex.field.cfg, PhaseFilter::Soft, [&](const Vec& x) { return W(ex.field.grad_u(x)); },
        cfg.quadrature);
    // dist(grad u, SO(n)) <= eps |d11 f| pointwise on the stiff layers.
    r.bound = ex.field.domain.volume() * std::pow(eps * ex.d11_bound, cfg.p);
    r.metadata = *r.stiff_energy <= *r.bound * (1 + 1e-9) + 1e-20 ? "within_bound=1" : "within_bound=0";
  });

  std::vector<std::pair<double, double>> samples;
  for (const auto& r : rows) samples.emplace_back(*r.eps, *r.stiff_energy);
  RunOutput out;
  out.rows = rows;
  out.rows.push_back(summary_row(name, fit_scaling(samples)));
  out.converged = finite_rows(out.rows);
  return out;
}

RunOutput run_weak_convergence(const ExperimentConfig& cfg, int threads) {
  const std::string name = std::string("weakconv/") + experiment_name(cfg.example);
  const auto monomials = test_monomials(cfg.n);
  const std::size_t m = cfg.eps_list.size();
  const std::size_t per_eps = monomials.size() + 1;
  std::vector<ResultRow> rows(m * per_eps);
  std::vector<double> worst(m, 0.0);
  parallel_for(m, threads, [&](std::size_t k) {
    const double eps = cfg.eps_list[k];
    const ExampleField ex = build_example(cfg, eps);
    const CuboidDomain& dom = ex.field.domain;
    const LayerConfig& lc = *ex.field.cfg;
    for (std::size_t q = 0; q < monomials.size(); ++q) {
      const auto& P = monomials[q].second;
      const Mat M = layered_integral(
          dom, lc, PhaseFilter::Both,
          [&](const Vec& x) { return Mat((ex.field.grad_u(x) - ex.limit.grad_u(x)) * P(x)); }, cfg.quadrature);
      const double norm = std::sqrt(layered_integral(
          dom, lc, PhaseFilter::Both, [&](const Vec& x) { return P(x) * P(x); }, cfg.quadrature));
      ResultRow& r = rows[k * per_eps + q];
      r.experiment = name;
      r.kind = "test_field";
      r.eps = eps;
      r.weak_error = M.cwiseAbs().maxCoeff() / norm;
      r.metadata = "field=" + monomials[q].first;
      worst[k] = std::max(worst[k], *r.weak_error);
    }
    // Mean of d1 u . e1 against the limit's.
    const double vol = dom.volume();
    ResultRow& r = rows[k * per_eps + monomials.size()];
    r.experiment = name;
    r.kind = "mean_d1u";
    r.eps = eps;
    r.value = layered_integral(
                  dom, lc, PhaseFilter::Both, [&](const Vec& x) { return ex.field.grad_u(x)(0, 0); }, cfg.quadrature) /
              vol;
    r.bound = layered_integral(
                  dom, lc, PhaseFilter::Both, [&](const Vec& x) { return ex.limit.grad_u(x)(0, 0); }, cfg.quadrature) /
              vol;
    r.weak_error = std::abs(*r.value - *r.bound);
  });

  std::vector<std::pair<double, double>> samples;
  for (std::size_t k = 0; k < m; ++k) samples.emplace_back(cfg.eps_list[k], worst[k]);
  RunOutput out;
  out.rows = rows;
  ResultRow s = summary_row(name, fit_scaling(samples, 1e-13));
  s.weak_error = worst.back();
  out.rows.push_back(s);
  out.converged = finite_rows(out.rows);
  return out;
}

RunOutput run_pipeline(const ExperimentConfig& cfg, int threads) {
  const std::string name = std::string("pipeline/") + experiment_name(cfg.example);
  const std::size_t m = cfg.eps_list.size();
  const int n = cfg.n;
  std::vector<std::vector<ResultRow>> per_eps(m);
  std::vector<std::string> strip_text(m);
  std::vector<double> deviation(m, 0.0);
  const std::string hash = cfg.hash();

  std::string dev_name = "strip_variation";
  if (cfg.example == Example::Rotation) dev_name = "max_dev_strip";
  if (cfg.example == Example::Recovery) dev_name = "max_dev_sigma_phi";

  parallel_for(m, threads, [&](std::size_t k) {
    const double eps = cfg.eps_list[k];
    const ExampleField ex = build_example(cfg, eps);
    const PiecewiseRotationField w = layerwise_procrustes(ex.field, cfg.quadrature);

    double dev = 0.0;
    std::optional<double> mid_dev;
    if (cfg.example == Example::Rotation) {
      mid_dev = 0.0;
      // Against R at the stiff midsection, and against R anywhere in the strip.
      const RotationCurve R = make_rotation_curve(cfg, 0.0, 2.0);
      for (const auto& s : w.strips) {
        const double mid = (s.index + (1 + cfg.lambda) / 2) * eps;
        mid_dev = std::max(*mid_dev, (s.rotation.matrix() - R.sigma(mid)).norm());
        for (double t : {s.index * eps, (s.index + 1) * eps})
          dev = std::max(dev, (s.rotation.matrix() - R.sigma(t)).norm());
      }
    } else if (cfg.example == Example::Recovery) {
      const RotationCurve R = reflect_extend(make_rotation_curve(cfg, 0.0, 1.0));
      // phi_eps is eps (i + 1) on the stiff part of strip i.
      for (const auto& s : w.strips)
        dev = std::max(dev, (s.rotation.matrix() - R.sigma((s.index + 1) * eps)).norm());
    } else if (!w.strips.empty()) {
      const Mat R0 = w.strips.front().rotation.matrix();
      for (const auto& s : w.strips) dev = std::max(dev, (s.rotation.matrix() - R0).norm());
    }
    deviation[k] = dev;

    ResultRow r;
    r.experiment = name;
    r.kind = "eps";
    r.eps = eps;
    r.stiff_energy = stiff_energy(ex.field, cfg.p, cfg.quadrature);
    r.approx_error = approx_error(ex.field, w, cfg.p, cfg.quadrature);
    r.value = dev;
    std::size_t degenerate = 0;
    for (const auto& s : w.strips) degenerate += s.degenerate ? 1 : 0;
    r.metadata = "value=" + dev_name + ";strips=" + std::to_string(w.strips.size()) +
                 ";degenerate=" + std::to_string(degenerate);
    if (mid_dev) r.metadata += ";max_dev_midsection=" + format_double(*mid_dev);
    per_eps[k].push_back(r);

    for (double xi : cfg.xi_list) {
      if (!(xi < w.b - w.a)) continue;
      ResultRow sr;
      sr.experiment = name;
      sr.kind = "shift";
      sr.eps = eps;
      sr.xi = xi;
      sr.value = sigma_shift_modulus(w, xi, cfg.p);
      per_eps[k].push_back(sr);
    }

    std::ostringstream os;
    for (const auto& s : w.strips) {
      os << hash << ',' << format_double(eps) << ',' << s.index;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) os << ',' << format_double(s.rotation.matrix()(i, j));
      for (int i = 0; i < n; ++i) os << ',' << format_double(s.translation(i));
      os << ',' << (s.degenerate ? 1 : 0) << '\n';
    }
    strip_text[k] = os.str();
  });

  RunOutput out;
  for (auto& block : per_eps)
    for (auto& r : block) out.rows.push_back(std::move(r));

  const ExampleField ex = build_example(cfg, cfg.eps_list.front());
  const IncompressibilityReport rep = incompressibility_report(ex.limit);
  ResultRow lf;
  lf.experiment = name;
  lf.kind = "limit_form";
  lf.value = rep.det_mean;
  std::ostringstream meta;
  meta << "det_min=" << format_double(rep.det_min) << ";det_max=" << format_double(rep.det_max)
       << ";volume_preserving=" << flag(rep.volume_preserving) << ";limit_form=" << flag(rep.limit_form)
       << ";a_normal_zero=" << flag(rep.a_normal_zero) << ";rotation_normal_constant="
       << flag(rep.rotation_normal_constant);
  if (rep.shear_rotation)
    meta << ";gamma_min=" << format_double(rep.gamma_min) << ";gamma_max=" << format_double(rep.gamma_max);
  lf.metadata = meta.str();
  out.rows.push_back(lf);

  std::vector<std::pair<double, double>> approx, dev;
  for (std::size_t k = 0; k < m; ++k) dev.emplace_back(cfg.eps_list[k], deviation[k]);
  for (const auto& r : out.rows)
    if (r.kind == "eps") approx.emplace_back(*r.eps, *r.approx_error);
  ResultRow sa = summary_row(name, fit_scaling(approx, 1e-13));
  sa.metadata += ";fit=approx_error";
  out.rows.push_back(sa);
  ResultRow sd = summary_row(name, fit_scaling(dev, 1e-13), "identically_zero");
  sd.metadata += ";fit=" + dev_name;
  out.rows.push_back(sd);

  std::ostringstream extra;
  extra << "schema=" << kSchemaVersion << '\n' << "config_hash,eps,i";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) extra << ",R_" << i + 1 << j + 1;
  for (int i = 0; i < n; ++i) extra << ",b_" << i + 1;
  extra << ",degenerate\n";
  for (const auto& s : strip_text) extra << s;
  out.extra_csv = extra.str();
  out.converged = finite_rows(out.rows);
  return out;
}

RunOutput run_cell_sweep(const ExperimentConfig& cfg, int threads) {
  const int n = cfg.n;
  const EnergyDensity W = make_density(cfg);
  const Mat R = planar_rotation(n, cfg.rotation_angle).matrix();

  std::vector<Mat> grid;
  std::vector<std::string> labels;
  for (double s : cfg.shear_values) {
    Mat F = R;
    F(0, n - 1) += s;
    grid.push_back(F);
    labels.push_back("shear=" + format_double(s));
  }
  if (cfg.include_non_admissible) {
    Mat F = Mat::Identity(n, n);
    F(0, 0) = 2.0;
    grid.push_back(F);
    labels.push_back("non_admissible");
  }

  CellDiscretization disc = cfg.cell;
  disc.threads = 1;
  std::vector<CellRow> rows(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    const Mat& F = grid[k];
    CellRow& r = rows[k];
    r.kind = "F";
    r.F = F;
    r.metadata = labels[k];
    std::vector<double> finite;
    if (W.convex) {
      r.w_convex = w_hom_convex(F, W, cfg.lambda);
      if (std::isfinite(*r.w_convex)) finite.push_back(*r.w_convex);
    }
    const CellSolution a = cell_minimize(F, W, cfg.lambda, disc);
    const CellSolution b = cell_formula_rigid(F, W, cfg.lambda, disc);
    r.w_cell = a.value;
    r.w_cell_rigid = b.value;
    if (!a.infinite) finite.push_back(a.value);
    if (!b.infinite) finite.push_back(b.value);
    r.converged = (a.infinite || a.converged) && (b.infinite || b.converged);
    r.iterations = a.iterations + b.iterations;
    if (!finite.empty()) {
      const auto [lo, hi] = std::minmax_element(finite.begin(), finite.end());
      r.delta = *hi - *lo;
    }
    if (a.infinite && b.infinite) r.metadata += ";infinite=1";
  });

  RunOutput out;
  out.cell_rows = rows;
  // Sanity property along the shear ray: value nondecreasing in |s|.
  std::vector<std::pair<double, double>> ray;
  double max_delta = 0.0;
  for (std::size_t k = 0; k < cfg.shear_values.size(); ++k) {
    ray.emplace_back(std::abs(cfg.shear_values[k]), *rows[k].w_cell);
    if (rows[k].delta) max_delta = std::max(max_delta, *rows[k].delta);
  }
  std::stable_sort(ray.begin(), ray.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  bool monotone = true;
  for (std::size_t k = 1; k < ray.size(); ++k)
    if (ray[k].second < ray[k - 1].second - 1e-8 * std::max(1.0, std::abs(ray[k - 1].second))) monotone = false;
  CellRow s;
  s.kind = "summary";
  s.F = Mat::Zero(n, n);
  s.delta = max_delta;
  s.converged = std::all_of(rows.begin(), rows.end(), [](const CellRow& r) { return r.converged; });
  for (const auto& r : rows) s.iterations += r.iterations;
  s.metadata = "density=" + W.name + ";monotone_in_shear=" + flag(monotone);
  out.cell_rows.push_back(s);
  out.converged = s.converged;
  return out;
}

}  // namespace stratum::experiments

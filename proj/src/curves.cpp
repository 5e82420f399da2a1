#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "stratum/constructions.hpp"

namespace stratum {

void validate_curve(const CurveSpec& c) {
  if (!c.g || !c.dg || !c.d2g) throw std::invalid_argument("curve: g, dg and d2g are required");
  if (!c.arc_length) return;
  for (int i = 0; i < 1000; ++i) {
    const double t = i / 999.0;
    const double speed = c.dg(t).norm();
    if (!(std::abs(speed - 1.0) <= 1e-8)) throw std::invalid_argument("curve: not parametrized by arc length");
  }
}

CurveSpec straight_curve() {
  CurveSpec c;
  c.g = [](double t) { return Eigen::Vector2d(t, 0.0); };
  c.dg = [](double) { return Eigen::Vector2d(1.0, 0.0); };
  c.d2g = [](double) { return Eigen::Vector2d(0.0, 0.0); };
  c.curvature_bound = 0.0;
  return c;
}

CurveSpec circular_curve() {
  CurveSpec c;
  c.g = [](double t) { return Eigen::Vector2d(std::sin(t - 0.5), std::cos(t - 0.5)); };
  c.dg = [](double t) { return Eigen::Vector2d(std::cos(t - 0.5), -std::sin(t - 0.5)); };
  c.d2g = [](double t) { return Eigen::Vector2d(-std::sin(t - 0.5), -std::cos(t - 0.5)); };
  c.curvature_bound = 1.0;
  return c;
}

namespace {

struct WrinkleTable {
  double a;
  int cells;
  std::vector<Eigen::Vector2d> nodes;  // g at s = k / cells, s in [0, 1]

  Eigen::Vector2d tangent(double t) const {
    const double th = a * std::sin(2 * std::numbers::pi * t);
    return {std::cos(th), std::sin(th)};
  }

  Eigen::Vector2d integrate(double s0, double s1) const {
    const GaussRule& r = gauss_rule(5);
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    const double half = 0.5 * (s1 - s0);
    const double mid = 0.5 * (s1 + s0);
    for (int q = 0; q < r.size; ++q) acc += r.w[q] * tangent(mid + half * r.x[q]);
    return half * acc;
  }

  Eigen::Vector2d eval(double t) const {
    const double k = std::floor(t);
    double s = t - k;
    int idx = static_cast<int>(s * cells);
    if (idx >= cells) idx = cells - 1;
    const Eigen::Vector2d chord = nodes[cells] - nodes[0];
    return k * chord + nodes[idx] + integrate(static_cast<double>(idx) / cells, s);
  }
};

}  // namespace

CurveSpec wrinkle_curve(double amplitude) {
  auto table = std::make_shared<WrinkleTable>();
  table->a = amplitude;
  table->cells = 1024;
  table->nodes.resize(table->cells + 1);
  table->nodes[0] = Eigen::Vector2d::Zero();
  for (int k = 0; k < table->cells; ++k)
    table->nodes[k + 1] =
        table->nodes[k] + table->integrate(static_cast<double>(k) / table->cells,
                                           static_cast<double>(k + 1) / table->cells);
  CurveSpec c;
  c.g = [table](double t) { return table->eval(t); };
  c.dg = [table](double t) { return table->tangent(t); };
  c.d2g = [amplitude](double t) {
    const double w = 2 * std::numbers::pi;
    const double th = amplitude * std::sin(w * t);
    const double dth = amplitude * w * std::cos(w * t);
    return Eigen::Vector2d(-dth * std::sin(th), dth * std::cos(th));
  };
  c.period = 1.0;
  c.curvature_bound = 2 * std::numbers::pi * std::abs(amplitude);
  return c;
}

void validate_rotation_curve(const RotationCurve& R, int samples) {
  if (!R.sigma || !R.dsigma) throw std::invalid_argument("rotation curve: sigma and dsigma are required");
  if (!(R.a < R.b)) throw std::invalid_argument("rotation curve: empty interval");
  for (int i = 0; i < samples; ++i) {
    const double t = R.a + (R.b - R.a) * i / (samples - 1);
    (void)R.at(t);
  }
}

RotationCurve constant_rotation_curve(const Rotation& R0, double a, double b) {
  const Mat M = R0.matrix();
  const int n = R0.dim();
  return RotationCurve{[M](double) { return M; }, [n](double) { return Mat(Mat::Zero(n, n)); }, a, b};
}

RotationCurve angle_rotation_curve(int n, std::function<double(double)> theta,
                                   std::function<double(double)> dtheta, double a, double b) {
  RotationCurve R;
  R.sigma = [n, theta](double t) { return planar_rotation(n, theta(t)).matrix(); };
  R.dsigma = [n, theta, dtheta](double t) {
    const double th = theta(t);
    const double dth = dtheta(t);
    Mat D = Mat::Zero(n, n);
    D(0, 0) = -std::sin(th) * dth;
    D(n - 1, 0) = std::cos(th) * dth;
    D(0, n - 1) = -std::cos(th) * dth;
    D(n - 1, n - 1) = -std::sin(th) * dth;
    return D;
  };
  R.a = a;
  R.b = b;
  return R;
}

RotationCurve reflect_extend(const RotationCurve& R) {
  RotationCurve out = R;
  const double a = R.a;
  const double b = R.b;
  auto sigma = R.sigma;
  auto dsigma = R.dsigma;
  out.sigma = [=](double t) {
    if (t > b) return sigma(2 * b - t);
    if (t < a) return sigma(2 * a - t);
    return sigma(t);
  };
  out.dsigma = [=](double t) {
    if (t > b) return Mat(-dsigma(2 * b - t));
    if (t < a) return Mat(-dsigma(2 * a - t));
    return dsigma(t);
  };
  return out;
}

}  // namespace stratum

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "stratum/homogenization.hpp"

namespace stratum {

namespace {

Mat random_matrix(std::mt19937_64& rng, int n, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat F(n, n);
  for (int i = 0; i < n * n; ++i) F.data()[i] = normal(rng);
  const double r = radius * std::pow(unit(rng), 1.0 / (n * n));
  return F * (r / F.norm());
}

}  // namespace

Mat EnergyDensity::gradient(const Mat& F) const {
  if (dW) return dW(F);
  const double h = 1e-6;
  Mat G(F.rows(), F.cols());
  for (Eigen::Index i = 0; i < F.size(); ++i) {
    Mat Fp = F;
    Mat Fm = F;
    Fp.data()[i] += h;
    Fm.data()[i] -= h;
    G.data()[i] = (W(Fp) - W(Fm)) / (2 * h);
  }
  return G;
}

void validate_density(const EnergyDensity& W, int n, unsigned seed) {
  if (!W.W) throw std::invalid_argument("energy density: W is required");
  std::mt19937_64 rng(seed);
  for (int k = 0; k < 10000; ++k)
    if (!(W(random_matrix(rng, n, 5.0)) >= 0)) throw std::invalid_argument("energy density: W takes negative values");
  if (!W.convex) return;
  // Several radii, so that non-convexity confined near the origin shows up.
  const double radii[] = {0.5, 1.5, 5.0};
  for (int k = 0; k < 1000; ++k) {
    const Mat F = random_matrix(rng, n, radii[k % 3]);
    const Mat G = random_matrix(rng, n, radii[k % 3]);
    const double mid = W(0.5 * (F + G));
    const double avg = 0.5 * (W(F) + W(G));
    if (mid > avg + 1e-9 * std::max(1.0, avg))
      throw std::invalid_argument("energy density: declared convex but midpoint convexity fails");
  }
}

SVKParams::SVKParams(double lam_, double mu_) : lam(lam_), mu(mu_) {
  if (!(lam > 0 && mu > 0)) throw std::invalid_argument("SVK: Lame constants must be positive");
}

double svk(const Mat& F, const SVKParams& params) {
  const int n = static_cast<int>(F.rows());
  const Mat E = F.transpose() * F - Mat::Identity(n, n);
  const double tr = F.squaredNorm() - n;
  return 0.25 * params.lam * E.squaredNorm() + 0.125 * params.mu * tr * tr;
}

EnergyDensity svk_density(const SVKParams& params) {
  EnergyDensity W;
  W.name = "svk";
  W.W = [params](const Mat& F) { return svk(F, params); };
  W.dW = [params](const Mat& F) {
    const int n = static_cast<int>(F.rows());
    const Mat E = F.transpose() * F - Mat::Identity(n, n);
    return Mat(params.lam * F * E + 0.5 * params.mu * (F.squaredNorm() - n) * F);
  };
  W.p = 4.0;
  return W;
}

EnergyDensity quadratic_density() {
  EnergyDensity W;
  W.name = "quadratic";
  W.W = [](const Mat& F) { return F.squaredNorm(); };
  W.dW = [](const Mat& F) { return Mat(2.0 * F); };
  W.p = 2.0;
  W.convex = true;
  W.growth_c = 1.0;
  W.growth_C = 1.0;
  W.lipschitz_L = 1.0;
  W.polyconvex_lower = [](const MinorsVector<double>& m) {
    double s = 0;
    const int entries = m.size() == 5 ? 4 : 9;
    for (int i = 0; i < entries; ++i) s += m(i) * m(i);
    return s;
  };
  return W;
}

EnergyDensity stiff_density(double p) {
  EnergyDensity W;
  W.name = "dist_so";
  W.W = [p](const Mat& F) { return std::pow(dist_so(F), p); };
  W.p = p;
  return W;
}

EnergyDensity norm_density(double declared_p) {
  EnergyDensity W;
  W.name = "norm";
  W.W = [](const Mat& F) { return F.norm(); };
  W.p = declared_p;
  W.convex = true;
  W.growth_c = 1.0;
  W.growth_C = 1.0;
  return W;
}

EnergyDensity polyconvex_density() {
  EnergyDensity W;
  W.name = "polyconvex";
  W.W = [](const Mat& F) {
    const double j = F.determinant() - 1;
    return F.squaredNorm() + j * j;
  };
  W.dW = [](const Mat& F) {
    // d det / dF = cof F.
    const int n = static_cast<int>(F.rows());
    Mat cof(n, n);
    if (n == 2) {
      cof << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
    } else {
      cof = F.determinant() * F.inverse().transpose();
    }
    return Mat(2.0 * F + 2.0 * (F.determinant() - 1) * cof);
  };
  W.p = 2.0;
  W.polyconvex_lower = [](const MinorsVector<double>& m) {
    const int entries = m.size() == 5 ? 4 : 9;
    double s = 0;
    for (int i = 0; i < entries; ++i) s += m(i) * m(i);
    const double j = m(m.size() - 1) - 1;
    return s + j * j;
  };
  return W;
}

HypothesisReport validate_hypotheses(const EnergyDensity& W, int n, unsigned seed, int samples,
                                     const EnergyDensity* stiff) {
  std::mt19937_64 rng(seed);
  HypothesisReport rep;
  rep.samples = samples;
  rep.growth_lower_ratio = std::numeric_limits<double>::infinity();
  const double p = W.p;
  for (int k = 0; k < samples; ++k) {
    const Mat F = random_matrix(rng, n, 5.0);
    const Mat G = random_matrix(rng, n, 5.0);
    const double wf = W(F);
    const double wg = W(G);
    const double nf = F.norm();
    const double ng = G.norm();
    rep.growth_upper_ratio = std::max(rep.growth_upper_ratio, wf / (1 + std::pow(nf, p)));
    if (nf >= 1) rep.growth_lower_ratio = std::min(rep.growth_lower_ratio, wf / std::pow(nf, p));
    if (W.growth_c && W.growth_C) {
      if (wf < *W.growth_c * std::pow(nf, p) - 1.0 / *W.growth_C - 1e-12) ++rep.growth_lower_violations;
      if (wf > *W.growth_C * (1 + std::pow(nf, p)) + 1e-12) ++rep.growth_upper_violations;
    }
    const double gap = (F - G).norm();
    if (gap > 1e-12) {
      const double ratio = std::abs(wf - wg) / ((1 + std::pow(nf, p - 1) + std::pow(ng, p - 1)) * gap);
      rep.lipschitz_ratio = std::max(rep.lipschitz_ratio, ratio);
      if (W.lipschitz_L && ratio > *W.lipschitz_L + 1e-12) ++rep.lipschitz_violations;
    }
    if (stiff) {
      const double dist = dist_so(F);
      if (dist > 1e-12) {
        const double r = (*stiff)(F) / std::pow(dist, stiff->p);
        rep.stiff_ratio_min = rep.stiff_ratio_min ? std::min(*rep.stiff_ratio_min, r) : r;
        rep.stiff_ratio_max = rep.stiff_ratio_max ? std::max(*rep.stiff_ratio_max, r) : r;
      }
    }
  }
  return rep;
}

double w_hom_convex(const Mat& F, const EnergyDensity& W, double lambda) {
  if (!W.convex) throw std::invalid_argument("w_hom_convex: density is not flagged convex");
  if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("w_hom_convex: lambda must lie in (0,1)");
  const auto dec = decompose_a(F);
  if (!dec) return std::numeric_limits<double>::infinity();
  return lambda * W(f_lambda(*dec, lambda));
}

}  // namespace stratum

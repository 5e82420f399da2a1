#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "stratum/types.hpp"

namespace stratum {

/// Soft volume fraction lambda and layer period eps.
struct LayerConfig {
  double lambda = 0.5;
  double eps = 0.125;

  LayerConfig() = default;
  LayerConfig(double lambda_, double eps_) : lambda(lambda_), eps(eps_) {
    if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("LayerConfig: lambda must lie in (0,1)");
    if (!(eps > 0)) throw std::invalid_argument("LayerConfig: eps must be positive");
  }
};

/// Axis-aligned box [lower, upper].
struct CuboidDomain {
  Vec lower;
  Vec upper;

  CuboidDomain() = default;
  CuboidDomain(Vec lo, Vec hi);

  static CuboidDomain unit(int n);

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  double height() const { return upper(dim() - 1) - lower(dim() - 1); }
  Vec center() const { return 0.5 * (lower + upper); }
  CuboidDomain with_height(double lo, double hi) const;
};

enum class Phase { Soft, Stiff };
enum class PhaseFilter { Soft, Stiff, Both };

/// Soft iff frac(x_n / eps) lies in the open interval (0, lambda).
Phase phase(double xn, const LayerConfig& cfg);
inline Phase phase(const Vec& x, const LayerConfig& cfg) { return phase(x(x.size() - 1), cfg); }

/// Projection onto the midsection of the stiff layer that owns t:
/// eps*ceil(t/eps) - eps + (1 + lambda) eps / 2.
double midsection(double t, const LayerConfig& cfg);

/// Index k of the period eps(k, k+1] that contains t (half-open from below).
inline long cell_index(double t, const LayerConfig& cfg) {
  return static_cast<long>(std::ceil(t / cfg.eps)) - 1;
}

struct QuadratureSpec {
  int cells_per_layer = 2;   // sub-cells per phase layer along x_n
  int transverse_cells = 2;  // cells per transverse axis
  int gauss_points = 3;      // per axis, 1..5

  void validate() const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::array<double, 5> x{};
  std::array<double, 5> w{};
  int size = 0;
};
const GaussRule& gauss_rule(int points);

/// A slab a < x_n < b lying inside a single phase layer.
struct LayerSegment {
  double a;
  double b;
  Phase phase;
};

/// The phase layers of [lo, hi] in order, clipped to the interval.
std::vector<LayerSegment> layer_segments(double lo, double hi, const LayerConfig& cfg);

struct Strip {
  long index;
  CuboidDomain box;
};

struct StripSet {
  std::vector<Strip> full;     // strips eps[i, i+1) fully inside the domain
  std::vector<Strip> partial;  // boundary remnants
};

StripSet strips(const CuboidDomain& dom, const LayerConfig& cfg);

namespace detail {

template <typename T>
struct CompensatedSum {
  T sum{};
  T carry{};
  bool started = false;

  void add(const T& v) {
    if (!started) {
      sum = v;
      carry = v;
      set_zero(carry);
      started = true;
      return;
    }
    if constexpr (std::is_arithmetic_v<T>) {
      neumaier(sum, carry, v);
    } else {
      for (Eigen::Index i = 0; i < v.size(); ++i) neumaier(sum.data()[i], carry.data()[i], v.data()[i]);
    }
  }

  T value() const { return sum + carry; }

 private:
  static void set_zero(T& t) {
    if constexpr (std::is_arithmetic_v<T>) t = 0;
    else t.setZero();
  }
  static void neumaier(double& s, double& c, double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) c += (s - t) + x;
    else c += (x - t) + s;
    s = t;
  }
};

template <typename T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

}  // namespace detail

/// Quadrature of f over the phase-filtered part of dom. Integration cells never
/// straddle a layer boundary; per-layer partial sums are compensated and then
/// reduced pairwise, so the result is independent of evaluation order.
template <typename Fn>
auto layered_integral(const CuboidDomain& dom, const LayerConfig& cfg, PhaseFilter filter, Fn&& f,
                      const QuadratureSpec& res = {}) {
  using Result = std::decay_t<std::invoke_result_t<Fn&, const Vec&>>;
  res.validate();
  if (!(dom.volume() > 0)) throw std::invalid_argument("layered_integral: degenerate domain");
  const int n = dom.dim();
  const GaussRule& g = gauss_rule(res.gauss_points);

  // Tensor nodes over the transverse axes.
  std::vector<Vec> tpoints;
  std::vector<double> tweights;
  {
    std::vector<std::vector<std::pair<double, double>>> axis(n - 1);
    for (int j = 0; j < n - 1; ++j) {
      const double h = (dom.upper(j) - dom.lower(j)) / res.transverse_cells;
      for (int c = 0; c < res.transverse_cells; ++c) {
        const double mid = dom.lower(j) + (c + 0.5) * h;
        for (int q = 0; q < g.size; ++q) axis[j].emplace_back(mid + 0.5 * h * g.x[q], 0.5 * h * g.w[q]);
      }
    }
    const std::size_t per_axis = axis.empty() ? 1 : axis[0].size();
    std::size_t total = 1;
    for (int j = 0; j < n - 1; ++j) total *= per_axis;
    for (std::size_t flat = 0; flat < total; ++flat) {
      Vec x = Vec::Zero(n);
      double w = 1.0;
      std::size_t rem = flat;
      for (int j = 0; j < n - 1; ++j) {
        const auto& node = axis[j][rem % per_axis];
        rem /= per_axis;
        x(j) = node.first;
        w *= node.second;
      }
      tpoints.push_back(x);
      tweights.push_back(w);
    }
  }

  std::vector<Result> partials;
  for (const LayerSegment& seg : layer_segments(dom.lower(n - 1), dom.upper(n - 1), cfg)) {
    if (filter == PhaseFilter::Soft && seg.phase != Phase::Soft) continue;
    if (filter == PhaseFilter::Stiff && seg.phase != Phase::Stiff) continue;
    detail::CompensatedSum<Result> acc;
    const double h = (seg.b - seg.a) / res.cells_per_layer;
    for (int c = 0; c < res.cells_per_layer; ++c) {
      const double mid = seg.a + (c + 0.5) * h;
      for (int q = 0; q < g.size; ++q) {
        const double xn = mid + 0.5 * h * g.x[q];
        const double wn = 0.5 * h * g.w[q];
        for (std::size_t t = 0; t < tpoints.size(); ++t) {
          Vec x = tpoints[t];
          x(n - 1) = xn;
          acc.add(Result(f(x) * (wn * tweights[t])));
        }
      }
    }
    if (acc.started) partials.push_back(acc.value());
  }
  if (partials.empty()) {
    // No layer of the requested phase: return a zero of the right shape.
    Vec probe = dom.center();
    Result z = f(probe);
    if constexpr (std::is_arithmetic_v<Result>) z = 0;
    else z.setZero();
    return z;
  }
  return detail::pairwise_sum(partials, 0, partials.size());
}

}  // namespace stratum

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "stratum/homogenization.hpp"

namespace stratum {

namespace {

struct GridGeometry {
  int n;
  int dims;  // n * n matrix entries
  int res;
  double h;
  std::vector<double> low;  // lower corner per entry, row-major

  GridGeometry(const EnvelopeSpec& spec, int n_) : n(n_), dims(n_ * n_), res(spec.resolution) {
    h = 2 * spec.radius / (res - 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) low.push_back(spec.center(i, j) - spec.radius);
  }

  // Multilinear interpolation; false when the point leaves the box.
  bool interpolate(const std::vector<double>& values, const double* F, double& out) const {
    int base[9];
    double t[9];
    std::size_t stride[9];
    std::size_t s = 1;
    for (int e = 0; e < dims; ++e) {
      const double u = (F[e] - low[e]) / h;
      if (u < -1e-9 || u > res - 1 + 1e-9) return false;
      int b = static_cast<int>(std::floor(u));
      b = std::clamp(b, 0, res - 2);
      base[e] = b;
      t[e] = std::clamp(u - b, 0.0, 1.0);
      stride[e] = s;
      s *= static_cast<std::size_t>(res);
    }
    double acc = 0;
    for (int c = 0; c < (1 << dims); ++c) {
      double w = 1;
      std::size_t idx = 0;
      for (int e = 0; e < dims; ++e) {
        const bool hi = (c >> e) & 1;
        w *= hi ? t[e] : 1 - t[e];
        idx += (base[e] + (hi ? 1 : 0)) * stride[e];
      }
      if (w != 0) acc += w * values[idx];
    }
    out = acc;
    return true;
  }
};

std::vector<Vec> direction_set(int n, int count) {
  std::vector<Vec> out;
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = std::numbers::pi * k / count;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  // Fibonacci points on the upper hemisphere.
  const double golden = std::numbers::pi * (3 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1 - (k + 0.5) / count;
    const double r = std::sqrt(1 - z * z);
    Vec v(3);
    v << r * std::cos(golden * k), r * std::sin(golden * k), z;
    out.push_back(v);
  }
  return out;
}

Mat entries_to_matrix(int n, const double* F) {
  Mat M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = F[i * n + j];
  return M;
}

}  // namespace

Mat EnvelopeGrid::node(std::size_t index) const {
  Mat F(n, n);
  const double h = 2 * spec.radius / (spec.resolution - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = static_cast<int>(index % spec.resolution);
      index /= spec.resolution;
      F(i, j) = spec.center(i, j) - spec.radius + k * h;
    }
  return F;
}

double EnvelopeGrid::value_at(const Mat& F) const {
  const GridGeometry geo(spec, n);
  double flat[9];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) flat[i * n + j] = F(i, j);
  double v = 0;
  if (!geo.interpolate(values, flat, v)) throw std::out_of_range("envelope: query lies outside the grid");
  return v;
}

EnvelopeGrid lamination_envelope(const EnergyDensity& W, const EnvelopeSpec& spec, int iters) {
  const int n = static_cast<int>(spec.center.rows());
  if (n < 2 || n > kMaxDim || spec.center.cols() != n) throw std::invalid_argument("envelope: bad center");
  if (spec.resolution < 2) throw std::invalid_argument("envelope: resolution must be >= 2");
  if (!(spec.radius > 0)) throw std::invalid_argument("envelope: radius must be positive");
  if (spec.directions < 1) throw std::invalid_argument("envelope: need at least one direction");
  if (iters < 0) throw std::invalid_argument("envelope: iteration count must be nonnegative");
  for (double th : spec.thetas)
    if (!(th > 0 && th < 1)) throw std::invalid_argument("envelope: theta must lie in (0,1)");

  const GridGeometry geo(spec, n);
  EnvelopeGrid grid;
  grid.spec = spec;
  grid.n = n;
  std::size_t total = 1;
  for (int e = 0; e < geo.dims; ++e) total *= static_cast<std::size_t>(spec.resolution);
  grid.values.resize(total);
  for (std::size_t k = 0; k < total; ++k) grid.values[k] = W(grid.node(k));
  grid.history.push_back(grid.values);

  const std::vector<Vec> dirs = direction_set(n, spec.directions);
  std::vector<std::vector<double>> rank_one;
  for (const Vec& a : dirs)
    for (const Vec& b : dirs) {
      std::vector<double> m(geo.dims);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i * n + j] = a(i) * b(j);
      rank_one.push_back(std::move(m));
    }
  const int steps = spec.max_steps > 0 ? spec.max_steps : spec.resolution - 1;

  for (int it = 0; it < iters; ++it) {
    const std::vector<double>& old = grid.values;
    std::vector<double> next(total);
    auto lookup = [&](const double* F) {
      double v = 0;
      if (geo.interpolate(old, F, v)) return v;
      return W(entries_to_matrix(n, F));
    };
    auto update = [&](std::size_t lo, std::size_t hi) {
      double F[9];
      double Fp[9];
      double Fm[9];
      for (std::size_t k = lo; k < hi; ++k) {
        const Mat node = grid.node(k);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) F[i * n + j] = node(i, j);
        double best = old[k];
        for (const auto& m : rank_one) {
          for (int s = 1; s <= steps; ++s) {
            const double len = s * geo.h;
            for (double th : spec.thetas) {
              for (int e = 0; e < geo.dims; ++e) {
                Fp[e] = F[e] + (1 - th) * len * m[e];
                Fm[e] = F[e] - th * len * m[e];
              }
              const double v = th * lookup(Fp) + (1 - th) * lookup(Fm);
              if (v < best) best = v;
            }
          }
        }
        next[k] = best;
      }
    };
    const int threads = std::max(1, spec.threads);
    if (threads == 1) {
      update(0, total);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (total + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(total, t * chunk);
        const std::size_t hi = std::min(total, lo + chunk);
        if (lo < hi) pool.emplace_back(update, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    grid.values = std::move(next);
    grid.history.push_back(grid.values);
    ++grid.iterations;
  }
  return grid;
}

void write_envelope_csv(std::ostream& os, const EnvelopeGrid& grid) {
  const int n = grid.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << "F_" << i + 1 << j + 1 << ',';
  os << "value\n";
  char buf[40];
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Mat F = grid.node(k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,", F(i, j));
        os << buf;
      }
    std::snprintf(buf, sizeof buf, "%.17g\n", grid.values[k]);
    os << buf;
  }
}

}  // namespace stratum

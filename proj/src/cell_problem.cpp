#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "stratum/homogenization.hpp"

namespace stratum {

void CellDiscretization::validate() const {
  if (m < 3 || m_n < 3) throw std::invalid_argument("cell discretization: need at least 3 nodes per axis");
  if (gauss_order < 1 || gauss_order > 5) throw std::invalid_argument("cell discretization: gauss_order in 1..5");
  if (max_iterations < 1) throw std::invalid_argument("cell discretization: max_iterations must be positive");
  if (!(gradient_tol > 0)) throw std::invalid_argument("cell discretization: gradient_tol must be positive");
  if (restarts < 0) throw std::invalid_argument("cell discretization: restarts must be nonnegative");
  if (threads < 1) throw std::invalid_argument("cell discretization: threads must be positive");
}

namespace {

enum class TransverseBC { Zero, Periodic };

// Multilinear finite elements for phi on the box (0,1)^{n-1} x (0,lambda)
// with phi = 0 on the faces x_n = 0, lambda and either phi = 0 or periodic
// identification on the transverse faces.
class CellProblem {
 public:
  CellProblem(int n, Mat base, const EnergyDensity& W, double lambda, const CellDiscretization& disc,
              TransverseBC bc)
      : n_(n), base_(std::move(base)), W_(W), bc_(bc) {
    for (int j = 0; j < n; ++j) {
      nodes_per_axis_[j] = (j == n - 1) ? disc.m_n : disc.m;
      length_[j] = (j == n - 1) ? lambda : 1.0;
      h_[j] = length_[j] / (nodes_per_axis_[j] - 1);
    }
    volume_ = lambda;
    node_count_ = 1;
    for (int j = 0; j < n; ++j) node_count_ *= nodes_per_axis_[j];
    assign_dofs();
    build_elements();
    build_rule(disc.gauss_order);
  }

  int unknowns() const { return dof_count_ * n_; }
  int node_count() const { return node_count_; }

  // Mean of W(base + grad phi) over the box; optional gradient.
  double energy(const std::vector<double>& x, std::vector<double>* grad) const {
    if (grad) grad->assign(x.size(), 0.0);
    double total = 0.0;
    const int corners = 1 << n_;
    for (const auto& elem : elements_) {
      for (std::size_t q = 0; q < weights_.size(); ++q) {
        Mat G = base_;
        for (int c = 0; c < corners; ++c) {
          const int dof = node_dof_[elem[c]];
          if (dof < 0) continue;
          for (int i = 0; i < n_; ++i) G.row(i) += x[dof * n_ + i] * shape_grad_[q][c].transpose();
        }
        total += weights_[q] * W_(G);
        if (grad) {
          const Mat P = W_.gradient(G);
          for (int c = 0; c < corners; ++c) {
            const int dof = node_dof_[elem[c]];
            if (dof < 0) continue;
            const Vec contrib = weights_[q] * (P * shape_grad_[q][c]);
            for (int i = 0; i < n_; ++i) (*grad)[dof * n_ + i] += contrib(i);
          }
        }
      }
    }
    if (grad)
      for (double& g : *grad) g /= volume_;
    return total / volume_;
  }

  // sqrt of the mean of |phi|^2 + |grad phi|^2.
  double h1_norm(const std::vector<double>& x) const {
    double total = 0.0;
    const int corners = 1 << n_;
    for (const auto& elem : elements_) {
      for (std::size_t q = 0; q < weights_.size(); ++q) {
        Vec v = Vec::Zero(n_);
        Mat G = Mat::Zero(n_, n_);
        for (int c = 0; c < corners; ++c) {
          const int dof = node_dof_[elem[c]];
          if (dof < 0) continue;
          for (int i = 0; i < n_; ++i) {
            v(i) += x[dof * n_ + i] * shape_[q][c];
            G.row(i) += x[dof * n_ + i] * shape_grad_[q][c].transpose();
          }
        }
        total += weights_[q] * (v.squaredNorm() + G.squaredNorm());
      }
    }
    return std::sqrt(total / volume_);
  }

  std::vector<double> to_nodes(const std::vector<double>& x) const {
    std::vector<double> out(static_cast<std::size_t>(node_count_) * n_, 0.0);
    for (int node = 0; node < node_count_; ++node) {
      const int dof = node_dof_[node];
      if (dof < 0) continue;
      for (int i = 0; i < n_; ++i) out[node * n_ + i] = x[dof * n_ + i];
    }
    return out;
  }

  std::vector<double> from_nodes(const std::vector<double>& nodal) const {
    std::vector<double> x(unknowns(), 0.0);
    for (int node = 0; node < node_count_; ++node) {
      const int dof = node_dof_[node];
      if (dof < 0) continue;
      for (int i = 0; i < n_; ++i) x[dof * n_ + i] = nodal[node * n_ + i];
    }
    return x;
  }

  // Position of a node.
  Vec position(int node) const {
    Vec p(n_);
    int rem = node;
    for (int j = 0; j < n_; ++j) {
      p(j) = (rem % nodes_per_axis_[j]) * h_[j];
      rem /= nodes_per_axis_[j];
    }
    return p;
  }

 private:
  void assign_dofs() {
    node_dof_.assign(node_count_, -1);
    std::vector<int> rep_dof(node_count_, -1);
    dof_count_ = 0;
    for (int node = 0; node < node_count_; ++node) {
      int idx[kMaxDim];
      int rem = node;
      for (int j = 0; j < n_; ++j) {
        idx[j] = rem % nodes_per_axis_[j];
        rem /= nodes_per_axis_[j];
      }
      bool fixed = idx[n_ - 1] == 0 || idx[n_ - 1] == nodes_per_axis_[n_ - 1] - 1;
      for (int j = 0; j < n_ - 1 && !fixed; ++j) {
        const bool face = idx[j] == 0 || idx[j] == nodes_per_axis_[j] - 1;
        if (bc_ == TransverseBC::Zero && face) fixed = true;
        if (bc_ == TransverseBC::Periodic && idx[j] == nodes_per_axis_[j] - 1) idx[j] = 0;
      }
      if (fixed) continue;
      int rep = 0;
      int stride = 1;
      for (int j = 0; j < n_; ++j) {
        rep += idx[j] * stride;
        stride *= nodes_per_axis_[j];
      }
      if (rep_dof[rep] < 0) rep_dof[rep] = dof_count_++;
      node_dof_[node] = rep_dof[rep];
    }
  }

  void build_elements() {
    int counts[kMaxDim];
    int total = 1;
    for (int j = 0; j < n_; ++j) {
      counts[j] = nodes_per_axis_[j] - 1;
      total *= counts[j];
    }
    const int corners = 1 << n_;
    for (int e = 0; e < total; ++e) {
      int idx[kMaxDim];
      int rem = e;
      for (int j = 0; j < n_; ++j) {
        idx[j] = rem % counts[j];
        rem /= counts[j];
      }
      std::array<int, 8> elem{};
      for (int c = 0; c < corners; ++c) {
        int node = 0;
        int stride = 1;
        for (int j = 0; j < n_; ++j) {
          node += (idx[j] + ((c >> j) & 1)) * stride;
          stride *= nodes_per_axis_[j];
        }
        elem[c] = node;
      }
      elements_.push_back(elem);
    }
  }

  void build_rule(int order) {
    const GaussRule& g = gauss_rule(order);
    int total = 1;
    for (int j = 0; j < n_; ++j) total *= g.size;
    const int corners = 1 << n_;
    double elem_volume = 1.0;
    for (int j = 0; j < n_; ++j) elem_volume *= h_[j];
    for (int q = 0; q < total; ++q) {
      double xi[kMaxDim];
      double w = elem_volume;
      int rem = q;
      for (int j = 0; j < n_; ++j) {
        const int k = rem % g.size;
        rem /= g.size;
        xi[j] = 0.5 * (1 + g.x[k]);
        w *= 0.5 * g.w[k];
      }
      weights_.push_back(w);
      std::array<double, 8> vals{};
      std::array<Vec, 8> grads{};
      for (int c = 0; c < corners; ++c) {
        double v = 1.0;
        Vec gr = Vec::Ones(n_);
        for (int j = 0; j < n_; ++j) {
          const bool hi = (c >> j) & 1;
          const double f = hi ? xi[j] : 1 - xi[j];
          const double df = (hi ? 1.0 : -1.0) / h_[j];
          v *= f;
          for (int k = 0; k < n_; ++k) gr(k) *= (k == j) ? df : f;
        }
        vals[c] = v;
        grads[c] = gr;
      }
      shape_.push_back(vals);
      shape_grad_.push_back(grads);
    }
  }

  int n_;
  Mat base_;
  const EnergyDensity& W_;
  TransverseBC bc_;
  int nodes_per_axis_[kMaxDim]{};
  double length_[kMaxDim]{};
  double h_[kMaxDim]{};
  double volume_ = 1.0;
  int node_count_ = 0;
  int dof_count_ = 0;
  std::vector<int> node_dof_;
  std::vector<std::array<int, 8>> elements_;
  std::vector<double> weights_;
  std::vector<std::array<double, 8>> shape_;
  std::vector<std::array<Vec, 8>> shape_grad_;
};

struct Descent {
  std::vector<double> x;
  double value;
  bool converged;
  int iterations;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Limited-memory BFGS with Armijo backtracking.
Descent lbfgs(const CellProblem& prob, std::vector<double> x, int max_iterations, double gtol) {
  const int memory = 10;
  std::vector<double> g;
  double f = prob.energy(x, &g);
  std::vector<std::vector<double>> S;
  std::vector<std::vector<double>> Y;
  std::vector<double> rho;
  auto forget = [&] {
    S.clear();
    Y.clear();
    rho.clear();
  };
  const std::size_t N = x.size();
  int it = 0;
  int stalled = 0;  // consecutive steps whose decrease is at rounding level
  bool converged = N == 0;
  for (; it < max_iterations && !converged; ++it) {
    if (std::sqrt(dot(g, g)) <= gtol) {
      converged = true;
      break;
    }
    std::vector<double> d(g);
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      alpha[k] = rho[k] * dot(S[k], d);
      for (std::size_t i = 0; i < N; ++i) d[i] -= alpha[k] * Y[k][i];
    }
    if (!S.empty()) {
      const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * dot(Y[k], d);
      for (std::size_t i = 0; i < N; ++i) d[i] += S[k][i] * (alpha[k] - beta);
    }
    for (double& v : d) v = -v;
    double slope = dot(g, d);
    if (!(slope < 0)) {
      forget();
      d = g;
      for (double& v : d) v = -v;
      slope = dot(g, d);
    }
    double step = S.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;
    std::vector<double> xn(N);
    std::vector<double> gn;
    double fn = 0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      for (std::size_t i = 0; i < N; ++i) xn[i] = x[i] + step * d[i];
      fn = prob.energy(xn, &gn);
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!S.empty()) {
        forget();
        continue;
      }
      // No descent left at machine precision.
      converged = std::sqrt(dot(g, g)) <= std::sqrt(gtol);
      break;
    }
    std::vector<double> s(N);
    std::vector<double> y(N);
    for (std::size_t i = 0; i < N; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-14 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (static_cast<int>(S.size()) == memory) {
        S.erase(S.begin());
        Y.erase(Y.begin());
        rho.erase(rho.begin());
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    stalled = (f - fn) <= 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f)) ? stalled + 1 : 0;
    x.swap(xn);
    g.swap(gn);
    f = fn;
    if (stalled >= 5) {
      converged = std::sqrt(dot(g, g)) <= std::sqrt(gtol);
      ++it;
      break;
    }
  }
  return {std::move(x), f, converged, it};
}

// Multilinear interpolation of a coarse nodal solution at the fine nodes.
std::vector<double> prolong(const CellSolution& coarse, const CellProblem& fine, int n, double lambda,
                            const CellDiscretization& disc) {
  if ((disc.m - 1) % (coarse.m - 1) != 0 || (disc.m_n - 1) % (coarse.m_n - 1) != 0)
    throw std::invalid_argument("cell_minimize: warm start grid is not nested in the target grid");
  int per_axis[kMaxDim];
  double h[kMaxDim];
  for (int j = 0; j < n; ++j) {
    per_axis[j] = (j == n - 1) ? coarse.m_n : coarse.m;
    h[j] = ((j == n - 1) ? lambda : 1.0) / (per_axis[j] - 1);
  }
  std::vector<double> nodal(static_cast<std::size_t>(fine.node_count()) * n, 0.0);
  for (int node = 0; node < fine.node_count(); ++node) {
    const Vec p = fine.position(node);
    int base[kMaxDim];
    double t[kMaxDim];
    for (int j = 0; j < n; ++j) {
      const double s = p(j) / h[j];
      base[j] = std::min(static_cast<int>(std::floor(s + 1e-12)), per_axis[j] - 2);
      t[j] = s - base[j];
    }
    for (int c = 0; c < (1 << n); ++c) {
      double w = 1;
      int idx = 0;
      int stride = 1;
      for (int j = 0; j < n; ++j) {
        const bool hi = (c >> j) & 1;
        w *= hi ? t[j] : 1 - t[j];
        idx += (base[j] + (hi ? 1 : 0)) * stride;
        stride *= per_axis[j];
      }
      if (w == 0) continue;
      for (int i = 0; i < n; ++i) nodal[node * n + i] += w * coarse.nodes[idx * n + i];
    }
  }
  return fine.from_nodes(nodal);
}

CellSolution solve(const CellProblem& prob, int n, double lambda, const CellDiscretization& disc,
                   const CellSolution* warm) {
  std::vector<std::vector<double>> starts;
  starts.emplace_back(prob.unknowns(), 0.0);
  for (int k = 0; k < disc.restarts; ++k) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(disc.seed) * 1000003ULL + static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> dist(-disc.restart_amplitude, disc.restart_amplitude);
    std::vector<double> x(prob.unknowns());
    for (double& v : x) v = dist(rng);
    starts.push_back(std::move(x));
  }
  if (warm) starts.push_back(prolong(*warm, prob, n, lambda, disc));

  std::vector<Descent> runs(starts.size());
  auto work = [&](std::size_t k) { runs[k] = lbfgs(prob, starts[k], disc.max_iterations, disc.gradient_tol); };
  if (disc.threads <= 1 || starts.size() == 1) {
    for (std::size_t k = 0; k < starts.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    while (next < starts.size()) {
      pool.clear();
      for (int t = 0; t < disc.threads && next < starts.size(); ++t, ++next) pool.emplace_back(work, next);
      for (auto& th : pool) th.join();
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k)
    // A later start must beat the incumbent by more than rounding.
    if (runs[k].value < runs[best].value - 1e-12 * std::max(1.0, std::abs(runs[best].value))) best = k;

  CellSolution out;
  out.value = lambda * runs[best].value;
  out.perturbation_norm = prob.h1_norm(runs[best].x);
  out.converged = runs[best].converged;
  out.iterations = runs[best].iterations;
  out.nodes = prob.to_nodes(runs[best].x);
  out.m = disc.m;
  out.m_n = disc.m_n;
  return out;
}

}  // namespace

CellSolution cell_minimize(const Mat& F, const EnergyDensity& W, double lambda, const CellDiscretization& disc,
                           const CellSolution* warm) {
  disc.validate();
  if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("cell_minimize: lambda must lie in (0,1)");
  const auto dec = decompose_a(F);
  if (!dec) {
    CellSolution inf;
    inf.value = std::numeric_limits<double>::infinity();
    inf.infinite = true;
    inf.converged = true;
    return inf;
  }
  const int n = static_cast<int>(F.rows());
  const CellProblem prob(n, f_lambda(*dec, lambda), W, lambda, disc, TransverseBC::Zero);
  return solve(prob, n, lambda, disc, warm);
}

CellSolution cell_formula_rigid(const Mat& F, const EnergyDensity& W, double lambda, const CellDiscretization& disc) {
  disc.validate();
  if (!(lambda > 0 && lambda < 1)) throw std::invalid_argument("cell_formula_rigid: lambda must lie in (0,1)");
  const auto dec = decompose_a(F);
  if (!dec) {
    CellSolution inf;
    inf.value = std::numeric_limits<double>::infinity();
    inf.infinite = true;
    inf.converged = true;
    return inf;
  }
  const int n = static_cast<int>(F.rows());
  const Vec& d = dec->shear;
  // Corrector gradient: -d (x) e_n on the stiff phase, (1-lambda)/lambda d (x) e_n on the soft phase.
  Mat stiff = F;
  stiff.col(n - 1) -= d;
  Mat soft = F;
  soft.col(n - 1) += (1 - lambda) / lambda * d;
  if (dist_so(stiff) > 1e-8) throw std::logic_error("cell_formula_rigid: stiff phase left SO(n)");
  const CellProblem prob(n, soft, W, lambda, disc, TransverseBC::Periodic);
  return solve(prob, n, lambda, disc, nullptr);
}

}  // namespace stratum

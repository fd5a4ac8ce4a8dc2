// Brute-force reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's solvers.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Adj = std::vector<std::vector<std::size_t>>;

inline double sigma(const Eigen::MatrixXd &theta, const std::vector<double> &w, double p,
                    std::size_t x) {
  double s = 0.0;
  for (std::size_t y = 0; y < w.size(); ++y)
    s += std::pow(theta(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)), p) * w[y];
  return std::pow(s, 1.0 / p);
}

// Enumerates simple paths from a to b; calls f with each vertex sequence.
inline void simple_paths(const Adj &adj, std::size_t a, std::size_t b,
                         const std::function<void(const std::vector<std::size_t> &)> &f) {
  std::vector<std::size_t> path{a};
  std::vector<char> used(adj.size(), 0);
  used[a] = 1;
  std::function<void()> rec = [&] {
    const auto u = path.back();
    if (u == b) {
      f(path);
      return;
    }
    for (auto v : adj[u])
      if (!used[v]) {
        used[v] = 1;
        path.push_back(v);
        rec();
        path.pop_back();
        used[v] = 0;
      }
  };
  rec();
}

// min over simple paths of the max of `value` along the path.
inline double path_minimax(const Adj &adj, std::size_t a, std::size_t b,
                           const std::function<double(std::size_t)> &value) {
  double best = std::numeric_limits<double>::infinity();
  simple_paths(adj, a, b, [&](const std::vector<std::size_t> &p) {
    double m = -std::numeric_limits<double>::infinity();
    for (auto v : p)
      m = std::max(m, value(v));
    best = std::min(best, m);
  });
  return best;
}

// Sublevel-set tree distance: minimax height between a and b minus the
// smaller endpoint value.
inline double tree_distance(const Adj &adj, const std::vector<double> &f, std::size_t a,
                            std::size_t b) {
  const double h = path_minimax(adj, a, b, [&](std::size_t v) { return f[v]; });
  return h - std::min(f[a], f[b]);
}

// Merge radius: min over simple paths of max_z max(theta(a,z), theta(z,b)).
inline double merge_radius(const Adj &adj, const Eigen::MatrixXd &theta, std::size_t a,
                           std::size_t b) {
  if (a == b)
    return 0.0;
  return path_minimax(adj, a, b, [&](std::size_t z) {
    return std::max(theta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(z)),
                    theta(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(b)));
  });
}

// Minimum over permutations of sum c(i, pi(i)) / n.
inline double assignment(const Eigen::MatrixXd &c) {
  const auto n = static_cast<std::size_t>(c.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

// W_p on the line via the quantile functions, integrated exactly piecewise.
inline double wasserstein_line(std::vector<std::pair<double, double>> a,
                               std::vector<std::pair<double, double>> b, double p) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> cuts{0.0, 1.0};
  double s = 0.0;
  for (auto &[x, w] : a)
    cuts.push_back(s += w);
  s = 0.0;
  for (auto &[x, w] : b)
    cuts.push_back(s += w);
  std::sort(cuts.begin(), cuts.end());
  auto quantile = [](const std::vector<std::pair<double, double>> &v, double u) {
    double c = 0.0;
    for (auto &[x, w] : v) {
      c += w;
      if (u < c)
        return x;
    }
    return v.back().first;
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = std::min(cuts[k + 1], 1.0);
    if (hi - lo <= 1e-15)
      continue;
    const double mid = 0.5 * (lo + hi);
    total += (hi - lo) * std::pow(std::abs(quantile(a, mid) - quantile(b, mid)), p);
  }
  return std::pow(total, 1.0 / p);
}

// (1/2) J^(1/p) minimized over permutation couplings, by enumeration.
inline double gw_permutations(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b, double p) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        s += std::pow(std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                               b(static_cast<Eigen::Index>(perm[i]),
                                 static_cast<Eigen::Index>(perm[k]))),
                      p);
    best = std::min(best, s / static_cast<double>(n * n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 0.5 * std::pow(best, 1.0 / p);
}

// Random metric: shortest paths of a random complete weighted graph.
inline Eigen::MatrixXd random_metric(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = u(rng);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j),
                   K = static_cast<Eigen::Index>(k);
        d(I, J) = std::min(d(I, J), d(I, K) + d(K, J));
      }
  return d;
}

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  double s = 0.0;
  for (auto &x : w)
    s += x = u(rng);
  for (auto &x : w)
    x /= s;
  return w;
}

// Trapezoid rule for the 1-D heat diffusion distance
// theta_t(x, y)^2 = int (k_t(x, z) - k_t(y, z))^2 dz, k_t the heat kernel.
inline double heat_theta_trapezoid(double x, double y, double t, std::size_t steps = 200000) {
  const double s = std::sqrt(2.0 * t);
  const double lo = std::min(x, y) - 12.0 * s, hi = std::max(x, y) + 12.0 * s;
  const double h = (hi - lo) / static_cast<double>(steps);
  auto k = [t](double a, double z) {
    return std::exp(-(a - z) * (a - z) / (4.0 * t)) / std::sqrt(4.0 * M_PI * t);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double z = lo + h * static_cast<double>(i);
    const double v = k(x, z) - k(y, z);
    acc += (i == 0 || i == steps ? 0.5 : 1.0) * v * v;
  }
  return std::sqrt(acc * h);
}

} // namespace oracle

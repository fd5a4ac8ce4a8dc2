#include "bmt/transport.hpp"

#include "bmt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bmt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> positive_support(std::span<const double> w) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
      throw InvalidArgument("transport weights must be finite and nonnegative");
    if (w[i] > 0.0)
      idx.push_back(i);
  }
  return idx;
}

void check_problem(std::span<const double> a, std::span<const double> b, const Matrix &c) {
  if (static_cast<std::size_t>(c.rows()) != a.size() ||
      static_cast<std::size_t>(c.cols()) != b.size())
    throw InvalidArgument("cost matrix does not match the marginals");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sa - sb) > 1e-9 * std::max(1.0, std::max(sa, sb)))
    throw InvalidArgument("marginal mass mismatch");
  if (!(sa > 0.0))
    throw InvalidArgument("marginals have zero mass");
}

// Network simplex on the bipartite transportation network plus an
// artificial root joined to every node by a big-M arc.
class Simplex {
public:
  Simplex(const std::vector<double> &a, const std::vector<double> &b, const Matrix &c)
      : m_(a.size()), n_(b.size()), cost_(c), root_(m_ + n_) {
    const std::size_t cells = m_ * n_;
    double cmax = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      for (Eigen::Index j = 0; j < c.cols(); ++j)
        cmax = std::max(cmax, std::abs(c(i, j)));
    big_ = (cmax + 1.0) * static_cast<double>(m_ + n_ + 1);
    tol_ = 1e-13 * big_;
    flow_.assign(cells + m_ + n_, 0.0);
    art_up_.assign(m_ + n_, false);
    tree_adj_.assign(m_ + n_ + 1, {});
    for (std::size_t i = 0; i < m_; ++i) {
      // Zero-flow tree arcs must point away from the root.
      art_up_[i] = a[i] > 0.0;
      flow_[cells + i] = a[i];
      link(cells + i);
    }
    for (std::size_t j = 0; j < n_; ++j) {
      flow_[cells + m_ + j] = b[j];
      link(cells + m_ + j);
    }
    parent_.assign(m_ + n_ + 1, 0);
    pred_.assign(m_ + n_ + 1, 0);
    depth_.assign(m_ + n_ + 1, 0);
    pot_.assign(m_ + n_ + 1, 0.0);
    rebuild();
  }

  std::size_t run() {
    const std::size_t cells = m_ * n_;
    const std::size_t block = std::max<std::size_t>(
        10, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cells)))));
    const std::size_t cap = std::max<std::size_t>(1000000, 50 * cells);
    std::size_t next = 0, pivots = 0;
    for (;;) {
      // Block search pricing.
      std::size_t best = cells;
      double best_rc = -tol_;
      std::size_t scanned = 0, in_block = 0;
      while (scanned < cells) {
        const std::size_t k = next;
        next = next + 1 == cells ? 0 : next + 1;
        ++scanned;
        const double rc = reduced_cost(k);
        if (rc < best_rc) {
          best_rc = rc;
          best = k;
        }
        if (++in_block == block) {
          if (best != cells)
            break;
          in_block = 0;
        }
      }
      if (best == cells)
        return pivots;
      pivot(best);
      if (++pivots > cap)
        throw SolverError("network simplex exceeded its pivot cap");
    }
  }

  Matrix plan() const {
    Matrix p(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flow_[i * n_ + j];
    return p;
  }

private:
  std::size_t src(std::size_t arc) const {
    const std::size_t cells = m_ * n_;
    if (arc < cells)
      return arc / n_;
    const std::size_t node = arc - cells;
    return node < m_ ? (art_up_[node] ? node : root_) : root_;
  }
  std::size_t dst(std::size_t arc) const {
    const std::size_t cells = m_ * n_;
    if (arc < cells)
      return m_ + arc % n_;
    const std::size_t node = arc - cells;
    return node < m_ ? (art_up_[node] ? root_ : node) : node;
  }
  double arc_cost(std::size_t arc) const {
    if (arc < m_ * n_)
      return cost_(static_cast<Eigen::Index>(arc / n_), static_cast<Eigen::Index>(arc % n_));
    return big_;
  }
  double reduced_cost(std::size_t cell) const {
    return cost_(static_cast<Eigen::Index>(cell / n_), static_cast<Eigen::Index>(cell % n_)) +
           pot_[cell / n_] - pot_[m_ + cell % n_];
  }
  void link(std::size_t arc) {
    tree_adj_[src(arc)].push_back(arc);
    tree_adj_[dst(arc)].push_back(arc);
  }
  void unlink(std::size_t arc) {
    for (auto node : {src(arc), dst(arc)}) {
      auto &v = tree_adj_[node];
      v.erase(std::find(v.begin(), v.end(), arc));
    }
  }

  void rebuild() {
    std::vector<std::size_t> queue{root_};
    std::vector<char> seen(m_ + n_ + 1, 0);
    seen[root_] = 1;
    depth_[root_] = 0;
    pot_[root_] = 0.0;
    for (std::size_t k = 0; k < queue.size(); ++k) {
      const auto u = queue[k];
      for (auto arc : tree_adj_[u]) {
        const auto s = src(arc), d = dst(arc);
        const auto w = s == u ? d : s;
        if (seen[w])
          continue;
        seen[w] = 1;
        parent_[w] = u;
        pred_[w] = arc;
        depth_[w] = depth_[u] + 1;
        // Tree arcs have zero reduced cost: c + pot[src] - pot[dst] = 0.
        pot_[w] = s == w ? pot_[u] - arc_cost(arc) : pot_[u] + arc_cost(arc);
        queue.push_back(w);
      }
    }
  }

  void pivot(std::size_t enter) {
    const auto u = src(enter), v = dst(enter);
    std::size_t x = u, y = v;
    while (depth_[x] > depth_[y])
      x = parent_[x];
    while (depth_[y] > depth_[x])
      y = parent_[y];
    while (x != y) {
      x = parent_[x];
      y = parent_[y];
    }
    const auto join = x;

    // Cycle arcs in orientation order starting at the join: down to u, the
    // entering arc, then up from v. `forward` means flow increases.
    struct Step {
      std::size_t arc;
      bool forward;
    };
    std::vector<Step> cycle;
    for (std::size_t w = u; w != join; w = parent_[w])
      cycle.push_back({pred_[w], dst(pred_[w]) == w});
    std::reverse(cycle.begin(), cycle.end());
    cycle.push_back({enter, true});
    for (std::size_t w = v; w != join; w = parent_[w])
      cycle.push_back({pred_[w], src(pred_[w]) == w});

    double theta = kInf;
    for (const auto &s : cycle)
      if (!s.forward)
        theta = std::min(theta, flow_[s.arc]);
    if (theta == kInf)
      throw SolverError("network simplex found an unbounded cycle");
    // Last blocking arc keeps the tree strongly feasible.
    std::size_t leave = cycle.size();
    for (std::size_t k = 0; k < cycle.size(); ++k)
      if (!cycle[k].forward && flow_[cycle[k].arc] == theta)
        leave = k;
    for (const auto &s : cycle)
      flow_[s.arc] += s.forward ? theta : -theta;
    const auto out = cycle[leave].arc;
    flow_[out] = 0.0;
    unlink(out);
    link(enter);
    rebuild();
  }

  std::size_t m_, n_;
  const Matrix &cost_;
  std::size_t root_;
  double big_ = 0.0, tol_ = 0.0;
  std::vector<double> flow_;
  std::vector<bool> art_up_;
  std::vector<std::vector<std::size_t>> tree_adj_;
  std::vector<std::size_t> parent_, pred_, depth_;
  std::vector<double> pot_;
};

double lse(const double *v, std::size_t n) {
  double mx = -kInf;
  for (std::size_t k = 0; k < n; ++k)
    mx = std::max(mx, v[k]);
  if (mx == -kInf)
    return -kInf;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    s += std::exp(v[k] - mx);
  return mx + std::log(s);
}

// Restrict to positive-weight rows and columns, solve, expand.
template <class Solve>
TransportPlan on_support(std::span<const double> a, std::span<const double> b,
                         const Matrix &cost, Solve solve) {
  check_problem(a, b, cost);
  const auto ri = positive_support(a), ci = positive_support(b);
  std::vector<double> as, bs;
  for (auto i : ri)
    as.push_back(a[i]);
  for (auto j : ci)
    bs.push_back(b[j]);
  Matrix cs(static_cast<Eigen::Index>(ri.size()), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t i = 0; i < ri.size(); ++i)
    for (std::size_t j = 0; j < ci.size(); ++j)
      cs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cost(static_cast<Eigen::Index>(ri[i]), static_cast<Eigen::Index>(ci[j]));
  TransportPlan sub = solve(as, bs, cs);
  TransportPlan out = sub;
  out.plan = Matrix::Zero(cost.rows(), cost.cols());
  for (std::size_t i = 0; i < ri.size(); ++i)
    for (std::size_t j = 0; j < ci.size(); ++j)
      out.plan(static_cast<Eigen::Index>(ri[i]), static_cast<Eigen::Index>(ci[j])) =
          sub.plan(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  out.cost = (out.plan.array() * cost.array()).sum();
  return out;
}

} // namespace

TransportPlan network_simplex(std::span<const double> a, std::span<const double> b,
                              const Matrix &cost) {
  return on_support(a, b, cost, [](const std::vector<double> &as, const std::vector<double> &bs,
                                   const Matrix &cs) {
    Simplex s(as, bs, cs);
    TransportPlan t;
    t.iterations = s.run();
    t.plan = s.plan();
    t.kind = "exact";
    return t;
  });
}

TransportPlan sinkhorn(std::span<const double> a, std::span<const double> b,
                       const Matrix &cost, double reg, std::size_t max_iter, double tol) {
  if (!(reg > 0.0))
    throw InvalidArgument("entropic regularization must be positive");
  return on_support(a, b, cost, [&](const std::vector<double> &as,
                                    const std::vector<double> &bs, const Matrix &c) {
    const auto m = as.size(), n = bs.size();
    std::vector<double> la(m), lb(n), f(m, 0.0), g(n, 0.0), buf(std::max(m, n));
    for (std::size_t i = 0; i < m; ++i)
      la[i] = std::log(as[i]);
    for (std::size_t j = 0; j < n; ++j)
      lb[j] = std::log(bs[j]);
    const double cmax = c.maxCoeff(), cmin = c.minCoeff();
    auto C = [&](std::size_t i, std::size_t j) {
      return c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    auto sweep = [&](double eps) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j)
          buf[j] = (g[j] - C(i, j)) / eps;
        f[i] = eps * (la[i] - lse(buf.data(), n));
      }
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i)
          buf[i] = (f[i] - C(i, j)) / eps;
        g[j] = eps * (lb[j] - lse(buf.data(), m));
      }
    };
    auto row_error = [&](double eps) {
      double err = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          s += std::exp((f[i] + g[j] - C(i, j)) / eps);
        err = std::max(err, std::abs(s - as[i]));
      }
      return err;
    };
    // Epsilon scaling: warm-start the potentials at coarse regularizations.
    double eps = std::max(reg, cmax - cmin);
    while (eps > reg) {
      for (int k = 0; k < 50; ++k)
        sweep(eps);
      eps = std::max(reg, eps * 0.5);
    }
    std::size_t it = 0;
    double err = kInf;
    while (it < max_iter) {
      sweep(reg);
      ++it;
      if (it % 10 == 0 || it == max_iter) {
        err = row_error(reg);
        if (err < tol)
          break;
      }
    }
    if (!(err < tol))
      throw SolverError("sinkhorn did not reach marginal error " + std::to_string(tol) +
                        " in " + std::to_string(max_iter) + " iterations (error " +
                        std::to_string(err) + ")");
    TransportPlan t;
    t.plan.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        t.plan(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::exp((f[i] + g[j] - C(i, j)) / reg);
    t.kind = "entropic";
    t.iterations = it;
    t.reg = reg;
    return t;
  });
}

TransportPlan solve_ot(std::span<const double> a, std::span<const double> b,
                       const Matrix &cost) {
  if (a.size() * b.size() <= kExactCellCap)
    return network_simplex(a, b, cost);
  std::vector<double> all(cost.data(), cost.data() + cost.size());
  auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
  std::nth_element(all.begin(), mid, all.end());
  double reg = 1e-3 * *mid;
  if (!(reg > 0.0))
    reg = 1e-3 * std::max(1e-12, cost.maxCoeff());
  return sinkhorn(a, b, cost, reg);
}

Wasserstein wasserstein(std::span<const double> a, std::span<const double> b,
                        const Matrix &cross, double p) {
  if (!(p >= 1.0))
    throw InvalidArgument("Wasserstein order p must be >= 1");
  if (cross.minCoeff() < 0.0)
    throw InvalidArgument("distances must be nonnegative");
  const Matrix c = p == 1.0 ? cross : Matrix(cross.array().pow(p));
  Wasserstein w;
  w.plan = solve_ot(a, b, c);
  w.value = std::pow(std::max(0.0, w.plan.cost), 1.0 / p);
  return w;
}

double wasserstein_1d(std::span<const double> xa, std::span<const double> wa,
                      std::span<const double> xb, std::span<const double> wb, double p) {
  if (xa.size() != wa.size() || xb.size() != wb.size())
    throw InvalidArgument("values and weights differ in length");
  if (xa.empty() || xb.empty())
    throw InvalidArgument("empty 1-D measure");
  if (!(p >= 1.0))
    throw InvalidArgument("Wasserstein order p must be >= 1");
  auto sorted = [](std::span<const double> x, std::span<const double> w) {
    std::vector<std::size_t> o(x.size());
    std::iota(o.begin(), o.end(), 0);
    std::sort(o.begin(), o.end(), [&](std::size_t i, std::size_t j) {
      return x[i] < x[j] || (x[i] == x[j] && i < j);
    });
    std::vector<std::pair<double, double>> out;
    for (auto i : o)
      if (w[i] > 0.0)
        out.emplace_back(x[i], w[i]);
    return out;
  };
  const auto A = sorted(xa, wa), B = sorted(xb, wb);
  std::size_t i = 0, j = 0;
  double ra = A[0].second, rb = B[0].second, cost = 0.0;
  while (i < A.size() && j < B.size()) {
    const double mass = std::min(ra, rb);
    cost += mass * std::pow(std::abs(A[i].first - B[j].first), p);
    ra -= mass;
    rb -= mass;
    // Rounding leaves crumbs; a side is exhausted when its remainder is
    // within 1e-15 of zero.
    if (ra <= 1e-15 && ++i < A.size())
      ra = A[i].second;
    if (rb <= 1e-15 && ++j < B.size())
      rb = B[j].second;
  }
  return std::pow(cost, 1.0 / p);
}

double circle_wasserstein_uniform(std::span<const double> xa, std::span<const double> xb,
                                  double p) {
  const auto n = xa.size();
  if (n == 0 || xb.size() != n)
    throw InvalidArgument("circle transport needs two samples of equal nonzero size");
  auto wrap = [](std::span<const double> x) {
    std::vector<double> v(x.begin(), x.end());
    for (auto &a : v) {
      a = std::fmod(a, 2.0 * M_PI);
      if (a < 0)
        a += 2.0 * M_PI;
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto a = wrap(xa), b = wrap(xb);
  double best = kInf;
  for (std::size_t s = 0; s < n; ++s) {
    double c = 0.0;
    for (std::size_t i = 0; i < n && c < best; ++i)
      c += std::pow(circle_geodesic(a[i], b[(i + s) % n]), p);
    best = std::min(best, c);
  }
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

double marginal_error(const Matrix &plan, std::span<const double> a,
                      std::span<const double> b) {
  double err = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    err = std::max(err, std::abs(plan.row(i).sum() - a[static_cast<std::size_t>(i)]));
  for (Eigen::Index j = 0; j < plan.cols(); ++j)
    err = std::max(err, std::abs(plan.col(j).sum() - b[static_cast<std::size_t>(j)]));
  return err;
}

} // namespace bmt

#include "bmt/tree_compare.hpp"

#include "bmt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bmt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double powp(double x, double p) { return p == 2.0 ? x * x : p == 1.0 ? x : std::pow(x, p); }

Relation complete(Relation rel, const FunctionalTree &a, const FunctionalTree &b) {
  std::vector<char> ca(a.size(), 0), cb(b.size(), 0);
  for (auto [x, y] : rel) {
    ca[x] = 1;
    cb[y] = 1;
  }
  auto nearest = [](double h, const std::vector<double> &hs) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < hs.size(); ++k)
      if (std::abs(hs[k] - h) < std::abs(hs[best] - h))
        best = k;
    return best;
  };
  for (std::size_t x = 0; x < a.size(); ++x)
    if (!ca[x])
      rel.emplace_back(x, nearest(a.height[x], b.height));
  for (std::size_t y = 0; y < b.size(); ++y)
    if (!cb[y])
      rel.emplace_back(nearest(b.height[y], a.height), y);
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  return rel;
}

// Support of the monotone (quantile) coupling between two weighted sets of
// reals, as a dense plan.
Matrix monotone_plan(std::span<const double> xa, std::span<const double> wa,
                     std::span<const double> xb, std::span<const double> wb) {
  auto order = [](std::span<const double> x) {
    std::vector<std::size_t> o(x.size());
    std::iota(o.begin(), o.end(), 0);
    std::sort(o.begin(), o.end(), [&](std::size_t i, std::size_t j) {
      return x[i] < x[j] || (x[i] == x[j] && i < j);
    });
    return o;
  };
  const auto oa = order(xa), ob = order(xb);
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(xa.size()),
                          static_cast<Eigen::Index>(xb.size()));
  std::size_t i = 0, j = 0;
  double ra = wa[oa[0]], rb = wb[ob[0]];
  while (i < oa.size() && j < ob.size()) {
    const double m = std::min(ra, rb);
    t(static_cast<Eigen::Index>(oa[i]), static_cast<Eigen::Index>(ob[j])) += m;
    ra -= m;
    rb -= m;
    if (ra <= 1e-15 && ++i < oa.size())
      ra = wa[oa[i]];
    if (rb <= 1e-15 && ++j < ob.size())
      rb = wb[ob[j]];
  }
  return t;
}

// (L (x) X)_ij = sum_kl |A_ik - B_jl|^p X_kl.
Matrix tensor(const Matrix &da, const Matrix &db, const Matrix &x, double p) {
  const auto n = da.rows(), m = db.rows();
  if (p == 2.0) {
    const Eigen::VectorXd r = x.rowwise().sum(), c = x.colwise().sum().transpose();
    const Matrix a2 = da.array().square().matrix(), b2 = db.array().square().matrix();
    const Eigen::VectorXd u = a2 * r, v = b2 * c;
    Matrix out = -2.0 * (da * x * db.transpose());
    out.colwise() += u;
    out.rowwise() += v.transpose();
    return out;
  }
  Matrix out = Matrix::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < m; ++l)
          if (x(k, l) != 0.0)
            s += powp(std::abs(da(i, k) - db(j, l)), p) * x(k, l);
      out(i, j) = s;
    }
  return out;
}

double dot(const Matrix &a, const Matrix &b) { return (a.array() * b.array()).sum(); }

struct CgRun {
  double j = kInf;
  Matrix plan;
  std::size_t iterations = 0;
};

CgRun conditional_gradient(const Matrix &da, std::span<const double> a, const Matrix &db,
                           std::span<const double> b, double p, Matrix t) {
  CgRun run;
  double j = dot(tensor(da, db, t, p), t);
  for (std::size_t it = 0; it < 200; ++it) {
    run.iterations = it + 1;
    const Matrix grad = 2.0 * tensor(da, db, t, p);
    const Matrix s = solve_ot(a, b, grad).plan;
    const Matrix d = s - t;
    const double lin = dot(grad, d);
    if (lin >= -1e-15 * std::max(1.0, std::abs(j)))
      break;
    const double quad = dot(tensor(da, db, d, p), d);
    double tau;
    if (quad > 0.0)
      tau = std::clamp(-lin / (2.0 * quad), 0.0, 1.0);
    else
      tau = quad + lin < 0.0 ? 1.0 : 0.0;
    if (tau <= 0.0)
      break;
    t += tau * d;
    j = dot(tensor(da, db, t, p), t);
  }
  run.j = std::max(0.0, j);
  run.plan = std::move(t);
  return run;
}

bool uniform_weights(std::span<const double> w) {
  for (double x : w)
    if (std::abs(x - w[0]) > 1e-15)
      return false;
  return true;
}

} // namespace

double height_lower_bound(const FunctionalTree &a, const FunctionalTree &b, double p) {
  return wasserstein_1d(a.height, a.mass, b.height, b.mass, p);
}

std::vector<double> eccentricities(const Matrix &d, std::span<const double> mu, double p) {
  std::vector<double> e(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      s += powp(d(i, j), p) * mu[static_cast<std::size_t>(j)];
    e[static_cast<std::size_t>(i)] = std::pow(s, 1.0 / p);
  }
  return e;
}

double eccentricity_lower_bound(const Matrix &da, std::span<const double> ma,
                                const Matrix &db, std::span<const double> mb, double p) {
  const auto ea = eccentricities(da, ma, p), eb = eccentricities(db, mb, p);
  return 0.5 * wasserstein_1d(ea, ma, eb, mb, p);
}

double certified_lower_bound(const FunctionalTree &a, const FunctionalTree &b, double p) {
  return std::max(eccentricity_lower_bound(a.d, a.mass, b.d, b.mass, p),
                  height_lower_bound(a, b, p));
}

double distortion(const Relation &rel, const Matrix &da, const Matrix &db) {
  double dis = 0.0;
  for (std::size_t s = 0; s < rel.size(); ++s)
    for (std::size_t t = s + 1; t < rel.size(); ++t) {
      const auto [x, y] = rel[s];
      const auto [x2, y2] = rel[t];
      dis = std::max(dis, std::abs(da(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x2)) -
                                   db(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(y2))));
    }
  return dis;
}

Matrix relation_coupling(const Relation &rel, const Matrix &da, const Matrix &db, double r) {
  if (rel.empty())
    throw InvalidArgument("empty relation");
  Matrix out = Matrix::Constant(da.rows(), db.rows(), kInf);
  for (Eigen::Index x = 0; x < da.rows(); ++x)
    for (auto [w, w2] : rel) {
      const double dx = da(x, static_cast<Eigen::Index>(w));
      for (Eigen::Index y = 0; y < db.rows(); ++y)
        out(x, y) = std::min(out(x, y), dx + db(static_cast<Eigen::Index>(w2), y));
    }
  return (out.array() + r).matrix();
}

std::vector<std::pair<std::string, Relation>> candidate_relations(const FunctionalTree &a,
                                                                  const FunctionalTree &b,
                                                                  double) {
  std::vector<std::pair<std::string, Relation>> out;
  out.emplace_back("nearest-height", complete({}, a, b));
  const Matrix mono = monotone_plan(a.height, a.mass, b.height, b.mass);
  Relation rel;
  for (Eigen::Index i = 0; i < mono.rows(); ++i)
    for (Eigen::Index j = 0; j < mono.cols(); ++j)
      if (mono(i, j) > 0.0)
        rel.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  out.emplace_back("monotone-height", complete(std::move(rel), a, b));
  if (a.size() == b.size()) {
    Relation id;
    for (std::size_t k = 0; k < a.size(); ++k)
      id.emplace_back(k, k);
    out.emplace_back("identity", std::move(id));
  }
  return out;
}

TreeComparison fused_ks_estimate(const FunctionalTree &a, const FunctionalTree &b, double p) {
  if (!(p >= 1.0))
    throw InvalidArgument("order p must be >= 1");
  if (a.size() == 0 || b.size() == 0)
    throw InvalidArgument("empty functional tree");
  TreeComparison best;
  best.fused = kInf;
  const auto na = static_cast<Eigen::Index>(a.size()), nb = static_cast<Eigen::Index>(b.size());
  Matrix hp(na, nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j)
      hp(i, j) = powp(std::abs(a.height[static_cast<std::size_t>(i)] -
                               b.height[static_cast<std::size_t>(j)]),
                      p);
  for (const auto &[name, rel] : candidate_relations(a, b, p)) {
    const double r = 0.5 * distortion(rel, a.d, b.d);
    const Matrix dp = relation_coupling(rel, a.d, b.d, r).array().pow(p).matrix();
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Matrix cost = lambda * dp + (1.0 - lambda) * hp;
      TransportPlan plan = solve_ot(a.mass, b.mass, cost);
      const double s = std::pow(std::max(0.0, dot(dp, plan.plan)), 1.0 / p);
      const double f = std::pow(std::max(0.0, dot(hp, plan.plan)), 1.0 / p);
      if (std::max(s, f) < best.fused) {
        best.fused = std::max(s, f);
        best.structural = s;
        best.functional = f;
        best.r = r;
        best.lambda = lambda;
        best.relation = name;
        best.plan = std::move(plan);
      }
    }
  }
  best.ecc_bound = eccentricity_lower_bound(a.d, a.mass, b.d, b.mass, p);
  best.height_bound = height_lower_bound(a, b, p);
  best.lower_bound = std::max(best.ecc_bound, best.height_bound);
  return best;
}

double gw_objective(const Matrix &da, const Matrix &db, const Matrix &t, double p) {
  return dot(tensor(da, db, t, p), t);
}

namespace {

// Best permutation and its raw objective sum.
std::pair<std::vector<Eigen::Index>, double> best_permutation(const Matrix &da, const Matrix &db,
                                                              double p) {
  const auto n = static_cast<std::size_t>(da.rows());
  if (n == 0 || static_cast<std::size_t>(db.rows()) != n)
    throw InvalidArgument("permutation enumeration needs equal sizes");
  if (n > 8)
    throw InvalidArgument("permutation enumeration is capped at 8 points");
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Eigen::Index> arg = perm;
  double best = kInf;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        s += powp(std::abs(da(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                           db(perm[i], perm[k])),
                  p);
    if (s < best) {
      best = s;
      arg = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {arg, best};
}

} // namespace

double gw_permutation_exact(const Matrix &da, const Matrix &db, double p) {
  const double nn = static_cast<double>(da.rows());
  return 0.5 * std::pow(best_permutation(da, db, p).second / (nn * nn), 1.0 / p);
}

GwResult gw_estimate(const MetricMeasureSpace &a, const MetricMeasureSpace &b, double p) {
  if (!(p >= 1.0))
    throw InvalidArgument("order p must be >= 1");
  const auto &wa = a.weights();
  const auto &wb = b.weights();
  Matrix product(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      product(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wa[i] * wb[j];
  const auto ea = eccentricities(a.dist(), wa, p), eb = eccentricities(b.dist(), wb, p);

  GwResult res;
  CgRun best;
  for (Matrix start : {product, monotone_plan(ea, wa, eb, wb)}) {
    CgRun run = conditional_gradient(a.dist(), wa, b.dist(), wb, p, std::move(start));
    res.iterations += run.iterations;
    if (run.j < best.j)
      best = std::move(run);
  }
  res.cg_value = 0.5 * std::pow(best.j, 1.0 / p);
  res.value = res.cg_value;
  res.plan = best.plan;
  if (a.size() == b.size() && a.size() <= 7 && uniform_weights(wa) && uniform_weights(wb)) {
    const auto [perm, sum] = best_permutation(a.dist(), b.dist(), p);
    const double nn = static_cast<double>(a.size());
    const double exact = 0.5 * std::pow(sum / (nn * nn), 1.0 / p);
    res.permutation_value = exact;
    if (std::abs(res.cg_value - exact) > 1e-6) {
      res.substituted = true;
      if (exact < res.cg_value) {
        res.value = exact;
        res.plan.setZero();
        for (std::size_t i = 0; i < a.size(); ++i)
          res.plan(static_cast<Eigen::Index>(i), perm[i]) = 1.0 / nn;
      }
    }
  }
  return res;
}

} // namespace bmt

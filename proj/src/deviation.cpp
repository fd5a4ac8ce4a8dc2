#include "bmt/deviation.hpp"

#include "bmt/error.hpp"
#include "bmt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bmt {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> ref_measure(const PseudoMetricSpec &pm, std::size_t n) {
  if (pm.ref_weights.empty())
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (pm.ref_weights.size() != n)
    throw InvalidArgument("reference measure length does not match the space");
  for (double w : pm.ref_weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidArgument("reference measure must be finite and nonnegative");
  return pm.ref_weights;
}

// Direct sum over z; exact up to rounding of each term.
double kernel_row_distance(const Matrix &k, const std::vector<double> &nu, Eigen::Index i,
                           Eigen::Index j, double q) {
  double s = 0.0;
  const auto n = k.cols();
  if (q == 2.0) {
    for (Eigen::Index z = 0; z < n; ++z) {
      const double d = k(i, z) - k(j, z);
      s += d * d * nu[static_cast<std::size_t>(z)];
    }
    return std::sqrt(s);
  }
  if (q == 1.0) {
    for (Eigen::Index z = 0; z < n; ++z)
      s += std::abs(k(i, z) - k(j, z)) * nu[static_cast<std::size_t>(z)];
    return s;
  }
  for (Eigen::Index z = 0; z < n; ++z)
    s += std::pow(std::abs(k(i, z) - k(j, z)), q) * nu[static_cast<std::size_t>(z)];
  return std::pow(s, 1.0 / q);
}

Matrix kernel_theta(const Matrix &k, const std::vector<double> &nu, double q) {
  const auto n = k.rows();
  Matrix th = Matrix::Zero(n, n);
  // Large q = 2 instances go through the weighted Gram matrix; pairs where
  // the expansion cancels badly are recomputed directly.
  const bool gram = q == 2.0 && n > 600;
  Matrix g;
  if (gram) {
    Eigen::VectorXd w(n);
    for (Eigen::Index z = 0; z < n; ++z)
      w(z) = nu[static_cast<std::size_t>(z)];
    g = (k * w.asDiagonal()) * k.transpose();
  }
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (gram) {
        const double scale = g(i, i) + g(j, j);
        const double t2 = scale - 2.0 * g(i, j);
        if (t2 > 1e-3 * scale) {
          th(i, j) = std::sqrt(t2);
          continue;
        }
      }
      th(i, j) = kernel_row_distance(k, nu, i, j, q);
    }
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      th(j, i) = th(i, j);
  return th;
}

std::vector<std::size_t> extremizers(const std::vector<double> &v, bool want_min) {
  const double best = want_min ? *std::min_element(v.begin(), v.end())
                               : *std::max_element(v.begin(), v.end());
  const double tol = 1e-12 * std::abs(best);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - best) <= tol)
      out.push_back(i);
  return out;
}

} // namespace

std::string to_string(ThetaKind k) {
  switch (k) {
  case ThetaKind::Base:
    return "base";
  case ThetaKind::KernelMatrix:
    return "diffusion-kernel-matrix";
  case ThetaKind::HeatRd:
    return "diffusion-heat-Rd";
  }
  return "base";
}

ThetaKind theta_kind_from_string(std::string_view s) {
  if (s == "base")
    return ThetaKind::Base;
  if (s == "diffusion-kernel-matrix" || s == "kernel")
    return ThetaKind::KernelMatrix;
  if (s == "diffusion-heat-Rd" || s == "heat")
    return ThetaKind::HeatRd;
  throw InvalidArgument("unknown pseudo-metric kind '" + std::string(s) + "'");
}

Matrix exp_kernel(const MetricMeasureSpace &space, double c) {
  return (-c * space.dist().array().square()).exp().matrix();
}

double heat_theta(double r, double t, std::size_t d) {
  if (!(t > 0.0))
    throw InvalidArgument("heat scale t must be positive");
  const double c = std::pow(8.0 * kPi * t, -0.5 * static_cast<double>(d));
  return std::sqrt(-2.0 * c * std::expm1(-r * r / (8.0 * t)));
}

double heat_lipschitz(double t, std::size_t d) {
  if (!(t > 0.0))
    throw InvalidArgument("heat scale t must be positive");
  return 1.0 / (std::sqrt(2.0 * t) * std::pow(8.0 * kPi * t, 0.25 * static_cast<double>(d)));
}

Matrix materialize_theta(const MetricMeasureSpace &space, const PseudoMetricSpec &pm) {
  const auto n = space.size();
  if (!(pm.q >= 1.0))
    throw InvalidArgument("diffusion order q must be >= 1");
  switch (pm.kind) {
  case ThetaKind::Base:
    return space.dist();
  case ThetaKind::KernelMatrix: {
    if (static_cast<std::size_t>(pm.kernel.rows()) != n ||
        static_cast<std::size_t>(pm.kernel.cols()) != n)
      throw InvalidArgument("kernel matrix missing or of the wrong size");
    for (Eigen::Index i = 0; i < pm.kernel.rows(); ++i)
      for (Eigen::Index j = 0; j < pm.kernel.cols(); ++j)
        if (!(pm.kernel(i, j) >= 0.0) || pm.kernel(i, j) != pm.kernel(j, i))
          throw InvalidArgument("kernel must be symmetric and nonnegative");
    return kernel_theta(pm.kernel, ref_measure(pm, n), pm.q);
  }
  case ThetaKind::HeatRd: {
    if (!(pm.t > 0.0))
      throw InvalidArgument("heat scale t must be positive");
    if (pm.q != 2.0)
      throw InvalidArgument("the heat-Rd closed form needs q = 2");
    if (!space.has_coords())
      throw InvalidArgument("heat-Rd needs stored coordinates");
    const auto d = space.coords().front().size();
    for (const auto &c : space.coords())
      if (c.size() != d)
        throw InvalidArgument("coordinates of different dimension");
    const auto N = static_cast<Eigen::Index>(n);
    Matrix th = Matrix::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = i + 1; j < N; ++j) {
        const double r = euclidean_distance(space.coords()[static_cast<std::size_t>(i)],
                                            space.coords()[static_cast<std::size_t>(j)]);
        th(i, j) = th(j, i) = heat_theta(r, pm.t, d);
      }
    return th;
  }
  }
  throw InvalidArgument("unknown pseudo-metric kind");
}

std::vector<double> deviation_values(const Matrix &theta, std::span<const double> weights,
                                     double p) {
  if (!(p >= 1.0))
    throw InvalidArgument("deviation order p must be >= 1");
  if (static_cast<std::size_t>(theta.cols()) != weights.size())
    throw InvalidArgument("theta columns do not match the weights");
  std::vector<double> v(static_cast<std::size_t>(theta.rows()));
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < theta.cols(); ++j) {
      const double w = weights[static_cast<std::size_t>(j)];
      if (w == 0.0)
        continue;
      const double x = theta(i, j);
      s += (p == 1.0 ? x : p == 2.0 ? x * x : std::pow(x, p)) * w;
    }
    v[static_cast<std::size_t>(i)] = p == 1.0 ? s : p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
  }
  return v;
}

DeviationField deviation_field(const MetricMeasureSpace &space, double p,
                               const PseudoMetricSpec &pm) {
  if (!(p >= 1.0))
    throw InvalidArgument("deviation order p must be >= 1");
  DeviationField f;
  f.p = p;
  f.theta_kind = to_string(pm.kind);
  f.theta = materialize_theta(space, pm);
  f.values = deviation_values(f.theta, space.weights(), p);
  return f;
}

double lipschitz_excess(const DeviationField &f) {
  const auto n = static_cast<Eigen::Index>(f.values.size());
  if (f.theta.rows() != n)
    throw InvalidArgument("field has no materialized theta");
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(f.values[static_cast<std::size_t>(i)] -
                                       f.values[static_cast<std::size_t>(j)]) -
                                  f.theta(i, j));
  return worst;
}

Admissibility admissibility_constant(const MetricMeasureSpace &space,
                                     const PseudoMetricSpec &pm, const Matrix &theta) {
  Admissibility a;
  const auto n = static_cast<Eigen::Index>(space.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = space.dist()(i, j);
      if (d == 0.0) {
        if (theta(i, j) > 0.0)
          throw InvalidArgument("theta separates points at base distance 0");
        continue;
      }
      a.empirical = std::max(a.empirical, theta(i, j) / d);
    }
  if (pm.kind == ThetaKind::HeatRd && space.has_coords())
    a.analytic = heat_lipschitz(pm.t, space.coords().front().size());
  return a;
}

KdeCheck kde_variance_check(std::span<const double> points, double t,
                            std::size_t grid_size) {
  if (points.empty())
    throw InvalidArgument("empty sample");
  if (!(t > 0.0))
    throw InvalidArgument("heat scale t must be positive");
  if (grid_size < 2)
    throw InvalidArgument("grid needs at least two points");
  const auto [lo_it, hi_it] = std::minmax_element(points.begin(), points.end());
  const double pad = 4.0 * std::sqrt(2.0 * t);
  const double lo = *lo_it - pad, hi = *hi_it + pad;
  const double w = 1.0 / static_cast<double>(points.size());
  const double norm = 1.0 / std::sqrt(4.0 * kPi * t);

  KdeCheck out;
  out.grid.resize(grid_size);
  out.variance.resize(grid_size);
  out.kde.resize(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double x =
        lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_size - 1);
    out.grid[g] = x;
    double v = 0.0, u = 0.0;
    for (double y : points) {
      const double th = heat_theta(x - y, 0.5 * t, 1);
      v += th * th * w;
      u += norm * std::exp(-(x - y) * (x - y) / (4.0 * t)) * w;
    }
    out.variance[g] = v;
    out.kde[g] = u;
  }
  out.argmin_variance = extremizers(out.variance, true);
  out.argmax_kde = extremizers(out.kde, false);
  return out;
}

nlohmann::json field_to_json(const DeviationField &f) {
  return {{"p", f.p}, {"values", f.values}, {"theta_kind", f.theta_kind}};
}

DeviationField field_from_json(const nlohmann::json &j) {
  try {
    DeviationField f;
    f.p = j.at("p").get<double>();
    f.values = j.at("values").get<std::vector<double>>();
    f.theta_kind = j.value("theta_kind", std::string("base"));
    if (!(f.p >= 1.0))
      throw ValidationError("deviation order", "p must be >= 1");
    for (double v : f.values)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("field nonnegativity", "values must be finite and >= 0");
    return f;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("schema", e.what());
  }
}

} // namespace bmt

#include "bmt/mmspace.hpp"

#include "bmt/error.hpp"
#include "bmt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <sstream>

namespace bmt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Modified Gram-Schmidt on the two columns of an n x 2 frame.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd &f) {
  if (f.cols() != 2 || f.rows() < 2)
    throw InvalidArgument("grassmann frame must be n x 2 with n >= 2");
  Eigen::MatrixXd q = f;
  const double n0 = q.col(0).norm();
  if (n0 < 1e-10)
    throw InvalidArgument("rank-deficient frame");
  q.col(0) /= n0;
  for (int pass = 0; pass < 2; ++pass)
    q.col(1) -= q.col(0).dot(q.col(1)) * q.col(0);
  const double n1 = q.col(1).norm();
  if (n1 < 1e-10)
    throw InvalidArgument("rank-deficient frame");
  q.col(1) /= n1;
  return q;
}

} // namespace

double circle_geodesic(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

double sphere_geodesic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != 3 || y.size() != 3)
    throw InvalidArgument("sphere points need 3 coordinates");
  const double cx = x[1] * y[2] - x[2] * y[1];
  const double cy = x[2] * y[0] - x[0] * y[2];
  const double cz = x[0] * y[1] - x[1] * y[0];
  const double dot = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidArgument("euclidean points of different dimension");
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

double grassmann_geodesic(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  if (a.rows() != b.rows())
    throw InvalidArgument("grassmann frames of different ambient dimension");
  const Eigen::MatrixXd qa = orthonormalize(a);
  const Eigen::MatrixXd qb = orthonormalize(b);
  // Cosines of the principal angles are the singular values of qa^T qb; the
  // residual of qb's rotated columns off span(qa) carries the sines, which
  // keeps small angles accurate.
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(qa.transpose() * qb,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd bv = qb * svd.matrixV();
  const Eigen::MatrixXd au = qa * svd.matrixU();
  double sum = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double c = svd.singularValues()(k);
    const double s = (bv.col(k) - c * au.col(k)).norm();
    const double angle = std::atan2(s, c);
    sum += angle * angle;
  }
  return std::sqrt(sum);
}

Eigen::MatrixXd frame_from_coords(std::span<const double> coords) {
  if (coords.size() < 4 || coords.size() % 2 != 0)
    throw InvalidArgument("grassmann coordinates must have even length >= 4");
  const auto n = static_cast<Eigen::Index>(coords.size() / 2);
  Eigen::MatrixXd f(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    f(i, 0) = coords[static_cast<std::size_t>(i)];
    f(i, 1) = coords[static_cast<std::size_t>(n + i)];
  }
  return f;
}

std::vector<double> coords_from_frame(const Eigen::MatrixXd &frame) {
  std::vector<double> c(static_cast<std::size_t>(frame.size()));
  const auto n = frame.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    c[static_cast<std::size_t>(i)] = frame(i, 0);
    c[static_cast<std::size_t>(n + i)] = frame(i, 1);
  }
  return c;
}

bool is_builtin_metric(std::string_view metric) {
  return metric == metric_id::circle || metric == metric_id::sphere ||
         metric == metric_id::euclidean || metric == metric_id::grassmannian;
}

double point_distance(std::string_view metric, std::span<const double> x,
                      std::span<const double> y) {
  if (metric == metric_id::circle) {
    if (x.size() != 1 || y.size() != 1)
      throw InvalidArgument("circle points need exactly one angle");
    return circle_geodesic(x[0], y[0]);
  }
  if (metric == metric_id::sphere)
    return sphere_geodesic(x, y);
  if (metric == metric_id::euclidean)
    return euclidean_distance(x, y);
  if (metric == metric_id::grassmannian)
    return grassmann_geodesic(frame_from_coords(x), frame_from_coords(y));
  throw InvalidArgument("unknown metric id '" + std::string(metric) + "'");
}

MetricMeasureSpace::MetricMeasureSpace(Matrix dist, std::vector<double> weights,
                                       std::string metric,
                                       std::vector<Point> coords,
                                       std::vector<std::string> labels,
                                       bool is_metric)
    : dist_(std::move(dist)), weights_(std::move(weights)),
      metric_(std::move(metric)), coords_(std::move(coords)),
      labels_(std::move(labels)), is_metric_(is_metric) {
  const auto n = weights_.size();
  if (n == 0)
    throw InvalidArgument("empty metric-measure space");
  if (static_cast<std::size_t>(dist_.rows()) != n ||
      static_cast<std::size_t>(dist_.cols()) != n)
    throw InvalidArgument("distance matrix does not match weight count");
  if (!coords_.empty() && coords_.size() != n)
    throw InvalidArgument("coordinate count does not match weight count");
  if (!labels_.empty() && labels_.size() != n)
    throw InvalidArgument("label count does not match weight count");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0))
      throw ValidationError("negative weight", "weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw ValidationError("measure normalization",
                          "weights sum to " + std::to_string(total));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (dist_(ii, ii) != 0.0)
      throw ValidationError("zero diagonal", "dist[i][i] must be 0");
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (!(dist_(ii, jj) >= 0.0) || !std::isfinite(dist_(ii, jj)))
        throw ValidationError("nonnegativity", "distances must be finite and >= 0");
      if (dist_(ii, jj) != dist_(jj, ii))
        throw ValidationError("symmetry", "dist must be symmetric");
    }
  }
}

MetricMeasureSpace MetricMeasureSpace::with_weights(std::vector<double> weights) const {
  return MetricMeasureSpace(dist_, std::move(weights), metric_, coords_, labels_,
                            is_metric_);
}

MetricMeasureSpace MetricMeasureSpace::subspace(std::span<const std::size_t> indices,
                                                std::vector<double> weights) const {
  const auto m = static_cast<Eigen::Index>(indices.size());
  Matrix d(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      d(a, b) = dist_(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)]),
                      static_cast<Eigen::Index>(indices[static_cast<std::size_t>(b)]));
  std::vector<Point> c;
  std::vector<std::string> l;
  for (auto i : indices) {
    if (!coords_.empty())
      c.push_back(coords_[i]);
    if (!labels_.empty())
      l.push_back(labels_[i]);
  }
  return MetricMeasureSpace(std::move(d), std::move(weights), metric_, std::move(c),
                            std::move(l), is_metric_);
}

MetricMeasureSpace build_space(const std::vector<Point> &points, std::string_view metric,
                               std::vector<double> weights) {
  if (points.empty())
    throw InvalidArgument("build_space needs at least one point");
  if (!is_builtin_metric(metric))
    throw InvalidArgument("unknown metric id '" + std::string(metric) + "'");
  const std::size_t n = points.size();
  if (weights.empty())
    weights.assign(n, 1.0 / static_cast<double>(n));
  if (weights.size() != n)
    throw InvalidArgument("weight vector length does not match point count");
  for (double w : weights)
    if (!(w >= 0.0))
      throw InvalidArgument("negative weight");

  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (metric == metric_id::grassmannian) {
    // Orthonormalize each frame once.
    std::vector<Eigen::MatrixXd> frames;
    frames.reserve(n);
    for (const auto &p : points)
      frames.push_back(frame_from_coords(p));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = grassmann_geodesic(frames[i], frames[j]);
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = point_distance(metric, points[i], points[j]);
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
  }
  return MetricMeasureSpace(std::move(d), std::move(weights), std::string(metric),
                            points);
}

MetricMeasureSpace join_spaces(const MetricMeasureSpace &a, const MetricMeasureSpace &b,
                               std::vector<double> weights) {
  if (a.metric() != b.metric() || !is_builtin_metric(a.metric()))
    throw InvalidArgument("join_spaces needs two spaces over the same built-in metric");
  if (!a.has_coords() || !b.has_coords())
    throw InvalidArgument("join_spaces needs coordinates");
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  Matrix d(na + nb, na + nb);
  d.topLeftCorner(na, na) = a.dist();
  d.bottomRightCorner(nb, nb) = b.dist();
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double v = point_distance(a.metric(), a.coords()[static_cast<std::size_t>(i)],
                                      b.coords()[static_cast<std::size_t>(j)]);
      d(i, na + j) = v;
      d(na + j, i) = v;
    }
  std::vector<Point> coords = a.coords();
  coords.insert(coords.end(), b.coords().begin(), b.coords().end());
  return MetricMeasureSpace(std::move(d), std::move(weights), a.metric(), std::move(coords));
}

double max_triangle_violation(const Matrix &d, std::size_t samples, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(d.rows());
  double worst = -std::numeric_limits<double>::infinity();
  auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
    const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j),
               K = static_cast<Eigen::Index>(k);
    worst = std::max(worst, d(I, K) - d(I, J) - d(J, K));
  };
  if (n <= 300) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          check(i, j, k);
  } else {
    Rng rng(seed);
    for (std::size_t s = 0; s < samples; ++s)
      check(rng.index(n), rng.index(n), rng.index(n));
  }
  return worst;
}

nlohmann::json space_to_json(const MetricMeasureSpace &space) {
  nlohmann::json j;
  const auto n = space.size();
  j["n"] = n;
  j["metric"] = space.metric();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (std::size_t k = 0; k < n; ++k)
      row[k] = space.dist(i, k);
    rows.push_back(std::move(row));
  }
  j["dist"] = std::move(rows);
  j["weights"] = space.weights();
  if (space.has_coords())
    j["coords"] = space.coords();
  if (!space.labels().empty())
    j["labels"] = space.labels();
  j["metadata"] = {{"metric", space.is_metric()}};
  return j;
}

MetricMeasureSpace space_from_json(const nlohmann::json &j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto &rows = j.at("dist");
    if (!rows.is_array() || rows.size() != n)
      throw ValidationError("schema", "dist must be an n x n array");
    Matrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (!rows[i].is_array() || rows[i].size() != n)
        throw ValidationError("schema", "dist must be an n x n array");
      for (std::size_t k = 0; k < n; ++k)
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            rows[i][k].get<double>();
    }
    std::vector<double> w;
    if (j.contains("weights"))
      w = j.at("weights").get<std::vector<double>>();
    else
      w.assign(n, 1.0 / static_cast<double>(n));
    if (w.size() != n)
      throw ValidationError("schema", "weights must have length n");
    std::vector<Point> coords;
    if (j.contains("coords"))
      coords = j.at("coords").get<std::vector<Point>>();
    std::vector<std::string> labels;
    if (j.contains("labels"))
      labels = j.at("labels").get<std::vector<std::string>>();
    bool is_metric = true;
    if (j.contains("metadata") && j["metadata"].contains("metric"))
      is_metric = j["metadata"]["metric"].get<bool>();
    std::string metric = j.value("metric", std::string(metric_id::precomputed));
    return MetricMeasureSpace(std::move(d), std::move(w), std::move(metric),
                              std::move(coords), std::move(labels), is_metric);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("schema", e.what());
  }
}

MetricMeasureSpace space_from_csv(const std::string &text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception &) {
        throw ValidationError("schema", "non-numeric CSV cell '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = rows.size();
  if (n == 0)
    throw ValidationError("schema", "empty distance CSV");
  Matrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw ValidationError("schema", "distance CSV is not square");
    for (std::size_t k = 0; k < n; ++k)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return MetricMeasureSpace(std::move(d),
                            std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

} // namespace bmt

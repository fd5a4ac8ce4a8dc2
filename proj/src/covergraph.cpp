#include "bmt/covergraph.hpp"

#include "bmt/error.hpp"
#include "bmt/parallel.hpp"
#include "bmt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace bmt {

Graph Graph::from_edges(std::size_t n,
                        const std::vector<std::pair<std::size_t, std::size_t>> &edges) {
  Graph g;
  g.n = n;
  g.adj.assign(n, {});
  for (auto [a, b] : edges) {
    if (a >= n || b >= n)
      throw InvalidArgument("edge endpoint out of range");
    if (a == b)
      continue;
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  }
  for (auto &nb : g.adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

Graph Graph::threshold(const Matrix &d, double radius) {
  Graph g;
  g.n = static_cast<std::size_t>(d.rows());
  g.adj.assign(g.n, {});
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (i != j && d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= radius)
        g.adj[i].push_back(j);
  return g;
}

std::size_t Graph::edge_count() const {
  std::size_t s = 0;
  for (const auto &nb : adj)
    s += nb.size();
  return s / 2;
}

bool Graph::has_edge(std::size_t i, std::size_t j) const {
  return std::binary_search(adj[i].begin(), adj[i].end(), j);
}

std::vector<std::vector<std::size_t>> components(const Graph &g) {
  std::vector<int> seen(g.n, 0);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < g.n; ++s) {
    if (seen[s])
      continue;
    std::vector<std::size_t> comp{s};
    seen[s] = 1;
    for (std::size_t k = 0; k < comp.size(); ++k)
      for (auto v : g.adj[comp[k]])
        if (!seen[v]) {
          seen[v] = 1;
          comp.push_back(v);
        }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

bool is_connected(const Graph &g) { return g.n <= 1 || components(g).size() == 1; }

namespace {

void fill_cover_edges_and_assign(const MetricMeasureSpace &host, CoveringGraph &g) {
  const auto m = g.cover.size();
  const double r = 3.0 * g.delta;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      if (host.dist(g.cover[a], g.cover[b]) <= r)
        g.edges.emplace_back(a, b);
  g.assign.assign(host.size(), 0);
  g.omega.assign(m, 0.0);
  for (std::size_t x = 0; x < host.size(); ++x) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      const double d = host.dist(x, g.cover[a]);
      if (d < bd) {
        bd = d;
        best = a;
      }
    }
    g.assign[x] = best;
    g.omega[best] += host.weights()[x];
  }
}

} // namespace

CoveringGraph build_cover(const MetricMeasureSpace &host, double delta) {
  if (!(delta > 0.0))
    throw InvalidArgument("covering radius must be positive");
  const auto n = host.size();
  CoveringGraph g;
  g.delta = delta;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  for (;;) {
    const std::size_t c = next;
    g.cover.push_back(c);
    double far = -1.0;
    for (std::size_t x = 0; x < n; ++x) {
      nearest[x] = std::min(nearest[x], host.dist(x, c));
      if (nearest[x] > far) {
        far = nearest[x];
        next = x;
      }
    }
    if (far <= delta)
      break;
  }
  std::sort(g.cover.begin(), g.cover.end());
  fill_cover_edges_and_assign(host, g);
  return g;
}

CoveringGraph full_cover(const MetricMeasureSpace &host, double delta) {
  if (!(delta > 0.0))
    throw InvalidArgument("covering radius must be positive");
  CoveringGraph g;
  g.delta = delta;
  const auto n = host.size();
  g.cover.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    g.cover[i] = i;
  const double r = 3.0 * delta;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (host.dist(a, b) <= r)
        g.edges.emplace_back(a, b);
  g.assign = g.cover;
  g.omega = host.weights();
  return g;
}

MetricMeasureSpace cover_space(const MetricMeasureSpace &host, const CoveringGraph &g) {
  return host.subspace(g.cover, g.omega);
}

double merge_radius(const Graph &g, const Matrix &theta, std::size_t i, std::size_t j) {
  if (i >= g.n || j >= g.n)
    throw InvalidArgument("vertex out of range");
  if (i == j)
    return 0.0;
  const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
  if (g.has_edge(i, j))
    return theta(I, J);
  std::vector<double> cost(g.n);
  for (std::size_t z = 0; z < g.n; ++z) {
    const auto Z = static_cast<Eigen::Index>(z);
    cost[z] = std::max(theta(I, Z), theta(Z, J));
  }
  std::vector<double> cand;
  const double floor_value = std::max(cost[i], cost[j]);
  for (double c : cost)
    if (c >= floor_value)
      cand.push_back(c);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::vector<unsigned> stamp(g.n, 0);
  unsigned round = 0;
  std::vector<std::size_t> queue;
  auto reachable = [&](double r) {
    ++round;
    queue.assign(1, i);
    stamp[i] = round;
    for (std::size_t k = 0; k < queue.size(); ++k) {
      const auto u = queue[k];
      if (u == j)
        return true;
      for (auto v : g.adj[u])
        if (stamp[v] != round && cost[v] <= r) {
          stamp[v] = round;
          queue.push_back(v);
        }
    }
    return false;
  };
  if (!reachable(cand.back()))
    throw InvalidArgument("merge radius between disconnected vertices");
  std::size_t lo = 0, hi = cand.size() - 1;
  while (lo < hi) {
    const auto mid = lo + (hi - lo) / 2;
    if (reachable(cand[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return cand[lo];
}

Modulus connectivity_modulus(const Graph &g, const Matrix &theta, const Matrix &base,
                             std::uint64_t seed) {
  if (!is_connected(g))
    throw InvalidArgument("connectivity modulus needs a connected graph");
  Modulus m;
  const auto n = g.n;
  auto ratio = [&](std::size_t i, std::size_t j) {
    const double b = base(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (!(b > 0.0))
      return 0.0;
    return merge_radius(g, theta, i, j) / b;
  };
  if (n <= 500) {
    std::vector<double> row(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < n; ++j)
        row[i] = std::max(row[i], ratio(i, j));
    });
    for (double r : row)
      m.value = std::max(m.value, r);
    m.pairs = n * (n - 1) / 2;
    return m;
  }
  m.exhaustive = false;
  constexpr std::size_t kPairs = 100000;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  Rng rng(seed);
  while (pairs.size() < kPairs) {
    const auto i = rng.index(n), j = rng.index(n);
    if (i != j)
      pairs.emplace_back(i, j);
  }
  std::vector<double> val(kPairs);
  parallel_for(kPairs, [&](std::size_t k) { val[k] = ratio(pairs[k].first, pairs[k].second); });
  for (double v : val)
    m.value = std::max(m.value, v);
  m.pairs = kPairs;
  return m;
}

DeviationField BinnedField::as_field() const {
  DeviationField f = base;
  f.values = values;
  return f;
}

BinnedField bin_field(const DeviationField &field, double epsilon) {
  if (!(epsilon > 0.0))
    throw InvalidArgument("bin width must be positive");
  BinnedField b;
  b.base = field;
  b.epsilon = epsilon;
  b.values.resize(field.values.size());
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double v = field.values[i];
    double k = std::floor(v / epsilon);
    // The quotient is rounded; nudge k so that k*eps <= v < (k+1)*eps holds
    // in floating point as well.
    while (k * epsilon > v)
      k -= 1.0;
    while ((k + 1.0) * epsilon <= v)
      k += 1.0;
    b.values[i] = k * epsilon;
  }
  return b;
}

nlohmann::json cover_to_json(const CoveringGraph &g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : g.edges)
    edges.push_back({a, b});
  return {{"cover", g.cover}, {"delta", g.delta}, {"edges", edges},
          {"assign", g.assign}, {"omega", g.omega}};
}

CoveringGraph cover_from_json(const nlohmann::json &j) {
  try {
    CoveringGraph g;
    g.cover = j.at("cover").get<std::vector<std::size_t>>();
    g.delta = j.at("delta").get<double>();
    for (const auto &e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ValidationError("schema", "edges must be index pairs");
      g.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    g.assign = j.value("assign", std::vector<std::size_t>{});
    g.omega = j.at("omega").get<std::vector<double>>();
    return g;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("schema", e.what());
  }
}

} // namespace bmt

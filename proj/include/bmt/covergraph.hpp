#pragma once

#include "bmt/deviation.hpp"
#include "bmt/mmspace.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace bmt {

// Undirected simple graph on vertices 0..n-1.
struct Graph {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> adj;

  static Graph from_edges(std::size_t n,
                          const std::vector<std::pair<std::size_t, std::size_t>> &edges);
  // Edge {i, j} iff i != j and d(i, j) <= radius.
  static Graph threshold(const Matrix &d, double radius);
  std::size_t edge_count() const;
  bool has_edge(std::size_t i, std::size_t j) const;
};

// Connected components as sorted vertex lists, ordered by smallest vertex.
std::vector<std::vector<std::size_t>> components(const Graph &g);
bool is_connected(const Graph &g);

// delta-cover of a host space. `cover` holds host indices in increasing
// order; `edges` and `assign` use positions in `cover`. omega[v] is the total
// host weight assigned to cover vertex v (count / n for a uniform host).
struct CoveringGraph {
  std::vector<std::size_t> cover;
  double delta = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> assign;
  std::vector<double> omega;

  Graph graph() const { return Graph::from_edges(cover.size(), edges); }
};

// Greedy farthest-point cover started at host vertex 0; the farthest vertex
// is the lowest index among ties. Each host vertex goes to its nearest cover
// vertex, lowest host index on ties. Edges at 3 delta.
CoveringGraph build_cover(const MetricMeasureSpace &host, double delta);

// Every host vertex is a cover vertex (assign = identity); edges at 3 delta.
CoveringGraph full_cover(const MetricMeasureSpace &host, double delta);

// The cover vertices as an mm-space carrying omega.
MetricMeasureSpace cover_space(const MetricMeasureSpace &host, const CoveringGraph &g);

// Smallest radius r such that some path from i to j keeps
// max(theta(i,z), theta(z,j)) <= r at every vertex z on it. Binary search
// over the candidate values with BFS feasibility. Throws if i and j are in
// different components.
double merge_radius(const Graph &g, const Matrix &theta, std::size_t i, std::size_t j);

struct Modulus {
  double value = 0.0;
  bool exhaustive = true; // false: seeded subsample, value is a lower bound
  std::size_t pairs = 0;
};

// max r_theta(i,j) / base(i,j) over pairs with base > 0. All pairs when
// n <= 500, otherwise 1e5 seeded random pairs.
Modulus connectivity_modulus(const Graph &g, const Matrix &theta, const Matrix &base,
                             std::uint64_t seed = 0);

struct BinnedField {
  DeviationField base;
  double epsilon = 0.0;
  std::vector<double> values;

  DeviationField as_field() const;
};

BinnedField bin_field(const DeviationField &field, double epsilon);

nlohmann::json cover_to_json(const CoveringGraph &g);
CoveringGraph cover_from_json(const nlohmann::json &j);

} // namespace bmt

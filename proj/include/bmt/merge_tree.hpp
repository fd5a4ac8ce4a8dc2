#pragma once

#include "bmt/covergraph.hpp"
#include "bmt/mmspace.hpp"

#include <span>
#include <string>
#include <vector>

namespace bmt {

inline constexpr double kHeightTieTolerance = 1e-12;

struct TreeNode {
  double height = 0.0;
  double mass = 0.0;
  long parent = -1; // -1 for the root
  std::vector<std::size_t> members;  // graph vertices collapsed into this node
  std::vector<std::size_t> children; // ascending ids
};

// Merge tree of a field on a connected graph. Node ids are positions in
// `nodes`. vertex_node maps each graph vertex to its node.
struct MergeTree {
  double p = 2.0;
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> vertex_node;
  std::size_t root = 0;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return nodes.size(); }
  std::vector<std::size_t> leaves() const;
  std::vector<double> masses() const;
  std::vector<double> heights() const;
};

// Sublevel-set sweep with union-find. Vertices whose values differ from the
// previous one in sorted order by at most `tie` are processed as one batch.
// Each (batch, component) pair becomes one node: a leaf when the component
// is new, otherwise the parent of the component tops it absorbs (one child
// when it only grows, several when components merge). No chain contraction.
// Throws InvalidArgument when the graph is disconnected.
MergeTree build_tree(const Graph &g, std::span<const double> values,
                     std::span<const double> weights, double p,
                     double tie = kHeightTieTolerance);

// Repeatedly removes the leaf of smallest persistence (height of its first
// branching ancestor minus its own height) while that is below
// min_persistence, folding its branch into the branching ancestor. Then
// contracts every single-child node into its child. min_persistence <= 0
// returns the tree unchanged.
MergeTree simplify(const MergeTree &tree, double min_persistence);

// Persistence of each leaf as defined for simplify (infinity when the leaf
// has no branching ancestor).
std::vector<std::pair<std::size_t, double>> leaf_persistence(const MergeTree &tree);

// Ancestor tables for lowest-common-ancestor queries.
class TreeMetricView {
public:
  explicit TreeMetricView(const MergeTree &tree);
  std::size_t lca(std::size_t a, std::size_t b) const;
  double merge_height(std::size_t a, std::size_t b) const;
  double distance(std::size_t a, std::size_t b) const;

private:
  const MergeTree *tree_;
  std::vector<std::size_t> depth_;
  std::vector<std::vector<std::size_t>> up_;
};

double tree_distance(const TreeMetricView &view, std::size_t a, std::size_t b);

// Node masses: sum of vertex weights over members.
std::vector<double> pushforward_measure(const MergeTree &tree, std::span<const double> weights);

// (T, d_p, mu_p, kappa_p) with a dense distance matrix.
struct FunctionalTree {
  Matrix d;
  std::vector<double> mass;
  std::vector<double> height;
  std::vector<std::size_t> node_ids; // tree node behind each row

  std::size_t size() const { return mass.size(); }
};

inline constexpr std::size_t kFunctionalTreeCap = 10000;

// All nodes, or only nodes of positive mass when support_only is set (the
// transport distances only see the support).
FunctionalTree functional_tree(const MergeTree &tree, bool support_only = false);

// Checks single root, parent links, strict height increase along parent
// links, masses against members and total mass 1. Throws ValidationError
// naming the broken rule.
void validate_tree(const MergeTree &tree, double mass_tol = 1e-9);

nlohmann::json tree_to_json(const MergeTree &tree);
MergeTree tree_from_json(const nlohmann::json &j);

// Branch length is parent height minus child height; node comments carry
// the mass.
std::string to_newick(const MergeTree &tree);

} // namespace bmt

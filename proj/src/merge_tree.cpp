#include "bmt/merge_tree.hpp"

#include "bmt/error.hpp"
#include "bmt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace bmt {

namespace {

struct Dsu {
  std::vector<std::size_t> parent, rank;
  explicit Dsu(std::size_t n) : parent(n), rank(n, 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (rank[a] < rank[b])
      std::swap(a, b);
    parent[b] = a;
    if (rank[a] == rank[b])
      ++rank[a];
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void rebuild_vertex_map(MergeTree &t) {
  std::size_t nv = 0;
  for (const auto &nd : t.nodes)
    for (auto v : nd.members)
      nv = std::max(nv, v + 1);
  t.vertex_node.assign(nv, 0);
  for (std::size_t k = 0; k < t.nodes.size(); ++k)
    for (auto v : t.nodes[k].members)
      t.vertex_node[v] = k;
}

} // namespace

std::vector<std::size_t> MergeTree::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (nodes[k].children.empty())
      out.push_back(k);
  return out;
}

std::vector<double> MergeTree::masses() const {
  std::vector<double> m;
  for (const auto &n : nodes)
    m.push_back(n.mass);
  return m;
}

std::vector<double> MergeTree::heights() const {
  std::vector<double> h;
  for (const auto &n : nodes)
    h.push_back(n.height);
  return h;
}

MergeTree build_tree(const Graph &g, std::span<const double> values,
                     std::span<const double> weights, double p, double tie) {
  const auto n = g.n;
  if (values.size() != n || weights.size() != n)
    throw InvalidArgument("field or weights do not match the graph size");
  if (n == 0)
    throw InvalidArgument("empty graph");
  for (double v : values)
    if (!std::isfinite(v))
      throw InvalidArgument("field values must be finite");
  const auto comps = components(g);
  if (comps.size() > 1) {
    std::ostringstream msg;
    msg << "graph is disconnected (" << comps.size() << " components; first vertices:";
    for (std::size_t c = 0; c < comps.size() && c < 10; ++c)
      msg << ' ' << comps[c].front() << "[size " << comps[c].size() << ']';
    msg << ')';
    throw InvalidArgument(msg.str());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  MergeTree t;
  t.p = p;
  Dsu dsu(n);
  std::vector<char> active(n, 0);
  std::vector<long> top(n, -1); // node id of each component, by dsu root
  std::vector<std::size_t> batch;
  std::vector<std::pair<std::size_t, std::size_t>> absorbed; // (vertex, old top)

  std::size_t pos = 0;
  while (pos < n) {
    batch.assign(1, order[pos]);
    std::size_t end = pos + 1;
    while (end < n && values[order[end]] - values[order[end - 1]] <= tie)
      batch.push_back(order[end++]);
    const double h = values[order[pos]];
    pos = end;

    for (auto v : batch)
      active[v] = 2; // 2 marks the current batch
    absorbed.clear();
    for (auto v : batch)
      for (auto u : g.adj[v])
        if (active[u] == 1)
          absorbed.emplace_back(v, static_cast<std::size_t>(top[dsu.find(u)]));
    for (auto v : batch)
      for (auto u : g.adj[v])
        if (active[u])
          dsu.unite(v, u);

    // One node per batch component, ordered by smallest member.
    std::sort(batch.begin(), batch.end());
    std::vector<std::pair<std::size_t, std::size_t>> rep_node; // (dsu root, node)
    for (auto v : batch) {
      const auto r = dsu.find(v);
      auto it = std::find_if(rep_node.begin(), rep_node.end(),
                             [r](const auto &e) { return e.first == r; });
      if (it == rep_node.end()) {
        rep_node.emplace_back(r, t.nodes.size());
        TreeNode nd;
        nd.height = h;
        t.nodes.push_back(nd);
        it = rep_node.end() - 1;
      }
      auto &nd = t.nodes[it->second];
      nd.members.push_back(v);
      nd.mass += weights[v];
    }
    for (auto [v, old] : absorbed) {
      const auto r = dsu.find(v);
      const auto id = std::find_if(rep_node.begin(), rep_node.end(),
                                   [r](const auto &e) { return e.first == r; })
                          ->second;
      auto &ch = t.nodes[id].children;
      if (std::find(ch.begin(), ch.end(), old) == ch.end()) {
        ch.push_back(old);
        t.nodes[old].parent = static_cast<long>(id);
      }
    }
    for (auto &[r, id] : rep_node) {
      std::sort(t.nodes[id].children.begin(), t.nodes[id].children.end());
      top[r] = static_cast<long>(id);
    }
    for (auto v : batch)
      active[v] = 1;
  }
  t.root = static_cast<std::size_t>(top[dsu.find(0)]);
  t.vertex_node.assign(n, 0);
  for (std::size_t k = 0; k < t.nodes.size(); ++k)
    for (auto v : t.nodes[k].members)
      t.vertex_node[v] = k;
  return t;
}

std::vector<std::pair<std::size_t, double>> leaf_persistence(const MergeTree &tree) {
  std::vector<std::pair<std::size_t, double>> out;
  for (auto leaf : tree.leaves()) {
    double pers = std::numeric_limits<double>::infinity();
    long a = tree.nodes[leaf].parent;
    while (a >= 0) {
      const auto &nd = tree.nodes[static_cast<std::size_t>(a)];
      if (nd.children.size() >= 2) {
        pers = nd.height - tree.nodes[leaf].height;
        break;
      }
      a = nd.parent;
    }
    out.emplace_back(leaf, pers);
  }
  return out;
}

MergeTree simplify(const MergeTree &tree, double min_persistence) {
  if (!(min_persistence > 0.0))
    return tree;
  MergeTree t = tree;
  std::vector<char> alive(t.nodes.size(), 1);
  auto &nodes = t.nodes;

  for (;;) {
    const auto pers = leaf_persistence(t);
    std::size_t best = nodes.size();
    double bp = std::numeric_limits<double>::infinity();
    for (auto [leaf, p] : pers)
      if (alive[leaf] && p < bp) {
        bp = p;
        best = leaf;
      }
    if (best == nodes.size() || !(bp < min_persistence))
      break;
    // Walk up to the branching ancestor, folding the chain into it.
    std::size_t cur = best;
    std::size_t anc = static_cast<std::size_t>(nodes[cur].parent);
    std::vector<std::size_t> chain{cur};
    while (nodes[anc].children.size() < 2) {
      chain.push_back(anc);
      anc = static_cast<std::size_t>(nodes[anc].parent);
    }
    auto &A = nodes[anc];
    A.children.erase(std::find(A.children.begin(), A.children.end(), chain.back()));
    for (auto c : chain) {
      A.members.insert(A.members.end(), nodes[c].members.begin(), nodes[c].members.end());
      A.mass += nodes[c].mass;
      nodes[c].members.clear();
      nodes[c].children.clear();
      nodes[c].mass = 0.0;
      nodes[c].parent = -2;
      alive[c] = 0;
    }
  }

  // Fold single-child nodes into their child.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t u = 0; u < nodes.size(); ++u) {
      if (!alive[u] || nodes[u].children.size() != 1)
        continue;
      const auto c = nodes[u].children.front();
      auto &C = nodes[c];
      C.members.insert(C.members.end(), nodes[u].members.begin(), nodes[u].members.end());
      C.mass += nodes[u].mass;
      C.parent = nodes[u].parent;
      if (C.parent >= 0) {
        auto &ch = nodes[static_cast<std::size_t>(C.parent)].children;
        *std::find(ch.begin(), ch.end(), u) = c;
      } else {
        t.root = c;
      }
      nodes[u].members.clear();
      nodes[u].children.clear();
      alive[u] = 0;
      changed = true;
    }
  }

  // Re-index surviving nodes by (height, smallest member).
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (alive[k]) {
      std::sort(nodes[k].members.begin(), nodes[k].members.end());
      keep.push_back(k);
    }
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    if (nodes[a].height != nodes[b].height)
      return nodes[a].height < nodes[b].height;
    const auto ma = nodes[a].members.empty() ? SIZE_MAX : nodes[a].members.front();
    const auto mb = nodes[b].members.empty() ? SIZE_MAX : nodes[b].members.front();
    return ma != mb ? ma < mb : a < b;
  });
  std::vector<long> remap(nodes.size(), -1);
  for (std::size_t k = 0; k < keep.size(); ++k)
    remap[keep[k]] = static_cast<long>(k);
  MergeTree out;
  out.p = t.p;
  out.provenance = t.provenance;
  out.provenance["simplify"] = min_persistence;
  for (auto k : keep) {
    TreeNode nd = nodes[k];
    nd.parent = nd.parent >= 0 ? remap[static_cast<std::size_t>(nd.parent)] : -1;
    for (auto &c : nd.children)
      c = static_cast<std::size_t>(remap[c]);
    std::sort(nd.children.begin(), nd.children.end());
    out.nodes.push_back(std::move(nd));
  }
  out.root = static_cast<std::size_t>(remap[t.root]);
  out.vertex_node.assign(tree.vertex_node.size(), 0);
  for (std::size_t k = 0; k < out.nodes.size(); ++k)
    for (auto v : out.nodes[k].members)
      out.vertex_node[v] = k;
  return out;
}

TreeMetricView::TreeMetricView(const MergeTree &tree) : tree_(&tree) {
  const auto n = tree.size();
  depth_.assign(n, 0);
  std::size_t levels = 1;
  while ((std::size_t{1} << levels) < n)
    ++levels;
  up_.assign(levels, std::vector<std::size_t>(n));
  std::vector<char> done(n, 0);
  std::vector<std::size_t> stack{tree.root};
  depth_[tree.root] = 0;
  up_[0][tree.root] = tree.root;
  done[tree.root] = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto c : tree.nodes[u].children) {
      depth_[c] = depth_[u] + 1;
      up_[0][c] = u;
      done[c] = 1;
      stack.push_back(c);
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (!done[k])
      throw ValidationError("reachability", "node not reachable from the root");
  for (std::size_t l = 1; l < levels; ++l)
    for (std::size_t v = 0; v < n; ++v)
      up_[l][v] = up_[l - 1][up_[l - 1][v]];
}

std::size_t TreeMetricView::lca(std::size_t a, std::size_t b) const {
  if (depth_[a] < depth_[b])
    std::swap(a, b);
  std::size_t diff = depth_[a] - depth_[b];
  for (std::size_t l = 0; diff; ++l, diff >>= 1)
    if (diff & 1)
      a = up_[l][a];
  if (a == b)
    return a;
  for (std::size_t l = up_.size(); l-- > 0;)
    if (up_[l][a] != up_[l][b]) {
      a = up_[l][a];
      b = up_[l][b];
    }
  return up_[0][a];
}

double TreeMetricView::merge_height(std::size_t a, std::size_t b) const {
  return tree_->nodes[lca(a, b)].height;
}

double TreeMetricView::distance(std::size_t a, std::size_t b) const {
  if (a == b)
    return 0.0;
  return merge_height(a, b) - std::min(tree_->nodes[a].height, tree_->nodes[b].height);
}

double tree_distance(const TreeMetricView &view, std::size_t a, std::size_t b) {
  return view.distance(a, b);
}

std::vector<double> pushforward_measure(const MergeTree &tree, std::span<const double> weights) {
  std::vector<double> m(tree.size(), 0.0);
  for (std::size_t k = 0; k < tree.size(); ++k)
    for (auto v : tree.nodes[k].members) {
      if (v >= weights.size())
        throw InvalidArgument("member index outside the weight vector");
      m[k] += weights[v];
    }
  return m;
}

FunctionalTree functional_tree(const MergeTree &tree, bool support_only) {
  FunctionalTree f;
  for (std::size_t k = 0; k < tree.size(); ++k)
    if (!support_only || tree.nodes[k].mass > 0.0)
      f.node_ids.push_back(k);
  const auto m = f.node_ids.size();
  if (m > kFunctionalTreeCap)
    throw InvalidArgument("tree has " + std::to_string(m) + " nodes, above the dense cap");
  TreeMetricView view(tree);
  f.d = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  parallel_for(m, [&](std::size_t a) {
    for (std::size_t b = a + 1; b < m; ++b)
      f.d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          view.distance(f.node_ids[a], f.node_ids[b]);
  });
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < a; ++b)
      f.d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          f.d(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a));
    f.mass.push_back(tree.nodes[f.node_ids[a]].mass);
    f.height.push_back(tree.nodes[f.node_ids[a]].height);
  }
  if (support_only) {
    // Renormalize away the rounding left by dropping zero-mass nodes.
    const double tot = std::accumulate(f.mass.begin(), f.mass.end(), 0.0);
    for (auto &x : f.mass)
      x /= tot;
  }
  return f;
}

void validate_tree(const MergeTree &tree, double mass_tol) {
  const auto n = tree.size();
  if (n == 0)
    throw ValidationError("nonempty tree", "tree has no nodes");
  std::size_t roots = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto &nd = tree.nodes[k];
    if (!std::isfinite(nd.height))
      throw ValidationError("finite heights", "node " + std::to_string(k));
    if (!(nd.mass >= 0.0))
      throw ValidationError("measure normalization",
                            "negative mass at node " + std::to_string(k));
    total += nd.mass;
    if (nd.parent < 0) {
      ++roots;
      if (k != tree.root)
        throw ValidationError("single root", "node " + std::to_string(k) + " has no parent");
      continue;
    }
    const auto par = static_cast<std::size_t>(nd.parent);
    if (par >= n)
      throw ValidationError("parent link", "node " + std::to_string(k) + " has a bad parent");
    const auto &ch = tree.nodes[par].children;
    if (std::find(ch.begin(), ch.end(), k) == ch.end())
      throw ValidationError("parent link",
                            "node " + std::to_string(k) + " missing from its parent's children");
    if (!(nd.height < tree.nodes[par].height))
      throw ValidationError("height monotonicity",
                            "node " + std::to_string(k) + " at height " + fmt(nd.height) +
                                " is not below its parent at " +
                                fmt(tree.nodes[par].height));
  }
  if (roots != 1)
    throw ValidationError("single root", std::to_string(roots) + " roots");
  for (std::size_t k = 0; k < n; ++k)
    for (auto c : tree.nodes[k].children)
      if (c >= n || tree.nodes[c].parent != static_cast<long>(k))
        throw ValidationError("parent link", "child list of node " + std::to_string(k));
  if (std::abs(total - 1.0) > mass_tol)
    throw ValidationError("measure normalization", "node masses sum to " + fmt(total));
  TreeMetricView check(tree); // throws if some node is unreachable
}

nlohmann::json tree_to_json(const MergeTree &tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t k = 0; k < tree.size(); ++k) {
    const auto &nd = tree.nodes[k];
    nodes.push_back({{"id", k},
                     {"height", nd.height},
                     {"mass", nd.mass},
                     {"parent", nd.parent},
                     {"members", nd.members}});
  }
  return {{"p", tree.p}, {"nodes", nodes}, {"provenance", tree.provenance}};
}

MergeTree tree_from_json(const nlohmann::json &j) {
  MergeTree t;
  try {
    t.p = j.at("p").get<double>();
    const auto &nodes = j.at("nodes");
    t.nodes.resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto &e = nodes[k];
      if (e.at("id").get<std::size_t>() != k)
        throw ValidationError("schema", "node ids must be 0..n-1 in order");
      auto &nd = t.nodes[k];
      nd.height = e.at("height").get<double>();
      nd.mass = e.at("mass").get<double>();
      nd.parent = e.at("parent").get<long>();
      nd.members = e.value("members", std::vector<std::size_t>{});
    }
    if (j.contains("provenance"))
      t.provenance = j.at("provenance");
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("schema", e.what());
  }
  const auto n = t.nodes.size();
  bool have_root = false;
  for (std::size_t k = 0; k < n; ++k) {
    const long par = t.nodes[k].parent;
    if (par < 0) {
      if (par != -1)
        throw ValidationError("parent link", "root parent must be -1");
      if (have_root)
        throw ValidationError("single root", "more than one node has parent -1");
      have_root = true;
      t.root = k;
    } else if (static_cast<std::size_t>(par) >= n || static_cast<std::size_t>(par) == k) {
      throw ValidationError("parent link", "node " + std::to_string(k) + " has a bad parent");
    } else {
      t.nodes[static_cast<std::size_t>(par)].children.push_back(k);
    }
  }
  if (!have_root)
    throw ValidationError("single root", "no node has parent -1");
  rebuild_vertex_map(t);
  validate_tree(t);
  return t;
}

std::string to_newick(const MergeTree &tree) {
  std::string out;
  // Iterative post-order so deep chains do not exhaust the stack.
  struct Frame {
    std::size_t node;
    std::size_t next;
  };
  std::vector<Frame> stack{{tree.root, 0}};
  while (!stack.empty()) {
    auto &f = stack.back();
    const auto &nd = tree.nodes[f.node];
    if (f.next == 0 && !nd.children.empty())
      out += '(';
    if (f.next < nd.children.size()) {
      if (f.next > 0)
        out += ',';
      const auto c = nd.children[f.next++];
      stack.push_back({c, 0});
      continue;
    }
    if (!nd.children.empty())
      out += ')';
    out += 'n' + std::to_string(f.node) + "[&mass=" + fmt(nd.mass) + ']';
    if (nd.parent >= 0)
      out += ':' + fmt(tree.nodes[static_cast<std::size_t>(nd.parent)].height - nd.height);
    stack.pop_back();
  }
  out += ';';
  return out;
}

} // namespace bmt

#include "bmt/validate.hpp"

#include "bmt/covergraph.hpp"
#include "bmt/deviation.hpp"
#include "bmt/error.hpp"
#include "bmt/merge_tree.hpp"
#include "bmt/mmspace.hpp"

#include <cmath>
#include <set>

namespace bmt {

namespace {

void check_space(const nlohmann::json &j) {
  const auto s = space_from_json(j);
  if (s.is_metric()) {
    const double v = max_triangle_violation(s.dist());
    if (v > kTolerance)
      throw ValidationError("triangle inequality",
                            "violation " + std::to_string(v) + " exceeds tolerance");
  }
}

void check_graph(const nlohmann::json &j) {
  const auto g = cover_from_json(j);
  const auto m = g.cover.size();
  if (!(g.delta > 0.0))
    throw ValidationError("cover radius", "delta must be > 0");
  if (g.omega.size() != m)
    throw ValidationError("schema", "omega must have one entry per cover vertex");
  std::set<std::size_t> seen(g.cover.begin(), g.cover.end());
  if (seen.size() != m)
    throw ValidationError("cover indices", "cover vertices repeat");
  for (auto [a, b] : g.edges)
    if (a >= m || b >= m || a == b)
      throw ValidationError("edge indices", "edge endpoint out of range or a loop");
  for (auto a : g.assign)
    if (a >= m)
      throw ValidationError("assignment", "assigned vertex out of range");
  double total = 0.0;
  for (double w : g.omega) {
    if (!(w >= 0.0))
      throw ValidationError("negative weight", "omega must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > kTolerance)
    throw ValidationError("measure normalization",
                          "omega sums to " + std::to_string(total));
}

} // namespace

ValidationReport validate_artifact(const nlohmann::json &j) {
  ValidationReport r;
  if (!j.is_object()) {
    r.kind = "unknown";
    r.rule = "schema";
    r.message = "top level must be an object";
    return r;
  }
  if (j.contains("dist"))
    r.kind = "space";
  else if (j.contains("cover"))
    r.kind = "graph";
  else if (j.contains("nodes"))
    r.kind = "tree";
  else if (j.contains("values"))
    r.kind = "field";
  else {
    r.kind = "unknown";
    r.rule = "schema";
    r.message = "no dist, cover, nodes or values key";
    return r;
  }
  try {
    if (r.kind == "space")
      check_space(j);
    else if (r.kind == "graph")
      check_graph(j);
    else if (r.kind == "tree")
      tree_from_json(j);
    else
      field_from_json(j);
    r.ok = true;
  } catch (const ValidationError &e) {
    r.rule = e.rule();
    r.message = e.what();
  } catch (const InvalidArgument &e) {
    r.rule = "invalid argument";
    r.message = e.what();
  }
  return r;
}

nlohmann::json report_to_json(const ValidationReport &r) {
  return {{"kind", r.kind}, {"ok", r.ok}, {"rule", r.rule}, {"message", r.message}};
}

} // namespace bmt

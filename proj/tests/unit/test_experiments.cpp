#include "doctest.h"

#include "bmt/error.hpp"
#include "bmt/experiments.hpp"
#include "bmt/validate.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bmt;

TEST_CASE("tables") {
  Table t{{"a", "b"}, {}};
  CHECK(t.csv() == "a,b\n");
  t.add({"1", "2"});
  t.add({num(0.5), num(std::size_t{3})});
  CHECK(t.csv() == "a,b\n1,2\n0.5,3\n");
  CHECK_THROWS_AS(t.add({"x"}), InvalidArgument);
}

TEST_CASE("experiment specs") {
  for (const auto &n : experiment_names()) {
    const auto s = default_experiment(n);
    CHECK(s.repeats >= 1);
    const auto back = experiment_from_json(experiment_to_json(s));
    CHECK(experiment_to_json(back) == experiment_to_json(s));
  }
  CHECK_THROWS_AS(default_experiment("nope"), InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json({{"name", "circle-median-dirac"}, {"repeats", 0}}),
                  InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json({{"seed", 1}}), ValidationError);
}

TEST_CASE("reruns are byte-identical") {
  auto s = default_experiment("circle-mean-instability");
  s.repeats = 2;
  s.seed = 17;
  const auto a = run_experiment(s), b = run_experiment(s);
  CHECK(a.tables.at("means").rows.size() == 2);
  CHECK(a.tables.at("means").csv() == b.tables.at("means").csv());
  CHECK(a.manifest == b.manifest);
  const auto dir = std::filesystem::temp_directory_path() / "bmt_bundle_test";
  write_bundle(a, dir.string());
  std::ifstream f(dir / "means.csv");
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == a.tables.at("means").csv());
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest carries the parameters") {
  auto s = default_experiment("circle-median-dirac");
  const auto r = run_experiment(s);
  CHECK(r.manifest.at("spec").at("p") == 1.0);
  CHECK(r.manifest.at("spec").at("reference_size") == 720);
  CHECK(r.manifest.contains("solver"));
}

TEST_CASE("cover tree pipeline") {
  SamplerSpec pdf;
  pdf.distribution = "bimodal";
  const auto host = circle_reference(pdf, 400);
  const auto ct = cover_tree(host, 0.1, 2.0, 0.02);
  validate_tree(ct.tree);
  CHECK(ct.space.size() == ct.graph.cover.size());
  CHECK(simplify(ct.tree, 0.01).leaves().size() == 2);
  const auto ft = full_tree(host, circle_grid_delta(400), 2.0);
  CHECK(ft.vertex_node.size() == 400);
  CHECK(leaf_merge_heights(ft).size() == ft.leaves().size());
}

TEST_CASE("validator reports") {
  SamplerSpec pdf;
  const auto host = build_space(circle_grid(6), metric_id::circle);
  auto j = space_to_json(host);
  auto r = validate_artifact(j);
  CHECK(r.ok);
  CHECK(r.kind == "space");
  j["weights"] = std::vector<double>(6, 0.15);
  r = validate_artifact(j);
  CHECK_FALSE(r.ok);
  CHECK(r.rule == "measure normalization");

  // non-metric distances with the metric flag set
  nlohmann::json tri = {{"n", 3},
                        {"metric", "precomputed"},
                        {"dist", {{0, 1, 3}, {1, 0, 1}, {3, 1, 0}}},
                        {"weights", {0.2, 0.3, 0.5}},
                        {"metadata", {{"metric", true}}}};
  CHECK(validate_artifact(tri).rule == "triangle inequality");
  tri["metadata"]["metric"] = false;
  CHECK(validate_artifact(tri).ok);

  const auto g = build_cover(host, 0.5);
  auto gj = cover_to_json(g);
  CHECK(validate_artifact(gj).ok);
  gj["edges"].push_back({0, 99});
  CHECK(validate_artifact(gj).rule == "edge indices");

  CHECK(validate_artifact({{"p", 2}, {"values", {1.0, 2.0}}}).kind == "field");
  CHECK(validate_artifact(nlohmann::json::array()).rule == "schema");
}

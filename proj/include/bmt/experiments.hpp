#pragma once

#include "bmt/covergraph.hpp"
#include "bmt/deviation.hpp"
#include "bmt/merge_tree.hpp"
#include "bmt/sampler.hpp"
#include "bmt/tree_compare.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bmt {

// ---- pipeline helpers shared by experiments, tests and the CLI ----

// m-point circle grid carrying the density of `pdf` as weights.
MetricMeasureSpace circle_reference(const SamplerSpec &pdf, std::size_t m);

// m-point circle grid with weight 0 followed by the samples at 1/n each, so
// that a cover of it also covers the parts of the circle without data.
MetricMeasureSpace circle_empirical_host(const std::vector<Point> &samples, std::size_t m);

// Tree over every host vertex: edges at 3 delta, sigma_p of the host
// measure, optional binning at epsilon (> 0).
MergeTree full_tree(const MetricMeasureSpace &host, double delta, double p,
                    double epsilon = 0.0);

struct CoverTree {
  CoveringGraph graph;
  MetricMeasureSpace space; // cover vertices carrying omega
  DeviationField field;
  MergeTree tree;
};

// Farthest-point delta-cover, sigma_p of the cover space, optional binning.
CoverTree cover_tree(const MetricMeasureSpace &host, double delta, double p,
                     double epsilon = 0.0);

// Half the grid spacing of an m-point circle grid: the covering radius.
double circle_grid_delta(std::size_t m);

// Height of the first branching ancestor of each leaf.
std::vector<double> leaf_merge_heights(const MergeTree &tree);

// ---- experiment runner ----

struct ExperimentSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::size_t> sample_sizes;
  std::size_t repeats = 1;
  double delta = 0.05;
  double epsilon = 0.0;
  double p = 2.0;
  double simplify = 0.0;
  std::size_t reference_size = 2000;
  nlohmann::json kernel = nlohmann::json::object();
  nlohmann::json params = nlohmann::json::object();
};

const std::vector<std::string> &experiment_names();

// Defaults of the named experiment.
ExperimentSpec default_experiment(const std::string &name);

// Defaults of j["name"] overlaid with the keys present in j.
ExperimentSpec experiment_from_json(const nlohmann::json &j);
nlohmann::json experiment_to_json(const ExperimentSpec &spec);

// Tidy table: one row per observation; cells already formatted.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string csv() const;
};

std::string num(double x);
std::string num(std::size_t x);

struct ExperimentResult {
  nlohmann::json manifest;
  std::map<std::string, Table> tables;          // file stem -> table
  std::map<std::string, nlohmann::json> trees;  // file stem -> tree JSON
};

// Runs the named pipeline. Repeats use seed + repeat index and run on the
// worker pool; rows are written in repeat order.
ExperimentResult run_experiment(const ExperimentSpec &spec);

// Writes <stem>.csv, <stem>.json and manifest.json under dir. Throws IoError.
void write_bundle(const ExperimentResult &result, const std::string &dir);

} // namespace bmt

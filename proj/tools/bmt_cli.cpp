#include "CLI11.hpp"
#include "json.hpp"

#include "bmt/covergraph.hpp"
#include "bmt/deviation.hpp"
#include "bmt/error.hpp"
#include "bmt/experiments.hpp"
#include "bmt/merge_tree.hpp"
#include "bmt/parallel.hpp"
#include "bmt/sampler.hpp"
#include "bmt/transport.hpp"
#include "bmt/tree_compare.hpp"
#include "bmt/validate.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace bmt;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json read_json(const std::string &path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception &e) {
    throw ValidationError("schema", path + ": " + e.what());
  }
}

void write_text(const std::string &path, const std::string &text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f)
    throw IoError("cannot write " + path);
}

void write_json(const std::string &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

MetricMeasureSpace load_space(const std::string &path) {
  if (fs::path(path).extension() == ".csv")
    return space_from_csv(read_text(path));
  return space_from_json(read_json(path));
}

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 0;
  std::string out_dir = ".";
};

std::string out_path(const Globals &g, const std::string &given, const std::string &dflt) {
  if (!given.empty())
    return given;
  return (fs::path(g.out_dir) / dflt).string();
}

// "base", "kernel:file.json", "heat:t=0.5,q=2".
PseudoMetricSpec parse_theta(const std::string &arg, const MetricMeasureSpace &space) {
  PseudoMetricSpec pm;
  const auto colon = arg.find(':');
  const std::string head = arg.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : arg.substr(colon + 1);
  pm.kind = theta_kind_from_string(head);
  if (pm.kind == ThetaKind::Base)
    return pm;
  if (pm.kind == ThetaKind::KernelMatrix) {
    if (rest.empty())
      throw InvalidArgument("kernel theta needs a file: kernel:file.json");
    const json j = read_json(rest);
    const json &mat = j.is_array() ? j : j.at("kernel");
    const auto n = space.size();
    if (!mat.is_array() || mat.size() != n)
      throw ValidationError("schema", "kernel must be an n x n array");
    pm.kernel.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (!mat[i].is_array() || mat[i].size() != n)
        throw ValidationError("schema", "kernel must be an n x n array");
      for (std::size_t k = 0; k < n; ++k)
        pm.kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            mat[i][k].get<double>();
    }
    if (j.is_object()) {
      pm.q = j.value("q", pm.q);
      pm.ref_weights = j.value("ref_weights", pm.ref_weights);
    }
  }
  std::stringstream ss(rest);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    if (kv.empty() || pm.kind == ThetaKind::KernelMatrix)
      continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("bad theta parameter '" + kv + "'");
    const auto key = kv.substr(0, eq);
    const double v = std::stod(kv.substr(eq + 1));
    if (key == "t")
      pm.t = v;
    else if (key == "q")
      pm.q = v;
    else
      throw InvalidArgument("unknown theta parameter '" + key + "'");
  }
  return pm;
}

// Order-sensitive digest of a plan: FNV-1a over the %.17g entries.
std::string plan_checksum(const Matrix &plan) {
  std::uint64_t h = 1469598103934665603ull;
  char buf[40];
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      const int len = std::snprintf(buf, sizeof buf, "%.17g;", plan(i, j));
      for (int k = 0; k < len; ++k) {
        h ^= static_cast<unsigned char>(buf[k]);
        h *= 1099511628211ull;
      }
    }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json solver_meta(const TransportPlan &p) {
  return {{"kind", p.kind},
          {"iterations", p.iterations},
          {"reg", p.reg},
          {"exact_cell_cap", kExactCellCap},
          {"sinkhorn_max_iter", kSinkhornMaxIter},
          {"sinkhorn_tol", kSinkhornTol}};
}

Matrix cross_distances(const MetricMeasureSpace &a, const MetricMeasureSpace &b) {
  if (a.metric() != b.metric() || !is_builtin_metric(a.metric()) || !a.has_coords() ||
      !b.has_coords())
    throw InvalidArgument("w_p needs two spaces with coordinates under the same built-in metric");
  Matrix d(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          point_distance(a.metric(), a.coords()[i], b.coords()[j]);
  return d;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"barycentric merge trees for metric-measure data"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
  app.add_option("--out-dir", g.out_dir, "directory for default output paths");

  // sample
  auto *sc = app.add_subcommand("sample", "draw a seeded sample and write a space JSON");
  std::string s_spec, s_space = std::string(metric_id::circle), s_dist = "uniform", s_out,
                      s_params;
  std::size_t s_n = 100, s_dim = 0;
  bool s_density = false;
  sc->add_option("--spec", s_spec, "sampler JSON (overrides the flags below)");
  sc->add_option("--space", s_space);
  sc->add_option("--distribution", s_dist);
  sc->add_option("--params", s_params, "distribution parameters as inline JSON");
  sc->add_option("--n", s_n);
  sc->add_option("--dim", s_dim);
  sc->add_flag("--density-weights", s_density, "weight points by the normalized density");
  sc->add_option("--out", s_out);

  // deviation
  auto *dc = app.add_subcommand("deviation", "compute a p-deviation field");
  std::string d_space, d_theta = "base", d_out;
  double d_p = 2.0;
  dc->add_option("--space", d_space)->required();
  dc->add_option("--p", d_p);
  dc->add_option("--theta", d_theta, "base | kernel:file.json | heat:t=0.5,q=2");
  dc->add_option("--out", d_out);

  // cover
  auto *cc = app.add_subcommand("cover", "farthest-point delta cover and its 3 delta graph");
  std::string c_space, c_out;
  double c_delta = 0.1;
  bool c_full = false;
  cc->add_option("--space", c_space)->required();
  cc->add_option("--delta", c_delta)->required();
  cc->add_flag("--full", c_full, "use every host vertex");
  cc->add_option("--out", c_out);

  // tree
  auto *tc = app.add_subcommand("tree", "build a merge tree from a graph and a field");
  std::string t_graph, t_field, t_out, t_newick;
  std::optional<double> t_bin;
  double t_simplify = 0.0;
  tc->add_option("--graph", t_graph)->required();
  tc->add_option("--field", t_field)->required();
  tc->add_option("--bin", t_bin);
  tc->add_option("--simplify", t_simplify);
  tc->add_option("--out", t_out);
  tc->add_option("--newick", t_newick);

  // compare
  auto *pc = app.add_subcommand("compare", "compare two trees or two spaces");
  std::string p_ta, p_tb, p_sa, p_sb, p_out;
  double p_p = 2.0;
  pc->add_option("--treeA", p_ta);
  pc->add_option("--treeB", p_tb);
  pc->add_option("--spaceA", p_sa);
  pc->add_option("--spaceB", p_sb);
  pc->add_option("--p", p_p);
  pc->add_option("--out", p_out);

  // experiment
  auto *ec = app.add_subcommand("experiment", "run a named experiment");
  std::string e_name, e_spec;
  std::optional<std::size_t> e_repeats;
  std::vector<std::size_t> e_sizes;
  ec->add_option("--name", e_name);
  ec->add_option("--spec", e_spec, "experiment JSON");
  ec->add_option("--repeats", e_repeats);
  ec->add_option("--sample-sizes", e_sizes);
  ec->add_flag_callback("--list", [] {
    for (const auto &n : experiment_names())
      std::cout << n << "\n";
    std::exit(0);
  });

  // validate
  auto *vc = app.add_subcommand("validate", "re-check the invariants of JSON artifacts");
  std::vector<std::string> v_files;
  vc->add_option("files", v_files)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }
  g.seed_set = app.get_option("--seed")->count() > 0;

  try {
    set_thread_count(g.threads);

    if (*sc) {
      SamplerSpec spec;
      if (!s_spec.empty()) {
        spec = sampler_from_json(read_json(s_spec));
      } else {
        json j{{"space", s_space}, {"distribution", s_dist}, {"n", s_n}, {"dim", s_dim}};
        if (!s_params.empty())
          j["params"] = json::parse(s_params);
        spec = sampler_from_json(j);
      }
      if (g.seed_set)
        spec.seed = g.seed;
      auto smp = sample(spec);
      auto space = s_density ? smp.space.with_weights(density_weights(spec, smp.points))
                             : smp.space;
      auto j = space_to_json(space);
      j["sampler"] = sampler_to_json(spec);
      write_json(out_path(g, s_out, "sample.json"), j);
    } else if (*dc) {
      const auto space = load_space(d_space);
      const auto pm = parse_theta(d_theta, space);
      const auto field = deviation_field(space, d_p, pm);
      write_json(out_path(g, d_out, "field.json"), field_to_json(field));
    } else if (*cc) {
      const auto space = load_space(c_space);
      const auto cov = c_full ? full_cover(space, c_delta) : build_cover(space, c_delta);
      write_json(out_path(g, c_out, "graph.json"), cover_to_json(cov));
    } else if (*tc) {
      const auto graph = cover_from_json(read_json(t_graph));
      auto field = field_from_json(read_json(t_field));
      const auto m = graph.cover.size();
      if (field.values.size() != m) {
        // a field over the host: read it at the cover vertices
        if (graph.assign.empty() || field.values.size() != graph.assign.size())
          throw ValidationError("schema", "field size matches neither the cover nor the host");
        std::vector<double> v(m);
        for (std::size_t k = 0; k < m; ++k)
          v[k] = field.values[graph.cover[k]];
        field.values = std::move(v);
      }
      std::vector<double> values = field.values;
      if (t_bin)
        values = bin_field(field, *t_bin).values;
      auto tree = build_tree(graph.graph(), values, graph.omega, field.p);
      tree.provenance = {{"kind", "cli"},
                         {"graph", t_graph},
                         {"field", t_field},
                         {"delta", graph.delta},
                         {"bin", t_bin ? *t_bin : 0.0},
                         {"simplify", t_simplify}};
      if (t_simplify > 0.0)
        tree = simplify(tree, t_simplify);
      write_json(out_path(g, t_out, "tree.json"), tree_to_json(tree));
      if (!t_newick.empty())
        write_text(t_newick, to_newick(tree) + "\n");
    } else if (*pc) {
      json out;
      if (!p_ta.empty() || !p_tb.empty()) {
        if (p_ta.empty() || p_tb.empty())
          throw InvalidArgument("--treeA and --treeB go together");
        const auto ta = tree_from_json(read_json(p_ta));
        const auto tb = tree_from_json(read_json(p_tb));
        const auto fa = functional_tree(ta, true);
        const auto fb = functional_tree(tb, true);
        const auto c = fused_ks_estimate(fa, fb, p_p);
        out = {{"mode", "trees"},
               {"p", p_p},
               {"lower_bound", c.lower_bound},
               {"height_bound", c.height_bound},
               {"ecc_bound", c.ecc_bound},
               {"fused_estimate", c.fused},
               {"offsets", {{"structural", c.structural}, {"functional", c.functional}}},
               {"relation", c.relation},
               {"r", c.r},
               {"lambda", c.lambda},
               {"plan_checksum", plan_checksum(c.plan.plan)},
               {"plan_shape", {c.plan.rows(), c.plan.cols()}},
               {"solver", solver_meta(c.plan)}};
      } else {
        if (p_sa.empty() || p_sb.empty())
          throw InvalidArgument("give --treeA/--treeB or --spaceA/--spaceB");
        const auto a = load_space(p_sa);
        const auto b = load_space(p_sb);
        const auto gw = gw_estimate(a, b, p_p);
        out = {{"mode", "spaces"},
               {"p", p_p},
               {"gw", gw.value},
               {"gw_local", gw.cg_value},
               {"gw_substituted", gw.substituted},
               {"gw_iterations", gw.iterations},
               {"gw_plan_checksum", plan_checksum(gw.plan)}};
        if (gw.permutation_value)
          out["gw_permutation"] = *gw.permutation_value;
        if (a.metric() == b.metric() && is_builtin_metric(a.metric()) && a.has_coords() &&
            b.has_coords()) {
          const auto w = wasserstein(a.weights(), b.weights(), cross_distances(a, b), p_p);
          out["wp"] = w.value;
          out["plan_checksum"] = plan_checksum(w.plan.plan);
          out["solver"] = solver_meta(w.plan);
        }
      }
      write_json(out_path(g, p_out, "compare.json"), out);
    } else if (*ec) {
      ExperimentSpec spec;
      if (!e_spec.empty())
        spec = experiment_from_json(read_json(e_spec));
      else if (!e_name.empty())
        spec = default_experiment(e_name);
      else
        throw InvalidArgument("experiment needs --name or --spec");
      if (g.seed_set)
        spec.seed = g.seed;
      if (e_repeats)
        spec.repeats = *e_repeats;
      if (!e_sizes.empty())
        spec.sample_sizes = e_sizes;
      const auto res = run_experiment(spec);
      const auto dir = (fs::path(g.out_dir) / spec.name).string();
      write_bundle(res, dir);
      std::cout << dir << "\n";
    } else if (*vc) {
      bool all_ok = true;
      for (const auto &f : v_files) {
        auto r = validate_artifact(read_json(f));
        auto j = report_to_json(r);
        j["file"] = f;
        std::cout << j.dump() << "\n";
        all_ok = all_ok && r.ok;
      }
      return all_ok ? 0 : 2;
    }
  } catch (const ValidationError &e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return 2;
  } catch (const SolverError &e) {
    std::cerr << "solver: " << e.what() << "\n";
    return 3;
  } catch (const IoError &e) {
    std::cerr << "io: " << e.what() << "\n";
    return 4;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

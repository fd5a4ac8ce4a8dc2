#include "bmt/experiments.hpp"

#include "bmt/error.hpp"
#include "bmt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

namespace bmt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr const char *kVersion = "0.1.0";

using json = nlohmann::json;

SamplerSpec circle_pdf(const ExperimentSpec &spec, const std::string &dflt) {
  SamplerSpec s;
  s.space = std::string(metric_id::circle);
  s.distribution = spec.params.value("distribution", dflt);
  if (spec.params.contains("pdf_params"))
    s.params = spec.params.at("pdf_params");
  return s;
}

double median(std::vector<double> v) {
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::size_t> argmin_set(const std::vector<double> &v, double tol) {
  const double mn = *std::min_element(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] <= mn + tol)
      out.push_back(i);
  return out;
}

// Point of the node's first member, for reporting leaf locations.
const Point &node_point(const MergeTree &t, const MetricMeasureSpace &s, std::size_t node) {
  return s.coords().at(t.nodes[node].members.front());
}

// Angles at the quantiles (k + 1/2)/m of a grid measure, each grid mass
// spread uniformly over its cell.
std::vector<double> circle_quantiles(const MetricMeasureSpace &ref, std::size_t m) {
  const auto g = ref.size();
  const double cell = kTwoPi / static_cast<double>(g);
  std::vector<double> out(m);
  std::size_t i = 0;
  double below = 0.0; // mass of cells before i
  for (std::size_t k = 0; k < m; ++k) {
    const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    while (i + 1 < g && below + ref.weights()[i] < q) {
      below += ref.weights()[i];
      ++i;
    }
    const double w = ref.weights()[i];
    const double frac = w > 0.0 ? std::clamp((q - below) / w, 0.0, 1.0) : 0.5;
    double a = ref.coords()[i][0] - 0.5 * cell + frac * cell;
    a = std::fmod(a + kTwoPi, kTwoPi);
    out[k] = a;
  }
  return out;
}

Matrix circle_cross(const std::vector<Point> &a, const std::vector<Point> &b) {
  Matrix d(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          circle_geodesic(a[i][0], b[j][0]);
  return d;
}

std::size_t count_leaves(const MergeTree &t) { return t.leaves().size(); }

// ---- individual experiments ----

ExperimentResult circle_median_dirac(const ExperimentSpec &spec) {
  ExperimentResult res;
  const std::size_t m = spec.reference_size;
  if (m % 2 != 0)
    throw InvalidArgument("circle-median-dirac needs an even grid size");
  const auto mus = spec.params.value("mu1", std::vector<double>{0.4, 0.5, 0.6});
  const auto pts = circle_grid(m);
  Table field{{"mu1", "angle", "sigma"}, {}};
  Table arg{{"mu1", "argmin_count", "argmin_angle", "sigma_min", "sigma_max"}, {}};
  for (double mu1 : mus) {
    std::vector<double> w(m, 0.0);
    w[0] = mu1;
    w[m / 2] = 1.0 - mu1;
    const auto space = build_space(pts, metric_id::circle, w);
    const auto sigma = deviation_values(space.dist(), space.weights(), spec.p);
    for (std::size_t i = 0; i < m; ++i)
      field.add({num(mu1), num(pts[i][0]), num(sigma[i])});
    const auto am = argmin_set(sigma, 1e-12);
    arg.add({num(mu1), num(am.size()), num(pts[am.front()][0]),
             num(*std::min_element(sigma.begin(), sigma.end())),
             num(*std::max_element(sigma.begin(), sigma.end()))});
  }
  res.tables["field"] = std::move(field);
  res.tables["argmin"] = std::move(arg);
  return res;
}

ExperimentResult circle_mean_instability(const ExperimentSpec &spec) {
  ExperimentResult res;
  const auto pdf = circle_pdf(spec, "bimodal");
  const auto grid = circle_grid(spec.reference_size);
  const auto ref = circle_reference(pdf, spec.reference_size);
  const auto pop = deviation_values(ref.dist(), ref.weights(), spec.p);
  Table popt{{"angle", "sigma", "is_minimizer"}, {}};
  const auto pm = argmin_set(pop, 1e-9);
  for (std::size_t i = 0; i < grid.size(); ++i)
    popt.add({num(grid[i][0]), num(pop[i]),
              std::find(pm.begin(), pm.end(), i) != pm.end() ? "1" : "0"});
  res.tables["population"] = std::move(popt);

  struct Row {
    std::size_t n, r;
    std::uint64_t seed;
    double angle, smin;
  };
  std::vector<Row> rows;
  for (auto n : spec.sample_sizes)
    for (std::size_t r = 0; r < spec.repeats; ++r)
      rows.push_back({n, r, spec.seed + r, 0.0, 0.0});
  parallel_for(rows.size(), [&](std::size_t k) {
    auto &row = rows[k];
    SamplerSpec s = pdf;
    s.seed = row.seed;
    s.n = row.n;
    const auto smp = sample(s);
    const Matrix cross = circle_cross(grid, smp.points);
    const auto sigma = deviation_values(cross, smp.space.weights(), spec.p);
    const auto am = argmin_set(sigma, 0.0);
    row.angle = grid[am.front()][0];
    row.smin = sigma[am.front()];
  });
  Table t{{"n", "repeat", "seed", "mean_angle", "sigma_min"}, {}};
  for (const auto &row : rows)
    t.add({num(row.n), num(row.r), num(static_cast<std::size_t>(row.seed)), num(row.angle),
           num(row.smin)});
  res.tables["means"] = std::move(t);
  return res;
}

ExperimentResult circle_bmt_stability(const ExperimentSpec &spec) {
  ExperimentResult res;
  const auto pdf = circle_pdf(spec, "bimodal");
  const std::size_t host_grid = spec.params.value("host_grid", std::size_t{2000});
  const bool fused = spec.params.value("fused", true);
  const double full_delta = circle_grid_delta(host_grid);

  const auto ref = circle_reference(pdf, spec.reference_size);
  const auto rct = cover_tree(ref, spec.delta, spec.p, spec.epsilon);
  const auto rsimp = simplify(rct.tree, spec.simplify);
  res.trees["reference_cover_tree"] = tree_to_json(rsimp);
  Table rt{{"cover_size", "leaves_raw", "leaves_simplified"}, {}};
  rt.add({num(rct.graph.cover.size()), num(count_leaves(rct.tree)), num(count_leaves(rsimp))});
  res.tables["reference"] = std::move(rt);

  const std::size_t n = spec.sample_sizes.empty() ? 250 : spec.sample_sizes.front();
  struct Row {
    std::uint64_t sa, sb;
    std::size_t cover = 0, raw = 0, simp = 0;
    double w2 = 0, lb = 0, hb = 0, eb = 0, fu = 0, st = 0, fn = 0;
    json tree;
  };
  std::vector<Row> rows(spec.repeats);
  parallel_for(spec.repeats, [&](std::size_t r) {
    auto &row = rows[r];
    row.sa = spec.seed + r;
    row.sb = spec.seed + spec.repeats + r;
    SamplerSpec s = pdf;
    s.n = n;
    s.seed = row.sa;
    const auto a = sample(s);
    s.seed = row.sb;
    const auto b = sample(s);

    const auto host_a = circle_empirical_host(a.points, host_grid);
    const auto ct = cover_tree(host_a, spec.delta, spec.p, spec.epsilon);
    const auto st = simplify(ct.tree, spec.simplify);
    row.cover = ct.graph.cover.size();
    row.raw = count_leaves(ct.tree);
    row.simp = count_leaves(st);
    row.tree = tree_to_json(st);

    const auto host_b = circle_empirical_host(b.points, host_grid);
    const auto fa = functional_tree(full_tree(host_a, full_delta, spec.p), true);
    const auto fb = functional_tree(full_tree(host_b, full_delta, spec.p), true);
    row.w2 = wasserstein(a.space.weights(), b.space.weights(), circle_cross(a.points, b.points),
                         2.0)
                 .value;
    if (fused) {
      const auto cmp = fused_ks_estimate(fa, fb, spec.p);
      row.lb = cmp.lower_bound;
      row.hb = cmp.height_bound;
      row.eb = cmp.ecc_bound;
      row.fu = cmp.fused;
      row.st = cmp.structural;
      row.fn = cmp.functional;
    } else {
      row.hb = height_lower_bound(fa, fb, spec.p);
      row.eb = eccentricity_lower_bound(fa.d, fa.mass, fb.d, fb.mass, spec.p);
      row.lb = std::max(row.hb, row.eb);
      row.fu = row.st = row.fn = std::numeric_limits<double>::quiet_NaN();
    }
  });
  Table t{{"repeat", "n", "seed_a", "seed_b", "cover_size", "leaves_raw", "leaves_simplified",
           "w2", "lower_bound", "height_bound", "ecc_bound", "fused_estimate", "structural",
           "functional"},
          {}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto &w = rows[r];
    t.add({num(r), num(n), num(static_cast<std::size_t>(w.sa)),
           num(static_cast<std::size_t>(w.sb)), num(w.cover), num(w.raw), num(w.simp), num(w.w2),
           num(w.lb), num(w.hb), num(w.eb), num(w.fu), num(w.st), num(w.fn)});
    char stem[32];
    std::snprintf(stem, sizeof stem, "tree_%03zu", r);
    res.trees[stem] = w.tree;
  }
  res.tables["repeats"] = std::move(t);
  res.manifest["seed_rule"] = "repeat r draws sample A with seed + r and B with seed + repeats + r";
  res.manifest["full_tree_delta"] = full_delta;
  res.manifest["host_grid"] = host_grid;
  res.manifest["reference"] = "reference-proxy: " + std::to_string(spec.reference_size) +
                              "-point circle grid with density weights";
  return res;
}

ExperimentResult sphere(const ExperimentSpec &spec, const std::string &dist) {
  ExperimentResult res;
  SamplerSpec pdf;
  pdf.space = std::string(metric_id::sphere);
  pdf.distribution = dist;
  if (spec.params.contains("pdf_params"))
    pdf.params = spec.params.at("pdf_params");
  const auto pts = fibonacci_sphere(spec.reference_size);
  const auto host = build_space(pts, metric_id::sphere, density_weights(pdf, pts));
  const auto raw = full_tree(host, spec.delta, spec.p, spec.epsilon);
  const auto simp = simplify(raw, spec.simplify);
  res.trees["tree_raw"] = tree_to_json(raw);
  res.trees["tree_simplified"] = tree_to_json(simp);
  Table summary{{"stage", "leaves", "merge_height_min", "merge_height_max"}, {}};
  Table leaves{{"stage", "node", "height", "mass", "merge_height", "x", "y", "z"}, {}};
  for (const auto &[stage, tree] :
       {std::pair<std::string, const MergeTree *>{"raw", &raw}, {"simplified", &simp}}) {
    const auto lv = tree->leaves();
    const auto mh = leaf_merge_heights(*tree);
    summary.add({stage, num(lv.size()), num(*std::min_element(mh.begin(), mh.end())),
                 num(*std::max_element(mh.begin(), mh.end()))});
    for (std::size_t k = 0; k < lv.size(); ++k) {
      const auto &x = node_point(*tree, host, lv[k]);
      leaves.add({stage, num(lv[k]), num(tree->nodes[lv[k]].height), num(tree->nodes[lv[k]].mass),
                  num(mh[k]), num(x[0]), num(x[1]), num(x[2])});
    }
  }
  res.tables["summary"] = std::move(summary);
  res.tables["leaves"] = std::move(leaves);
  res.manifest["reference"] = "reference-proxy: " + std::to_string(spec.reference_size) +
                              "-point Fibonacci sphere with density weights";
  return res;
}

ExperimentResult mode_scale_sweep(const ExperimentSpec &spec) {
  ExperimentResult res;
  const auto pdf = circle_pdf(spec, "fig1");
  const auto ref = circle_reference(pdf, spec.reference_size);
  const auto ts = spec.kernel.value(
      "t", std::vector<double>{0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0});
  const Graph g = Graph::threshold(ref.dist(), 3.0 * circle_grid_delta(spec.reference_size));
  std::vector<std::size_t> raw(ts.size()), simp(ts.size());
  std::vector<json> trees(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    PseudoMetricSpec pm;
    pm.kind = ThetaKind::KernelMatrix;
    pm.q = 2.0;
    pm.kernel = exp_kernel(ref, 1.0 / (4.0 * ts[k]));
    const auto field = deviation_field(ref, spec.p, pm);
    auto values = field.values;
    if (spec.epsilon > 0.0)
      values = bin_field(field, spec.epsilon).values;
    auto tree = build_tree(g, values, ref.weights(), spec.p);
    tree.provenance = {{"kind", "mode-tree"}, {"t", ts[k]}};
    const auto s = simplify(tree, spec.simplify);
    raw[k] = count_leaves(tree);
    simp[k] = count_leaves(s);
    trees[k] = tree_to_json(s);
  }
  Table t{{"t", "leaves", "leaves_simplified"}, {}};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    t.add({num(ts[k]), num(raw[k]), num(simp[k])});
    char stem[32];
    std::snprintf(stem, sizeof stem, "tree_t%02zu", k);
    res.trees[stem] = trees[k];
  }
  res.tables["leaves"] = std::move(t);
  res.manifest["kernel_form"] = "exp(-d^2 / (4 t)), uniform reference measure on the grid";
  return res;
}

ExperimentResult polygon_modes(const ExperimentSpec &spec) {
  ExperimentResult res;
  const std::size_t n = spec.sample_sizes.empty() ? 2000 : spec.sample_sizes.front();
  const std::size_t dim = spec.params.value("dim", std::size_t{10});
  const double c = spec.kernel.value("c", 10.0);
  SamplerSpec uni;
  uni.space = std::string(metric_id::grassmannian);
  uni.distribution = "uniform";
  uni.n = n;
  uni.dim = dim;
  uni.seed = spec.seed;
  const auto smp = sample(uni);

  // delta from the bottleneck edge of a minimum spanning tree (Prim), so the
  // 3 delta graph is connected.
  const auto &d = smp.space.dist();
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<char> in(n, 0);
  key[0] = 0.0;
  double bottleneck = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && (u == n || key[v] < key[u]))
        u = v;
    in[u] = 1;
    bottleneck = std::max(bottleneck, key[u]);
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v])
        key[v] = std::min(key[v], d(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)));
  }
  const double delta = bottleneck / 3.0 * (1.0 + 1e-12);
  const Graph g = Graph::threshold(d, 3.0 * delta);

  PseudoMetricSpec pm;
  pm.kind = ThetaKind::KernelMatrix;
  pm.q = 2.0;
  pm.kernel = exp_kernel(smp.space, c);
  const Matrix theta = materialize_theta(smp.space, pm);

  const auto pdfs =
      spec.params.value("pdfs", std::vector<std::string>{"two-center", "total-curvature"});
  Table summary{{"pdf", "leaves_raw", "leaves_simplified", "delta", "simplify_threshold"}, {}};
  Table leaves{
      {"pdf", "node", "height", "mass", "point", "total_curvature", "center_distance"}, {}};
  // The two centers are sample polygons, so the modes are attainable.
  const auto center_idx =
      spec.params.value("center_indices", std::vector<std::size_t>{0, 1});
  std::vector<Point> centers;
  for (auto k : center_idx)
    centers.push_back(smp.points.at(k));
  const bool relative = spec.params.value("relative_simplify", true);
  for (const auto &name : pdfs) {
    SamplerSpec s = uni;
    s.distribution = name;
    if (name == "two-center")
      s.params = {{"centers", centers},
                  {"kernel", "exp"},
                  {"c", spec.params.value("center_c", 3.0)}};
    if (spec.params.contains("pdf_params"))
      s.params.update(spec.params.at("pdf_params"));
    const auto w = density_weights(s, smp.points);
    const auto sigma = deviation_values(theta, w, spec.p);
    auto values = sigma;
    if (spec.epsilon > 0.0) {
      DeviationField f;
      f.values = sigma;
      values = bin_field(f, spec.epsilon).values;
    }
    auto tree = build_tree(g, values, w, spec.p);
    tree.provenance = {{"kind", "mode-tree"}, {"pdf", name}, {"kernel_c", c}};
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double threshold = relative ? spec.simplify * (*hi - *lo) : spec.simplify;
    const auto simp = simplify(tree, threshold);
    summary.add({name, num(count_leaves(tree)), num(count_leaves(simp)), num(delta),
                 num(threshold)});
    for (auto leaf : simp.leaves()) {
      // lowest member of the leaf
      auto pt = simp.nodes[leaf].members.front();
      for (auto v : simp.nodes[leaf].members)
        if (values[v] < values[pt])
          pt = v;
      double dc = std::numeric_limits<double>::infinity();
      for (auto k : center_idx)
        dc = std::min(dc, d(static_cast<Eigen::Index>(pt), static_cast<Eigen::Index>(k)));
      leaves.add({name, num(leaf), num(simp.nodes[leaf].height), num(simp.nodes[leaf].mass),
                  num(pt), num(total_curvature(smp.points[pt])), num(dc)});
    }
    res.trees["tree_" + name] = tree_to_json(simp);
  }
  res.tables["summary"] = std::move(summary);
  res.tables["leaves"] = std::move(leaves);
  res.manifest["delta"] = delta;
  res.manifest["weights"] = "density renormalized by its sum over the sample";
  return res;
}

ExperimentResult quantitative_stability(const ExperimentSpec &spec) {
  ExperimentResult res;
  const auto pdf = circle_pdf(spec, "bimodal");
  const std::size_t host_grid = spec.params.value("host_grid", spec.reference_size);
  const std::size_t proxy_size = spec.params.value("proxy_size", std::size_t{1000});
  const auto ref = circle_reference(pdf, spec.reference_size);
  const auto rtree = full_tree(ref, circle_grid_delta(spec.reference_size), spec.p);
  const auto fref = functional_tree(rtree, true);
  const auto ref_ecc = eccentricities(fref.d, fref.mass, spec.p);
  const auto proxy = circle_quantiles(ref, proxy_size);
  res.trees["reference_tree"] = tree_to_json(rtree);

  struct Row {
    std::size_t n, r;
    std::uint64_t seed;
    double w2 = 0, angle = 0, lb = 0, hb = 0, eb = 0;
  };
  std::vector<Row> rows;
  for (auto n : spec.sample_sizes)
    for (std::size_t r = 0; r < spec.repeats; ++r)
      rows.push_back({n, r, spec.seed + r});
  const double full_delta = circle_grid_delta(host_grid);
  parallel_for(rows.size(), [&](std::size_t k) {
    auto &row = rows[k];
    SamplerSpec s = pdf;
    s.n = row.n;
    s.seed = row.seed;
    const auto smp = sample(s);
    const auto host = circle_empirical_host(smp.points, host_grid);
    const auto tree = full_tree(host, full_delta, spec.p);
    const auto f = functional_tree(tree, true);
    row.hb = height_lower_bound(f, fref, spec.p);
    const auto ecc = eccentricities(f.d, f.mass, spec.p);
    row.eb = 0.5 * wasserstein_1d(ecc, f.mass, ref_ecc, fref.mass, spec.p);
    row.lb = std::max(row.hb, row.eb);
    // Global minimizer of sigma over the host vertices.
    const auto sigma = deviation_values(host.dist(), host.weights(), spec.p);
    row.angle = host.coords()[argmin_set(sigma, 0.0).front()][0];
    std::vector<double> xs;
    for (const auto &pt : smp.points)
      xs.push_back(pt[0]);
    if (proxy_size % row.n == 0) {
      std::vector<double> rep;
      for (double x : xs)
        for (std::size_t c = 0; c < proxy_size / row.n; ++c)
          rep.push_back(x);
      row.w2 = circle_wasserstein_uniform(rep, proxy, 2.0);
    } else {
      std::vector<Point> pp;
      for (double x : proxy)
        pp.push_back({x});
      row.w2 = wasserstein(smp.space.weights(), std::vector<double>(proxy_size, 1.0 / static_cast<double>(proxy_size)),
                           circle_cross(smp.points, pp), 2.0)
                   .value;
    }
  });
  Table t{{"n", "repeat", "seed", "w2_to_proxy", "mean_angle", "tree_lower_bound",
           "height_bound", "ecc_bound"},
          {}};
  for (const auto &w : rows)
    t.add({num(w.n), num(w.r), num(static_cast<std::size_t>(w.seed)), num(w.w2), num(w.angle),
           num(w.lb), num(w.hb), num(w.eb)});
  res.tables["runs"] = std::move(t);
  Table s{{"n", "median_tree_lower_bound", "median_w2_to_proxy", "mean_angle_circular_spread"},
          {}};
  for (auto n : spec.sample_sizes) {
    std::vector<double> lb, w2;
    double cs = 0.0, sn = 0.0;
    std::size_t cnt = 0;
    for (const auto &w : rows)
      if (w.n == n) {
        lb.push_back(w.lb);
        w2.push_back(w.w2);
        cs += std::cos(w.angle);
        sn += std::sin(w.angle);
        ++cnt;
      }
    // 1 - mean resultant length: 0 when all means agree.
    const double spread = cnt ? 1.0 - std::hypot(cs, sn) / static_cast<double>(cnt) : 0.0;
    s.add({num(n), num(median(lb)), num(median(w2)), num(spread)});
  }
  res.tables["summary"] = std::move(s);
  res.manifest["reference"] = "reference-proxy: " + std::to_string(spec.reference_size) +
                              "-point circle grid with density weights, full tree";
  res.manifest["proxy"] = std::to_string(proxy_size) + " grid-measure quantiles";
  res.manifest["host_grid"] = host_grid;
  res.manifest["seed_rule"] = "repeat r uses seed + r for every n";
  return res;
}

} // namespace

// ---- helpers ----

MetricMeasureSpace circle_reference(const SamplerSpec &pdf, std::size_t m) {
  const auto pts = circle_grid(m);
  return build_space(pts, metric_id::circle, density_weights(pdf, pts));
}

MetricMeasureSpace circle_empirical_host(const std::vector<Point> &samples, std::size_t m) {
  auto pts = circle_grid(m);
  std::vector<double> w(m, 0.0);
  const double each = 1.0 / static_cast<double>(samples.size());
  for (const auto &x : samples) {
    pts.push_back(x);
    w.push_back(each);
  }
  return build_space(pts, metric_id::circle, std::move(w));
}

double circle_grid_delta(std::size_t m) { return kPi / static_cast<double>(m); }

MergeTree full_tree(const MetricMeasureSpace &host, double delta, double p, double epsilon) {
  const Graph g = Graph::threshold(host.dist(), 3.0 * delta);
  DeviationField f;
  f.p = p;
  f.values = deviation_values(host.dist(), host.weights(), p);
  auto values = epsilon > 0.0 ? bin_field(f, epsilon).values : f.values;
  auto t = build_tree(g, values, host.weights(), p);
  t.provenance = {{"kind", "full-host"}, {"delta", delta}, {"epsilon", epsilon},
                  {"host_size", host.size()}};
  return t;
}

CoverTree cover_tree(const MetricMeasureSpace &host, double delta, double p, double epsilon) {
  auto g = build_cover(host, delta);
  auto space = cover_space(host, g);
  auto field = deviation_field(space, p);
  auto values = epsilon > 0.0 ? bin_field(field, epsilon).values : field.values;
  auto tree = build_tree(g.graph(), values, space.weights(), p);
  tree.provenance = {{"kind", "delta-cover"}, {"delta", delta}, {"epsilon", epsilon},
                     {"cover_size", g.cover.size()}};
  return CoverTree{std::move(g), std::move(space), std::move(field), std::move(tree)};
}

std::vector<double> leaf_merge_heights(const MergeTree &tree) {
  std::vector<double> out;
  for (auto [leaf, pers] : leaf_persistence(tree))
    out.push_back(std::isinf(pers) ? tree.nodes[tree.root].height
                                   : tree.nodes[leaf].height + pers);
  return out;
}

// ---- spec plumbing ----

const std::vector<std::string> &experiment_names() {
  static const std::vector<std::string> names = {
      "circle-mean-instability", "circle-median-dirac", "circle-bmt-stability",
      "sphere-symmetric",        "sphere-asymmetric",   "mode-scale-sweep",
      "polygon-modes",           "quantitative-stability"};
  return names;
}

ExperimentSpec default_experiment(const std::string &name) {
  const auto &names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw InvalidArgument("unknown experiment '" + name + "'");
  ExperimentSpec s;
  s.name = name;
  if (name == "circle-median-dirac") {
    s.p = 1.0;
    s.reference_size = 720;
    s.params = {{"mu1", {0.4, 0.5, 0.6}}};
  } else if (name == "circle-mean-instability") {
    s.sample_sizes = {100};
    s.repeats = 4;
    s.reference_size = 720;
  } else if (name == "circle-bmt-stability") {
    s.sample_sizes = {250};
    s.repeats = 50;
    s.epsilon = 0.02;
    s.simplify = 0.01;
  } else if (name == "sphere-symmetric" || name == "sphere-asymmetric") {
    s.simplify = 0.01;
  } else if (name == "mode-scale-sweep") {
    s.reference_size = 720;
    s.kernel = {{"t", {0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}}};
  } else if (name == "polygon-modes") {
    s.sample_sizes = {2000};
    s.simplify = 0.1; // fraction of the field range
    s.kernel = {{"c", 10.0}};
    s.params = {{"dim", 10}};
  } else if (name == "quantitative-stability") {
    s.sample_sizes = {10, 25, 50, 100, 250, 500, 1000};
    s.repeats = 50;
  }
  return s;
}

ExperimentSpec experiment_from_json(const nlohmann::json &j) {
  try {
    ExperimentSpec s = default_experiment(j.at("name").get<std::string>());
    s.seed = j.value("seed", s.seed);
    s.sample_sizes = j.value("sample_sizes", s.sample_sizes);
    s.repeats = j.value("repeats", s.repeats);
    s.delta = j.value("delta", s.delta);
    s.epsilon = j.value("epsilon", s.epsilon);
    s.p = j.value("p", s.p);
    s.simplify = j.value("simplify", s.simplify);
    s.reference_size = j.value("reference_size", s.reference_size);
    if (j.contains("kernel"))
      s.kernel.update(j.at("kernel"));
    if (j.contains("params"))
      s.params.update(j.at("params"));
    if (s.repeats < 1)
      throw InvalidArgument("repeats must be >= 1");
    if (!(s.p >= 1.0))
      throw InvalidArgument("p must be >= 1");
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("schema", e.what());
  }
}

nlohmann::json experiment_to_json(const ExperimentSpec &s) {
  return {{"name", s.name},     {"seed", s.seed},         {"sample_sizes", s.sample_sizes},
          {"repeats", s.repeats}, {"delta", s.delta},     {"epsilon", s.epsilon},
          {"p", s.p},           {"simplify", s.simplify}, {"reference_size", s.reference_size},
          {"kernel", s.kernel}, {"params", s.params}};
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw InvalidArgument("table row has the wrong width");
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string> &cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k)
        out += ',';
      out += cells[k];
    }
    out += '\n';
  };
  line(columns);
  for (const auto &r : rows)
    line(r);
  return out;
}

std::string num(double x) {
  if (std::isnan(x))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string num(std::size_t x) { return std::to_string(x); }

ExperimentResult run_experiment(const ExperimentSpec &spec) {
  default_experiment(spec.name); // validates the name
  if (spec.repeats < 1)
    throw InvalidArgument("repeats must be >= 1");
  ExperimentResult res;
  const auto &n = spec.name;
  try {
    if (n == "circle-median-dirac")
      res = circle_median_dirac(spec);
    else if (n == "circle-mean-instability")
      res = circle_mean_instability(spec);
    else if (n == "circle-bmt-stability")
      res = circle_bmt_stability(spec);
    else if (n == "sphere-symmetric")
      res = sphere(spec, "six-mode");
    else if (n == "sphere-asymmetric")
      res = sphere(spec, "six-mode-asymmetric");
    else if (n == "mode-scale-sweep")
      res = mode_scale_sweep(spec);
    else if (n == "polygon-modes")
      res = polygon_modes(spec);
    else
      res = quantitative_stability(spec);
  } catch (const ValidationError &) {
    throw;
  } catch (const SolverError &e) {
    throw SolverError("experiment " + n + ": " + e.what());
  } catch (const InvalidArgument &e) {
    throw InvalidArgument("experiment " + n + ": " + e.what());
  }
  res.manifest["experiment"] = n;
  res.manifest["spec"] = experiment_to_json(spec);
  res.manifest["version"] = kVersion;
  res.manifest["solver"] = {{"exact_cell_cap", kExactCellCap},
                            {"sinkhorn_max_iter", kSinkhornMaxIter},
                            {"sinkhorn_tol", kSinkhornTol},
                            {"sinkhorn_reg", "1e-3 * median cost"},
                            {"height_tie_tolerance", kHeightTieTolerance}};
  json files = json::array();
  for (const auto &[stem, t] : res.tables)
    files.push_back(stem + ".csv");
  for (const auto &[stem, t] : res.trees)
    files.push_back(stem + ".json");
  res.manifest["files"] = files;
  return res;
}

void write_bundle(const ExperimentResult &result, const std::string &dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create " + dir + ": " + ec.message());
  auto put = [&](const std::string &name, const std::string &text) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    f << text;
    if (!f)
      throw IoError("cannot write " + (fs::path(dir) / name).string());
  };
  for (const auto &[stem, t] : result.tables)
    put(stem + ".csv", t.csv());
  for (const auto &[stem, j] : result.trees)
    put(stem + ".json", j.dump() + "\n");
  put("manifest.json", result.manifest.dump(2) + "\n");
}

} // namespace bmt

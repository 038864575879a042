// bgq: batch front-end for the collision-series toolkit.
//
// Subcommands: partitions, paths check-identity, gmatrix eval, scatter {tmat,sigma,optical},
// simulate, lattice, verify. Every run writes <out>/manifest.json.
// Exit codes: 0 ok, 2 configuration error, 3 numerical-check failure, 4 resource cap.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bgq/gmatrix.hpp"
#include "bgq/kinetic.hpp"
#include "bgq/lattice_stats.hpp"
#include "bgq/parallel.hpp"
#include "bgq/partitions.hpp"
#include "bgq/paths_borel.hpp"
#include "bgq/scattering.hpp"
#include "checks.hpp"
#include "cli_support.hpp"

namespace fs = std::filesystem;
using namespace bgq;
using namespace bgq::cli;

namespace {

struct Globals {
  std::string config;
  std::string out = "bgq_out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<double> tol;
  std::optional<double> theta_max;
};

struct Context {
  Globals g;
  json config;
  std::uint64_t seed = 1;
  int threads = 1;
  fs::path out;
  RunManifest manifest;
};

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(cjson(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

CMatrix read_cmatrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a square matrix");
  const auto k = static_cast<Eigen::Index>(v.size());
  CMatrix m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    const std::string rw = where + "/" + std::to_string(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != k) throw ConfigError(rw, "row length must equal the row count");
    for (Eigen::Index j = 0; j < k; ++j)
      m(i, j) = ConfigReader::convert<cplx>(row[static_cast<std::size_t>(j)], rw + "/" + std::to_string(j));
  }
  return m;
}

Family parse_family(const std::string& s, const std::string& where) {
  if (s == "ALL") return Family::All;
  if (s == "CIRC") return Family::Circ;
  if (s == "CIRC_NC") return Family::CircNC;
  if (s == "BARO") return Family::Baro;
  if (s == "BARO_NC") return Family::BaroNC;
  throw ConfigError(where, "family must be ALL, CIRC, CIRC_NC, BARO or BARO_NC");
}

MarkedClass parse_marked(const std::string& s, const std::string& where) {
  if (s == "ALL") return MarkedClass::All;
  if (s == "REDUCED") return MarkedClass::Reduced;
  if (s == "REDUCED_DIAG") return MarkedClass::ReducedDiag;
  if (s == "REDUCED_OFF") return MarkedClass::ReducedOff;
  throw ConfigError(where, "marked class must be ALL, REDUCED, REDUCED_DIAG or REDUCED_OFF");
}

json blocks_json(const OrderedPartition& p) {
  json b = json::array();
  for (const auto& blk : p.blocks()) b.push_back(blk);
  return b;
}

json diagram_json(const Diagram& d) {
  json arcs = json::array();
  for (const auto& a : d.arcs) arcs.push_back({{"elements", a.elements}, {"depth", a.depth}});
  return {{"n", d.n}, {"mark", d.mark}, {"arcs", arcs}, {"ticks", d.ticks}};
}

// Global keys accepted at the top level of every config.
void read_globals(ConfigReader& r, Context& ctx) {
  if (r.has("seed") && !ctx.g.seed) ctx.seed = r.get<std::uint64_t>("seed", 1);
  else r.get<std::uint64_t>("seed", 1);
  const int t = r.get<int>("threads", 0);
  if (ctx.g.threads == 0 && t > 0) ctx.threads = t;
  if (!ctx.g.tol && r.has("tol")) ctx.g.tol = r.get<double>("tol", 0.0);
  else r.get<double>("tol", 0.0);
}

// ---------------------------------------------------------------------------

int cmd_partitions(Context& ctx) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  const int n = r.require<int>("n"), k = r.require<int>("k");
  const bool ordered = r.get<bool>("ordered", false);
  const bool with_diagram = r.get<bool>("diagram", false);
  const bool list = r.get<bool>("list", true);
  const auto cap = r.get<std::uint64_t>("cap", kDefaultEnumerationCap);
  const std::string fam_s = r.get<std::string>("family", "ALL");
  const bool marked = r.has("marked");
  const std::string marked_s = r.get<std::string>("marked", "");
  r.finish();
  const Family fam = parse_family(fam_s, "/family");
  if (n < 0 || k < 0 || k > n + 1) throw ConfigError("/k", "need 0 <= k <= n+1");

  std::vector<json> lines;
  if (marked) {
    const auto cls = parse_marked(marked_s, "/marked");
    const auto items = enumerate_marked(n, k, cls, ordered, cap);
    lines.push_back({{"n", n}, {"k", k}, {"marked", marked_s}, {"ordered", ordered}, {"count", items.size()}});
    if (list)
      for (std::size_t i = 0; i < items.size(); ++i) {
        json e{{"index", i}, {"mark", items[i].mark()}, {"blocks", blocks_json(items[i].partition())}, {"str", items[i].str()}};
        if (with_diagram) e["diagram"] = diagram_json(diagram(items[i]));
        lines.push_back(e);
      }
  } else if (ordered) {
    const auto items = enumerate_ordered(n, k, fam, cap);
    lines.push_back({{"n", n}, {"k", k}, {"family", fam_s}, {"ordered", true}, {"count", items.size()}});
    if (list)
      for (std::size_t i = 0; i < items.size(); ++i) {
        json e{{"index", i}, {"blocks", blocks_json(items[i])}, {"str", items[i].str()}};
        if (with_diagram) e["diagram"] = diagram_json(diagram(items[i]));
        lines.push_back(e);
      }
  } else {
    const auto items = enumerate(n, k, fam, cap);
    lines.push_back({{"n", n}, {"k", k}, {"family", fam_s}, {"ordered", false}, {"count", items.size()}});
    if (list)
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto p = items[i].as_ordered();
        json e{{"index", i}, {"blocks", blocks_json(p)}, {"str", p.str('[', ']')}};
        if (with_diagram) e["diagram"] = diagram_json(diagram(p));
        lines.push_back(e);
      }
  }
  std::ofstream f(ctx.out / "partitions.jsonl", std::ios::binary);
  for (const auto& l : lines) f << l.dump() << '\n';
  ctx.manifest.artifacts.push_back("partitions.jsonl");
  std::cout << lines.front().dump() << '\n';
  return kOk;
}

int cmd_paths_identity(Context& ctx) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  const int k = r.require<int>("k"), n = r.require<int>("n");
  const int i1 = r.get<int>("i", 0), j1 = r.get<int>("j", 0);
  const double scale = r.get<double>("scale", 1.0);
  const bool has_w = r.has("W");
  CMatrix W;
  if (has_w) W = read_cmatrix(r.raw("W"), "/W");
  r.finish();
  if (k < 2) throw ConfigError("/k", "need k >= 2");
  if (n < 1) throw ConfigError("/n", "need n >= 1");
  if (i1 < 0 || i1 > k) throw ConfigError("/i", "vertex must lie in 1..k");
  if (j1 < 0 || j1 > k) throw ConfigError("/j", "vertex must lie in 1..k");
  if (!has_w) {
    Rng rng(ctx.seed, 0);
    W = CMatrix::Zero(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b) W(a, b) = std::polar(scale * std::sqrt(rng.uniform()), 2 * pi * rng.uniform());
  } else if (W.rows() != k) {
    throw ConfigError("/W", "matrix size must equal k");
  }
  const double tol = ctx.g.tol.value_or(1e-12);
  WeightedCollisionGraph g(W, std::vector<double>(static_cast<std::size_t>(k), 1.0));
  json cases = json::array();
  double worst = 0;
  for (int i = 1; i <= k; ++i)
    for (int j = 1; j <= k; ++j) {
      if ((i1 && i != i1) || (j1 && j != j1)) continue;
      const double res = path_sum_identity_check(g, n, i - 1, j - 1);
      worst = std::max(worst, res);
      cases.push_back({{"i", i}, {"j", j}, {"residual", res}});
    }
  json out{{"k", k}, {"n", n}, {"W", matrix_json(W)}, {"cases", cases}, {"max_residual", worst}, {"tol", tol}, {"pass", worst <= tol}};
  write_json(ctx.out / "paths_identity.json", out);
  ctx.manifest.artifacts.push_back("paths_identity.json");
  ctx.manifest.checks.push_back({"path_sum_identity", worst <= tol});
  std::cout << out.dump(2) << '\n';
  return worst <= tol ? kOk : kNumericalFailure;
}

json gmatrix_json(const GMatrix& g) {
  return {{"method", to_string(g.method)}, {"entries", matrix_json(g.g)}, {"error_estimate", g.error_estimate},
          {"order", g.order}, {"converged", g.converged}};
}

int cmd_gmatrix_eval(Context& ctx) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  const auto u = r.require<std::vector<double>>("u");
  const CMatrix W = read_cmatrix(r.raw("W"), "/W");
  const std::string method = r.get<std::string>("method", "ALL");
  SeriesOptions so;
  ContourSpec cs;
  if (r.has("series")) {
    auto s = r.child("series");
    so.max_order = s.get<int>("max_order", so.max_order);
    so.rel_tol = s.get<double>("rel_tol", so.rel_tol);
    s.finish();
  }
  if (r.has("contour")) {
    auto c = r.child("contour");
    cs.nodes = c.get<int>("nodes", 0);
    cs.radius = c.get<std::vector<double>>("radius", {});
    c.finish();
  }
  r.finish();
  if (ctx.g.tol) so.rel_tol = *ctx.g.tol;
  cs.threads = ctx.threads;
  if (static_cast<Eigen::Index>(u.size()) != W.rows()) throw ConfigError("/u", "need one time per vertex");
  WeightedCollisionGraph gr(W, u);
  std::vector<GMatrix> results;
  auto want = [&](const char* m) { return method == "ALL" || method == m; };
  if (method != "ALL" && method != "SERIES" && method != "CONTOUR" && method != "BESSEL_K2")
    throw ConfigError("/method", "method must be SERIES, CONTOUR, BESSEL_K2 or ALL");
  if (want("SERIES")) results.push_back(g_series(gr, so));
  if (want("CONTOUR")) results.push_back(g_contour(gr, cs));
  if (want("BESSEL_K2") && (method == "BESSEL_K2" || gr.k() == 2)) results.push_back(g_bessel_k2(gr));
  json out{{"k", gr.k()}, {"u", u}, {"results", json::array()}};
  for (const auto& g : results) out["results"].push_back(gmatrix_json(g));
  bool ok = true;
  for (const auto& g : results) ok = ok && g.converged;
  if (results.size() > 1) {
    double diff = 0;
    for (std::size_t a = 0; a < results.size(); ++a)
      for (std::size_t b = a + 1; b < results.size(); ++b) diff = std::max(diff, (results[a].g - results[b].g).cwiseAbs().maxCoeff());
    out["max_pairwise_difference"] = diff;
  }
  ctx.manifest.checks.push_back({"converged", ok});
  write_json(ctx.out / "gmatrix.json", out);
  ctx.manifest.artifacts.push_back("gmatrix.json");
  std::cout << out.dump(2) << '\n';
  return ok ? kOk : kNumericalFailure;
}

ScatteringModel read_model(ConfigReader& r, const Context& ctx) {
  GaussianPotential pot;
  pot.d = r.get<int>("d", 3);
  if (r.has("potential")) {
    auto p = r.child("potential");
    pot.amplitude = p.get<double>("amplitude", 1.0);
    pot.width = p.get<double>("width", 1.0);
    p.finish();
  }
  ThetaQuadrature q;
  if (r.has("theta")) {
    auto t = r.child("theta");
    q.tol = t.get<double>("tol", q.tol);
    q.theta_max = t.get<double>("theta_max", q.theta_max);
    q.per_decade = t.get<int>("per_decade", q.per_decade);
    t.finish();
  }
  if (ctx.g.tol) q.tol = *ctx.g.tol;
  if (ctx.g.theta_max) q.theta_max = *ctx.g.theta_max;
  const double lam = r.get<double>("lambda", 0.1);
  const int order = r.get<int>("born_order", 1);
  const cplx gamma = r.get<cplx>("gamma", cplx(0.0));
  try {
    return ScatteringModel(pot, lam, order, gamma, q);
  } catch (const InvalidInput& e) {
    throw ConfigError("", e.what());
  }
}

Vec read_vec(ConfigReader& r, const std::string& key, int d) {
  Vec v = r.require<Vec>(key);
  if (static_cast<int>(v.size()) != d) throw ConfigError(r.path(key), "vector length must equal d");
  return v;
}

int cmd_scatter(Context& ctx, const std::string& what) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  const ScatteringModel m = read_model(r, ctx);
  const Vec y = read_vec(r, "y", m.d());
  json out{{"d", m.d()}, {"lambda", m.lambda}, {"born_order", m.born_order}, {"y", y}};
  int rc = kOk;
  if (what == "tmat") {
    const Vec yp = read_vec(r, "yp", m.d());
    const int term = r.get<int>("term", 0);
    r.finish();
    out["yp"] = yp;
    if (term) {
      if (term < 1 || term > 3) throw ConfigError("/term", "term must be 1, 2 or 3");
      out["term"] = term;
      out["T_term"] = cjson(t_term(m, term, y, yp));
    } else {
      out["T"] = cjson(t_born(m, y, yp));
    }
  } else if (what == "sigma") {
    const bool has_omega = r.has("omega");
    Vec omega;
    if (has_omega) omega = read_vec(r, "omega", m.d());
    r.finish();
    out["sigma_tot"] = sigma_tot(m, y);
    if (has_omega) {
      out["omega"] = omega;
      out["sigma"] = sigma_kernel(m, y, omega);
    }
  } else {
    const bool third = r.get<bool>("third_order", false);
    const double limit = r.get<double>("max_relative_residual", 1e-3);
    r.finish();
    const double res = optical_residual(m, y, third);
    const double rel = m.lambda != 0 ? std::abs(res) / (m.lambda * m.lambda) : 0.0;
    out["residual"] = res;
    out["relative_residual"] = rel;
    out["limit"] = limit;
    out["pass"] = rel <= limit;
    ctx.manifest.checks.push_back({"optical_theorem", rel <= limit});
    if (rel > limit) rc = kNumericalFailure;
  }
  const std::string file = "scatter_" + what + ".json";
  write_json(ctx.out / file, out);
  ctx.manifest.artifacts.push_back(file);
  std::cout << out.dump(2) << '\n';
  return rc;
}

PhaseSpaceSymbol read_symbol(ConfigReader r, int d) {
  PhaseSpaceSymbol s;
  s.x0 = r.get<Vec>("x0", Vec(static_cast<std::size_t>(d), 0.0));
  s.y0 = r.get<Vec>("y0", Vec(static_cast<std::size_t>(d), 0.0));
  s.sigma_x = r.get<double>("sigma_x", 1.0);
  s.sigma_y = r.get<double>("sigma_y", 1.0);
  s.amplitude = r.get<double>("amplitude", 1.0);
  r.finish();
  try {
    s.validate(d);
  } catch (const InvalidInput& e) {
    throw ConfigError("", e.what());
  }
  return s;
}

int cmd_simulate(Context& ctx) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  const ScatteringModel m = read_model(r, ctx);
  const std::string series_s = r.get<std::string>("series", "BOTH");
  const PhaseSpaceSymbol a = read_symbol(r.child("a"), m.d());
  const PhaseSpaceSymbol b = read_symbol(r.child("b"), m.d());
  const double t = r.require<double>("t");
  const int k_max = r.get<int>("k_max", 2);
  const auto n = r.get<std::uint64_t>("n_samples", 100000);
  const bool quad = r.get<bool>("compare_quadrature", false);
  r.finish();
  if (series_s != "LB" && series_s != "NEW" && series_s != "BOTH") throw ConfigError("/series", "series must be LB, NEW or BOTH");
  if (!(t > 0)) throw ConfigError("/t", "t must be positive");
  if (k_max < 1 || k_max > 4) throw ConfigError("/k_max", "k_max must lie in 1..4");
  if (n < 2) throw ConfigError("/n_samples", "need at least two samples");
  if (n > 100'000'000) throw CapacityError("n_samples above 1e8");

  std::vector<Series> list;
  if (series_s != "NEW") list.push_back(Series::LB);
  if (series_s != "LB") list.push_back(Series::NEW);
  CsvWriter csv(ctx.out / "simulate_terms.csv", {"series", "k", "chains", "estimate", "std_error", "return_mass", "return_error",
                                                 "mass", "ess_fraction", "quadrature"});
  json summary{{"t", t}, {"k_max", k_max}, {"n_samples", n}, {"seed", ctx.seed}, {"series", json::array()}};
  bool ok = true;
  for (Series s : list) {
    const PairEstimate e = pair_estimate(s, a, b, t, k_max, n, m, {ctx.seed, ctx.threads, GChoice::SeriesFirst});
    double qsum = 0;
    bool have_quad = quad && k_max <= 2;
    for (const auto& term : e.terms) {
      const bool lb = s == Series::LB;
      double qv = std::numeric_limits<double>::quiet_NaN();
      if (have_quad) {
        qv = pair_quadrature(s, term.k, a, b, t, m);
        qsum += qv;
      }
      csv.row_strings({to_string(s), std::to_string(term.k), std::to_string(term.chains), num(lb ? term.lb : term.new_),
                       num(lb ? term.lb_error : term.new_error), num(lb ? 0.0 : term.return_mass), num(lb ? 0.0 : term.return_error),
                       num(lb ? term.mass_lb : term.mass_new), num(lb ? 1.0 : term.ess_fraction), have_quad ? num(qv) : ""});
    }
    json js{{"series", to_string(s)}, {"estimate", e.estimate}, {"std_error", e.std_error}, {"mass", e.mass},
            {"mass_error", e.mass_error}, {"rejection_efficiency", e.acceptance}, {"warnings", e.warnings}};
    if (have_quad) {
      const double z = std::abs(e.estimate - qsum) / e.std_error;
      js["quadrature"] = qsum;
      js["z_score"] = z;
      ctx.manifest.checks.push_back({std::string("mc_vs_quadrature_") + to_string(s), z <= 3});
      ok = ok && z <= 3;
    }
    ctx.manifest.checks.push_back({std::string("finite_") + to_string(s), std::isfinite(e.estimate)});
    ok = ok && std::isfinite(e.estimate);
    for (const auto& w : e.warnings) std::cerr << "warning: " << w << '\n';
    summary["series"].push_back(js);
  }
  write_json(ctx.out / "simulate_summary.json", summary);
  ctx.manifest.artifacts.push_back("simulate_terms.csv");
  ctx.manifest.artifacts.push_back("simulate_summary.json");
  std::cout << summary.dump(2) << '\n';
  return ok ? kOk : kNumericalFailure;
}

int cmd_lattice(Context& ctx) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  LatticeWindow w;
  w.R = r.get<double>("R", w.R);
  w.dR = r.get<double>("dR", w.dR);
  const Vec al = r.get<Vec>("alpha", Vec{w.alpha[0], w.alpha[1]});
  if (al.size() != 2) throw ConfigError("/alpha", "shift must have two components");
  w.alpha = {al[0], al[1]};
  if (r.has("basis")) {
    const json& bj = r.raw("basis");
    if (!bj.is_array() || bj.size() != 2) throw ConfigError("/basis", "expected two basis vectors");
    for (int c = 0; c < 2; ++c) {
      const Vec v = ConfigReader::convert<Vec>(bj[static_cast<std::size_t>(c)], "/basis/" + std::to_string(c));
      if (v.size() != 2) throw ConfigError("/basis/" + std::to_string(c), "basis vectors have two components");
      w.basis(0, c) = v[0];
      w.basis(1, c) = v[1];
    }
  }
  w.max_points = r.get<std::uint64_t>("max_points", w.max_points);
  const int gb = r.get<int>("gap_bins", 10), tb = r.get<int>("theta_bins", 10);
  const double level = r.get<double>("alpha_level", 0.01);
  const double ks_max = r.get<double>("ks_max", 0.02);
  const bool points = r.get<bool>("write_points", true);
  double hg_max = 5.0;
  int hgb = 50, htb = 20;
  if (r.has("histogram")) {
    auto h = r.child("histogram");
    hg_max = h.get<double>("gap_max", hg_max);
    hgb = h.get<int>("gap_bins", hgb);
    htb = h.get<int>("theta_bins", htb);
    h.finish();
  }
  r.finish();
  w.threads = ctx.threads;
  try {
    w.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("", e.what());
  }
  const PointSample s = generate(w);
  const GapSample g = gaps(s);
  const JointReport rep = joint_test(s, gb, tb);
  if (points) {
    CsvWriter pc(ctx.out / "points.csv", {"lambda", "theta"});
    for (std::size_t i = 0; i < s.size(); ++i) pc.row({s.lambda[i], s.theta[i]});
    ctx.manifest.artifacts.push_back("points.csv");
  }
  {
    CsvWriter gc(ctx.out / "gaps.csv", {"gap", "theta"});
    for (std::size_t i = 0; i < g.gap.size(); ++i) gc.row({g.gap[i], g.theta[i]});
    CsvWriter hc(ctx.out / "histogram.csv", {"gap_lo", "gap_hi", "theta_lo", "theta_hi", "density"});
    const auto h = gap_angle_histogram(g, hg_max, hgb, htb);
    for (int i = 0; i < hgb; ++i)
      for (int j = 0; j < htb; ++j)
        hc.row({hg_max * i / hgb, hg_max * (i + 1) / hgb, static_cast<double>(j) / htb, static_cast<double>(j + 1) / htb,
                h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]});
  }
  const double count_ratio = static_cast<double>(s.size()) / w.dR;
  json report{{"points", s.size()},
              {"count_over_dR", count_ratio},
              {"mean_gap", rep.mean_gap},
              {"ks_distance", rep.ks_distance},
              {"ks_p_value", rep.ks_p},
              {"theta_chi2", {{"statistic", rep.theta_uniform.statistic}, {"dof", rep.theta_uniform.dof}, {"p_value", rep.theta_uniform.p_value}}},
              {"independence_chi2",
               {{"statistic", rep.independence.statistic}, {"dof", rep.independence.dof}, {"p_value", rep.independence.p_value}}},
              {"contingency", rep.counts},
              {"warnings", rep.warnings}};
  write_json(ctx.out / "report.json", report);
  for (const char* f : {"gaps.csv", "histogram.csv", "report.json"}) ctx.manifest.artifacts.push_back(f);
  ctx.manifest.checks.push_back({"gap_ks_distance", rep.ks_distance <= ks_max});
  ctx.manifest.checks.push_back({"theta_uniform", rep.theta_uniform.p_value >= level});
  ctx.manifest.checks.push_back({"gap_angle_independent", rep.independence.p_value >= level});
  for (const auto& wn : rep.warnings) std::cerr << "warning: " << wn << '\n';
  json brief = report;
  brief.erase("contingency");
  std::cout << brief.dump(2) << '\n';
  return ctx.manifest.all_pass() ? kOk : kNumericalFailure;
}

int cmd_verify(Context& ctx, bool quick) {
  ConfigReader r(ctx.config, "");
  read_globals(r, ctx);
  r.finish();
  acceptance::CheckOptions o;
  o.quick = quick;
  o.threads = ctx.threads;
  if (ctx.g.seed) o.seed = ctx.seed;
  json rows = json::array();
  std::printf("%-4s %-36s %-6s %9s  %s\n", "id", "check", "result", "seconds", "detail");
  for (const auto& c : acceptance::all_checks()) {
    const auto res = acceptance::run_check(c, o);
    std::printf("%-4d %-36s %-6s %9.2f  %s\n", res.id, res.name.c_str(), res.pass ? "PASS" : "FAIL", res.seconds, res.detail.c_str());
    std::fflush(stdout);
    ctx.manifest.checks.push_back({res.name, res.pass});
    rows.push_back({{"id", res.id}, {"name", res.name}, {"pass", res.pass}, {"seconds", res.seconds}, {"detail", res.detail}});
  }
  write_json(ctx.out / "verify.json", rows);
  ctx.manifest.artifacts.push_back("verify.json");
  int failed = 0;
  for (const auto& c : ctx.manifest.checks) failed += c.second ? 0 : 1;
  std::printf("%d of %zu checks passed\n", static_cast<int>(ctx.manifest.checks.size()) - failed, ctx.manifest.checks.size());
  return failed ? kNumericalFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bgq: collision series, scattering and lattice statistics toolkit"};
  app.set_version_flag("--version", std::string(bgq::kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  double tol = 0, theta_max = 0;
  app.add_option("--config", g.config, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads (default: BGQ_THREADS or 1)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  auto* tol_opt = app.add_option("--tol", tol, "tolerance override");
  auto* theta_opt = app.add_option("--theta-max", theta_max, "theta cutoff for Born-series integrals");

  auto* partitions = app.add_subcommand("partitions", "enumerate (marked) partitions as JSON lines");
  auto* paths = app.add_subcommand("paths", "path sums on complete graphs");
  auto* paths_id = paths->add_subcommand("check-identity", "brute-force path sums vs matrix powers");
  paths->require_subcommand(1);
  auto* gm = app.add_subcommand("gmatrix", "G-matrix evaluation");
  auto* gm_eval = gm->add_subcommand("eval", "evaluate G by series, contour and closed form");
  gm->require_subcommand(1);
  auto* scatter = app.add_subcommand("scatter", "T-matrix, cross sections and optical theorem");
  auto* sc_t = scatter->add_subcommand("tmat", "T(y, y')");
  auto* sc_s = scatter->add_subcommand("sigma", "collision kernel and total cross section");
  auto* sc_o = scatter->add_subcommand("optical", "optical-theorem residual");
  scatter->require_subcommand(1);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo pairing of the collision series");
  auto* lattice = app.add_subcommand("lattice", "shifted-lattice gap and angle statistics");
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  bool quick = false;
  verify->add_flag("--quick", quick, "reduced Monte Carlo budgets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }
  if (*seed_opt) g.seed = seed;
  if (*tol_opt) g.tol = tol;
  if (*theta_opt) g.theta_max = theta_max;

  Context ctx;
  ctx.g = g;
  ctx.seed = g.seed.value_or(1);
  ctx.threads = resolve_threads(g.threads);
  std::string name;
  const auto t0 = std::chrono::steady_clock::now();
  int rc = kOk;
  try {
    ctx.config = load_config(g.config);
    if (!ctx.config.is_object()) throw ConfigError("", "configuration must be a JSON object");
    ctx.out = g.out;
    fs::create_directories(ctx.out);
    if (*partitions) name = "partitions", rc = cmd_partitions(ctx);
    else if (*paths_id) name = "paths check-identity", rc = cmd_paths_identity(ctx);
    else if (*gm_eval) name = "gmatrix eval", rc = cmd_gmatrix_eval(ctx);
    else if (*sc_t) name = "scatter tmat", rc = cmd_scatter(ctx, "tmat");
    else if (*sc_s) name = "scatter sigma", rc = cmd_scatter(ctx, "sigma");
    else if (*sc_o) name = "scatter optical", rc = cmd_scatter(ctx, "optical");
    else if (*simulate) name = "simulate", rc = cmd_simulate(ctx);
    else if (*lattice) name = "lattice", rc = cmd_lattice(ctx);
    else if (*verify) name = "verify", rc = cmd_verify(ctx, quick);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const CapacityError& e) {
    std::cerr << e.what() << '\n';
    rc = kResourceCap;
  } catch (const bgq::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    rc = kNumericalFailure;
  } catch (const std::bad_alloc&) {
    std::cerr << "capacity: out of memory\n";
    rc = kResourceCap;
  }
  ctx.manifest.command = name;
  json hashed{{"command", name}, {"config", ctx.config}, {"seed", ctx.seed}};
  if (g.tol) hashed["tol"] = *g.tol;
  if (g.theta_max) hashed["theta_max"] = *g.theta_max;
  ctx.manifest.config_hash = hex64(fnv1a(hashed.dump()));
  ctx.manifest.seed = ctx.seed;
  ctx.manifest.threads = ctx.threads;
  ctx.manifest.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (rc != kOk && rc != kNumericalFailure) ctx.manifest.checks.push_back({"completed", false});
  try {
    if (!ctx.out.empty()) write_json(ctx.out / "manifest.json", ctx.manifest.to_json());
  } catch (const bgq::Error& e) {
    std::cerr << e.what() << '\n';
  }
  return rc;
}

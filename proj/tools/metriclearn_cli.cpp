// Command-line front end: gen-data | fit | recover | check | experiment.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "metriclearn/metriclearn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metriclearn;

namespace {

std::uint64_t effective_seed(std::uint64_t cli_seed) {
  if (const char* env = std::getenv("METRICLEARN_SEED")) return std::stoull(env);
  return cli_seed;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = j.at(0).size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j.at(r).at(c).get<double>();
  return m;
}

int cmd_gen_data(const std::string& out_dir, int n, int p, int d, const std::string& kind,
                 std::int64_t samples, double link_scale, std::uint64_t seed,
                 bool noiseless) {
  fs::create_directories(out_dir);
  RngStream truth_rng(seed, 0, "gen-truth-" + kind);
  const GroundTruth truth = kind == "sparse" ? make_sparse_lowrank(p, d, truth_rng)
                                             : make_dense_lowrank(p, d, truth_rng);
  RngStream point_rng(seed, 0, "gen-points");
  const PointSet x = sample_isotropic_points(n, p, point_rng);
  RngStream trip_rng(seed, 0, "gen-triplets");
  const auto triplets = draw_triplets(n, samples, trip_rng);
  const LinkFunction link{link_scale};
  std::vector<LabeledTriplet> labeled;
  if (noiseless) {
    labeled = draw_labels_noiseless(x, truth.kstar, triplets);
  } else {
    RngStream label_rng(seed, 0, "gen-labels");
    labeled = draw_labels(x, truth.kstar, link, triplets, label_rng);
  }

  write_matrix_csv(out_dir + "/points.csv", x.data);
  write_matrix_csv(out_dir + "/kstar.csv", truth.kstar);
  write_triplets_csv(out_dir + "/triplets.csv", labeled);
  json manifest = {{"n", n},           {"p", p},
                   {"d", d},           {"kind", kind},
                   {"seed", seed},     {"samples", samples},
                   {"link", {{"kind", "logistic"}, {"scale", link_scale}}},
                   {"noiseless", noiseless}};
  std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote points.csv, kstar.csv, triplets.csv, manifest.json to " << out_dir
            << '\n';
  return 0;
}

int cmd_fit(const std::string& triplets_path, const std::string& points_path,
            const std::string& constraint, double lambda, const std::string& loss_name,
            int max_iters, double tol, std::uint64_t seed, const std::string& out_path) {
  const auto samples = read_triplets_csv(triplets_path);
  const PointSet x(read_matrix_csv(points_path));

  ConstraintSpec cons = ConstraintSpec::PsdOnly();
  if (constraint == "nuclear") cons = ConstraintSpec::NuclearBall(lambda);
  else if (constraint == "l12") cons = ConstraintSpec::L12Ball(lambda);
  else if (constraint != "psd") throw std::invalid_argument("unknown constraint: " + constraint);

  LossFunction loss;
  if (loss_name == "logistic") loss = {LossKind::LogisticLog, 1.0};
  else if (loss_name == "hinge") loss = {LossKind::Hinge, 1.0};
  else throw std::invalid_argument("unknown loss: " + loss_name);

  FitOptions opts;
  opts.max_iters = max_iters;
  opts.tol = tol;
  opts.seed = effective_seed(seed);
  const FitReport report = fit_erm(samples, x, cons, loss, opts);

  json out = {{"p", x.p()},
              {"khat", matrix_to_json(report.khat)},
              {"objective_trace", report.objective_trace},
              {"iterations", report.iterations},
              {"converged", report.converged},
              {"diagnostics",
               {{"min_eigenvalue", report.min_eigenvalue},
                {"norm_value", report.norm_value},
                {"norm_slack", report.norm_slack},
                {"max_margin", report.max_margin},
                {"pg_mapping_norm", report.pg_mapping_norm},
                {"gamma_exceeded", report.gamma_exceeded}}}};
  std::ofstream(out_path) << out.dump(2) << '\n';
  std::cout << "fit: " << report.iterations << " iterations, objective "
            << report.objective_trace.back() << ", wrote " << out_path << '\n';
  return 0;
}

int cmd_recover(const std::string& gram_path, const std::string& khat_path,
                const std::string& points_path, int dim, const std::string& out_path) {
  Matrix g;
  PointSet x;
  bool have_points = !points_path.empty();
  if (!gram_path.empty()) {
    g = read_matrix_csv(gram_path);
  } else {
    json j;
    std::ifstream(khat_path) >> j;
    const Matrix khat = matrix_from_json(j.at("khat"));
    if (!have_points)
      throw std::invalid_argument("recover: --khat requires --points to form the Gram matrix");
    x = PointSet(read_matrix_csv(points_path));
    x = center_points(x);
    g = gram_of(x, khat);
  }
  if (have_points && gram_path.empty()) {
    // already centered above
  } else if (have_points) {
    x = center_points(PointSet(read_matrix_csv(points_path)));
  }
  // center G (no impact on triplet differences)
  const Matrix v = centering_matrix(g.rows());
  g = v * g * v;
  g = 0.5 * (g + g.transpose());

  const auto dec = decompose_gram(g);
  const auto sig = identify_sigma(dec.h);
  const Matrix g_rec = reconstruct_gram(dec.h, sig.sigma);

  json out = {{"sigma", sig.sigma},
              {"multiplicity", sig.multiplicity},
              {"eigengap", sig.eigengap},
              {"centering_residual", centering_residual(g_rec)}};
  if (have_points) {
    const Matrix k = recover_metric(g_rec, x);
    out["K"] = matrix_to_json(k);
    out["epsilon_rank"] = numerical_rank(k);
  } else {
    const Matrix z = embed_from_gram(g_rec, dim);
    out["Z"] = matrix_to_json(z);
  }
  std::ofstream(out_path) << out.dump(2) << '\n';
  std::cout << "recover: sigma " << sig.sigma << " multiplicity " << sig.multiplicity
            << ", wrote " << out_path << '\n';
  return 0;
}

int cmd_check(std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto reports = run_check_registry(effective_seed(seed));
  write_checks_csv(out_dir + "/checks.csv", reports);
  json j = json::array();
  bool all_ok = true;
  for (const auto& r : reports) {
    j.push_back({{"name", r.name},
                 {"lhs", r.lhs},
                 {"rhs", r.rhs},
                 {"satisfied", r.satisfied},
                 {"margin", r.margin}});
    std::cout << (r.satisfied ? "[ok]   " : "[FAIL] ") << r.name << '\n';
    all_ok = all_ok && r.satisfied;
  }
  std::ofstream(out_dir + "/checks.json") << j.dump(2) << '\n';
  return all_ok ? 0 : 1;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("experiment", cfg.experiment);
  get("n", cfg.n);
  get("p", cfg.p);
  get("d", cfg.d);
  get("d_list", cfg.d_list);
  get("p_list", cfg.p_list);
  get("kinds", cfg.kinds);
  get("link_scale", cfg.link_scale);
  get("methods", cfg.methods);
  get("lambda_auto", cfg.lambda_auto);
  get("lambda_explicit", cfg.lambda_explicit);
  get("sample_grid", cfg.sample_grid);
  get("target_excess", cfg.target_excess);
  get("search_start", cfg.search_start);
  get("sample_cap", cfg.sample_cap);
  get("trials", cfg.trials);
  get("master_seed", cfg.master_seed);
  get("risk_eval", cfg.risk_eval);
  get("mc_eval_size", cfg.mc_eval_size);
  get("jobs", cfg.jobs);
  get("out_dir", cfg.out_dir);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    if (o.contains("max_iters")) cfg.fit.max_iters = o.at("max_iters").get<int>();
    if (o.contains("tol")) cfg.fit.tol = o.at("tol").get<double>();
    if (o.contains("dykstra_iters")) cfg.fit.dykstra_iters = o.at("dykstra_iters").get<int>();
    if (o.contains("dykstra_tol")) cfg.fit.dykstra_tol = o.at("dykstra_tol").get<double>();
  }
  return cfg;
}

void write_fig2_outputs(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  fs::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/results.csv");
  csv << result_csv_header() << '\n';
  for (const auto& r : rows) csv << to_csv(r) << '\n';

  // per-(kind-proxy, method, samples) means
  struct Cell {
    double sum = 0, sumsq = 0;
    int count = 0;
  };
  std::map<std::string, Cell> cells;
  std::map<std::string, std::map<std::string, std::map<std::int64_t, Cell>>> grid;
  std::size_t idx = 0;
  // kinds alternate by task order: recover kind from row ordering
  std::vector<std::string> row_kinds(rows.size());
  {
    std::size_t i = 0;
    for (const auto& kind : cfg.kinds)
      for (int trial = 0; trial < cfg.trials; ++trial)
        for (std::size_t s = 0; s < cfg.sample_grid.size(); ++s)
          for (std::size_t m = 0; m < cfg.methods.size(); ++m)
            if (i < rows.size()) row_kinds[i++] = kind;
  }
  for (const auto& r : rows) {
    const std::string kind = row_kinds[idx++];
    auto& c = grid[kind][r.method][r.samples];
    c.sum += r.relative_excess_risk;
    c.sumsq += r.relative_excess_risk * r.relative_excess_risk;
    ++c.count;
  }
  json summary;
  for (const auto& [kind, methods] : grid) {
    std::vector<ChartSeries> series;
    for (const auto& [method, samples] : methods) {
      ChartSeries s;
      s.name = method;
      for (const auto& [count, cell] : samples) {
        const double mean = cell.sum / cell.count;
        const double var =
            cell.count > 1 ? std::max(0.0, (cell.sumsq - cell.sum * cell.sum / cell.count) /
                                               (cell.count - 1))
                           : 0.0;
        summary[kind][method][std::to_string(count)] = {
            {"mean_relative_excess_risk", mean},
            {"stderr", std::sqrt(var / cell.count)},
            {"trials", cell.count}};
        s.x.push_back(static_cast<double>(count));
        s.y.push_back(mean);
      }
      series.push_back(std::move(s));
    }
    write_svg_chart(cfg.out_dir + "/fig2_" + kind + ".svg",
                    "relative excess risk, " + kind + " truth", "samples",
                    "relative excess risk", series);
  }
  std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << '\n';
}

void write_fig3_outputs(const ExperimentConfig& cfg, const std::vector<Fig3Row>& rows) {
  fs::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/results.csv");
  csv << fig3_csv_header() << '\n';
  for (const auto& r : rows) csv << to_csv(r) << '\n';
  json summary = json::array();
  ChartSeries s;
  s.name = "samples needed";
  for (const auto& r : rows) {
    summary.push_back({{"sweep_var", r.sweep_var},
                       {"value", r.value},
                       {"samples_needed", r.samples_needed},
                       {"censored", r.censored},
                       {"mean_excess", r.mean_excess}});
    s.x.push_back(r.value);
    s.y.push_back(static_cast<double>(r.samples_needed));
  }
  std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << '\n';
  write_svg_chart(cfg.out_dir + "/fig3.svg",
                  "samples to reach relative excess risk < " +
                      format_double(cfg.target_excess, "%.3g"),
                  rows.empty() ? "value" : rows.front().sweep_var, "samples needed", {s});
}

int cmd_experiment(const std::string& config_path, bool full_scale, int jobs,
                   const std::string& out_dir) {
  ExperimentConfig cfg;
  if (!config_path.empty()) {
    json j;
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config: " + config_path);
    in >> j;
    cfg = config_from_json(j);
  }
  if (full_scale) cfg.apply_full_scale();
  if (jobs > 0) cfg.jobs = jobs;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.master_seed = effective_seed(cfg.master_seed);

  if (cfg.experiment == "fig2" || cfg.experiment == "custom") {
    write_fig2_outputs(cfg, run_fig2(cfg));
  } else if (cfg.experiment == "fig3-d-sweep" || cfg.experiment == "fig3-p-sweep") {
    write_fig3_outputs(cfg, run_fig3(cfg));
  } else {
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);
  }
  std::cout << "experiment " << cfg.experiment << " written to " << cfg.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-dimensional metric learning from triplet comparisons"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic instance");
  std::string gen_out = "data";
  int gen_n = 100, gen_p = 30, gen_d = 5;
  std::string gen_kind = "dense";
  std::int64_t gen_samples = 10000;
  double gen_scale = 1.0;
  std::uint64_t gen_seed = 1234;
  bool gen_noiseless = false;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--n", gen_n, "number of items");
  gen->add_option("--p", gen_p, "feature dimension");
  gen->add_option("--d", gen_d, "intrinsic rank");
  gen->add_option("--kind", gen_kind, "dense | sparse");
  gen->add_option("--samples", gen_samples, "number of labeled triplets");
  gen->add_option("--link-scale", gen_scale, "logistic link scale");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_flag("--noiseless", gen_noiseless, "deterministic labels (step link)");

  // fit
  auto* fit = app.add_subcommand("fit", "constrained empirical risk minimization");
  std::string fit_triplets, fit_points, fit_constraint = "nuclear", fit_loss = "logistic",
              fit_out = "fit.json";
  double fit_lambda = 1.0, fit_tol = 1e-6;
  int fit_iters = 500;
  std::uint64_t fit_seed = 0;
  fit->add_option("--triplets", fit_triplets, "triplet CSV")->required();
  fit->add_option("--points", fit_points, "points CSV (p rows x n cols)")->required();
  fit->add_option("--constraint", fit_constraint, "psd | nuclear | l12");
  fit->add_option("--lambda", fit_lambda, "norm-ball radius");
  fit->add_option("--loss", fit_loss, "logistic | hinge");
  fit->add_option("--max-iters", fit_iters, "iteration cap");
  fit->add_option("--tol", fit_tol, "relative objective-change tolerance");
  fit->add_option("--seed", fit_seed, "rng seed");
  fit->add_option("--out", fit_out, "output JSON path");

  // recover
  auto* rec = app.add_subcommand("recover", "sigma identification and metric recovery");
  std::string rec_gram, rec_khat, rec_points, rec_out = "recover.json";
  int rec_dim = 2;
  rec->add_option("--gram", rec_gram, "Gram matrix CSV");
  rec->add_option("--khat", rec_khat, "fit output JSON containing khat");
  rec->add_option("--points", rec_points, "points CSV");
  rec->add_option("--dim", rec_dim, "embedding dimension");
  rec->add_option("--out", rec_out, "output JSON path");

  // check
  auto* chk = app.add_subcommand("check", "run the full audit registry");
  std::uint64_t chk_seed = 1234;
  std::string chk_out = ".";
  chk->add_option("--seed", chk_seed, "rng seed");
  chk->add_option("--out", chk_out, "output directory");

  // experiment
  auto* exp = app.add_subcommand("experiment", "seeded experiment runner");
  std::string exp_config, exp_out;
  bool exp_full = false;
  int exp_jobs = 0;
  exp->add_option("--config", exp_config, "config JSON");
  exp->add_flag("--full-scale", exp_full, "restore full-scale experiment sizes");
  exp->add_option("--jobs", exp_jobs, "concurrent trials");
  exp->add_option("--out", exp_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed())
      return cmd_gen_data(gen_out, gen_n, gen_p, gen_d, gen_kind, gen_samples, gen_scale,
                          effective_seed(gen_seed), gen_noiseless);
    if (fit->parsed())
      return cmd_fit(fit_triplets, fit_points, fit_constraint, fit_lambda, fit_loss,
                     fit_iters, fit_tol, fit_seed, fit_out);
    if (rec->parsed()) {
      if (rec_gram.empty() && rec_khat.empty())
        throw std::invalid_argument("recover: need --gram or --khat");
      return cmd_recover(rec_gram, rec_khat, rec_points, rec_dim, rec_out);
    }
    if (chk->parsed()) return cmd_check(chk_seed, chk_out);
    if (exp->parsed()) return cmd_experiment(exp_config, exp_full, exp_jobs, exp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

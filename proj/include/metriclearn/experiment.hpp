#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "metriclearn/io.hpp"
#include "metriclearn/model.hpp"
#include "metriclearn/optim.hpp"
#include "metriclearn/recover.hpp"
#include "metriclearn/rng.hpp"
#include "metriclearn/synth.hpp"
#include "metriclearn/theory.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

struct ExperimentConfig {
  std::string experiment = "fig2";  // fig2 | fig3-d-sweep | fig3-p-sweep | custom
  int n = 100;
  int p = 30;
  int d = 5;
  std::vector<int> d_list = {1, 2, 4, 6, 8};   // fig3-d-sweep
  std::vector<int> p_list = {10, 20, 30, 40};  // fig3-p-sweep
  std::vector<std::string> kinds = {"sparse", "dense"};
  double link_scale = 1.0;
  std::vector<std::string> methods = {"l12", "nuclear", "psd"};
  bool lambda_auto = true;  // lambda = p sqrt(d); otherwise lambda_explicit
  double lambda_explicit = 0.0;
  std::vector<std::int64_t> sample_grid = {1000, 2000, 4000, 8000, 16000};
  double target_excess = 0.1;
  std::int64_t search_start = 500;
  std::int64_t sample_cap = 1 << 20;
  int trials = 10;
  std::uint64_t master_seed = 1234;
  std::string risk_eval = "auto";  // auto | full | mc
  std::int64_t mc_eval_size = 200000;
  FitOptions fit;
  int jobs = 1;
  std::string out_dir = ".";

  // Restores the full-scale experimental design (slow).
  void apply_full_scale() {
    n = 200;
    p = 100;
    d = 10;
    trials = 20;
    d_list = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    p_list = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    sample_grid = {2000, 4000, 8000, 16000, 32000, 64000};
  }
};

struct ResultRow {
  std::string experiment;
  int trial = 0;
  std::uint64_t seed = 0;
  int n = 0, p = 0, d = 0;
  std::string method;
  double lambda = 0.0;
  std::int64_t samples = 0;
  double empirical_risk = 0.0;
  double true_risk_value = 0.0;
  double risk_kstar = 0.0;
  double relative_excess_risk = 0.0;
  double relative_recovery_error = 0.0;
  int iterations = 0;
  double wall_time_ms = 0.0;
};

inline const char* result_csv_header() {
  return "experiment,trial,seed,n,p,d,method,lambda,samples,empirical_risk,"
         "true_risk,risk_kstar,relative_excess_risk,relative_recovery_error,"
         "iterations,wall_time_ms";
}

inline std::string to_csv(const ResultRow& r) {
  std::ostringstream s;
  s << r.experiment << ',' << r.trial << ',' << r.seed << ',' << r.n << ',' << r.p << ','
    << r.d << ',' << r.method << ',' << format_double(r.lambda, "%.10g") << ','
    << r.samples << ',' << format_double(r.empirical_risk, "%.10g") << ','
    << format_double(r.true_risk_value, "%.10g") << ','
    << format_double(r.risk_kstar, "%.10g") << ','
    << format_double(r.relative_excess_risk, "%.10g") << ','
    << format_double(r.relative_recovery_error, "%.10g") << ',' << r.iterations << ','
    << format_double(r.wall_time_ms, "%.3f");
  return s.str();
}

namespace detail {

inline ConstraintSpec method_constraint(const std::string& method, int p, int d,
                                        const ExperimentConfig& cfg) {
  const double lambda = cfg.lambda_auto
                            ? static_cast<double>(p) * std::sqrt(static_cast<double>(d))
                            : cfg.lambda_explicit;
  if (method == "nuclear") return ConstraintSpec::NuclearBall(lambda);
  if (method == "l12") return ConstraintSpec::L12Ball(lambda);
  if (method == "psd") return ConstraintSpec::PsdOnly();
  throw std::invalid_argument("unknown method: " + method);
}

inline EvalSet trial_eval_set(const ExperimentConfig& cfg, int n, std::uint64_t trial_seed) {
  if (cfg.risk_eval == "full" || (cfg.risk_eval == "auto" && n <= 60))
    return EvalSet::Full();
  return EvalSet::MonteCarlo(cfg.mc_eval_size, trial_seed);
}

inline GroundTruth make_truth(const std::string& kind, int p, int d, RngStream& rng) {
  if (kind == "sparse") return make_sparse_lowrank(p, d, rng);
  if (kind == "dense") return make_dense_lowrank(p, d, rng);
  throw std::invalid_argument("unknown truth kind: " + kind);
}

// Run tasks (index -> rows) on up to `jobs` threads; results are merged in
// task order, so the output is independent of scheduling.
inline std::vector<ResultRow> parallel_rows(
    int jobs, const std::vector<std::function<std::vector<ResultRow>()>>& tasks) {
  std::vector<std::vector<ResultRow>> slots(tasks.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) slots[i] = tasks[i]();
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        slots[i] = tasks[i]();
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<ResultRow> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace detail

// One fitted cell: generate data, fit, evaluate both reported metrics.
inline ResultRow run_cell(const ExperimentConfig& cfg, const std::string& kind,
                          const std::string& method, int n, int p, int d,
                          std::int64_t samples, int trial, const std::string& stream_tag) {
  const auto t0 = std::chrono::steady_clock::now();
  const LinkFunction link{cfg.link_scale};
  const LossFunction loss{LossKind::LogisticLog, cfg.link_scale};

  RngStream truth_rng(cfg.master_seed, static_cast<std::uint64_t>(trial),
                      stream_tag + "-truth-" + kind);
  const GroundTruth truth = detail::make_truth(kind, p, d, truth_rng);
  RngStream point_rng(cfg.master_seed, static_cast<std::uint64_t>(trial),
                      stream_tag + "-points");
  const PointSet x = sample_isotropic_points(n, p, point_rng);

  RngStream trip_rng(cfg.master_seed, static_cast<std::uint64_t>(trial),
                     stream_tag + "-triplets-" + std::to_string(samples));
  const auto triplets = draw_triplets(n, samples, trip_rng);
  RngStream label_rng(cfg.master_seed, static_cast<std::uint64_t>(trial),
                      stream_tag + "-labels-" + std::to_string(samples));
  const auto labeled = draw_labels(x, truth.kstar, link, triplets, label_rng);

  const ConstraintSpec cons = detail::method_constraint(method, p, d, cfg);
  const FitReport fit = fit_erm(labeled, x, cons, loss, cfg.fit);

  const std::uint64_t eval_seed =
      detail::splitmix64(cfg.master_seed ^ detail::fnv1a(stream_tag)) +
      static_cast<std::uint64_t>(trial);
  const EvalSet eval = detail::trial_eval_set(cfg, n, eval_seed);
  const double rk = true_risk(fit.khat, truth.kstar, x, link, loss, eval).value;
  const double rstar = true_risk(truth.kstar, truth.kstar, x, link, loss, eval).value;

  ResultRow row;
  row.experiment = cfg.experiment;
  row.trial = trial;
  row.seed = cfg.master_seed;
  row.n = n;
  row.p = p;
  row.d = d;
  row.method = method;
  row.lambda = cons.kind == ConstraintKind::Psd ? 0.0 : cons.lambda;
  row.samples = samples;
  row.empirical_risk = empirical_risk(fit.khat, x, labeled, loss).value;
  row.true_risk_value = rk;
  row.risk_kstar = rstar;
  row.relative_excess_risk = (rk - rstar) / rstar;
  const auto err = recovery_error(fit.khat, truth.kstar);
  row.relative_recovery_error = err.relative.value_or(0.0);
  row.iterations = fit.iterations;
  row.wall_time_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  return row;
}

// Fig-2 style comparison: truth kind x method x sample grid x trial.
inline std::vector<ResultRow> run_fig2(const ExperimentConfig& cfg) {
  std::vector<std::function<std::vector<ResultRow>()>> tasks;
  for (const auto& kind : cfg.kinds)
    for (int trial = 0; trial < cfg.trials; ++trial)
      tasks.push_back([&cfg, kind, trial] {
        std::vector<ResultRow> rows;
        for (std::int64_t s : cfg.sample_grid)
          for (const auto& method : cfg.methods)
            rows.push_back(run_cell(cfg, kind, method, cfg.n, cfg.p, cfg.d, s, trial,
                                    "fig2"));
        return rows;
      });
  return detail::parallel_rows(cfg.jobs, tasks);
}

struct Fig3Row {
  std::string sweep_var;
  int value = 0;
  std::int64_t samples_needed = 0;
  bool censored = false;
  double mean_excess = 0.0;
  int trials = 0;
};

inline std::string to_csv(const Fig3Row& r) {
  std::ostringstream s;
  s << r.sweep_var << ',' << r.value << ',' << r.samples_needed << ','
    << (r.censored ? 1 : 0) << ',' << format_double(r.mean_excess, "%.10g") << ','
    << r.trials;
  return s.str();
}

inline const char* fig3_csv_header() {
  return "sweep_var,value,samples_needed,censored,mean_excess,trials";
}

// Minimal |S| reaching mean relative excess risk below the target:
// doubling from search_start, then bisection to a 5% relative bracket.
inline Fig3Row fig3_search(const ExperimentConfig& cfg, const std::string& sweep_var,
                           int value) {
  const int p = sweep_var == "p" ? value : cfg.p;
  const int d = sweep_var == "d" ? value : cfg.d;
  const std::string tag = "fig3-" + sweep_var + std::to_string(value);

  auto mean_excess = [&](std::int64_t samples) {
    double sum = 0.0;
    for (int trial = 0; trial < cfg.trials; ++trial)
      sum += run_cell(cfg, "dense", "nuclear", cfg.n, p, d, samples, trial, tag)
                 .relative_excess_risk;
    return sum / cfg.trials;
  };

  Fig3Row row;
  row.sweep_var = sweep_var;
  row.value = value;
  row.trials = cfg.trials;

  std::int64_t hi = cfg.search_start;
  double excess = mean_excess(hi);
  while (excess >= cfg.target_excess && hi < cfg.sample_cap) {
    hi *= 2;
    excess = mean_excess(hi);
  }
  if (excess >= cfg.target_excess) {
    row.samples_needed = hi;
    row.censored = true;
    row.mean_excess = excess;
    return row;
  }
  std::int64_t lo = hi == cfg.search_start ? hi / 2 : hi / 2;
  double hi_excess = excess;
  while (hi - lo > std::max<std::int64_t>(1, static_cast<std::int64_t>(0.05 * hi))) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    const double e = mean_excess(mid);
    if (e < cfg.target_excess) {
      hi = mid;
      hi_excess = e;
    } else {
      lo = mid;
    }
  }
  row.samples_needed = hi;
  row.mean_excess = hi_excess;
  return row;
}

inline std::vector<Fig3Row> run_fig3(const ExperimentConfig& cfg) {
  const bool d_sweep = cfg.experiment != "fig3-p-sweep";
  const auto& values = d_sweep ? cfg.d_list : cfg.p_list;
  const std::string var = d_sweep ? "d" : "p";
  std::vector<Fig3Row> slots(values.size());
  // sweep points are independent
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < values.size(); ++i)
    tasks.push_back([&, i] { slots[i] = fig3_search(cfg, var, values[i]); });
  if (cfg.jobs <= 1) {
    for (auto& t : tasks) t();
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        tasks[i]();
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return slots;
}

inline double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

// ---- static SVG line chart ----

struct ChartSeries {
  std::string name;
  std::vector<double> x, y;
};

inline void write_svg_chart(const std::string& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<ChartSeries>& series) {
  const int width = 640, height = 420, margin = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double v) {
    return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  auto py = [&](double v) {
    return height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  out << "<text x=\"18\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
      << height / 2 << ")\">" << ylabel << "</text>\n";
  out << "<text x=\"" << margin << "\" y=\"" << height - margin + 16
      << "\" font-size=\"10\">" << format_double(xmin, "%.4g") << "</text>\n";
  out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
      << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(xmax, "%.4g")
      << "</text>\n";
  out << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin
      << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(ymin, "%.4g")
      << "</text>\n";
  out << "<text x=\"" << margin - 6 << "\" y=\"" << margin
      << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(ymax, "%.4g")
      << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << format_double(px(s.x[i]), "%.1f") << ',' << format_double(py(s.y[i]), "%.1f")
          << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << width - margin + 4 << "\" y=\"" << margin + 16 * (si + 1)
        << "\" font-size=\"11\" fill=\"" << color << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
}

// ---- audit registry ----

struct FaultInjection {
  double kl_perturb = 0.0;  // test-only hook; shifts the KL lower-bound lhs
};

// Every numeric inequality from the analysis, evaluated on a seeded suite.
inline std::vector<CheckReport> run_check_registry(std::uint64_t seed,
                                                   const FaultInjection& fault = {}) {
  std::vector<CheckReport> reports;
  RngStream rng(seed, 0, "check-registry");

  // KL sandwich over the grid z, y in {0.05, ..., 0.95}
  {
    double worst_lower = 1e300, worst_upper = 1e300;
    for (int zi = 1; zi <= 19; ++zi)
      for (int yi = 1; yi <= 19; ++yi) {
        const auto s = kl_square_bounds(0.05 * zi, 0.05 * yi);
        worst_lower = std::min(worst_lower, s.lower.margin);
        worst_upper = std::min(worst_upper, s.upper.margin);
      }
    reports.push_back(CheckReport::make("kl-sandwich-lower-grid",
                                        fault.kl_perturb - worst_lower, 0.0));
    reports.push_back(CheckReport::make("kl-sandwich-upper-grid", -worst_upper, 0.0));
  }

  // second-moment bound: ordinal X = I_6 plus random isotropic draws
  {
    auto rep = second_moment_check(PointSet(Matrix::Identity(6, 6)));
    rep.name = "second-moment-identity-n6";
    reports.push_back(rep);
    double worst = 1e300;
    for (int trial = 0; trial < 10; ++trial) {
      RngStream r2(seed, static_cast<std::uint64_t>(trial), "check-second-moment");
      const auto x = sample_isotropic_points(12, 5, r2);
      worst = std::min(worst, second_moment_check(x).margin);
    }
    reports.push_back(CheckReport::make("second-moment-isotropic", -worst, 0.0));
  }

  // ||K||_* <= ||K||_{1,2} on random PSD draws
  {
    double worst = 1e300;
    for (int trial = 0; trial < 25; ++trial) {
      Matrix a(5, 5);
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) a(r, c) = rng.gaussian();
      const Matrix k = a * a.transpose();
      worst = std::min(worst, l12_dominates_nuclear_check(k).margin);
    }
    reports.push_back(CheckReport::make("l12-dominates-nuclear", -worst, 0.0));
  }

  // risk-to-operator lower bound on random perturbed instances
  {
    double worst = 1e300;
    const LinkFunction link{1.0};
    for (int trial = 0; trial < 5; ++trial) {
      RngStream r2(seed, static_cast<std::uint64_t>(trial), "check-risk-to-m");
      const auto x = sample_isotropic_points(8, 3, r2);
      Matrix a(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = r2.gaussian();
      const Matrix kstar = a * a.transpose();
      Matrix e(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) e(r, c) = r2.gaussian();
      const Matrix k = kstar + 0.1 * (e + e.transpose());
      worst = std::min(worst, risk_to_m_check(k, kstar, x, link).margin);
    }
    reports.push_back(CheckReport::make("risk-to-m-lower-bound", -worst, 0.0));
  }

  // kernel of L on centered symmetric matrices is exactly span{V}
  {
    const auto ns = null_space_check(6);
    reports.push_back(CheckReport::make(
        "null-space-nullity-one", std::abs(static_cast<double>(ns.nullity) - 1.0), 0.5));
    reports.push_back(
        CheckReport::make("null-space-kernel-is-v", 1.0 - ns.cosine_with_v, 1e-8));
  }

  // restricted lower isometry ||L(H)||^2 >= n ||H||_F^2 on random Grams
  {
    double worst = 1e300;
    for (int trial = 0; trial < 10; ++trial) {
      RngStream r2(seed, static_cast<std::uint64_t>(trial), "check-isometry");
      const int n = 8;
      Matrix z(3, n);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < n; ++c) z(r, c) = r2.gaussian();
      z.colwise() -= z.rowwise().mean();
      const Matrix g = z.transpose() * z;
      const auto dec = decompose_gram(g);
      double lsq = 0.0;
      for (const Triplet& t : TripletRange(n)) {
        const double v = l_value(dec.h, t);
        lsq += v * v;
      }
      worst = std::min(worst, lsq - n * dec.h.squaredNorm());
    }
    reports.push_back(CheckReport::make("restricted-lower-isometry", -worst, 0.0));
  }

  return reports;
}

inline void write_checks_csv(const std::string& path, const std::vector<CheckReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "name,lhs,rhs,satisfied,margin\n";
  for (const auto& r : reports)
    out << r.name << ',' << format_double(r.lhs, "%.10g") << ','
        << format_double(r.rhs, "%.10g") << ',' << (r.satisfied ? 1 : 0) << ','
        << format_double(r.margin, "%.10g") << '\n';
}

}  // namespace metriclearn

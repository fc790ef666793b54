#include "featurecuts/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "featurecuts/parallel.hpp"

namespace featurecuts {

using json = nlohmann::json;

void PipelineConfig::validate(TaskKind task) const {
  const auto m = metric.value_or(default_metric(task));
  if (m == FilterMetric::FValueClassif && !is_classification(task))
    throw std::invalid_argument("f_value_classif requires a classification task");
  if (m == FilterMetric::FValueRegress && is_classification(task))
    throw std::invalid_argument("f_value_regress requires a regression task");
  if (!cutoff && !hybrid) throw std::invalid_argument("pipeline needs a cutoff method, a wrapper, or both");
  if (hybrid) hybrid->validate();
  fs_weights.validate();
  evaluator.boosting.validate();
  if (folds < 2) throw std::invalid_argument("folds must be at least 2");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw std::invalid_argument("holdout must lie in (0,1)");
  if (gss.iterations < 1) throw std::invalid_argument("GSS iterations must be at least 1");
  if (bayes.init_points < 2 || bayes.iterations < 0) throw std::invalid_argument("invalid Bayesian optimization budget");
}

json PipelineConfig::to_json() const {
  json j;
  j["metric"] = metric ? json(featurecuts::to_string(*metric)) : json("default");
  j["cutoff"] = cutoff ? json(featurecuts::to_string(*cutoff)) : json(nullptr);
  j["gss"] = {{"iterations", gss.iterations}, {"strict_paper", gss.strict_paper}};
  j["bayes"] = {{"init_points", bayes.init_points},
                {"iterations", bayes.iterations},
                {"length_scale", bayes.length_scale},
                {"noise", bayes.noise},
                {"xi", bayes.xi}};
  if (hybrid) {
    j["pso"] = {{"agents", hybrid->agents},
                {"max_iterations", hybrid->max_iterations},
                {"inertia", {hybrid->inertia_start, hybrid->inertia_end}},
                {"cognitive", hybrid->cognitive},
                {"social", hybrid->social},
                {"v_max", hybrid->v_max},
                {"fitness", featurecuts::to_string(hybrid->fitness_mode)}};
  } else {
    j["pso"] = nullptr;
  }
  j["fs_weights"] = {{"performance", fs_weights.performance}, {"reduction", fs_weights.reduction}};
  j["fs_variant"] = featurecuts::to_string(fs_variant);
  j["holdout"] = holdout_fraction;
  j["folds"] = folds;
  j["evaluator"] = evaluator.describe();
  j["seed"] = seed;
  j["mi_bins"] = mi_bins;
  return j;
}

namespace {

json score_json(const std::optional<ModelScore>& s) {
  if (!s) return nullptr;
  return {{"value", s->value}, {"metric", to_string(s->metric)}, {"n_eval_rows", s->n_eval_rows}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

json SelectionReport::to_json(bool include_timings) const {
  json j;
  j["schema"] = kReportSchema;
  j["tool"] = {{"name", "featurecuts"}, {"version", std::string(kToolVersion)}};
  j["status"] = status;
  j["completed_stages"] = completed_stages;
  j["dataset"] = {{"name", dataset_name},
                  {"rows", rows},
                  {"features", features},
                  {"task", featurecuts::to_string(task)},
                  {"target", target_name},
                  {"class_names", class_names}};
  j["config"] = config;
  if (!ranking.order.empty())
    j["ranking"] = {{"metric", featurecuts::to_string(ranking.metric)}, {"order", ranking.order}, {"scores", ranking.scores}};
  if (cutoff) {
    json trace = json::array();
    for (const auto& r : fss_trace)
      trace.push_back({{"k", r.k},
                       {"fss", r.fss},
                       {"model_score", r.model_score},
                       {"reduction_pct", r.reduction_pct},
                       {"eval_index", r.eval_index}});
    j["cutoff"] = {{"method", featurecuts::to_string(cutoff->method)},
                   {"k_star", cutoff->k_star},
                   {"fss_at_k_star", cutoff->fss_at_k_star},
                   {"strict_paper_k", cutoff->strict_paper_k ? json(*cutoff->strict_paper_k) : json(nullptr)},
                   {"evaluations", cutoff->trace.size()},
                   {"trace", trace}};
  }
  if (pso) {
    j["pso"] = {{"best_fitness", pso->best_fitness},
                {"best_model_score", pso->best_model_score},
                {"evaluations", pso->evaluations},
                {"history", pso->history}};
  }
  json sel = json::array();
  for (std::size_t i = 0; i < selected.size(); ++i) sel.push_back({{"index", selected[i]}, {"name", selected_names[i]}});
  j["selected_features"] = sel;
  j["n_selected"] = selected.size();
  j["reduction_pct"] = reduction_pct;
  j["cv_score"] = score_json(cv_score);
  j["holdout_score"] = score_json(holdout_score);
  j["notes"] = notes;
  if (include_timings)
    j["timings"] = {{"rank_s", timings.rank_s},
                    {"cutoff_s", timings.cutoff_s},
                    {"pso_s", timings.pso_s},
                    {"holdout_s", timings.holdout_s},
                    {"total_s", timings.total_s}};
  return j;
}

FoldAssignment pipeline_splits(const Dataset& ds, const PipelineConfig& cfg) {
  return make_splits(ds, {cfg.holdout_fraction, cfg.folds, cfg.seed});
}

std::string method_label(const PipelineConfig& cfg) {
  std::string label;
  if (cfg.cutoff) {
    switch (*cfg.cutoff) {
      case CutoffMethod::GoldenSection: label = "FC_GS"; break;
      case CutoffMethod::Bayes: label = "FC_BAYS"; break;
      case CutoffMethod::BruteForce: label = "FC_BRUTE"; break;
    }
  }
  if (cfg.hybrid) label += label.empty() ? "PSO" : "+PSO";
  return label;
}

SelectionReport run_featurecuts(const Dataset& ds, const PipelineConfig& cfg_in,
                                const std::optional<FoldAssignment>& splits, const std::string& dataset_name) {
  const auto t_total = std::chrono::steady_clock::now();
  PipelineConfig cfg = cfg_in;
  cfg.validate(ds.task());
  cfg.evaluator.boosting.seed = derive_seed(cfg.seed, {4});
  cfg.bayes.seed = derive_seed(cfg.seed, {2});
  if (cfg.hybrid) cfg.hybrid->seed = derive_seed(cfg.seed, {3});

  SelectionReport report;
  report.dataset_name = dataset_name;
  report.rows = ds.rows();
  report.features = ds.cols();
  report.task = ds.task();
  report.target_name = ds.target_name();
  report.class_names = ds.class_names();
  report.config = cfg_in.to_json();
  const auto n = static_cast<std::int64_t>(ds.cols());

  auto fail = [&](const std::string& stage, const std::exception& e) {
    report.status = "failed: " + stage;
    report.timings.total_s = seconds_since(t_total);
    return PipelineError(stage + " stage failed: " + e.what(), report);
  };

  FoldAssignment folds;
  try {
    folds = splits ? *splits : pipeline_splits(ds, cfg);
  } catch (const std::exception& e) {
    throw fail("split", e);
  }
  if (!is_classification(ds.task()))
    report.notes.push_back("regression target: folds are shuffled, not stratified");

  // Stage 1: ranking on the train partition only.
  auto t0 = std::chrono::steady_clock::now();
  try {
    const Dataset train = take_rows(ds, folds.train_rows);
    report.ranking = rank_features(train, cfg.metric.value_or(default_metric(ds.task())), cfg.mi_bins);
  } catch (const std::exception& e) {
    throw fail("rank", e);
  }
  report.timings.rank_s = seconds_since(t0);
  report.completed_stages.push_back("rank");
  if (std::ranges::any_of(report.ranking.scores, [](double s) { return s >= kLargeSentinel; }))
    report.notes.push_back("scores of 1e30 stand for an infinite statistic (zero within-group variance)");

  std::vector<Eigen::Index> candidates = report.ranking.order;
  FssCache cache;
  const std::string context = fss_context(report.ranking, folds, cfg.evaluator, cfg.fs_weights, cfg.fs_variant);

  // Stage 2: cutoff search.
  if (cfg.cutoff) {
    t0 = std::chrono::steady_clock::now();
    const CutoffObjective objective = [&](std::int64_t k) {
      return fss_of_cutoff(k, report.ranking, ds, folds, cfg.evaluator, cfg.fs_weights, cfg.fs_variant, cache).fss;
    };
    auto fill_trace = [&](const CutoffResult& r) {
      report.fss_trace.clear();
      for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const auto& p = r.trace[i];
        const auto entry = cache.find(context, p.k);
        report.fss_trace.push_back({p.k, p.fss, entry ? entry->model.value : std::nan(""),
                                    100.0 * static_cast<double>(n - p.k) / static_cast<double>(n), i});
      }
    };
    try {
      switch (*cfg.cutoff) {
        case CutoffMethod::GoldenSection: report.cutoff = golden_section_search(objective, n, cfg.gss); break;
        case CutoffMethod::Bayes: report.cutoff = bayes_optimize(objective, n, cfg.bayes); break;
        case CutoffMethod::BruteForce: report.cutoff = brute_force_cutoff(objective, n); break;
      }
    } catch (const SearchError& e) {
      report.cutoff = e.partial();
      fill_trace(e.partial());
      throw fail("cutoff", e);
    } catch (const std::exception& e) {
      throw fail("cutoff", e);
    }
    fill_trace(*report.cutoff);
    candidates = report.ranking.top(report.cutoff->k_star);
    report.cv_score = cache.find(context, report.cutoff->k_star)->model;
    report.timings.cutoff_s = seconds_since(t0);
    report.completed_stages.push_back("cutoff");
  }

  // Stage 3: optional swarm refinement.
  std::vector<Eigen::Index> selected = candidates;
  if (cfg.hybrid) {
    t0 = std::chrono::steady_clock::now();
    try {
      report.pso = run_pso(candidates, ds, folds, cfg.evaluator, *cfg.hybrid);
    } catch (const PsoError& e) {
      report.pso = e.partial();
      throw fail("pso", e);
    } catch (const std::exception& e) {
      throw fail("pso", e);
    }
    selected = masked_columns(candidates, report.pso->best_mask);
    report.cv_score = ModelScore{report.pso->best_model_score, metric_for(ds.task()),
                                 static_cast<Eigen::Index>(folds.train_rows.size())};
    report.timings.pso_s = seconds_since(t0);
    report.completed_stages.push_back("pso");
    report.notes.push_back("pso: binary sigmoid transfer, inertia " + std::to_string(cfg.hybrid->inertia_start) +
                           "->" + std::to_string(cfg.hybrid->inertia_end) + ", fitness " +
                           to_string(cfg.hybrid->fitness_mode));
  }

  report.selected = selected;
  for (auto c : selected) report.selected_names.push_back(ds.feature_names()[static_cast<std::size_t>(c)]);
  report.reduction_pct = 100.0 * (1.0 - static_cast<double>(selected.size()) / static_cast<double>(n));

  // The hold-out rows are touched exactly once, here.
  t0 = std::chrono::steady_clock::now();
  try {
    report.holdout_score = holdout_score(ds, selected, folds, cfg.evaluator);
  } catch (const std::exception& e) {
    throw fail("holdout", e);
  }
  report.timings.holdout_s = seconds_since(t0);
  report.completed_stages.push_back("holdout");
  report.timings.total_s = seconds_since(t_total);
  return report;
}

std::string trace_csv(const SelectionReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "method,k,fss,model_score,reduction_pct,eval_index\n";
  if (!report.cutoff) return os.str();
  const auto method = to_string(report.cutoff->method);
  for (const auto& r : report.fss_trace)
    os << method << ',' << r.k << ',' << r.fss << ',' << r.model_score << ',' << r.reduction_pct << ','
       << r.eval_index << '\n';
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<BenchmarkAggregate> aggregate_rows(const std::vector<BenchmarkRow>& rows) {
  std::map<std::string, std::vector<const BenchmarkRow*>> by_method;
  for (const auto& r : rows)
    if (r.ok) by_method[r.method].push_back(&r);
  std::vector<BenchmarkAggregate> out;
  for (const auto& [method, group] : by_method) {
    auto stats = [&](auto field, double& mean, double& sd) {
      mean = 0;
      for (const auto* r : group) mean += r->*field;
      mean /= static_cast<double>(group.size());
      double ss = 0;
      for (const auto* r : group) ss += (r->*field - mean) * (r->*field - mean);
      sd = std::sqrt(ss / static_cast<double>(group.size()));
    };
    BenchmarkAggregate a;
    a.method = method;
    a.datasets = static_cast<int>(group.size());
    stats(&BenchmarkRow::reduction_pct, a.reduction_mean, a.reduction_std);
    stats(&BenchmarkRow::test_score, a.score_mean, a.score_std);
    stats(&BenchmarkRow::time_s, a.time_mean, a.time_std);
    out.push_back(a);
  }
  return out;
}

json BenchmarkSummary::to_json() const {
  json j;
  j["schema"] = kReportSchema;
  j["datasets"] = json::array();
  for (const auto& r : rows) {
    json row = {{"dataset", r.dataset}, {"method", r.method}, {"status", r.ok ? "ok" : "failed"}};
    if (r.ok) {
      row["reduction_pct"] = r.reduction_pct;
      row["test_score"] = r.test_score;
      row["time_s"] = r.time_s;
    } else {
      row["error"] = r.error;
    }
    j["datasets"].push_back(row);
  }
  j["aggregate"] = json::array();
  for (const auto& a : aggregate)
    j["aggregate"].push_back({{"method", a.method},
                              {"datasets", a.datasets},
                              {"reduction_pct_mean", a.reduction_mean},
                              {"reduction_pct_std", a.reduction_std},
                              {"test_score_mean", a.score_mean},
                              {"test_score_std", a.score_std},
                              {"time_s_mean", a.time_mean},
                              {"time_s_std", a.time_std}});
  return j;
}

BenchmarkSummary run_benchmark(const std::vector<BenchmarkEntry>& entries, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  BenchmarkSummary summary;
  summary.rows.resize(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto& e = entries[i];
    auto& row = summary.rows[i];
    row.dataset = e.name;
    row.method = method_label(e.config);
    try {
      const Dataset ds = load_csv(e.path, e.target, e.task, e.ingest);
      const auto report = run_featurecuts(ds, e.config, std::nullopt, e.name);
      write_file_atomic(out_dir / (e.name + ".report.json"), report.to_json().dump(2) + "\n");
      write_file_atomic(out_dir / (e.name + ".trace.csv"), trace_csv(report));
      row.ok = true;
      row.reduction_pct = report.reduction_pct;
      row.test_score = report.holdout_score->value;
      row.time_s = report.timings.total_s;
    } catch (const PipelineError& err) {
      row.error = err.what();
      write_file_atomic(out_dir / (e.name + ".report.json"), err.partial().to_json().dump(2) + "\n");
    } catch (const std::exception& err) {
      row.error = err.what();
    }
  });
  summary.aggregate = aggregate_rows(summary.rows);

  std::ostringstream csv;
  csv.precision(17);
  csv << "dataset,method,reduction_pct,test_score,time_s,status\n";
  for (const auto& r : summary.rows) {
    csv << r.dataset << ',' << r.method << ',';
    if (r.ok)
      csv << r.reduction_pct << ',' << r.test_score << ',' << r.time_s << ",ok\n";
    else
      csv << ",,,failed\n";
  }
  std::ostringstream agg;
  agg.precision(17);
  agg << "method,datasets,reduction_pct_mean,reduction_pct_std,test_score_mean,test_score_std,time_s_mean,time_s_std\n";
  for (const auto& a : summary.aggregate)
    agg << a.method << ',' << a.datasets << ',' << a.reduction_mean << ',' << a.reduction_std << ',' << a.score_mean
        << ',' << a.score_std << ',' << a.time_mean << ',' << a.time_std << '\n';
  write_file_atomic(out_dir / "summary.csv", csv.str());
  write_file_atomic(out_dir / "aggregate.csv", agg.str());
  write_file_atomic(out_dir / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace featurecuts

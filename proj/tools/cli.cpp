#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "featurecuts/parallel.hpp"
#include "featurecuts/pipeline.hpp"
#include "featurecuts/synthetic.hpp"

namespace featurecuts::cli {
namespace {

using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string input, target, task = "classif", id_column;
  bool impute_mean = false;
  std::size_t sample_rows = 0;
  double holdout = 0.2;
  int folds = 5;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  std::string metric = "f_value";
  int mi_bins = 10;

  std::string evaluator = "builtin";
  int rounds = 100, depth = 3;
  double eta = 0.1;
  int eval_timeout = 600;

  std::string fs_weights = "50,1", fs_variant = "removed";

  std::string cutoff = "gss";
  int gss_iterations = 10, bayes_init = 5, bayes_iters = 5;
  bool strict_paper = false;

  std::string wrapper = "none";
  int agents = 20, iterations = 50;
  std::string fitness = "model";

  std::string out, trace, report, suite, out_dir;
  std::vector<std::string> traces, dataset_names;

  // generate
  std::string kind = "classification";
  long rows = 2000, features = 500;
  int informative = 5, redundant = 15, classes = 2, clusters_per_class = 16;
  double class_sep = 2.0, flip = 0.01, noise = 0.1;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", "JSON file of flag values; explicit flags override it");
  sub->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
}

void add_data(CLI::App* sub, Flags& f, bool splits) {
  sub->add_option("--input", f.input, "CSV file with a header row")->required();
  sub->add_option("--target", f.target, "Target column name")->required();
  sub->add_option("--task", f.task, "classif|binary|multiclass|regress");
  sub->add_flag("--impute-mean", f.impute_mean, "Mean-impute non-numeric cells instead of failing");
  sub->add_option("--id-column", f.id_column, "Identifier column to drop");
  sub->add_option("--sample-rows", f.sample_rows, "Uniformly sample this many rows");
  sub->add_option("--seed", f.seed, "Seed for every randomized step");
  sub->add_option("--metric", f.metric, "f_value|mi|variance|correlation");
  sub->add_option("--mi-bins", f.mi_bins, "Equal-frequency bins for mutual information");
  if (!splits) return;
  sub->add_option("--holdout", f.holdout, "Hold-out fraction");
  sub->add_option("--folds", f.folds, "Cross-validation folds");
  sub->add_option("--evaluator", f.evaluator, "builtin or cmd:<path> [args]");
  sub->add_option("--rounds", f.rounds, "Boosting rounds");
  sub->add_option("--depth", f.depth, "Tree depth");
  sub->add_option("--eta", f.eta, "Learning rate");
  sub->add_option("--eval-timeout", f.eval_timeout, "External evaluator timeout in seconds");
  sub->add_option("--fs-weights", f.fs_weights, "w_s,w_f");
  sub->add_option("--fs-variant", f.fs_variant, "removed|retained");
  sub->add_option("--gss-iterations", f.gss_iterations, "Golden section iterations");
  sub->add_option("--bayes-init", f.bayes_init, "Bayesian optimization initial points");
  sub->add_option("--bayes-iters", f.bayes_iters, "Bayesian optimization iterations");
  sub->add_flag("--strict-paper", f.strict_paper, "Choose k* from the final bracket endpoints only");
  sub->add_option("--trace", f.trace, "FSS trace CSV output");
}

void add_wrapper(CLI::App* sub, Flags& f) {
  sub->add_option("--cutoff", f.cutoff, "gss|bayes|brute|none");
  sub->add_option("--wrapper", f.wrapper, "none|pso");
  sub->add_option("--agents", f.agents, "PSO agents");
  sub->add_option("--iterations", f.iterations, "PSO iterations");
  sub->add_option("--fitness", f.fitness, "fs|model");
  sub->add_option("--report", f.report, "Report JSON output");
}

std::unique_ptr<CLI::App> make_select_app(Flags& f) {
  auto app = std::make_unique<CLI::App>("select");
  app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_common(app.get(), f);
  add_data(app.get(), f, true);
  add_wrapper(app.get(), f);
  return app;
}

/// Converts a JSON object of flag values into command-line tokens.
std::vector<std::string> config_tokens(const CLI::App& sub, const json& cfg, const std::string& source) {
  if (!cfg.is_object()) throw UsageError(source + ": config must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    const auto* opt = sub.get_option_no_throw("--" + key);
    if (!opt || key == "config") throw UsageError(source + ": unknown config key '" + key + "'");
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
      if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
      }
      throw UsageError(source + ": config key '" + key + "' has an unsupported value");
    };
    if (value.is_boolean()) {
      if (opt->get_expected_min() != 0) throw UsageError(source + ": config key '" + key + "' is not a flag");
      if (value.get<bool>()) tokens.push_back("--" + key);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        tokens.push_back("--" + key);
        tokens.push_back(scalar(v));
      }
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": invalid JSON: " + e.what());
  }
}

/// Splices the contents of `--config <file>` in front of the explicit flags.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::vector<std::string> rest;
  std::optional<std::string> config;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      config = args[++i];
    } else if (args[i].starts_with("--config=")) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return args;
  const auto* sub = app.get_subcommand_no_throw(args[1]);
  if (!sub) throw UsageError("--config must follow a subcommand");
  std::vector<std::string> out{args[0], args[1]};
  auto tokens = config_tokens(*sub, read_json_file(*config), *config);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::uint64_t resolve_seed(const Flags& f, std::ostream& err) {
  if (f.seed) return *f.seed;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << seed << "\n";
  return seed;
}

TaskKind task_of(const Flags& f) {
  try {
    return parse_task_kind(f.task);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

IngestOptions ingest_of(const Flags& f, std::uint64_t seed) {
  IngestOptions o;
  o.impute_mean = f.impute_mean;
  if (!f.id_column.empty()) o.id_column = f.id_column;
  if (f.sample_rows > 0) o.sample_rows = f.sample_rows;
  o.sample_seed = derive_seed(seed, {5});
  return o;
}

FsWeights parse_weights(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw UsageError("--fs-weights expects 'w_s,w_f'");
  try {
    FsWeights w{std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    w.validate();
    return w;
  } catch (const std::exception&) {
    throw UsageError("--fs-weights expects two positive numbers 'w_s,w_f'");
  }
}

/// Builds the pipeline configuration; conflicting flags are usage errors.
PipelineConfig config_of(const CLI::App& sub, const Flags& f, std::uint64_t seed, bool allow_wrapper) {
  PipelineConfig cfg;
  try {
    const auto task = task_of(f);
    cfg.metric = parse_filter_metric(f.metric, task);
    cfg.mi_bins = f.mi_bins;
    cfg.fs_weights = parse_weights(f.fs_weights);
    cfg.fs_variant = parse_fs_variant(f.fs_variant);
    cfg.holdout_fraction = f.holdout;
    cfg.folds = f.folds;
    cfg.seed = seed;
    cfg.evaluator = EvaluatorSpec::parse(f.evaluator);
    cfg.evaluator.boosting.rounds = f.rounds;
    cfg.evaluator.boosting.depth = f.depth;
    cfg.evaluator.boosting.learning_rate = f.eta;
    cfg.evaluator.external.timeout = std::chrono::seconds(f.eval_timeout);
    cfg.gss.iterations = f.gss_iterations;
    cfg.gss.strict_paper = f.strict_paper;
    cfg.bayes.init_points = f.bayes_init;
    cfg.bayes.iterations = f.bayes_iters;

    if (f.cutoff == "none")
      cfg.cutoff.reset();
    else
      cfg.cutoff = parse_cutoff_method(f.cutoff);
    if (f.strict_paper && cfg.cutoff != CutoffMethod::GoldenSection)
      throw UsageError("--strict-paper only applies to golden section search");

    bool pso_flags = false;
    for (const char* name : {"--agents", "--iterations", "--fitness"})
      if (const auto* opt = sub.get_option_no_throw(name)) pso_flags = pso_flags || opt->count() > 0;
    if (f.wrapper == "pso") {
      if (!allow_wrapper) throw UsageError("--wrapper is not available for this subcommand");
      PsoConfig pso;
      pso.agents = f.agents;
      pso.max_iterations = f.iterations;
      if (f.fitness == "fs")
        pso.fitness_mode = FitnessMode::FsScoreFitness;
      else if (f.fitness == "model")
        pso.fitness_mode = FitnessMode::ModelScoreOnly;
      else
        throw UsageError("--fitness must be fs or model");
      pso.fs_weights = cfg.fs_weights;
      pso.fs_variant = cfg.fs_variant;
      cfg.hybrid = pso;
    } else if (f.wrapper != "none") {
      throw UsageError("--wrapper must be none or pso");
    } else if (pso_flags) {
      throw UsageError("--agents/--iterations/--fitness require --wrapper pso");
    }
    cfg.validate(task);
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_file_atomic(path, text);
}

int cmd_rank(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto seed = resolve_seed(f, err);
  const auto task = task_of(f);
  FilterMetric metric;
  try {
    metric = parse_filter_metric(f.metric, task);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset ds = load_csv(f.input, f.target, task, ingest_of(f, seed));
  const auto ranking = rank_features(ds, metric, f.mi_bins);
  const json j = {{"metric", to_string(ranking.metric)},
                  {"order", ranking.order},
                  {"scores", ranking.scores},
                  {"features", ds.feature_names()}};
  write_output(f.out.empty() ? "ranking.json" : f.out, j.dump(2) + "\n", out);
  return 0;
}

int cmd_select(const CLI::App& sub, const Flags& f, bool cutoff_only, std::ostream& out, std::ostream& err) {
  const auto seed = resolve_seed(f, err);
  const auto cfg = config_of(sub, f, seed, !cutoff_only);
  if (cutoff_only && !cfg.cutoff) throw UsageError("--method none is not a cutoff method");
  const Dataset ds = load_csv(f.input, f.target, task_of(f), ingest_of(f, seed));
  SelectionReport report;
  try {
    report = run_featurecuts(ds, cfg, std::nullopt, std::filesystem::path(f.input).stem().string());
  } catch (const PipelineError& e) {
    if (!f.report.empty()) write_file_atomic(f.report, e.partial().to_json().dump(2) + "\n");
    throw;
  }

  if (report.cutoff) write_file_atomic(f.trace.empty() ? "trace.csv" : f.trace, trace_csv(report));
  if (cutoff_only) {
    json j = report.to_json()["cutoff"];
    j.erase("trace");
    j["selected_features"] = report.selected_names;
    j["cv_score"] = report.cv_score->value;
    write_output(f.out, j.dump(2) + "\n", out);
  } else {
    write_file_atomic(f.report.empty() ? "report.json" : f.report, report.to_json().dump(2) + "\n");
    out << method_label(cfg) << ": selected " << report.selected.size() << "/" << report.features << " features ("
        << report.reduction_pct << "% reduction), hold-out " << to_string(report.holdout_score->metric) << " "
        << report.holdout_score->value << "\n";
  }
  return 0;
}

int cmd_benchmark(const Flags& f, std::ostream& out, std::ostream& err) {
  const json suite = read_json_file(f.suite);
  if (!suite.is_object() || !suite.contains("datasets") || !suite["datasets"].is_array())
    throw UsageError(f.suite + ": expected {\"datasets\": [...]}");
  std::vector<BenchmarkEntry> entries;
  for (const auto& item : suite["datasets"]) {
    if (!item.is_object() || !item.contains("name") || !item["name"].is_string())
      throw UsageError(f.suite + ": every dataset needs a string \"name\"");
    json flags = item;
    flags.erase("name");
    Flags ef;
    auto app = make_select_app(ef);
    auto tokens = config_tokens(*app, flags, f.suite);
    std::reverse(tokens.begin(), tokens.end());
    try {
      app->parse(tokens);
    } catch (const CLI::ParseError& e) {
      throw UsageError(f.suite + ": dataset '" + item["name"].get<std::string>() + "': " + e.what());
    }
    const auto seed = resolve_seed(ef, err);
    BenchmarkEntry e;
    e.name = item["name"].get<std::string>();
    e.path = ef.input;
    e.target = ef.target;
    e.task = task_of(ef);
    e.ingest = ingest_of(ef, seed);
    e.config = config_of(*app, ef, seed, true);
    entries.push_back(std::move(e));
  }
  const auto summary = run_benchmark(entries, f.out_dir.empty() ? "benchmark_out" : f.out_dir);
  std::size_t failed = 0;
  for (const auto& r : summary.rows) {
    if (r.ok) {
      out << r.dataset << " " << r.method << ": reduction " << r.reduction_pct << "%, test " << r.test_score << ", "
          << r.time_s << " s\n";
    } else {
      ++failed;
      out << r.dataset << " " << r.method << ": FAILED " << r.error << "\n";
    }
  }
  return failed == summary.rows.size() && failed > 0 ? 2 : 0;
}

int cmd_generate(const Flags& f, std::ostream& err) {
  const auto seed = resolve_seed(f, err);
  SyntheticDataset s = [&] {
    if (f.kind == "classification") {
      ClassificationRecipe r;
      r.rows = f.rows;
      r.features = f.features;
      r.informative = f.informative;
      r.redundant = f.redundant;
      r.classes = f.classes;
      r.clusters_per_class = f.clusters_per_class;
      r.class_sep = f.class_sep;
      r.flip_fraction = f.flip;
      r.seed = seed;
      return make_classification(r);
    }
    if (f.kind == "regression") {
      RegressionRecipe r;
      r.rows = f.rows;
      r.features = f.features;
      r.informative = f.informative;
      r.noise = f.noise;
      r.seed = seed;
      return make_regression(r);
    }
    throw UsageError("--kind must be classification or regression");
  }();
  write_file_atomic(f.out, to_csv(s.data));
  return 0;
}

}  // namespace

std::string merge_traces(const std::vector<std::string>& paths, const std::vector<std::string>& dataset_names) {
  struct Row {
    std::string dataset, method;
    std::int64_t k;
    double fss;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& path = paths[i];
    const std::string dataset =
        i < dataset_names.size() ? dataset_names[i] : std::filesystem::path(path).stem().string();
    std::ifstream in(path);
    if (!in) throw Error("cannot read trace " + path);
    std::string header;
    if (!std::getline(in, header)) throw Error("empty trace file: " + path);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols;
    {
      std::istringstream hs(header);
      for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
    }
    auto col = [&](const std::string& name) {
      const auto it = std::ranges::find(cols, name);
      if (it == cols.end()) throw Error("malformed trace " + path + ": missing column '" + name + "'");
      return static_cast<std::size_t>(it - cols.begin());
    };
    const auto cm = col("method"), ck = col("k"), cf = col("fss");
    std::size_t count = 0;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::istringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      if (cells.size() != cols.size()) throw Error("malformed trace " + path + ": bad row '" + line + "'");
      try {
        rows.push_back({dataset, cells[cm], std::stoll(cells[ck]), std::stod(cells[cf])});
      } catch (const std::exception&) {
        throw Error("malformed trace " + path + ": bad row '" + line + "'");
      }
      ++count;
    }
    if (count == 0) throw Error("empty trace file: " + path);
  }
  std::ranges::stable_sort(rows, [](const Row& a, const Row& b) {
    return std::tie(a.dataset, a.method, a.k) < std::tie(b.dataset, b.method, b.k);
  });
  std::ostringstream os;
  os.precision(17);
  os << "dataset,method,k,fss\n";
  for (const auto& r : rows) os << r.dataset << ',' << r.method << ',' << r.k << ',' << r.fss << '\n';
  return os.str();
}

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"featurecuts: filter ranking, adaptive cutoff search and swarm refinement for feature selection",
               "featurecuts"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", "featurecuts " + std::string(kToolVersion) + " (report schema " +
                                        std::to_string(kReportSchema) + ")");
  app.require_subcommand(1);

  auto* rank = app.add_subcommand("rank", "Rank features by a filter statistic");
  add_common(rank, f);
  add_data(rank, f, false);
  rank->add_option("--out", f.out, "Ranking JSON output (default ranking.json, '-' for stdout)");

  auto* cutoff = app.add_subcommand("cutoff", "Find the FS-score maximizing cutoff");
  add_common(cutoff, f);
  add_data(cutoff, f, true);
  cutoff->add_option("--method", f.cutoff, "gss|bayes|brute");
  cutoff->add_option("--out", f.out, "Cutoff result JSON (default stdout)");

  auto* select = app.add_subcommand("select", "Run the full selection pipeline");
  add_common(select, f);
  add_data(select, f, true);
  add_wrapper(select, f);

  auto* bench = app.add_subcommand("benchmark", "Run the pipeline over a suite of datasets");
  add_common(bench, f);
  bench->add_option("--suite", f.suite, "Suite JSON: {\"datasets\": [{\"name\": ..., <select flags>}]}")->required();
  bench->add_option("--out-dir", f.out_dir, "Output directory (default benchmark_out)");

  auto* plot = app.add_subcommand("plot-data", "Merge trace CSVs into long-format plot data");
  add_common(plot, f);
  plot->add_option("traces", f.traces, "Trace CSV files")->required();
  plot->add_option("--dataset-name", f.dataset_names, "Dataset label per trace (default: file stem)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  plot->add_option("--out", f.out, "Output CSV (default stdout)");

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset CSV");
  add_common(gen, f);
  gen->add_option("--kind", f.kind, "classification|regression");
  gen->add_option("--rows", f.rows);
  gen->add_option("--features", f.features);
  gen->add_option("--informative", f.informative);
  gen->add_option("--redundant", f.redundant);
  gen->add_option("--classes", f.classes);
  gen->add_option("--clusters-per-class", f.clusters_per_class);
  gen->add_option("--class-sep", f.class_sep);
  gen->add_option("--flip", f.flip, "Fraction of labels assigned at random");
  gen->add_option("--noise", f.noise, "Regression noise standard deviation");
  gen->add_option("--seed", f.seed);
  gen->add_option("--out", f.out)->required();

  try {
    auto args = expand_config(app, args_in);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    std::ostringstream help;
    const int code = app.exit(e, help, help);
    out << help.str();
    return code;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    app.exit(e, msg, msg);
    err << msg.str();
    if (e.get_exit_code() != 0) err << app.help();
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    set_worker_threads(f.threads);
    if (*rank) return cmd_rank(f, out, err);
    if (*cutoff) return cmd_select(*cutoff, f, true, out, err);
    if (*select) return cmd_select(*select, f, false, out, err);
    if (*bench) return cmd_benchmark(f, out, err);
    if (*plot) {
      write_output(f.out, merge_traces(f.traces, f.dataset_names), out);
      return 0;
    }
    if (*gen) return cmd_generate(f, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace featurecuts::cli

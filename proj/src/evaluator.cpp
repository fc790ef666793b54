#include "featurecuts/evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <json.hpp>
#include <sstream>

#include "featurecuts/parallel.hpp"
#include "featurecuts/rng.hpp"

namespace featurecuts {

std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::RocAuc: return "roc_auc";
    case MetricKind::MacroF1: return "macro_f1";
    case MetricKind::RSquared: return "r2";
  }
  return "unknown";
}

MetricKind metric_for(TaskKind task) {
  switch (task) {
    case TaskKind::BinaryClassification: return MetricKind::RocAuc;
    case TaskKind::MulticlassClassification: return MetricKind::MacroF1;
    case TaskKind::Regression: return MetricKind::RSquared;
  }
  throw std::invalid_argument("unknown task");
}

EvaluatorSpec EvaluatorSpec::parse(std::string_view s) {
  EvaluatorSpec spec;
  if (s == "builtin") return spec;
  if (!s.starts_with("cmd:")) throw std::invalid_argument("evaluator must be 'builtin' or 'cmd:<path>'");
  std::istringstream words{std::string(s.substr(4))};
  std::string w;
  spec.kind = Kind::ExternalCommand;
  while (words >> w) {
    if (spec.external.program.empty())
      spec.external.program = w;
    else
      spec.external.args.push_back(w);
  }
  if (spec.external.program.empty()) throw std::invalid_argument("evaluator command is empty");
  return spec;
}

std::string EvaluatorSpec::describe() const {
  std::ostringstream os;
  if (kind == Kind::BuiltInBoosted) {
    os << "builtin(rounds=" << boosting.rounds << ",depth=" << boosting.depth << ",eta=" << boosting.learning_rate
       << ",lambda=" << boosting.l2 << ",min_child_weight=" << boosting.min_child_weight << ",seed=" << boosting.seed
       << ")";
  } else {
    os << "cmd:" << external.program;
    for (const auto& a : external.args) os << ' ' << a;
    os << " timeout=" << external.timeout.count() << "s";
  }
  return os.str();
}

namespace {

void check_compatible(const Dataset& train, const Dataset& test) {
  if (train.cols() != test.cols() || train.feature_names() != test.feature_names())
    throw std::invalid_argument("train and test must share columns");
  if (train.task() != test.task()) throw std::invalid_argument("train and test must share the task");
  if (!is_classification(train.task())) return;
  std::vector<char> in_train(static_cast<std::size_t>(train.num_classes()), 0);
  for (double v : train.target()) in_train[static_cast<std::size_t>(v)] = 1;
  for (double v : test.target())
    if (static_cast<std::size_t>(v) >= in_train.size() || !in_train[static_cast<std::size_t>(v)])
      throw EvaluatorError("class '" + test.class_names()[static_cast<std::size_t>(v)] +
                           "' is present in the evaluation rows but absent from the training rows");
}

ModelScore builtin_evaluate(const Dataset& train, const Dataset& test, const BoostingParams& params,
                            MetricKind metric) {
  ModelScore out{0.0, metric, test.rows()};
  switch (train.task()) {
    case TaskKind::Regression: {
      BoostedTrees model(params, BoostingLoss::Squared);
      model.fit(train.features(), train.target());
      out.value = r_squared(model.predict_margin(test.features()), test.target());
      break;
    }
    case TaskKind::BinaryClassification: {
      BoostedTrees model(params, BoostingLoss::Logistic);
      model.fit(train.features(), train.target());
      out.value = roc_auc(model.predict_margin(test.features()), test.labels());
      break;
    }
    case TaskKind::MulticlassClassification: {
      const int classes = train.num_classes();
      Eigen::MatrixXd margins(test.rows(), classes);
      for (int c = 0; c < classes; ++c) {
        BoostedTrees model(params, BoostingLoss::Logistic);
        model.fit(train.features(), (train.target().array() == c).cast<double>().matrix());
        margins.col(c) = model.predict_margin(test.features());
      }
      // Softmax is monotone per row, so the argmax of the normalized scores
      // equals the argmax of the margins; lowest class wins ties.
      Eigen::VectorXi predicted(test.rows());
      for (Eigen::Index r = 0; r < test.rows(); ++r) {
        Eigen::Index best = 0;
        margins.row(r).maxCoeff(&best);
        predicted(r) = static_cast<int>(best);
      }
      out.value = macro_f1(predicted, test.labels());
      break;
    }
  }
  return out;
}

std::atomic<std::uint64_t> g_temp_counter{0};

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("featurecuts-" + std::to_string(::getpid()) + "-" + std::to_string(g_temp_counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct ProcessResult {
  int exit_status = 0;
  bool timed_out = false;
  std::string out, err;
};

ProcessResult run_process(const ExternalCommand& cmd, const std::string& input) {
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) || ::pipe2(out_pipe, O_CLOEXEC) || ::pipe2(err_pipe, O_CLOEXEC))
    throw EvaluatorError(std::string("pipe failed: ") + std::strerror(errno));

  std::vector<std::string> argv_store{cmd.program};
  argv_store.insert(argv_store.end(), cmd.args.begin(), cmd.args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw EvaluatorError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::execvp(argv[0], argv.data());
    const char msg[] = "exec failed\n";
    [[maybe_unused]] auto w = ::write(STDERR_FILENO, msg, sizeof msg - 1);
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  ProcessResult res;
  std::size_t written = 0;
  int in_fd = in_pipe[1];
  ::fcntl(in_fd, F_SETFL, O_NONBLOCK);
  if (input.empty()) {
    ::close(in_fd);
    in_fd = -1;
  }
  const auto deadline = std::chrono::steady_clock::now() + cmd.timeout;
  bool out_open = true, err_open = true;
  char buf[4096];
  while (out_open || err_open) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      res.timed_out = true;
      ::kill(pid, SIGKILL);
      break;
    }
    pollfd fds[3];
    nfds_t nfds = 0;
    int out_slot = -1, err_slot = -1, in_slot = -1;
    if (out_open) {
      out_slot = static_cast<int>(nfds);
      fds[nfds++] = {out_pipe[0], POLLIN, 0};
    }
    if (err_open) {
      err_slot = static_cast<int>(nfds);
      fds[nfds++] = {err_pipe[0], POLLIN, 0};
    }
    if (in_fd >= 0) {
      in_slot = static_cast<int>(nfds);
      fds[nfds++] = {in_fd, POLLOUT, 0};
    }
    const int ready = ::poll(fds, nfds, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    auto drain = [&](int slot, int fd, std::string& sink, bool& open) {
      if (slot < 0 || !(fds[slot].revents & (POLLIN | POLLHUP | POLLERR))) return;
      const auto got = ::read(fd, buf, sizeof buf);
      if (got > 0)
        sink.append(buf, static_cast<std::size_t>(got));
      else if (got == 0 || errno != EAGAIN)
        open = false;
    };
    drain(out_slot, out_pipe[0], res.out, out_open);
    drain(err_slot, err_pipe[0], res.err, err_open);
    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const auto n = ::write(in_fd, input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 || written == input.size()) {
        ::close(in_fd);
        in_fd = -1;
      }
    }
  }
  if (in_fd >= 0) ::close(in_fd);
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status))
    res.exit_status = WEXITSTATUS(status);
  else
    res.exit_status = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  return res;
}

std::string excerpt(const std::string& s) {
  constexpr std::size_t kMax = 500;
  return s.size() <= kMax ? s : s.substr(0, kMax) + "...";
}

}  // namespace

ModelScore external_evaluate(const ExternalRequest& request, const ExternalCommand& command, MetricKind metric) {
  const nlohmann::json req = {{"train_csv", request.train_csv.string()},
                              {"test_csv", request.test_csv.string()},
                              {"target", request.target},
                              {"task", to_string(request.task)},
                              {"metric", to_string(metric)}};
  const auto res = run_process(command, req.dump() + "\n");
  if (res.timed_out)
    throw EvaluatorError("external evaluator timed out after " + std::to_string(command.timeout.count()) + " s");
  if (res.exit_status != 0)
    throw EvaluatorError("external evaluator exited with status " + std::to_string(res.exit_status) +
                         "; stderr: " + excerpt(res.err));

  std::vector<std::string> lines;
  std::istringstream in(res.out);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  if (lines.size() != 1)
    throw EvaluatorError("malformed evaluator response: expected one JSON line, got " + std::to_string(lines.size()));
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(lines.front());
  } catch (const nlohmann::json::exception& e) {
    throw EvaluatorError("malformed evaluator response: " + std::string(e.what()));
  }
  if (!resp.is_object() || !resp.contains("score") || !resp["score"].is_number())
    throw EvaluatorError("malformed evaluator response: missing numeric \"score\"");
  const double score = resp["score"].get<double>();
  if (!std::isfinite(score)) throw EvaluatorError("malformed evaluator response: non-finite score");
  return {score, metric, 0};
}

ModelScore train_evaluate(const Dataset& train, const Dataset& test, const EvaluatorSpec& spec, MetricKind metric) {
  check_compatible(train, test);
  if (metric != metric_for(train.task())) throw std::invalid_argument("metric does not match the task");
  if (spec.kind == EvaluatorSpec::Kind::BuiltInBoosted) return builtin_evaluate(train, test, spec.boosting, metric);

  TempDir dir;
  ExternalRequest req{dir.path() / "train.csv", dir.path() / "test.csv", train.target_name(), train.task()};
  write_csv(train, req.train_csv);
  write_csv(test, req.test_csv);
  auto score = external_evaluate(req, spec.external, metric);
  score.n_eval_rows = test.rows();
  return score;
}

std::vector<ModelScore> cv_fold_scores(const Dataset& ds, std::span<const Eigen::Index> columns,
                                       const FoldAssignment& folds, const EvaluatorSpec& spec) {
  if (columns.empty()) throw std::invalid_argument("cannot evaluate an empty feature subset");
  const Dataset view = subset(ds, columns);
  const auto metric = metric_for(ds.task());
  std::vector<ModelScore> scores(static_cast<std::size_t>(folds.folds));
  parallel_for(scores.size(), [&](std::size_t f) {
    const auto fit_rows = folds.rows_outside_fold(static_cast<int>(f));
    const auto val_rows = folds.fold_rows(static_cast<int>(f));
    EvaluatorSpec fold_spec = spec;
    fold_spec.boosting.seed = derive_seed(spec.boosting.seed, {f});
    scores[f] = train_evaluate(take_rows(view, fit_rows), take_rows(view, val_rows), fold_spec, metric);
  });
  return scores;
}

ModelScore cv_score(const Dataset& ds, std::span<const Eigen::Index> columns, const FoldAssignment& folds,
                    const EvaluatorSpec& spec) {
  const auto per_fold = cv_fold_scores(ds, columns, folds, spec);
  double sum = 0;
  for (const auto& s : per_fold) sum += s.value;
  return {sum / static_cast<double>(per_fold.size()), metric_for(ds.task()),
          static_cast<Eigen::Index>(folds.train_rows.size())};
}

ModelScore holdout_score(const Dataset& ds, std::span<const Eigen::Index> columns, const FoldAssignment& folds,
                         const EvaluatorSpec& spec) {
  if (columns.empty()) throw std::invalid_argument("cannot evaluate an empty feature subset");
  const Dataset view = subset(ds, columns);
  return train_evaluate(take_rows(view, folds.train_rows), take_rows(view, folds.holdout_rows), spec,
                        metric_for(ds.task()));
}

}  // namespace featurecuts

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "featurecuts/common.hpp"

namespace featurecuts {

/// FSS as a black box over cutoffs 1..N. Must be safe to call concurrently
/// when worker threads are enabled.
using CutoffObjective = std::function<double(std::int64_t k)>;

enum class CutoffMethod { GoldenSection, Bayes, BruteForce };

std::string to_string(CutoffMethod m);
CutoffMethod parse_cutoff_method(std::string_view s);

struct TracePoint {
  std::int64_t k = 0;
  double fss = 0.0;
  bool operator==(const TracePoint&) const = default;
};

struct CutoffResult {
  CutoffMethod method = CutoffMethod::GoldenSection;
  std::int64_t k_star = 0;
  double fss_at_k_star = 0.0;
  std::vector<TracePoint> trace;  // distinct evaluations, in probe order
  /// Golden section only: argmax of FSS over {floor(a), ceil(b)} of the final bracket.
  std::optional<std::int64_t> strict_paper_k;
  /// Golden section only: the real-valued bracket [a, b] before the first
  /// and after every iteration.
  std::vector<std::pair<double, double>> brackets;
};

/// Search failure carrying the evaluations completed before the error.
class SearchError : public Error {
 public:
  SearchError(const std::string& what, CutoffResult partial) : Error(what), partial_(std::move(partial)) {}
  const CutoffResult& partial() const { return partial_; }

 private:
  CutoffResult partial_;
};

inline const double kGoldenConjugate = (std::sqrt(5.0) - 1.0) / 2.0;

struct GssConfig {
  int iterations = 10;
  /// Report the endpoint argmax as k_star instead of the best evaluated cutoff.
  bool strict_paper = false;
};

struct BayesConfig {
  int init_points = 5;
  int iterations = 5;
  std::uint64_t seed = 0;
  double length_scale = 0.1;  // on k normalized to [0,1]
  double noise = 1e-4;        // observation noise variance on standardized FSS
  double xi = 0.01;           // expected-improvement jitter
};

/// Discrete golden section search on [1, N]. Interior probes are rounded to
/// the nearest integer; the bracket shrinks on the real-valued probes and
/// keeps [a, x2] when FSS(x1) >= FSS(x2). Ties prefer smaller k.
CutoffResult golden_section_search(const CutoffObjective& fss, std::int64_t n, const GssConfig& cfg = {});

/// Bayesian optimization with a squared-exponential Gaussian-process
/// surrogate and expected improvement scanned over every unexplored cutoff.
CutoffResult bayes_optimize(const CutoffObjective& fss, std::int64_t n, const BayesConfig& cfg = {});

/// Evaluates every cutoff; the ground truth for the other two methods.
CutoffResult brute_force_cutoff(const CutoffObjective& fss, std::int64_t n);

/// Expected improvement of a Gaussian prediction over `best` (maximization).
double expected_improvement(double mean, double sd, double best, double xi);

}  // namespace featurecuts

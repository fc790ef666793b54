#include "featurecuts/cutoff_search.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <set>

#include "featurecuts/parallel.hpp"
#include "featurecuts/rng.hpp"

namespace featurecuts {

std::string to_string(CutoffMethod m) {
  switch (m) {
    case CutoffMethod::GoldenSection: return "gss";
    case CutoffMethod::Bayes: return "bayes";
    case CutoffMethod::BruteForce: return "brute";
  }
  return "unknown";
}

CutoffMethod parse_cutoff_method(std::string_view s) {
  if (s == "gss") return CutoffMethod::GoldenSection;
  if (s == "bayes") return CutoffMethod::Bayes;
  if (s == "brute") return CutoffMethod::BruteForce;
  throw std::invalid_argument("cutoff method must be gss, bayes or brute");
}

namespace {

/// Memoizing front end to the objective that records the probe order.
class Probe {
 public:
  Probe(const CutoffObjective& fss, std::int64_t n, CutoffMethod method) : fss_(fss), n_(n) {
    if (n < 1) throw std::invalid_argument("cutoff search needs N >= 1");
    result_.method = method;
  }

  double operator()(std::int64_t k) {
    k = std::clamp<std::int64_t>(k, 1, n_);
    if (auto it = seen_.find(k); it != seen_.end()) return it->second;
    return record(k, call(k));
  }

  /// Evaluates a batch whose order is fixed up front; evaluations may run
  /// concurrently, the trace keeps the given order.
  void batch(const std::vector<std::int64_t>& ks) {
    std::vector<std::int64_t> fresh;
    for (auto k : ks)
      if (!seen_.contains(k) && std::ranges::find(fresh, k) == fresh.end()) fresh.push_back(k);
    std::vector<std::optional<double>> values(fresh.size());
    std::string failure;
    try {
      parallel_for(fresh.size(), [&](std::size_t i) { values[i] = fss_(fresh[i]); });
    } catch (const std::exception& e) {
      failure = e.what();
    }
    for (std::size_t i = 0; i < fresh.size(); ++i)
      if (values[i]) record(fresh[i], *values[i]);
    if (!failure.empty()) throw SearchError("evaluation failed: " + failure, finish());
  }

  bool seen(std::int64_t k) const { return seen_.contains(k); }
  std::size_t count() const { return seen_.size(); }
  const std::map<std::int64_t, double>& values() const { return seen_; }
  CutoffResult& result() { return result_; }

  /// Sets k_star to the best evaluated cutoff (smallest k on ties).
  CutoffResult finish() {
    CutoffResult out = result_;
    bool first = true;
    for (const auto& [k, v] : seen_) {
      if (first || v > out.fss_at_k_star) {
        out.k_star = k;
        out.fss_at_k_star = v;
        first = false;
      }
    }
    return out;
  }

 private:
  double call(std::int64_t k) {
    try {
      return fss_(k);
    } catch (const SearchError&) {
      throw;
    } catch (const std::exception& e) {
      throw SearchError("evaluation of k=" + std::to_string(k) + " failed: " + e.what(), finish());
    }
  }

  double record(std::int64_t k, double v) {
    seen_.emplace(k, v);
    result_.trace.push_back({k, v});
    return v;
  }

  const CutoffObjective& fss_;
  std::int64_t n_;
  std::map<std::int64_t, double> seen_;
  CutoffResult result_;
};

std::int64_t round_probe(double x) { return static_cast<std::int64_t>(std::llround(x)); }

/// Once the bracket is a few units wide both interior probes can round to
/// the same cutoff, and comparing a cutoff with itself says nothing about
/// where the maximum lies. The new probe then moves one step away from the
/// carried one (towards `side`, or the other way at the domain edge).
std::int64_t distinct_probe(std::int64_t k, std::int64_t carried, int side, std::int64_t n) {
  if (k != carried) return k;
  const std::int64_t there = carried + side;
  if (there >= 1 && there <= n) return there;
  const std::int64_t back = carried - side;
  return back >= 1 && back <= n ? back : k;
}

double normal_pdf(double z) { return 0.3989422804014327 * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

CutoffResult golden_section_search(const CutoffObjective& fss, std::int64_t n, const GssConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("golden section search needs at least 1 iteration");
  Probe probe(fss, n, CutoffMethod::GoldenSection);
  const double phi = kGoldenConjugate;

  double a = 1.0, b = static_cast<double>(n);
  auto& brackets = probe.result().brackets;
  brackets.emplace_back(a, b);
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  std::int64_t k1 = round_probe(x1);
  std::int64_t k2 = distinct_probe(round_probe(x2), k1, +1, n);
  double f1 = probe(k1);
  double f2 = probe(k2);

  for (int it = 1; it <= cfg.iterations; ++it) {
    const bool last = it == cfg.iterations;
    // Compare in cutoff order; equal values keep the smaller cutoff.
    const bool keep_left = k1 <= k2 ? f1 >= f2 : f2 > f1;
    if (keep_left) {
      b = x2;
      x2 = x1;
      k2 = k1;
      f2 = f1;
      x1 = b - phi * (b - a);
      if (!last) {
        k1 = distinct_probe(round_probe(x1), k2, -1, n);
        f1 = probe(k1);
      }
    } else {
      a = x1;
      x1 = x2;
      k1 = k2;
      f1 = f2;
      x2 = a + phi * (b - a);
      if (!last) {
        k2 = distinct_probe(round_probe(x2), k1, +1, n);
        f2 = probe(k2);
      }
    }
    brackets.emplace_back(a, b);
  }

  const auto lo = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(a)), 1, n);
  const auto hi = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(b)), 1, n);
  const double flo = probe(lo);
  const double fhi = probe(hi);
  const std::int64_t strict = fhi > flo ? hi : lo;

  CutoffResult out = probe.finish();
  out.strict_paper_k = strict;
  if (cfg.strict_paper) {
    out.k_star = strict;
    out.fss_at_k_star = probe.values().at(strict);
  }
  return out;
}

CutoffResult bayes_optimize(const CutoffObjective& fss, std::int64_t n, const BayesConfig& cfg) {
  if (cfg.init_points < 2) throw std::invalid_argument("Bayesian optimization needs at least 2 initial points");
  if (cfg.iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(cfg.length_scale > 0.0) || !(cfg.noise >= 0.0)) throw std::invalid_argument("invalid GP hyperparameters");
  Probe probe(fss, n, CutoffMethod::Bayes);

  // Initial design: distinct uniform draws, then both endpoints.
  Rng init_rng(derive_seed(cfg.seed, {0}));
  std::vector<std::int64_t> init;
  const auto draws = std::min<std::int64_t>(cfg.init_points, n);
  std::set<std::int64_t> drawn;
  while (static_cast<std::int64_t>(init.size()) < draws) {
    const auto k = 1 + static_cast<std::int64_t>(init_rng.below(static_cast<std::uint64_t>(n)));
    if (drawn.insert(k).second) init.push_back(k);
  }
  for (std::int64_t k : {std::int64_t{1}, n})
    if (drawn.insert(k).second) init.push_back(k);
  probe.batch(init);

  const double span = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto norm = [span](std::int64_t k) { return static_cast<double>(k - 1) / span; };
  const double two_l2 = 2.0 * cfg.length_scale * cfg.length_scale;

  for (int it = 0; it < cfg.iterations; ++it) {
    if (static_cast<std::int64_t>(probe.count()) >= n) break;
    const auto& obs = probe.values();
    const auto m = static_cast<Eigen::Index>(obs.size());
    Eigen::VectorXd xs(m), ys(m);
    Eigen::Index i = 0;
    for (const auto& [k, v] : obs) {
      xs(i) = norm(k);
      ys(i) = v;
      ++i;
    }
    const double mean = ys.mean();
    const double sd = std::sqrt((ys.array() - mean).square().mean());

    std::int64_t proposal = 0;
    if (sd < 1e-12) {
      // Flat observations carry no signal for the surrogate.
      Rng rng(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(it)}));
      const auto unexplored = n - static_cast<std::int64_t>(obs.size());
      auto pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(unexplored)));
      for (std::int64_t k = 1; k <= n; ++k) {
        if (probe.seen(k)) continue;
        if (pick-- == 0) {
          proposal = k;
          break;
        }
      }
    } else {
      const Eigen::VectorXd yn = (ys.array() - mean) / sd;
      Eigen::MatrixXd kmat(m, m);
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c) kmat(r, c) = std::exp(-(xs(r) - xs(c)) * (xs(r) - xs(c)) / two_l2);
      kmat.diagonal().array() += cfg.noise + 1e-10;
      const Eigen::LLT<Eigen::MatrixXd> llt(kmat);
      const Eigen::VectorXd alpha = llt.solve(yn);
      const double best = yn.maxCoeff();

      double best_ei = -1.0;
      Eigen::VectorXd kx(m);
      for (std::int64_t k = 1; k <= n; ++k) {
        if (probe.seen(k)) continue;
        const double x = norm(k);
        for (Eigen::Index r = 0; r < m; ++r) kx(r) = std::exp(-(x - xs(r)) * (x - xs(r)) / two_l2);
        const double mu = kx.dot(alpha);
        const Eigen::VectorXd v = llt.matrixL().solve(kx);
        const double var = std::max(0.0, 1.0 - v.squaredNorm());
        const double ei = expected_improvement(mu, std::sqrt(var), best, cfg.xi);
        if (ei > best_ei) {
          best_ei = ei;
          proposal = k;
        }
      }
    }
    probe(proposal);
  }
  return probe.finish();
}

double expected_improvement(double mean, double sd, double best, double xi) {
  const double improvement = mean - best - xi;
  if (sd <= 1e-12) return std::max(0.0, improvement);
  const double z = improvement / sd;
  return improvement * normal_cdf(z) + sd * normal_pdf(z);
}

CutoffResult brute_force_cutoff(const CutoffObjective& fss, std::int64_t n) {
  Probe probe(fss, n, CutoffMethod::BruteForce);
  std::vector<std::int64_t> all(static_cast<std::size_t>(n));
  for (std::int64_t k = 1; k <= n; ++k) all[static_cast<std::size_t>(k - 1)] = k;
  probe.batch(all);
  return probe.finish();
}

}  // namespace featurecuts

#pragma once

// Hold-out, Monte-Carlo CV, Agghoo and Agcv over an indexed estimator family.
//
// All reductions over splits run in a canonical order (splits sorted lexicographically by their
// index set), so results do not depend on the order in which subsets are listed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"
#include "agghoo/huber.hpp"

namespace agghoo {

/// Training subsets of a common size n_t drawn from {0, ..., n-1}.
struct SplitScheme {
  std::size_t n = 0;
  std::size_t n_t = 0;
  std::vector<std::vector<std::size_t>> subsets;  // each sorted

  void validate() const {
    if (subsets.empty()) throw DomainError("split scheme has no subsets");
    if (n_t < 1 || n_t >= n) throw DomainError("training size must satisfy 1 <= n_t < n");
    for (const auto& t : subsets) {
      if (t.size() != n_t) throw DomainError("subset size differs from n_t");
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= n) throw DomainError("subset index out of range");
        if (i > 0 && t[i] <= t[i - 1]) throw DomainError("subset indices must be sorted and distinct");
      }
    }
  }

  std::size_t size() const noexcept { return subsets.size(); }

  /// Sorted complement of subset v.
  std::vector<std::size_t> complement(std::size_t v) const {
    std::vector<std::size_t> out;
    out.reserve(n - n_t);
    const auto& t = subsets[v];
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p < t.size() && t[p] == i) {
        ++p;
      } else {
        out.push_back(i);
      }
    }
    return out;
  }
};

namespace detail {
// Uniform integer in [0, bound) by rejection; independent of the standard library's distributions.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}
}  // namespace detail

/// floor(tau n), guarded against representation error in tau.
inline std::size_t training_size(std::size_t n, double tau) {
  if (!(tau > 0.0) || !(tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(tau * static_cast<double>(n) + 1e-9));
}

/// V independent uniform subsets of size floor(tau n). Subsets are drawn one after the other from
/// a single stream, so the first U subsets of a draw with V >= U equal the draw with V = U.
inline SplitScheme monte_carlo_splits(std::size_t n, double tau, std::size_t V, std::uint64_t seed) {
  if (V < 1) throw DomainError("V must be >= 1");
  SplitScheme s;
  s.n = n;
  s.n_t = training_size(n, tau);
  if (s.n_t < 1 || s.n_t >= n) throw DomainError("tau out of range: floor(tau n) must lie in [1, n)");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t v = 0; v < V; ++v) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < s.n_t; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(detail::bounded(rng, n - i));
      std::swap(perm[i], perm[j]);
    }
    std::vector<std::size_t> t(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s.n_t));
    std::sort(t.begin(), t.end());
    s.subsets.push_back(std::move(t));
  }
  return s;
}

/// A trainer mapping a dataset to fits indexed first_index, first_index + 1, ...
struct EstimatorFamily {
  std::function<std::vector<SparseFit>(const Dataset&)> train;
  int first_index = 1;
  std::string name;

  std::vector<SparseFit> fit(const Dataset& data) const {
    if (!train) throw DomainError("estimator family has no trainer");
    auto fits = train(data);
    if (fits.empty()) throw DomainError("estimator family produced no fits");
    return fits;
  }
};

struct Selection {
  int k = 0;  // family label
  SparseFit fit;
  std::vector<double> risks;  // validation risk per family member
};

struct SplitSelection {
  std::vector<std::size_t> train;
  int k = 0;
  SparseFit fit;
};

/// Averaged linear predictor together with the per-split choices behind it.
struct AggregatePredictor {
  double q = 0.0;
  Eigen::VectorXd theta;
  std::vector<SplitSelection> per_split;

  SparseFit as_fit() const { return SparseFit(q, theta); }
};

inline double predict(const SparseFit& f, const Eigen::VectorXd& x) {
  if (x.size() != f.theta.size()) throw DomainError("predict: dimension mismatch");
  return f.q + f.theta.dot(x);
}

inline double predict(const AggregatePredictor& p, const Eigen::VectorXd& x) {
  if (x.size() != p.theta.size()) throw DomainError("predict: dimension mismatch");
  return p.q + p.theta.dot(x);
}

/// Position of the smallest minimum.
inline std::size_t min_argmin(const std::vector<double>& v) {
  if (v.empty()) throw DomainError("min_argmin of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

inline std::vector<double> validation_risks(const HuberParam& c, const std::vector<SparseFit>& fits,
                                            const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(fits.size());
  for (const auto& f : fits) out.push_back(empirical_risk_rows(c, f, data, rows));
  return out;
}

/// Split indices sorted by their index sets; ties keep listing order.
inline std::vector<std::size_t> canonical_order(const SplitScheme& s) {
  std::vector<std::size_t> ord(s.size());
  std::iota(ord.begin(), ord.end(), std::size_t{0});
  std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return s.subsets[a] < s.subsets[b]; });
  return ord;
}

/// Families already trained on each training subset (and optionally on the full data), so that
/// several procedures can share one round of training.
struct TrainedSplits {
  std::vector<std::vector<SparseFit>> per_split;  // aligned with SplitScheme::subsets
  std::vector<SparseFit> full;                    // empty if not trained
  int first_index = 1;
};

inline TrainedSplits train_splits(const EstimatorFamily& family, const Dataset& data, const SplitScheme& splits,
                                  bool with_full) {
  data.validate();
  splits.validate();
  if (splits.n != static_cast<std::size_t>(data.n())) throw DomainError("split scheme does not match data size");
  TrainedSplits ts;
  ts.first_index = family.first_index;
  for (const auto& t : splits.subsets) ts.per_split.push_back(family.fit(data.subset(t)));
  if (with_full) ts.full = family.fit(data);
  for (const auto& f : ts.per_split) {
    if (f.size() != ts.per_split.front().size()) throw DomainError("family size varies across splits");
  }
  if (with_full && ts.full.size() != ts.per_split.front().size()) throw DomainError("family size varies across splits");
  return ts;
}

/// Validation risks of each split's family on that split's complement.
inline std::vector<std::vector<double>> split_risks(const HuberParam& c, const TrainedSplits& ts, const Dataset& data,
                                                    const SplitScheme& splits) {
  std::vector<std::vector<double>> out;
  out.reserve(splits.size());
  for (std::size_t v = 0; v < splits.size(); ++v) {
    const auto val = splits.complement(v);
    out.push_back(validation_risks(c, ts.per_split[v], data, val));
  }
  return out;
}

namespace detail {
inline AggregatePredictor average(const SplitScheme& splits, std::vector<SplitSelection> sel, Eigen::Index d) {
  AggregatePredictor ag;
  ag.theta = Eigen::VectorXd::Zero(d);
  for (std::size_t v : canonical_order(splits)) ag.per_split.push_back(std::move(sel[v]));
  for (const auto& s : ag.per_split) {
    ag.q += s.fit.q;
    ag.theta += s.fit.theta;
  }
  const double V = static_cast<double>(ag.per_split.size());
  ag.q /= V;
  ag.theta /= V;
  return ag;
}
}  // namespace detail

/// Agghoo from pre-trained split families and their validation risks.
inline AggregatePredictor agghoo_from(const TrainedSplits& ts, const std::vector<std::vector<double>>& risks,
                                      const SplitScheme& splits) {
  std::vector<SplitSelection> sel;
  for (std::size_t v = 0; v < splits.size(); ++v) {
    const std::size_t k = min_argmin(risks[v]);
    sel.push_back({splits.subsets[v], ts.first_index + static_cast<int>(k), ts.per_split[v][k]});
  }
  return detail::average(splits, std::move(sel), ts.per_split.front().front().d());
}

/// Agcv: per-split selection, fits taken from the full-data family.
inline AggregatePredictor agcv_from(const TrainedSplits& ts, const std::vector<std::vector<double>>& risks,
                                    const SplitScheme& splits) {
  if (ts.full.empty()) throw DomainError("agcv needs the full-data family");
  std::vector<SplitSelection> sel;
  for (std::size_t v = 0; v < splits.size(); ++v) {
    const std::size_t k = min_argmin(risks[v]);
    sel.push_back({splits.subsets[v], ts.first_index + static_cast<int>(k), ts.full[k]});
  }
  return detail::average(splits, std::move(sel), ts.full.front().d());
}

/// CV: average validation risk over splits per member, smallest minimizer, full-data refit.
inline Selection cv_from(const TrainedSplits& ts, const std::vector<std::vector<double>>& risks,
                         const SplitScheme& splits) {
  if (ts.full.empty()) throw DomainError("cv needs the full-data family");
  const std::size_t K = ts.full.size();
  std::vector<double> mean(K, 0.0);
  for (std::size_t v : canonical_order(splits)) {
    for (std::size_t k = 0; k < K; ++k) mean[k] += risks[v][k];
  }
  for (double& m : mean) m /= static_cast<double>(splits.size());
  const std::size_t k = min_argmin(mean);
  return {ts.first_index + static_cast<int>(k), ts.full[k], std::move(mean)};
}

/// Train on the rows in T, select the member with the smallest validation risk on the rest.
inline Selection holdout_select(const EstimatorFamily& family, const Dataset& data, std::span<const std::size_t> T,
                                const HuberParam& c) {
  SplitScheme one;
  one.n = static_cast<std::size_t>(data.n());
  one.n_t = T.size();
  one.subsets.emplace_back(T.begin(), T.end());
  one.validate();
  const auto fits = family.fit(data.subset(T));
  const auto val = one.complement(0);
  Selection s;
  s.risks = validation_risks(c, fits, data, val);
  const std::size_t k = min_argmin(s.risks);
  s.k = family.first_index + static_cast<int>(k);
  s.fit = fits[k];
  return s;
}

inline AggregatePredictor agghoo(const EstimatorFamily& family, const Dataset& data, const SplitScheme& splits,
                                 const HuberParam& c) {
  const auto ts = train_splits(family, data, splits, false);
  return agghoo_from(ts, split_risks(c, ts, data, splits), splits);
}

inline AggregatePredictor agcv(const EstimatorFamily& family, const Dataset& data, const SplitScheme& splits,
                               const HuberParam& c) {
  const auto ts = train_splits(family, data, splits, true);
  return agcv_from(ts, split_risks(c, ts, data, splits), splits);
}

inline Selection cv_select(const EstimatorFamily& family, const Dataset& data, const SplitScheme& splits,
                           const HuberParam& c) {
  const auto ts = train_splits(family, data, splits, true);
  return cv_from(ts, split_risks(c, ts, data, splits), splits);
}

}  // namespace agghoo

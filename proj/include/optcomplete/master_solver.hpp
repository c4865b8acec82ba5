#pragma once

#include <algorithm>
#include <optional>

#include "optcomplete/evaluator.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete {

/// Pick the size-k support minimizing the pointwise maximum of the cuts:
///   minimize_{|s| = k}  max_c [ value_c + gradient_c . (s - anchor_c) ].
/// Solved exactly by depth-first branch and bound over include/exclude
/// decisions on the feature indices.
template <class Scalar>
struct MasterProblemT {
  Index n_features = 0;
  Index k = 0;
  std::vector<CutT<Scalar>> cuts;
};

template <class Scalar>
struct MasterSolution {
  Support support;
  Scalar eta = Scalar(0);  // pool minimum; a lower bound on the true objective
  std::uint64_t nodes = 0;
};

using MasterProblem = MasterProblemT<double>;

namespace detail {

// Free-standing pieces are shared by the search and by node_lower_bound so
// interior bounds and leaf evaluations follow identical arithmetic: start
// from the cut's precomputed offset and add gradient entries in ascending
// index order.

template <class Scalar>
std::vector<Scalar> cut_offsets(const MasterProblemT<Scalar>& problem) {
  std::vector<Scalar> offsets;
  offsets.reserve(problem.cuts.size());
  for (const auto& cut : problem.cuts) {
    Scalar offset = cut.value;
    for (Index j : cut.anchor.indices) offset -= cut.gradient[j];
    offsets.push_back(offset);
  }
  return offsets;
}

enum : std::int8_t { kFree = 0, kIn = 1, kOut = 2 };

template <class Scalar>
class MasterSearch {
 public:
  MasterSearch(const MasterProblemT<Scalar>& problem)
      : problem_(problem), offsets_(cut_offsets(problem)),
        state_(static_cast<std::size_t>(problem.n_features), kFree),
        free_count_(problem.n_features) {
    in_list_.reserve(static_cast<std::size_t>(problem.k));
  }

  Scalar evaluate(const std::vector<Index>& support) const {
    Scalar best = std::numeric_limits<Scalar>::lowest();
    for (std::size_t c = 0; c < problem_.cuts.size(); ++c) {
      Scalar v = offsets_[c];
      const auto& grad = problem_.cuts[c].gradient;
      for (Index j : support) v += grad[j];
      best = std::max(best, v);
    }
    return best;
  }

  void offer(const std::vector<Index>& support, Scalar value) {
    if (!have_best_ || value < best_value_ ||
        (value == best_value_ &&
         std::lexicographical_compare(support.begin(), support.end(),
                                      best_support_.begin(), best_support_.end()))) {
      have_best_ = true;
      best_value_ = value;
      best_support_ = support;
    }
  }

  // Exact minimum of cut c over supports extending the current fixings, and
  // the minimizing support (ties on gradient value broken by smaller index).
  Scalar cut_greedy_min(std::size_t c, std::vector<Index>& minimizer) {
    const auto& grad = problem_.cuts[c].gradient;
    const std::size_t need =
        static_cast<std::size_t>(problem_.k) - in_list_.size();
    scratch_.clear();
    for (Index j = 0; j < problem_.n_features; ++j)
      if (state_[static_cast<std::size_t>(j)] == kFree)
        scratch_.push_back(j);
    if (need > 0) {
      std::nth_element(scratch_.begin(), scratch_.begin() + (need - 1),
                       scratch_.end(), [&](Index a, Index b) {
                         return grad[a] != grad[b] ? grad[a] < grad[b] : a < b;
                       });
      scratch_.resize(need);
      std::sort(scratch_.begin(), scratch_.end());
    } else {
      scratch_.clear();
    }
    minimizer.clear();
    std::merge(in_list_.begin(), in_list_.end(), scratch_.begin(), scratch_.end(),
               std::back_inserter(minimizer));
    Scalar v = offsets_[c];
    for (Index j : minimizer) v += grad[j];
    return v;
  }

  // Max over cuts of the per-cut greedy minimum; also probes the argmax
  // cut's minimizer as an incumbent candidate.
  Scalar node_bound() {
    Scalar bound = std::numeric_limits<Scalar>::lowest();
    std::size_t argmax = 0;
    for (std::size_t c = 0; c < problem_.cuts.size(); ++c) {
      const Scalar v = cut_greedy_min(c, candidate_);
      if (c == 0 || v > bound) {
        bound = v;
        argmax = c;
      }
    }
    cut_greedy_min(argmax, candidate_);
    offer(candidate_, evaluate(candidate_));
    return bound;
  }

  // Lexicographically smallest support reachable from the current fixings.
  void lex_min_support(std::vector<Index>& out) const {
    const std::size_t need =
        static_cast<std::size_t>(problem_.k) - in_list_.size();
    out.clear();
    std::size_t taken = 0;
    for (Index j = 0; j < problem_.n_features && taken < need; ++j)
      if (state_[static_cast<std::size_t>(j)] == kFree) {
        out.push_back(j);
        ++taken;
      }
    std::vector<Index> merged;
    std::merge(in_list_.begin(), in_list_.end(), out.begin(), out.end(),
               std::back_inserter(merged));
    out = std::move(merged);
  }

  void dfs() {
    ++nodes_;
    const Index in_count = static_cast<Index>(in_list_.size());
    if (in_count == problem_.k) {
      offer(in_list_, evaluate(in_list_));
      return;
    }
    if (in_count + free_count_ == problem_.k) {
      lex_min_support(candidate_);  // all free indices forced in
      offer(candidate_, evaluate(candidate_));
      return;
    }
    const Scalar bound = node_bound();
    if (have_best_) {
      if (bound > best_value_) return;
      if (bound == best_value_) {
        lex_min_support(candidate_);
        if (!std::lexicographical_compare(candidate_.begin(), candidate_.end(),
                                          best_support_.begin(),
                                          best_support_.end()))
          return;
      }
    }
    const Index j = branch_index();
    set_state(j, kIn);
    dfs();
    set_state(j, kOut);
    dfs();
    set_state(j, kFree);
  }

  Index branch_index() const {
    Index best_j = -1;
    Scalar best_spread = Scalar(-1);
    for (Index j = 0; j < problem_.n_features; ++j) {
      if (state_[static_cast<std::size_t>(j)] != kFree) continue;
      Scalar lo = problem_.cuts[0].gradient[j];
      Scalar hi = lo;
      for (std::size_t c = 1; c < problem_.cuts.size(); ++c) {
        const Scalar v = problem_.cuts[c].gradient[j];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_j = j;
      }
    }
    return best_j;
  }

  void set_state(Index j, std::int8_t to) {
    auto& slot = state_[static_cast<std::size_t>(j)];
    if (slot == kIn) {
      in_list_.erase(std::lower_bound(in_list_.begin(), in_list_.end(), j));
    }
    if (slot == kFree) --free_count_;
    slot = to;
    if (to == kFree) ++free_count_;
    if (to == kIn) {
      in_list_.insert(std::lower_bound(in_list_.begin(), in_list_.end(), j), j);
    }
  }

  const MasterProblemT<Scalar>& problem_;
  std::vector<Scalar> offsets_;
  std::vector<std::int8_t> state_;
  Index free_count_ = 0;
  std::vector<Index> in_list_;
  std::vector<Index> scratch_;
  std::vector<Index> candidate_;
  bool have_best_ = false;
  Scalar best_value_ = Scalar(0);
  std::vector<Index> best_support_;
  std::uint64_t nodes_ = 0;
};

template <class Scalar>
void check_master(const MasterProblemT<Scalar>& problem) {
  if (problem.n_features < 1 || problem.k < 1 || problem.k > problem.n_features)
    throw std::invalid_argument("master problem: need 1 <= k <= n_features");
  if (problem.cuts.empty())
    throw std::invalid_argument("master problem: cut pool is empty");
  for (const auto& cut : problem.cuts) {
    if (cut.gradient.size() != problem.n_features)
      throw std::invalid_argument("master problem: cut gradient length mismatch");
    cut.anchor.require_valid(problem.n_features);
  }
}

}  // namespace detail

/// Exact minimizer of the cut pool. `warm` (when valid) seeds the incumbent;
/// it never changes the returned solution, only the node count.
template <class Scalar>
MasterSolution<Scalar> solve_master(const MasterProblemT<Scalar>& problem,
                                    std::optional<Support> warm = {}) {
  detail::check_master(problem);
  detail::MasterSearch<Scalar> search(problem);
  if (warm && warm->k() == problem.k) {
    warm->require_valid(problem.n_features);
    search.offer(warm->indices, search.evaluate(warm->indices));
  }
  search.dfs();
  MasterSolution<Scalar> out;
  out.support.indices = search.best_support_;
  out.eta = search.best_value_;
  out.nodes = search.nodes_;
  return out;
}

/// Greedy relaxation bound for the subtree where `fixed_in` must be selected
/// and `fixed_out` must not. std::nullopt when the subtree is empty. The
/// bound never exceeds the best pool value attainable in the subtree.
template <class Scalar>
std::optional<Scalar> node_lower_bound(const MasterProblemT<Scalar>& problem,
                                       const std::vector<Index>& fixed_in,
                                       const std::vector<Index>& fixed_out) {
  detail::check_master(problem);
  detail::MasterSearch<Scalar> search(problem);
  for (Index j : fixed_in) {
    if (j < 0 || j >= problem.n_features)
      throw std::invalid_argument("node_lower_bound: index out of range");
    if (search.state_[static_cast<std::size_t>(j)] == detail::kIn)
      throw std::invalid_argument("node_lower_bound: duplicate fixed_in index");
    search.set_state(j, detail::kIn);
  }
  for (Index j : fixed_out) {
    if (j < 0 || j >= problem.n_features)
      throw std::invalid_argument("node_lower_bound: index out of range");
    if (search.state_[static_cast<std::size_t>(j)] != detail::kFree)
      throw std::invalid_argument("node_lower_bound: contradictory fixings");
    search.set_state(j, detail::kOut);
  }
  const Index in_count = static_cast<Index>(search.in_list_.size());
  if (in_count > problem.k || in_count + search.free_count_ < problem.k)
    return std::nullopt;
  Scalar bound = std::numeric_limits<Scalar>::lowest();
  std::vector<Index> scratch;
  for (std::size_t c = 0; c < problem.cuts.size(); ++c)
    bound = std::max(bound, search.cut_greedy_min(c, scratch));
  return bound;
}

}  // namespace optcomplete

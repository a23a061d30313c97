#include <algorithm>
#include <cmath>
#include <limits>

#include "metaabd/fd/store.hpp"

namespace metaabd::fd {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPruneSlack = 1e-9;

double max_weight(const ConstraintStore& s, const Domain& d, VarIndex i) {
  double best = kNegInf;
  d.for_each([&](std::int64_t v) { best = std::max(best, s.weight(i, v)); });
  return best;
}

// Is there any assignment of the remaining (unweighted) variables? Splits
// the widest open domain in half, so huge product ranges stay cheap.
bool satisfiable(const ConstraintStore& s, std::vector<Domain>& d, SolveStats& st, std::uint64_t budget) {
  if (!s.propagate(d)) return false;
  VarIndex pick = d.size();
  for (VarIndex i = 0; i < d.size(); ++i) {
    if (!d[i].fixed() && (pick == d.size() || d[i].size() < d[pick].size())) pick = i;
  }
  if (pick == d.size()) return true;
  if (st.nodes >= budget) {
    st.truncated = true;
    return false;
  }
  ++st.nodes;
  const std::int64_t lo = d[pick].min(), hi = d[pick].max();
  const std::int64_t mid = lo + (hi - lo) / 2;
  std::vector<Domain> left = d;
  left[pick].restrict(lo, mid);
  if (satisfiable(s, left, st, budget)) return true;
  d[pick].restrict(mid + 1, hi);
  return satisfiable(s, d, st, budget);
}

class BestSearch {
 public:
  BestSearch(const ConstraintStore& s, SolveStats& st, const SolveOptions& o) : s_(s), st_(st), o_(o) {
    order_ = s.weighted_vars();
    std::stable_sort(order_.begin(), order_.end(), [&](VarIndex a, VarIndex b) {
      return max_weight(s, s.domain(a), a) > max_weight(s, s.domain(b), b);
    });
    current_.reserve(order_.size());
  }

  std::optional<Labeling> run() {
    std::vector<Domain> d = s_.domains();
    if (!s_.propagate(d)) return std::nullopt;
    dfs(d, 0, 0.0);
    return best_;
  }

 private:
  double optimistic(const std::vector<Domain>& d, std::size_t from) const {
    double total = 0.0;
    for (std::size_t k = from; k < order_.size(); ++k) total += max_weight(s_, d[order_[k]], order_[k]);
    return total;
  }

  void dfs(std::vector<Domain>& d, std::size_t depth, double partial) {
    if (st_.truncated) return;
    if (depth == order_.size()) {
      leaf(d);
      return;
    }
    const VarIndex var = order_[depth];
    std::vector<std::int64_t> values = d[var].values();
    std::stable_sort(values.begin(), values.end(),
                     [&](std::int64_t a, std::int64_t b) { return s_.weight(var, a) > s_.weight(var, b); });
    const double rest = optimistic(d, depth + 1);
    for (std::int64_t v : values) {
      const double w = s_.weight(var, v);
      if (best_ && partial + w + rest < best_->log_prob - kPruneSlack) break;
      if (st_.nodes >= o_.node_budget) {
        st_.truncated = true;
        return;
      }
      ++st_.nodes;
      std::vector<Domain> child = d;
      child[var].assign(v);
      if (!s_.propagate(child)) continue;
      current_.emplace_back(var, v);
      dfs(child, depth + 1, partial + w);
      current_.pop_back();
    }
  }

  void leaf(std::vector<Domain>& d) {
    ++st_.leaves;
    Labeling cand;
    cand.assignment = current_;
    std::sort(cand.assignment.begin(), cand.assignment.end());
    cand.log_prob = score(s_, cand.assignment);
    if (best_ && !better(cand, *best_, o_.tie_epsilon)) return;
    std::vector<Domain> rest = d;
    if (!satisfiable(s_, rest, st_, o_.node_budget)) return;
    best_ = std::move(cand);
  }

  const ConstraintStore& s_;
  SolveStats& st_;
  const SolveOptions& o_;
  std::vector<VarIndex> order_;
  std::vector<std::pair<VarIndex, std::int64_t>> current_;
  std::optional<Labeling> best_;
};

}  // namespace

double score(const ConstraintStore& store, const std::vector<std::pair<VarIndex, std::int64_t>>& a) {
  double total = 0.0;
  for (const auto& [i, v] : a) total += store.weight(i, v);
  return total;
}

bool better(const Labeling& a, const Labeling& b, double eps) {
  if (a.log_prob > b.log_prob + eps) return true;
  if (b.log_prob > a.log_prob + eps) return false;
  return a.assignment < b.assignment;
}

std::optional<Labeling> solve_best(const ConstraintStore& store, SolveStats* stats, const SolveOptions& opts) {
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  if (!store.feasible()) return std::nullopt;
  return BestSearch(store, st, opts).run();
}

SolveAllResult solve_all(const ConstraintStore& store, std::size_t cap) {
  SolveAllResult out;
  if (!store.feasible()) return out;
  const std::vector<VarIndex> order = store.weighted_vars();
  std::vector<std::pair<VarIndex, std::int64_t>> current;
  SolveStats st;

  auto rec = [&](auto&& self, std::vector<Domain>& d, std::size_t depth) -> void {
    if (out.truncated) return;
    if (depth == order.size()) {
      std::vector<Domain> rest = d;
      if (!satisfiable(store, rest, st, std::numeric_limits<std::uint64_t>::max())) return;
      if (out.labelings.size() >= cap) {
        out.truncated = true;
        return;
      }
      out.labelings.push_back({current, score(store, current)});
      return;
    }
    const VarIndex var = order[depth];
    for (std::int64_t v : d[var].values()) {
      std::vector<Domain> child = d;
      child[var].assign(v);
      if (!store.propagate(child)) continue;
      current.emplace_back(var, v);
      self(self, child, depth + 1);
      current.pop_back();
    }
  };
  std::vector<Domain> d = store.domains();
  if (!store.propagate(d)) return out;
  rec(rec, d, 0);
  std::sort(out.labelings.begin(), out.labelings.end(),
            [](const Labeling& a, const Labeling& b) { return better(a, b); });
  return out;
}

}  // namespace metaabd::fd

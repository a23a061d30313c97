#include "metaabd/fd/store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace metaabd::fd {
namespace {

constexpr std::int64_t kBig = std::numeric_limits<std::int64_t>::max() / 4;
constexpr std::uint64_t kSupportLimit = 4096;

std::int64_t clamp_big(std::int64_t v) { return std::clamp(v, -kBig, kBig); }

std::int64_t sat_mul(std::int64_t a, std::int64_t b) {
  std::int64_t p;
  if (__builtin_mul_overflow(a, b, &p)) return (a < 0) != (b < 0) ? -kBig : kBig;
  return clamp_big(p);
}

// operands are already within +-kBig, so the plain sum cannot overflow
std::int64_t sat_add(std::int64_t a, std::int64_t b) { return clamp_big(a + b); }

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a / b + ((a % b != 0) && ((a > 0) == (b > 0))); }

struct ValueSet {
  std::vector<std::int64_t> v;
  void finish() {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  bool has(std::int64_t x) const { return std::binary_search(v.begin(), v.end(), x); }
};

// Keeps only values taking part in some (x, y, op(x,y)) triple. Only run
// when |x|*|y| is small, which at digit scale is nearly always.
template <typename Op>
bool support_filter(Domain& x, Domain& y, Domain& z, Op op, bool& changed) {
  if (x.size() * y.size() > kSupportLimit) return true;
  ValueSet sx, sy, sz;
  x.for_each([&](std::int64_t a) {
    y.for_each([&](std::int64_t b) {
      const std::int64_t c = op(a, b);
      if (z.contains(c)) {
        sx.v.push_back(a);
        sy.v.push_back(b);
        sz.v.push_back(c);
      }
    });
  });
  sx.finish();
  sy.finish();
  sz.finish();
  changed |= x.filter([&](std::int64_t a) { return sx.has(a); });
  changed |= y.filter([&](std::int64_t b) { return sy.has(b); });
  changed |= z.filter([&](std::int64_t c) { return sz.has(c); });
  return !x.empty() && !y.empty() && !z.empty();
}

bool revise_add(std::vector<Domain>& d, const Add& c, bool& changed) {
  Domain& x = d[c.x];
  Domain& y = d[c.y];
  Domain& z = d[c.z];
  changed |= z.restrict(sat_add(x.min(), y.min()), sat_add(x.max(), y.max()));
  if (z.empty()) return false;
  changed |= x.restrict(sat_add(z.min(), -y.max()), sat_add(z.max(), -y.min()));
  if (x.empty()) return false;
  changed |= y.restrict(sat_add(z.min(), -x.max()), sat_add(z.max(), -x.min()));
  if (y.empty()) return false;
  return support_filter(x, y, z, [](std::int64_t a, std::int64_t b) { return sat_add(a, b); }, changed);
}

// Divisor-style bounds for x in x*y=z over nonnegative domains.
bool mul_bounds(Domain& x, const Domain& y, const Domain& z, bool& changed) {
  if (z.min() > 0) {
    changed |= x.restrict(1, kBig);
    if (y.max() > 0) changed |= x.restrict(ceil_div(z.min(), y.max()), kBig);
  }
  if (y.min() > 0) changed |= x.restrict(-kBig, z.max() / y.min());
  return !x.empty();
}

bool revise_mul(std::vector<Domain>& d, const Mul& c, bool& changed) {
  Domain& x = d[c.x];
  Domain& y = d[c.y];
  Domain& z = d[c.z];
  if (x.min() < 0 || y.min() < 0 || z.min() < 0) {
    throw std::logic_error("multiplication constraint needs nonnegative domains");
  }
  changed |= z.restrict(sat_mul(x.min(), y.min()), sat_mul(x.max(), y.max()));
  if (z.empty()) return false;
  if (!mul_bounds(x, y, z, changed) || !mul_bounds(y, x, z, changed)) return false;
  return support_filter(x, y, z, [](std::int64_t a, std::int64_t b) { return sat_mul(a, b); }, changed);
}

std::string var_name(const ConstraintStore& s, VarIndex i) {
  return (s.weighted(i) ? "x" : "v") + std::to_string(i);
}

}  // namespace

VarIndex ConstraintStore::add_var(std::int64_t lo, std::int64_t hi) {
  domains_.emplace_back(lo, hi);
  weights_.emplace_back();
  if (domains_.back().empty()) feasible_ = false;
  return domains_.size() - 1;
}

VarIndex ConstraintStore::add_weighted_var(std::vector<double> log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("weighted variable needs at least one value");
  Domain d(0, static_cast<std::int64_t>(log_weights.size()) - 1);
  for (std::size_t v = 0; v < log_weights.size(); ++v) {
    if (std::isnan(log_weights[v])) throw std::invalid_argument("NaN weight");
    if (log_weights[v] == -std::numeric_limits<double>::infinity()) d.remove(static_cast<std::int64_t>(v));
  }
  if (d.empty()) feasible_ = false;
  domains_.push_back(std::move(d));
  weights_.push_back(std::move(log_weights));
  return domains_.size() - 1;
}

bool ConstraintStore::post(const Constraint& c) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        const std::size_t n = domains_.size();
        if constexpr (std::is_same_v<K, EqConst>) {
          if (k.x >= n) throw std::out_of_range("constraint references unknown variable");
        } else {
          if (k.x >= n || k.y >= n || k.z >= n) throw std::out_of_range("constraint references unknown variable");
        }
      },
      c);
  constraints_.push_back(c);
  return propagate();
}

bool ConstraintStore::propagate() {
  if (!feasible_) return false;
  feasible_ = propagate(domains_);
  return feasible_;
}

bool ConstraintStore::propagate(std::vector<Domain>& d) const {
  for (const Domain& dom : d) {
    if (dom.empty()) return false;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Constraint& c : constraints_) {
      bool ok = std::visit(
          [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Add>) {
              return revise_add(d, k, changed);
            } else if constexpr (std::is_same_v<K, Mul>) {
              return revise_mul(d, k, changed);
            } else {
              changed |= d[k.x].assign(k.c);
              return !d[k.x].empty();
            }
          },
          c);
      if (!ok) return false;
    }
  }
  return true;
}

bool ConstraintStore::assign(VarIndex i, std::int64_t v) { return restrict(i, v, v); }

bool ConstraintStore::restrict(VarIndex i, std::int64_t lo, std::int64_t hi) {
  if (!feasible_) return false;
  domains_[i].restrict(lo, hi);
  return propagate();
}

std::vector<VarIndex> ConstraintStore::weighted_vars() const {
  std::vector<VarIndex> out;
  for (VarIndex i = 0; i < domains_.size(); ++i) {
    if (weighted(i)) out.push_back(i);
  }
  return out;
}

std::string ConstraintStore::dump() const {
  std::ostringstream out;
  for (const Constraint& c : constraints_) {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, EqConst>) {
            out << var_name(*this, k.x) << "#=" << k.c << '\n';
          } else {
            const char op = std::is_same_v<K, Add> ? '+' : '*';
            out << var_name(*this, k.x) << op << var_name(*this, k.y) << "#=" << var_name(*this, k.z) << '\n';
          }
        },
        c);
  }
  return out.str();
}

}  // namespace metaabd::fd

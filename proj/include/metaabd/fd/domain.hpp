#pragma once

#include <cstdint>
#include <vector>

namespace metaabd::fd {

// Integer set: an interval, plus a hole bitset when the initial range is
// narrow enough to make one affordable. Wide domains are bounds-only.
class Domain {
 public:
  static constexpr std::int64_t kBitsetLimit = 4096;

  Domain() : Domain(0, -1) {}
  Domain(std::int64_t lo, std::int64_t hi);

  bool empty() const { return lo_ > hi_; }
  bool fixed() const { return lo_ == hi_; }
  std::int64_t min() const { return lo_; }
  std::int64_t max() const { return hi_; }
  std::uint64_t size() const;
  bool tracks_holes() const { return !bits_.empty(); }
  bool contains(std::int64_t v) const;

  // Each returns true iff the domain changed.
  bool restrict(std::int64_t lo, std::int64_t hi);
  bool remove(std::int64_t v);
  bool assign(std::int64_t v) { return restrict(v, v); }
  // Keeps only values for which keep(v) is true. Bounds-only domains can
  // just shrink their ends, so only the new min and max get tested there.
  template <typename Pred>
  bool filter(Pred keep);

  template <typename F>
  void for_each(F f) const {
    for (std::int64_t v = lo_; v <= hi_; ++v) {
      if (!tracks_holes() || bit(v)) f(v);
    }
  }
  std::vector<std::int64_t> values() const;

  friend bool operator==(const Domain& a, const Domain& b);

 private:
  bool bit(std::int64_t v) const {
    const auto i = static_cast<std::uint64_t>(v - base_);
    return (bits_[i >> 6] >> (i & 63)) & 1U;
  }
  void clear_bit(std::int64_t v) {
    const auto i = static_cast<std::uint64_t>(v - base_);
    bits_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }
  void tighten();

  std::int64_t base_ = 0;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = -1;
  std::uint64_t count_ = 0;  // only maintained with a bitset
  std::vector<std::uint64_t> bits_;
};

template <typename Pred>
bool Domain::filter(Pred keep) {
  if (empty()) return false;
  if (tracks_holes()) {
    bool changed = false;
    for (std::int64_t v = lo_; v <= hi_; ++v) {
      if (bit(v) && !keep(v)) {
        clear_bit(v);
        --count_;
        changed = true;
      }
    }
    if (changed) tighten();
    return changed;
  }
  std::int64_t lo = lo_, hi = hi_;
  while (lo <= hi && !keep(lo)) ++lo;
  while (hi >= lo && !keep(hi)) --hi;
  return restrict(lo, hi);
}

}  // namespace metaabd::fd

#include "metaabd/fd/domain.hpp"

#include <algorithm>

namespace metaabd::fd {

Domain::Domain(std::int64_t lo, std::int64_t hi) : base_(lo), lo_(lo), hi_(hi) {
  if (lo > hi) return;
  const std::uint64_t width = static_cast<std::uint64_t>(hi - lo) + 1;
  if (width <= static_cast<std::uint64_t>(kBitsetLimit)) {
    bits_.assign((width + 63) / 64, ~std::uint64_t{0});
    count_ = width;
  }
}

std::uint64_t Domain::size() const {
  if (empty()) return 0;
  if (tracks_holes()) return count_;
  return static_cast<std::uint64_t>(hi_ - lo_) + 1;
}

bool Domain::contains(std::int64_t v) const {
  if (v < lo_ || v > hi_) return false;
  return !tracks_holes() || bit(v);
}

void Domain::tighten() {
  if (count_ == 0) {
    lo_ = 0;
    hi_ = -1;
    return;
  }
  while (!bit(lo_)) ++lo_;
  while (!bit(hi_)) --hi_;
}

bool Domain::restrict(std::int64_t lo, std::int64_t hi) {
  if (empty()) return false;
  if (lo <= lo_ && hi >= hi_) return false;
  if (lo > hi || lo > hi_ || hi < lo_) {
    lo_ = 0;
    hi_ = -1;
    count_ = 0;
    return true;
  }
  if (tracks_holes()) {
    for (std::int64_t v = lo_; v < lo; ++v) {
      if (bit(v)) {
        clear_bit(v);
        --count_;
      }
    }
    for (std::int64_t v = hi + 1; v <= hi_; ++v) {
      if (bit(v)) {
        clear_bit(v);
        --count_;
      }
    }
    lo_ = std::max(lo, lo_);
    hi_ = std::min(hi, hi_);
    tighten();
    return true;
  }
  lo_ = std::max(lo, lo_);
  hi_ = std::min(hi, hi_);
  return true;
}

bool Domain::remove(std::int64_t v) {
  if (!contains(v)) return false;
  if (!tracks_holes()) {
    if (v == lo_) return restrict(lo_ + 1, hi_);
    if (v == hi_) return restrict(lo_, hi_ - 1);
    return false;  // interior hole not representable; bounds-only domain
  }
  clear_bit(v);
  --count_;
  tighten();
  return true;
}

std::vector<std::int64_t> Domain::values() const {
  std::vector<std::int64_t> out;
  for_each([&](std::int64_t v) { out.push_back(v); });
  return out;
}

bool operator==(const Domain& a, const Domain& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  if (a.min() != b.min() || a.max() != b.max() || a.size() != b.size()) return false;
  for (std::int64_t v = a.min(); v <= a.max(); ++v) {
    if (a.contains(v) != b.contains(v)) return false;
  }
  return true;
}

}  // namespace metaabd::fd

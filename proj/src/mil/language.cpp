#include "metaabd/mil/language.hpp"

#include <algorithm>
#include <charconv>
#include <mutex>

namespace metaabd::mil {

const Abducible* Language::abducible(const logic::PredKey& k) const {
  for (const Abducible& a : abducibles) {
    if (a.key() == k) return &a;
  }
  return nullptr;
}

bool Language::is_target(const logic::PredKey& k) const {
  return std::find(targets.begin(), targets.end(), k) != targets.end();
}

bool Language::is_covered_call(const logic::PredKey& k) const {
  return std::find(covered_calls.begin(), covered_calls.end(), k) != covered_calls.end();
}

bool Language::uses_constraints() const {
  return std::any_of(abducibles.begin(), abducibles.end(),
                     [](const Abducible& a) { return a.kind != AbducibleKind::PairFact; });
}

logic::Symbol item_symbol(std::size_t i) {
  static std::mutex mu;
  static std::vector<logic::Symbol> cache;
  std::lock_guard lock(mu);
  while (cache.size() <= i) cache.push_back(logic::Symbol::intern("x" + std::to_string(cache.size())));
  return cache[i];
}

std::optional<std::size_t> item_index(logic::Symbol s) {
  const std::string_view n = s.name();
  if (n.size() < 2 || n[0] != 'x') return std::nullopt;
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(n.data() + 1, n.data() + n.size(), v);
  if (ec != std::errc() || p != n.data() + n.size()) return std::nullopt;
  if (n.size() > 2 && n[1] == '0') return std::nullopt;
  return v;
}

}  // namespace metaabd::mil

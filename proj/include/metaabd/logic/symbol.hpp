#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace metaabd::logic {

// Interned name. Two symbols are equal iff their names are equal.
class Symbol {
 public:
  Symbol() = default;

  static Symbol intern(std::string_view name);

  const std::string& name() const;
  std::uint32_t id() const { return id_; }
  bool empty() const { return id_ == 0; }

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  friend auto operator<=>(Symbol a, Symbol b) { return a.id_ <=> b.id_; }

 private:
  explicit Symbol(std::uint32_t id) : id_(id) {}
  std::uint32_t id_ = 0;
};

// Predicate key: name plus arity.
struct PredKey {
  Symbol name;
  std::size_t arity = 0;

  friend bool operator==(const PredKey&, const PredKey&) = default;
  friend auto operator<=>(const PredKey& a, const PredKey& b) {
    if (auto c = a.name.name() <=> b.name.name(); c != 0) return c;
    return a.arity <=> b.arity;
  }
};

std::string to_string(const PredKey& key);

}  // namespace metaabd::logic

template <>
struct std::hash<metaabd::logic::Symbol> {
  std::size_t operator()(metaabd::logic::Symbol s) const noexcept { return s.id(); }
};

template <>
struct std::hash<metaabd::logic::PredKey> {
  std::size_t operator()(const metaabd::logic::PredKey& k) const noexcept {
    return (static_cast<std::size_t>(k.name.id()) << 8) ^ k.arity;
  }
};

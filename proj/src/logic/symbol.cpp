#include "metaabd/logic/symbol.hpp"

#include <deque>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace metaabd::logic {
namespace {

class SymbolTable {
 public:
  SymbolTable() { names_.emplace_back(); }

  std::uint32_t intern(std::string_view name) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(names_.size());
    const std::string& stored = names_.emplace_back(name);
    ids_.emplace(std::string_view(stored), id);
    return id;
  }

  const std::string& name(std::uint32_t id) const {
    std::shared_lock lock(mutex_);
    return names_[id];
  }

 private:
  mutable std::shared_mutex mutex_;
  std::deque<std::string> names_;  // deque keeps references stable
  std::unordered_map<std::string_view, std::uint32_t> ids_;
};

SymbolTable& table() {
  static SymbolTable instance;
  return instance;
}

}  // namespace

Symbol Symbol::intern(std::string_view name) { return Symbol(table().intern(name)); }

const std::string& Symbol::name() const { return table().name(id_); }

std::string to_string(const PredKey& key) {
  return key.name.name() + "/" + std::to_string(key.arity);
}

}  // namespace metaabd::logic

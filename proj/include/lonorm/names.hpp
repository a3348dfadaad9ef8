#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace lonorm {

// Variables are integer ids. Display names live in a side table and only
// matter for printing; equality, scoping and environment lookup go by id.
struct VarId {
  std::uint32_t raw = 0;

  friend bool operator==(VarId a, VarId b) { return a.raw == b.raw; }
  friend bool operator!=(VarId a, VarId b) { return a.raw != b.raw; }
  friend bool operator<(VarId a, VarId b) { return a.raw < b.raw; }
};

// Monotone fresh-id supply. Global so that ids never collide across parses,
// renamings and machine runs within one process. Guarded by a mutex; the
// tooling is effectively single-threaded but the guard is cheap.
class NameSupply {
 public:
  static NameSupply& instance() {
    static NameSupply s;
    return s;
  }

  VarId fresh(std::string_view hint) {
    std::lock_guard<std::mutex> lock(mu_);
    hints_.emplace_back(hint.empty() ? "v" : hint);
    return VarId{static_cast<std::uint32_t>(hints_.size() - 1)};
  }

  std::string hint(VarId v) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (v.raw < hints_.size()) return hints_[v.raw];
    return "v" + std::to_string(v.raw);
  }

 private:
  NameSupply() {
    hints_.emplace_back("*");  // id 0 is the reserved name-erasure marker
  }

  mutable std::mutex mu_;
  std::vector<std::string> hints_;
};

// The marker every variable collapses to when comparing terms up to names.
inline VarId name_marker() { return VarId{0}; }

inline VarId fresh_var(std::string_view hint) {
  return NameSupply::instance().fresh(hint);
}

inline std::string var_hint(VarId v) { return NameSupply::instance().hint(v); }

}  // namespace lonorm

template <>
struct std::hash<lonorm::VarId> {
  std::size_t operator()(lonorm::VarId v) const noexcept {
    return std::hash<std::uint32_t>{}(v.raw);
  }
};

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lonorm/names.hpp"

namespace lonorm {

// Plain lambda terms. Nodes are immutable and shared: decomposing a term is
// pointer copying, rebuilding allocates only the new spine.
struct PureTerm;
using TermPtr = std::shared_ptr<const PureTerm>;

struct PureTerm {
  enum class Tag { Var, Lam, App };

  Tag tag;
  VarId var{};         // Var: the occurrence; Lam: the binder
  TermPtr a, b;        // Lam: a = body; App: a = function, b = argument
  std::uint64_t size;  // constructor count, cached so measures are O(1)
};

inline TermPtr mk_var(VarId v) {
  return std::make_shared<PureTerm>(PureTerm{PureTerm::Tag::Var, v, nullptr, nullptr, 1});
}

inline TermPtr mk_lam(VarId binder, TermPtr body) {
  auto sz = 1 + body->size;
  return std::make_shared<PureTerm>(PureTerm{PureTerm::Tag::Lam, binder, std::move(body), nullptr, sz});
}

inline TermPtr mk_app(TermPtr fun, TermPtr arg) {
  auto sz = 1 + fun->size + arg->size;
  return std::make_shared<PureTerm>(PureTerm{PureTerm::Tag::App, VarId{}, std::move(fun), std::move(arg), sz});
}

// Size counts every constructor: |x| = 1, |\x. t| = 1 + |t|, |t u| = 1 + |t| + |u|.
inline std::uint64_t size(const TermPtr& t) { return t->size; }

namespace detail {

inline void free_vars_into(const TermPtr& t, std::set<VarId>& out,
                           std::unordered_set<VarId>& bound) {
  switch (t->tag) {
    case PureTerm::Tag::Var:
      if (!bound.count(t->var)) out.insert(t->var);
      break;
    case PureTerm::Tag::Lam: {
      bool fresh = bound.insert(t->var).second;
      free_vars_into(t->a, out, bound);
      if (fresh) bound.erase(t->var);
      break;
    }
    case PureTerm::Tag::App:
      free_vars_into(t->a, out, bound);
      free_vars_into(t->b, out, bound);
      break;
  }
}

}  // namespace detail

inline std::set<VarId> free_vars(const TermPtr& t) {
  std::set<VarId> out;
  std::unordered_set<VarId> bound;
  detail::free_vars_into(t, out, bound);
  return out;
}

inline bool occurs_free(const TermPtr& t, VarId x) {
  switch (t->tag) {
    case PureTerm::Tag::Var: return t->var == x;
    case PureTerm::Tag::Lam: return t->var != x && occurs_free(t->a, x);
    case PureTerm::Tag::App: return occurs_free(t->a, x) || occurs_free(t->b, x);
  }
  return false;
}

inline bool is_closed(const TermPtr& t) { return free_vars(t).empty(); }

namespace detail {

inline bool alpha_eq_rec(const TermPtr& t, const TermPtr& u,
                         std::unordered_map<VarId, std::uint32_t>& lt,
                         std::unordered_map<VarId, std::uint32_t>& lu,
                         std::uint32_t depth) {
  if (t->tag != u->tag) return false;
  switch (t->tag) {
    case PureTerm::Tag::Var: {
      auto it = lt.find(t->var);
      auto iu = lu.find(u->var);
      if (it != lt.end() || iu != lu.end())
        return it != lt.end() && iu != lu.end() && it->second == iu->second;
      return t->var == u->var;  // free on both sides: ids must match
    }
    case PureTerm::Tag::Lam: {
      auto st = lt.find(t->var);
      auto su = lu.find(u->var);
      auto old_t = st != lt.end() ? std::optional(st->second) : std::nullopt;
      auto old_u = su != lu.end() ? std::optional(su->second) : std::nullopt;
      lt[t->var] = depth;
      lu[u->var] = depth;
      bool ok = alpha_eq_rec(t->a, u->a, lt, lu, depth + 1);
      if (old_t) lt[t->var] = *old_t; else lt.erase(t->var);
      if (old_u) lu[u->var] = *old_u; else lu.erase(u->var);
      return ok;
    }
    case PureTerm::Tag::App:
      return alpha_eq_rec(t->a, u->a, lt, lu, depth) &&
             alpha_eq_rec(t->b, u->b, lt, lu, depth);
  }
  return false;
}

}  // namespace detail

// Alpha-equivalence: bound variables matched by binding depth, free variables
// by id. (\x. x y) and (\z. z y) are equal; x and z as free occurrences are not.
inline bool alpha_eq(const TermPtr& t, const TermPtr& u) {
  if (t == u) return true;
  std::unordered_map<VarId, std::uint32_t> lt, lu;
  return detail::alpha_eq_rec(t, u, lt, lu, 1);
}

// Exact structural equality, ids included. Distillation checks use this: most
// machine steps leave the readback literally unchanged, not just alpha-equal.
inline bool structural_eq(const TermPtr& t, const TermPtr& u) {
  if (t == u) return true;
  if (t->tag != u->tag) return false;
  switch (t->tag) {
    case PureTerm::Tag::Var: return t->var == u->var;
    case PureTerm::Tag::Lam: return t->var == u->var && structural_eq(t->a, u->a);
    case PureTerm::Tag::App:
      return structural_eq(t->a, u->a) && structural_eq(t->b, u->b);
  }
  return false;
}

namespace detail {

inline TermPtr rename_binders(const TermPtr& t,
                              std::unordered_map<VarId, VarId>& scope,
                              bool only_clashing,
                              const std::unordered_set<VarId>* avoid) {
  switch (t->tag) {
    case PureTerm::Tag::Var: {
      auto it = scope.find(t->var);
      return it != scope.end() ? mk_var(it->second) : t;
    }
    case PureTerm::Tag::Lam: {
      VarId fresh = t->var;
      bool rename = !only_clashing || (avoid && avoid->count(t->var));
      if (rename) fresh = fresh_var(var_hint(t->var));
      auto it = scope.find(t->var);
      auto saved = it != scope.end() ? std::optional(it->second) : std::nullopt;
      if (rename) scope[t->var] = fresh;
      auto body = rename_binders(t->a, scope, only_clashing, avoid);
      if (rename) {
        if (saved) scope[t->var] = *saved; else scope.erase(t->var);
      }
      return mk_lam(fresh, body);
    }
    case PureTerm::Tag::App: {
      auto fun = rename_binders(t->a, scope, only_clashing, avoid);
      auto arg = rename_binders(t->b, scope, only_clashing, avoid);
      return mk_app(fun, arg);
    }
  }
  throw std::logic_error("rename_binders: bad tag");
}

}  // namespace detail

// Fresh copy: every binder replaced by a fresh id, free variables untouched.
// Alpha-equal to the input by construction.
inline TermPtr rename_fresh(const TermPtr& t) {
  std::unordered_map<VarId, VarId> scope;
  return detail::rename_binders(t, scope, /*only_clashing=*/false, nullptr);
}

// Well-named: all binders pairwise distinct and distinct from every free
// variable. rename_fresh establishes this (fresh ids never collide), so
// well_name is that plus a name: the entry point used on machine input.
inline TermPtr well_name(const TermPtr& t) { return rename_fresh(t); }

inline void collect_binders(const TermPtr& t, std::vector<VarId>& out) {
  switch (t->tag) {
    case PureTerm::Tag::Var: return;
    case PureTerm::Tag::Lam:
      out.push_back(t->var);
      collect_binders(t->a, out);
      return;
    case PureTerm::Tag::App:
      collect_binders(t->a, out);
      collect_binders(t->b, out);
      return;
  }
}

inline bool is_well_named(const TermPtr& t) {
  std::vector<VarId> binders;
  collect_binders(t, binders);
  std::unordered_set<VarId> seen;
  for (auto v : binders)
    if (!seen.insert(v).second) return false;
  for (auto v : free_vars(t))
    if (seen.count(v)) return false;
  return true;
}

// Name erasure: every occurrence and binder becomes the fixed marker. Two
// terms have equal skeletons iff they coincide up to all naming.
inline TermPtr skeleton(const TermPtr& t) {
  switch (t->tag) {
    case PureTerm::Tag::Var: return mk_var(name_marker());
    case PureTerm::Tag::Lam: return mk_lam(name_marker(), skeleton(t->a));
    case PureTerm::Tag::App: return mk_app(skeleton(t->a), skeleton(t->b));
  }
  throw std::logic_error("skeleton: bad tag");
}

namespace detail {

inline bool skel_eq(const TermPtr& u, const TermPtr& t) {
  if (u->tag != t->tag) return false;
  switch (u->tag) {
    case PureTerm::Tag::Var: return true;
    case PureTerm::Tag::Lam: return skel_eq(u->a, t->a);
    case PureTerm::Tag::App: return skel_eq(u->a, t->a) && skel_eq(u->b, t->b);
  }
  return false;
}

}  // namespace detail

// Is u, with all names erased, a subtree of t with all names erased? This is
// the sense in which machine codes stay fragments of the initial term even
// though renaming refreshes their binders.
inline bool is_subterm_upto_names(const TermPtr& u, const TermPtr& t) {
  if (u->size > t->size) return false;
  if (detail::skel_eq(u, t)) return true;
  switch (t->tag) {
    case PureTerm::Tag::Var: return false;
    case PureTerm::Tag::Lam: return is_subterm_upto_names(u, t->a);
    case PureTerm::Tag::App:
      return is_subterm_upto_names(u, t->a) || is_subterm_upto_names(u, t->b);
  }
  return false;
}

}  // namespace lonorm

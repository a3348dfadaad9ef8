#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lonorm/beta.hpp"
#include "lonorm/term.hpp"

namespace lonorm {

// Terms with explicit substitutions: t ::= x | \x. t | t u | t[x <- u].
// t[x <- u] binds x in t only; the argument u is outside the binding.
struct LscTerm;
using LscPtr = std::shared_ptr<const LscTerm>;

struct LscTerm {
  enum class Tag { Var, Lam, App, Sub };

  Tag tag;
  VarId var{};             // Var: occurrence; Lam/Sub: binder
  LscPtr a, b;             // Lam: a = body; App: a = fun, b = arg; Sub: a = body, b = arg
  std::uint64_t size;      // constructor count
  std::uint64_t es_nodes;  // how many Sub constructors below (inclusive)
};

inline LscPtr ls_var(VarId v) {
  return std::make_shared<LscTerm>(LscTerm{LscTerm::Tag::Var, v, nullptr, nullptr, 1, 0});
}

inline LscPtr ls_lam(VarId binder, LscPtr body) {
  auto sz = 1 + body->size;
  auto es = body->es_nodes;
  return std::make_shared<LscTerm>(LscTerm{LscTerm::Tag::Lam, binder, std::move(body), nullptr, sz, es});
}

inline LscPtr ls_app(LscPtr fun, LscPtr arg) {
  auto sz = 1 + fun->size + arg->size;
  auto es = fun->es_nodes + arg->es_nodes;
  return std::make_shared<LscTerm>(LscTerm{LscTerm::Tag::App, VarId{}, std::move(fun), std::move(arg), sz, es});
}

inline LscPtr ls_sub(LscPtr body, VarId binder, LscPtr arg) {
  auto sz = 1 + body->size + arg->size;
  auto es = 1 + body->es_nodes + arg->es_nodes;
  return std::make_shared<LscTerm>(LscTerm{LscTerm::Tag::Sub, binder, std::move(body), std::move(arg), sz, es});
}

inline std::uint64_t lsc_size(const LscPtr& t) { return t->size; }
inline std::uint64_t es_count(const LscPtr& t) { return t->es_nodes; }

inline LscPtr from_pure(const TermPtr& t) {
  switch (t->tag) {
    case PureTerm::Tag::Var: return ls_var(t->var);
    case PureTerm::Tag::Lam: return ls_lam(t->var, from_pure(t->a));
    case PureTerm::Tag::App: return ls_app(from_pure(t->a), from_pure(t->b));
  }
  throw std::logic_error("from_pure: bad tag");
}

inline bool is_pure(const LscPtr& t) { return t->es_nodes == 0; }

inline TermPtr to_pure(const LscPtr& t) {
  switch (t->tag) {
    case LscTerm::Tag::Var: return mk_var(t->var);
    case LscTerm::Tag::Lam: return mk_lam(t->var, to_pure(t->a));
    case LscTerm::Tag::App: return mk_app(to_pure(t->a), to_pure(t->b));
    case LscTerm::Tag::Sub: throw std::invalid_argument("to_pure: explicit substitution present");
  }
  throw std::logic_error("to_pure: bad tag");
}

// ---------------------------------------------------------------------------
// Positions. A position is the path from the root to a node; contexts are
// (term, path) pairs so plugging and predicate checks share one machinery.

enum class Step : std::uint8_t { LamBody, AppLeft, AppRight, SubBody, SubArg };

using Path = std::vector<Step>;

inline std::string path_to_string(const Path& p) {
  std::string s;
  for (auto st : p) {
    switch (st) {
      case Step::LamBody: s += 'b'; break;
      case Step::AppLeft: s += 'l'; break;
      case Step::AppRight: s += 'r'; break;
      case Step::SubBody: s += 's'; break;
      case Step::SubArg: s += 'a'; break;
    }
  }
  return s.empty() ? "@" : s;
}

inline const LscPtr& child(const LscPtr& t, Step s) {
  switch (s) {
    case Step::LamBody:
      if (t->tag != LscTerm::Tag::Lam) break;
      return t->a;
    case Step::AppLeft:
      if (t->tag != LscTerm::Tag::App) break;
      return t->a;
    case Step::AppRight:
      if (t->tag != LscTerm::Tag::App) break;
      return t->b;
    case Step::SubBody:
      if (t->tag != LscTerm::Tag::Sub) break;
      return t->a;
    case Step::SubArg:
      if (t->tag != LscTerm::Tag::Sub) break;
      return t->b;
  }
  throw std::invalid_argument("child: step does not match node shape");
}

inline LscPtr subterm_at(const LscPtr& t, const Path& p, std::size_t from = 0) {
  LscPtr cur = t;
  for (std::size_t i = from; i < p.size(); ++i) cur = child(cur, p[i]);
  return cur;
}

namespace detail {

inline LscPtr rebuild(const LscPtr& t, const Path& p, std::size_t i, const LscPtr& repl) {
  if (i == p.size()) return repl;
  switch (p[i]) {
    case Step::LamBody: return ls_lam(t->var, rebuild(t->a, p, i + 1, repl));
    case Step::AppLeft: return ls_app(rebuild(t->a, p, i + 1, repl), t->b);
    case Step::AppRight: return ls_app(t->a, rebuild(t->b, p, i + 1, repl));
    case Step::SubBody: return ls_sub(rebuild(t->a, p, i + 1, repl), t->var, t->b);
    case Step::SubArg: return ls_sub(t->a, t->var, rebuild(t->b, p, i + 1, repl));
  }
  throw std::logic_error("rebuild: bad step");
}

}  // namespace detail

// Replace the subterm at position p; everything off the path is shared.
inline LscPtr plug(const LscPtr& t, const Path& p, const LscPtr& repl) {
  // shape check happens implicitly while rebuilding
  (void)subterm_at(t, p);
  return detail::rebuild(t, p, 0, repl);
}

struct Decomposition {
  LscPtr root;  // context = root with the subterm at hole removed
  Path hole;
  LscPtr focus;
};

inline Decomposition decompose(const LscPtr& t, const Path& p) {
  return Decomposition{t, p, subterm_at(t, p)};
}

// ---------------------------------------------------------------------------
// Free variables and friends.

namespace detail {

inline void fv_lsc_rec(const LscPtr& t, std::set<VarId>& out,
                       std::vector<VarId>& bound) {
  auto is_bound = [&](VarId v) {
    for (auto b : bound)
      if (b == v) return true;
    return false;
  };
  switch (t->tag) {
    case LscTerm::Tag::Var:
      if (!is_bound(t->var)) out.insert(t->var);
      return;
    case LscTerm::Tag::Lam:
      bound.push_back(t->var);
      fv_lsc_rec(t->a, out, bound);
      bound.pop_back();
      return;
    case LscTerm::Tag::App:
      fv_lsc_rec(t->a, out, bound);
      fv_lsc_rec(t->b, out, bound);
      return;
    case LscTerm::Tag::Sub:
      bound.push_back(t->var);
      fv_lsc_rec(t->a, out, bound);
      bound.pop_back();
      fv_lsc_rec(t->b, out, bound);  // argument is outside the binding
      return;
  }
}

}  // namespace detail

inline std::set<VarId> fv(const LscPtr& t) {
  std::set<VarId> out;
  std::vector<VarId> bound;
  detail::fv_lsc_rec(t, out, bound);
  return out;
}

inline bool occurs_free_lsc(const LscPtr& t, VarId x) {
  switch (t->tag) {
    case LscTerm::Tag::Var: return t->var == x;
    case LscTerm::Tag::Lam: return t->var != x && occurs_free_lsc(t->a, x);
    case LscTerm::Tag::App: return occurs_free_lsc(t->a, x) || occurs_free_lsc(t->b, x);
    case LscTerm::Tag::Sub:
      return (t->var != x && occurs_free_lsc(t->a, x)) || occurs_free_lsc(t->b, x);
  }
  return false;
}

// Left free variables of the context (t, p): the variables a term plugged into
// the hole could see being captured "from the left". Defined structurally:
// nothing for the hole; an application contributes the function's free
// variables when the hole is on the right; binders on the path delete their
// variable from what the inside contributes; a substitution whose hole is in
// the argument contributes the body's free variables minus the bound one.
inline std::set<VarId> lfv(const LscPtr& t, const Path& p, std::size_t i = 0) {
  if (i == p.size()) return {};
  switch (p[i]) {
    case Step::LamBody: {
      auto s = lfv(t->a, p, i + 1);
      s.erase(t->var);
      return s;
    }
    case Step::AppLeft:
      return lfv(t->a, p, i + 1);
    case Step::AppRight: {
      auto s = lfv(t->b, p, i + 1);
      for (auto v : fv(t->a)) s.insert(v);
      return s;
    }
    case Step::SubBody: {
      auto s = lfv(t->a, p, i + 1);
      s.erase(t->var);
      return s;
    }
    case Step::SubArg: {
      auto s = lfv(t->b, p, i + 1);
      auto body_fv = fv(t->a);
      body_fv.erase(t->var);
      for (auto v : body_fv) s.insert(v);
      return s;
    }
  }
  throw std::logic_error("lfv: bad step");
}

// ---------------------------------------------------------------------------
// Alpha equivalence, structural equality, fresh renaming.

namespace detail {

inline bool alpha_lsc_rec(const LscPtr& t, const LscPtr& u,
                          std::unordered_map<VarId, std::uint32_t>& lt,
                          std::unordered_map<VarId, std::uint32_t>& lu,
                          std::uint32_t depth) {
  if (t->tag != u->tag) return false;
  auto bind = [&](auto& map, VarId v) {
    auto it = map.find(v);
    auto old = it != map.end() ? std::optional(it->second) : std::nullopt;
    map[v] = depth;
    return old;
  };
  auto unbind = [&](auto& map, VarId v, std::optional<std::uint32_t> old) {
    if (old) map[v] = *old; else map.erase(v);
  };
  switch (t->tag) {
    case LscTerm::Tag::Var: {
      auto it = lt.find(t->var);
      auto iu = lu.find(u->var);
      if (it != lt.end() || iu != lu.end())
        return it != lt.end() && iu != lu.end() && it->second == iu->second;
      return t->var == u->var;
    }
    case LscTerm::Tag::Lam: {
      auto ot = bind(lt, t->var);
      auto ou = bind(lu, u->var);
      bool ok = alpha_lsc_rec(t->a, u->a, lt, lu, depth + 1);
      unbind(lt, t->var, ot);
      unbind(lu, u->var, ou);
      return ok;
    }
    case LscTerm::Tag::App:
      return alpha_lsc_rec(t->a, u->a, lt, lu, depth) &&
             alpha_lsc_rec(t->b, u->b, lt, lu, depth);
    case LscTerm::Tag::Sub: {
      if (!alpha_lsc_rec(t->b, u->b, lt, lu, depth)) return false;
      auto ot = bind(lt, t->var);
      auto ou = bind(lu, u->var);
      bool ok = alpha_lsc_rec(t->a, u->a, lt, lu, depth + 1);
      unbind(lt, t->var, ot);
      unbind(lu, u->var, ou);
      return ok;
    }
  }
  return false;
}

}  // namespace detail

inline bool alpha_eq_lsc(const LscPtr& t, const LscPtr& u) {
  if (t == u) return true;
  if (t->size != u->size || t->es_nodes != u->es_nodes) return false;
  std::unordered_map<VarId, std::uint32_t> lt, lu;
  return detail::alpha_lsc_rec(t, u, lt, lu, 1);
}

inline bool structural_eq_lsc(const LscPtr& t, const LscPtr& u) {
  if (t == u) return true;
  if (t->tag != u->tag) return false;
  switch (t->tag) {
    case LscTerm::Tag::Var: return t->var == u->var;
    case LscTerm::Tag::Lam:
      return t->var == u->var && structural_eq_lsc(t->a, u->a);
    case LscTerm::Tag::App:
      return structural_eq_lsc(t->a, u->a) && structural_eq_lsc(t->b, u->b);
    case LscTerm::Tag::Sub:
      return t->var == u->var && structural_eq_lsc(t->a, u->a) &&
             structural_eq_lsc(t->b, u->b);
  }
  return false;
}

namespace detail {

inline LscPtr apply_renaming(const LscPtr& t,
                             const std::unordered_map<VarId, VarId>& map);

inline LscPtr apply_renaming_scoped(const LscPtr& t,
                                    std::unordered_map<VarId, VarId>& map) {
  if (map.empty()) return t;
  switch (t->tag) {
    case LscTerm::Tag::Var: {
      auto it = map.find(t->var);
      return it != map.end() ? ls_var(it->second) : t;
    }
    case LscTerm::Tag::Lam: {
      auto it = map.find(t->var);
      if (it == map.end()) return ls_lam(t->var, apply_renaming_scoped(t->a, map));
      // inner binder shadows a renamed variable
      auto saved = it->second;
      map.erase(t->var);
      auto body = apply_renaming_scoped(t->a, map);
      map[t->var] = saved;
      return ls_lam(t->var, body);
    }
    case LscTerm::Tag::App:
      return ls_app(apply_renaming_scoped(t->a, map), apply_renaming_scoped(t->b, map));
    case LscTerm::Tag::Sub: {
      auto arg = apply_renaming_scoped(t->b, map);
      auto it = map.find(t->var);
      if (it == map.end())
        return ls_sub(apply_renaming_scoped(t->a, map), t->var, arg);
      auto saved = it->second;
      map.erase(t->var);
      auto body = apply_renaming_scoped(t->a, map);
      map[t->var] = saved;
      return ls_sub(body, t->var, arg);
    }
  }
  throw std::logic_error("apply_renaming: bad tag");
}

inline LscPtr apply_renaming(const LscPtr& t,
                             const std::unordered_map<VarId, VarId>& map) {
  auto m = map;
  return apply_renaming_scoped(t, m);
}

inline LscPtr rename_fresh_lsc_rec(const LscPtr& t,
                                   std::unordered_map<VarId, VarId>& scope) {
  switch (t->tag) {
    case LscTerm::Tag::Var: {
      auto it = scope.find(t->var);
      return it != scope.end() ? ls_var(it->second) : t;
    }
    case LscTerm::Tag::Lam: {
      VarId fresh = fresh_var(var_hint(t->var));
      auto it = scope.find(t->var);
      auto saved = it != scope.end() ? std::optional(it->second) : std::nullopt;
      scope[t->var] = fresh;
      auto body = rename_fresh_lsc_rec(t->a, scope);
      if (saved) scope[t->var] = *saved; else scope.erase(t->var);
      return ls_lam(fresh, body);
    }
    case LscTerm::Tag::App: {
      auto f = rename_fresh_lsc_rec(t->a, scope);
      auto x = rename_fresh_lsc_rec(t->b, scope);
      return ls_app(f, x);
    }
    case LscTerm::Tag::Sub: {
      auto arg = rename_fresh_lsc_rec(t->b, scope);
      VarId fresh = fresh_var(var_hint(t->var));
      auto it = scope.find(t->var);
      auto saved = it != scope.end() ? std::optional(it->second) : std::nullopt;
      scope[t->var] = fresh;
      auto body = rename_fresh_lsc_rec(t->a, scope);
      if (saved) scope[t->var] = *saved; else scope.erase(t->var);
      return ls_sub(body, fresh, arg);
    }
  }
  throw std::logic_error("rename_fresh_lsc: bad tag");
}

}  // namespace detail

inline LscPtr rename_fresh_lsc(const LscPtr& t) {
  std::unordered_map<VarId, VarId> scope;
  return detail::rename_fresh_lsc_rec(t, scope);
}

// ---------------------------------------------------------------------------
// Redexes. An answer is a lambda under a stack of substitutions; firing an
// application whose function part is an answer is the multiplicative rule,
// replacing a variable occurrence bound by some enclosing substitution with a
// fresh copy of its argument is the exponential rule (the substitution stays;
// no garbage collection here).

enum class RedexKind { Multiplicative, Exponential };

inline bool is_answer(const LscPtr& t) {
  const LscTerm* cur = t.get();
  while (cur->tag == LscTerm::Tag::Sub) cur = cur->a.get();
  return cur->tag == LscTerm::Tag::Lam;
}

struct Redex {
  Path pos;        // multiplicative: the application node; exponential: the occurrence
  RedexKind kind;
  std::size_t binder_prefix = 0;  // exponential: length of pos prefix locating the substitution node
};

namespace detail {

struct ScopeInfo {
  bool sub_bound = false;       // nearest binder is a substitution (body side)
  std::size_t binder_depth = 0; // path length down to and including that node
};

using ScopeMap = std::unordered_map<VarId, std::vector<ScopeInfo>>;

inline void enumerate_rec(const LscPtr& t, Path& path, ScopeMap& scope,
                          std::vector<Redex>& out) {
  switch (t->tag) {
    case LscTerm::Tag::Var: {
      auto it = scope.find(t->var);
      if (it != scope.end() && !it->second.empty() && it->second.back().sub_bound)
        out.push_back(Redex{path, RedexKind::Exponential, it->second.back().binder_depth});
      return;
    }
    case LscTerm::Tag::Lam: {
      scope[t->var].push_back(ScopeInfo{false, 0});
      path.push_back(Step::LamBody);
      enumerate_rec(t->a, path, scope, out);
      path.pop_back();
      scope[t->var].pop_back();
      return;
    }
    case LscTerm::Tag::App: {
      if (is_answer(t->a)) out.push_back(Redex{path, RedexKind::Multiplicative, 0});
      path.push_back(Step::AppLeft);
      enumerate_rec(t->a, path, scope, out);
      path.back() = Step::AppRight;
      enumerate_rec(t->b, path, scope, out);
      path.pop_back();
      return;
    }
    case LscTerm::Tag::Sub: {
      scope[t->var].push_back(ScopeInfo{true, path.size()});
      path.push_back(Step::SubBody);
      enumerate_rec(t->a, path, scope, out);
      path.pop_back();
      scope[t->var].pop_back();
      // substitution arguments are frozen: they are copied when a bound
      // occurrence fires, never reduced in place, so nothing inside t->b is
      // a redex position
      return;
    }
  }
}

}  // namespace detail

// Redex positions in preorder (node, then left child, then right child).
// Positions under a substitution argument are not part of the pool: the
// strategy, like the machine, only ever copies those subterms.
inline std::vector<Redex> enumerate_redexes(const LscPtr& t) {
  std::vector<Redex> out;
  Path path;
  detail::ScopeMap scope;
  detail::enumerate_rec(t, path, scope, out);
  return out;
}

// Total order on positions of one term: a strict prefix comes first (outside
// beats inside); otherwise the first diverging step decides, left component
// before right and substitution body before substitution argument. Returns
// negative / zero / positive like strcmp.
inline int lo_compare(const Path& p, const Path& q) {
  auto n = std::min(p.size(), q.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] == q[i]) continue;
    // diverging steps must descend from the same node shape; a lambda has a
    // single child, so divergence there can only mean the paths belong to
    // different terms
    auto family = [](Step s) -> int {
      switch (s) {
        case Step::AppLeft:
        case Step::AppRight: return 0;
        case Step::SubBody:
        case Step::SubArg: return 1;
        case Step::LamBody: return 2;
      }
      return -1;
    };
    if (family(p[i]) != family(q[i]) || family(p[i]) == 2)
      throw std::invalid_argument("lo_compare: positions from different terms");
    auto rank = [](Step s) {
      return (s == Step::AppRight || s == Step::SubArg) ? 1 : 0;
    };
    return rank(p[i]) - rank(q[i]);
  }
  if (p.size() == q.size()) return 0;
  return p.size() < q.size() ? -1 : 1;
}

// Reference search: enumerate everything, take the minimum of the total order.
inline std::optional<Redex> find_lo_redex_by_order(const LscPtr& t) {
  auto all = enumerate_redexes(t);
  if (all.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i)
    if (lo_compare(all[i].pos, all[best].pos) < 0) best = i;
  return all[best];
}

namespace detail {

inline std::optional<Redex> ilo_rec(const LscPtr& t, Path& path, ScopeMap& scope) {
  switch (t->tag) {
    case LscTerm::Tag::Var: {
      auto it = scope.find(t->var);
      if (it != scope.end() && !it->second.empty() && it->second.back().sub_bound)
        return Redex{path, RedexKind::Exponential, it->second.back().binder_depth};
      return std::nullopt;
    }
    case LscTerm::Tag::Lam: {
      scope[t->var].push_back(ScopeInfo{false, 0});
      path.push_back(Step::LamBody);
      auto r = ilo_rec(t->a, path, scope);
      path.pop_back();
      scope[t->var].pop_back();
      return r;
    }
    case LscTerm::Tag::App: {
      // the application node itself comes before anything inside it
      if (is_answer(t->a)) return Redex{path, RedexKind::Multiplicative, 0};
      path.push_back(Step::AppLeft);
      auto l = ilo_rec(t->a, path, scope);
      if (l) {
        path.pop_back();
        return l;
      }
      // left part is redex-free here and not an answer, hence neutral in
      // this scope: descending right keeps the search leftmost-outermost
      path.back() = Step::AppRight;
      auto r = ilo_rec(t->b, path, scope);
      path.pop_back();
      return r;
    }
    case LscTerm::Tag::Sub: {
      // only the body is searched; the argument is never reduced in place
      scope[t->var].push_back(ScopeInfo{true, path.size()});
      path.push_back(Step::SubBody);
      auto bodyr = ilo_rec(t->a, path, scope);
      path.pop_back();
      scope[t->var].pop_back();
      return bodyr;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Grammar-guided search: one preorder pass, no enumeration. Agrees with
// find_lo_redex_by_order; both are kept and cross-checked in the tests.
inline std::optional<Redex> find_lo_redex_ilo(const LscPtr& t) {
  Path path;
  detail::ScopeMap scope;
  return detail::ilo_rec(t, path, scope);
}

inline bool is_normal(const LscPtr& t) { return !find_lo_redex_ilo(t).has_value(); }

// Neutral: normal and not an answer. Neutral terms can sit to the left of an
// application without ever creating a redex there.
inline bool is_neutral(const LscPtr& t) { return is_normal(t) && !is_answer(t); }

// ---------------------------------------------------------------------------
// Firing.

struct StepResult {
  LscPtr term;
  RedexKind kind;
  Path pos;
  LscPtr copied;  // exponential only: the freshly renamed copy that was inserted
};

namespace detail {

// Multiplicative: l = subs* around \x. body applied to r. The substitution
// spine moves over r, so spine binders free in r are freshened first.
inline LscPtr fire_multiplicative(const LscPtr& l, const LscPtr& r) {
  auto fvr = fv(r);
  std::unordered_map<VarId, VarId> map;
  // rebuild the spine top-down, freshening clashing binders
  std::vector<const LscTerm*> spine;
  const LscTerm* cur = l.get();
  while (cur->tag == LscTerm::Tag::Sub) {
    spine.push_back(cur);
    cur = cur->a.get();
  }
  if (cur->tag != LscTerm::Tag::Lam)
    throw std::logic_error("fire_multiplicative: function part is not an answer");

  // innermost first: build the new core, then wrap the spine back on
  std::vector<std::pair<VarId, LscPtr>> rebuilt;  // (binder, arg) outermost..innermost
  rebuilt.reserve(spine.size());
  for (auto* node : spine) {
    VarId v = node->var;
    auto arg = map.empty() ? node->b : apply_renaming(node->b, map);
    if (map.count(v)) map.erase(v);  // shadowing: occurrences below bind here
    if (fvr.count(v)) {
      VarId fresh = fresh_var(var_hint(v));
      map[v] = fresh;
      v = fresh;
    }
    rebuilt.emplace_back(v, arg);
  }
  // the lambda node: binder stays, body picks up accumulated renames
  VarId x = cur->var;
  if (map.count(x)) map.erase(x);
  auto body = map.empty() ? cur->a : apply_renaming(cur->a, map);
  auto core = ls_sub(body, x, r);
  for (auto it = rebuilt.rbegin(); it != rebuilt.rend(); ++it)
    core = ls_sub(core, it->first, it->second);
  return core;
}

// Exponential: replace the occurrence at path p (whose binding substitution
// node sits at depth redex.binder_prefix) by a fresh copy of that
// substitution's argument. Binders between the substitution and the
// occurrence that would capture the copy's free variables are freshened,
// which is the on-the-fly alpha care the rule needs.
inline LscPtr fire_exponential_rec(const LscPtr& t, const Path& p, std::size_t i,
                                   const std::set<VarId>& fvu, const LscPtr& copy,
                                   std::unordered_map<VarId, VarId>& map) {
  if (i == p.size()) {
    if (t->tag != LscTerm::Tag::Var)
      throw std::logic_error("fire_exponential: position is not an occurrence");
    return copy;
  }
  auto enter_binder = [&](VarId v) -> std::pair<VarId, std::optional<VarId>> {
    std::optional<VarId> saved;
    auto it = map.find(v);
    if (it != map.end()) {
      saved = it->second;
      map.erase(v);
    }
    VarId out = v;
    if (fvu.count(v)) {
      VarId fresh = fresh_var(var_hint(v));
      map[v] = fresh;
      out = fresh;
    }
    return {out, saved};
  };
  auto leave_binder = [&](VarId v, std::optional<VarId> saved, bool renamed) {
    if (renamed) map.erase(v);
    if (saved) map[v] = *saved;
  };
  switch (p[i]) {
    case Step::LamBody: {
      auto [v, saved] = enter_binder(t->var);
      auto body = fire_exponential_rec(t->a, p, i + 1, fvu, copy, map);
      leave_binder(t->var, saved, v != t->var);
      return ls_lam(v, body);
    }
    case Step::AppLeft: {
      auto f = fire_exponential_rec(t->a, p, i + 1, fvu, copy, map);
      auto arg = map.empty() ? t->b : apply_renaming(t->b, map);
      return ls_app(f, arg);
    }
    case Step::AppRight: {
      auto f = map.empty() ? t->a : apply_renaming(t->a, map);
      auto arg = fire_exponential_rec(t->b, p, i + 1, fvu, copy, map);
      return ls_app(f, arg);
    }
    case Step::SubBody: {
      auto arg = map.empty() ? t->b : apply_renaming(t->b, map);
      auto [v, saved] = enter_binder(t->var);
      auto body = fire_exponential_rec(t->a, p, i + 1, fvu, copy, map);
      leave_binder(t->var, saved, v != t->var);
      return ls_sub(body, v, arg);
    }
    case Step::SubArg: {
      auto body = map.empty() ? t->a : apply_renaming(t->a, map);
      // the binder is not in scope on the argument side, so an accumulated
      // rename for the same id still applies there (it names an outer binder)
      auto arg = fire_exponential_rec(t->b, p, i + 1, fvu, copy, map);
      return ls_sub(body, t->var, arg);
    }
  }
  throw std::logic_error("fire_exponential: bad step");
}

}  // namespace detail

inline StepResult fire_redex(const LscPtr& t, const Redex& rx) {
  if (rx.kind == RedexKind::Multiplicative) {
    auto node = subterm_at(t, rx.pos);
    if (node->tag != LscTerm::Tag::App)
      throw std::invalid_argument("fire_redex: multiplicative position is not an application");
    auto fired = detail::fire_multiplicative(node->a, node->b);
    return StepResult{plug(t, rx.pos, fired), rx.kind, rx.pos, nullptr};
  }
  // exponential
  auto es_path = Path(rx.pos.begin(), rx.pos.begin() + rx.binder_prefix);
  auto es = subterm_at(t, es_path);
  if (es->tag != LscTerm::Tag::Sub || rx.pos.size() <= rx.binder_prefix ||
      rx.pos[rx.binder_prefix] != Step::SubBody)
    throw std::invalid_argument("fire_redex: exponential binder prefix is off");
  auto occurrence = subterm_at(t, rx.pos);
  if (occurrence->tag != LscTerm::Tag::Var || occurrence->var != es->var)
    throw std::invalid_argument("fire_redex: occurrence does not match the binder");
  auto copy = rename_fresh_lsc(es->b);
  auto fvu = fv(es->b);
  std::unordered_map<VarId, VarId> map;
  auto new_body = detail::fire_exponential_rec(es->a, rx.pos, rx.binder_prefix + 1,
                                               fvu, copy, map);
  auto new_es = ls_sub(new_body, es->var, es->b);
  return StepResult{plug(t, es_path, new_es), rx.kind, rx.pos, copy};
}

// One step of the leftmost-outermost strategy.
inline std::optional<StepResult> step_lo(const LscPtr& t) {
  auto rx = find_lo_redex_ilo(t);
  if (!rx) return std::nullopt;
  return fire_redex(t, *rx);
}

// ---------------------------------------------------------------------------
// Unfolding: execute all substitutions, yielding a plain term.

inline TermPtr unfold(const LscPtr& t) {
  switch (t->tag) {
    case LscTerm::Tag::Var: return mk_var(t->var);
    case LscTerm::Tag::Lam: return mk_lam(t->var, unfold(t->a));
    case LscTerm::Tag::App: return mk_app(unfold(t->a), unfold(t->b));
    case LscTerm::Tag::Sub: return subst(unfold(t->a), t->var, unfold(t->b));
  }
  throw std::logic_error("unfold: bad tag");
}

}  // namespace lonorm

#pragma once

// Structural congruence on terms with explicit substitutions: seven local
// axiom schemes that move substitutions around without executing them, closed
// under arbitrary contexts and usable in both directions. The congruence never
// changes the unfolding of a term, which gives a cheap necessary condition
// (equiv_unfold_check); small instances are decided by a bounded bidirectional
// search over the one-step neighborhood (equiv_bounded).
//
// Side conditions come in two flavors. Genuine ones restrict where an axiom
// applies at all (dropping a substitution needs the variable dead, shrinking a
// scope needs the variable absent from the dropped component, swapping two
// substitutions needs the outer variable absent from the inner argument,
// composing needs the outer variable confined to the inner argument). The
// remaining ones only guard against name capture, and those are satisfied
// here by freshening the binder on the fly, so the corresponding directions
// apply unconditionally modulo renaming.

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lonorm/lsc.hpp"

namespace lonorm {

enum class AxiomKind { LamComm, AppL, AppR, Com, Compose, Gc, Dup };
enum class AxiomDir { Forward, Backward };

inline const char* axiom_kind_name(AxiomKind k) {
  switch (k) {
    case AxiomKind::LamComm: return "lam-comm";
    case AxiomKind::AppL: return "app-left";
    case AxiomKind::AppR: return "app-right";
    case AxiomKind::Com: return "commute";
    case AxiomKind::Compose: return "compose";
    case AxiomKind::Gc: return "gc";
    case AxiomKind::Dup: return "dup";
  }
  return "?";
}

// One axiom application: which scheme, which direction, and the path of the
// subterm it was applied to.
struct Axiom {
  AxiomKind kind;
  AxiomDir dir;
  Path pos;
};

namespace detail {

// Paths of the free occurrences of x in t, left to right (body before
// argument under a substitution node, matching the traversal used everywhere
// else). Occurrences under a shadowing binder of x are not free.
inline void free_occurrence_paths(const LscPtr& t, VarId x, Path& cur,
                                  std::vector<Path>& out) {
  switch (t->tag) {
    case LscTerm::Tag::Var:
      if (t->var == x) out.push_back(cur);
      return;
    case LscTerm::Tag::Lam:
      if (t->var == x) return;
      cur.push_back(Step::LamBody);
      free_occurrence_paths(t->a, x, cur, out);
      cur.pop_back();
      return;
    case LscTerm::Tag::App:
      cur.push_back(Step::AppLeft);
      free_occurrence_paths(t->a, x, cur, out);
      cur.back() = Step::AppRight;
      free_occurrence_paths(t->b, x, cur, out);
      cur.pop_back();
      return;
    case LscTerm::Tag::Sub:
      if (t->var != x) {
        cur.push_back(Step::SubBody);
        free_occurrence_paths(t->a, x, cur, out);
        cur.pop_back();
      }
      cur.push_back(Step::SubArg);
      free_occurrence_paths(t->b, x, cur, out);
      cur.pop_back();
      return;
  }
}

inline std::vector<Path> free_occurrence_paths(const LscPtr& t, VarId x) {
  std::vector<Path> out;
  Path cur;
  free_occurrence_paths(t, x, cur, out);
  return out;
}

// Rename every free occurrence of `from` in t to `to`, refusing when an
// occurrence sits under a binder of `to` inside t (the rename would get
// captured there). Used to merge a duplicated substitution pair back.
inline std::optional<LscPtr> rename_free_checked(const LscPtr& t, VarId from,
                                                 VarId to, bool under_to) {
  if (from == to) return t;
  switch (t->tag) {
    case LscTerm::Tag::Var:
      if (t->var != from) return t;
      if (under_to) return std::nullopt;
      return ls_var(to);
    case LscTerm::Tag::Lam: {
      if (t->var == from) return t;  // whole subtree shadowed
      auto body = rename_free_checked(t->a, from, to, under_to || t->var == to);
      if (!body) return std::nullopt;
      return ls_lam(t->var, *body);
    }
    case LscTerm::Tag::App: {
      auto l = rename_free_checked(t->a, from, to, under_to);
      if (!l) return std::nullopt;
      auto r = rename_free_checked(t->b, from, to, under_to);
      if (!r) return std::nullopt;
      return ls_app(*l, *r);
    }
    case LscTerm::Tag::Sub: {
      // the binder scopes the body only; the argument stays in the outer scope
      auto arg = rename_free_checked(t->b, from, to, under_to);
      if (!arg) return std::nullopt;
      if (t->var == from) return ls_sub(t->a, t->var, *arg);
      auto body = rename_free_checked(t->a, from, to, under_to || t->var == to);
      if (!body) return std::nullopt;
      return ls_sub(*body, t->var, *arg);
    }
  }
  throw std::logic_error("rename_free_checked: bad tag");
}

// All subsets of {0..n-1} of size <= cap, plus the all-but-last subset as the
// canonical large split when it is not already covered.
inline std::vector<std::set<std::size_t>> occurrence_subsets(std::size_t n,
                                                             std::size_t cap) {
  std::vector<std::set<std::size_t>> out;
  std::set<std::size_t> cur;
  // combination enumeration over sizes 0..min(cap, n), explicit stack of
  // resume points instead of recursion
  std::vector<std::size_t> stack;
  out.push_back(cur);
  std::size_t start = 0;
  while (true) {
    if (cur.size() < cap && start < n) {
      cur.insert(start);
      out.push_back(cur);
      stack.push_back(start);
      ++start;
      continue;
    }
    if (stack.empty()) break;
    start = stack.back();
    stack.pop_back();
    cur.erase(start);
    ++start;
  }
  if (n >= 1 && n - 1 > cap) {
    std::set<std::size_t> all_but_last;
    for (std::size_t i = 0; i + 1 < n; ++i) all_but_last.insert(i);
    out.push_back(all_but_last);
  }
  return out;
}

// Rewrites applicable at the root of n, emitted as (replacement, axiom tag).
inline void local_axiom_rewrites(const LscPtr& n, const Path& here,
                                 std::size_t dup_cap,
                                 std::vector<std::pair<LscPtr, Axiom>>& out) {
  using Tag = LscTerm::Tag;
  auto emit = [&](LscPtr nt, AxiomKind k, AxiomDir d) {
    out.emplace_back(std::move(nt), Axiom{k, d, here});
  };

  if (n->tag == Tag::Sub) {
    const LscPtr& body = n->a;
    const LscPtr& arg = n->b;
    VarId x = n->var;

    // push the substitution under a lambda; the lambda binder is freshened
    // when it would capture the argument (or coincides with x)
    if (body->tag == Tag::Lam) {
      VarId b = body->var;
      LscPtr lbody = body->a;
      if (b == x || occurs_free_lsc(arg, b)) {
        VarId nb = fresh_var(var_hint(b));
        lbody = apply_renaming(lbody, {{b, nb}});
        b = nb;
      }
      emit(ls_lam(b, ls_sub(lbody, x, arg)), AxiomKind::LamComm,
           AxiomDir::Forward);
    }

    // shrink the scope to one component of an application
    if (body->tag == Tag::App) {
      if (!occurs_free_lsc(body->b, x))
        emit(ls_app(ls_sub(body->a, x, arg), body->b), AxiomKind::AppL,
             AxiomDir::Forward);
      if (!occurs_free_lsc(body->a, x))
        emit(ls_app(body->a, ls_sub(body->b, x, arg)), AxiomKind::AppR,
             AxiomDir::Forward);
    }

    if (body->tag == Tag::Sub) {
      VarId y = body->var;        // inner binder
      const LscPtr& bt = body->a; // inner body
      const LscPtr& bu = body->b; // inner argument

      // swap two adjacent substitutions; needs the outer variable absent
      // from the inner argument, and freshens the inner binder when it
      // would capture the outer argument
      if (!occurs_free_lsc(bu, x)) {
        VarId y2 = y;
        LscPtr bt2 = bt;
        if (y2 == x || occurs_free_lsc(arg, y2)) {
          y2 = fresh_var(var_hint(y));
          bt2 = apply_renaming(bt, {{y, y2}});
        }
        emit(ls_sub(ls_sub(bt2, x, arg), y2, bu), AxiomKind::Com,
             AxiomDir::Forward);
      }

      // compose: confine the outer substitution to the inner argument;
      // needs the outer variable absent from the inner body
      if (!occurs_free_lsc(bt, x))
        emit(ls_sub(bt, y, ls_sub(bu, x, arg)), AxiomKind::Compose,
             AxiomDir::Forward);

      // merge a duplicated pair: equal arguments, outer variable clean in
      // the inner argument, and the rename must not get captured
      if (!occurs_free_lsc(bu, x) && alpha_eq_lsc(bu, arg)) {
        if (auto merged = rename_free_checked(bt, x, y, false))
          emit(ls_sub(*merged, y, bu), AxiomKind::Dup, AxiomDir::Backward);
      }
    }

    // split a substitution out of the argument; always applicable modulo
    // freshening the argument's binder
    if (arg->tag == Tag::Sub) {
      VarId y = arg->var;
      LscPtr au = arg->a;
      const LscPtr& aw = arg->b;
      VarId y2 = y;
      if (y2 == x || occurs_free_lsc(body, y2)) {
        y2 = fresh_var(var_hint(y));
        au = apply_renaming(au, {{y, y2}});
      }
      emit(ls_sub(ls_sub(body, x, au), y2, aw), AxiomKind::Compose,
           AxiomDir::Backward);
    }

    // drop a dead substitution
    if (!occurs_free_lsc(body, x))
      emit(body, AxiomKind::Gc, AxiomDir::Forward);

    // split the occurrences of x between two copies of the substitution;
    // every subset up to the cap (plus the canonical large split) gives one
    // neighbor with a fresh second binder and a fresh copy of the argument
    {
      auto occ = free_occurrence_paths(body, x);
      for (const auto& subset : occurrence_subsets(occ.size(), dup_cap)) {
        VarId y = fresh_var(var_hint(x));
        LscPtr nb = body;
        for (auto idx : subset) nb = plug(nb, occ[idx], ls_var(y));
        emit(ls_sub(ls_sub(nb, x, arg), y, rename_fresh_lsc(arg)),
             AxiomKind::Dup, AxiomDir::Forward);
      }
    }
  }

  // hoist a substitution out of a lambda; genuine condition: the lambda
  // binder must not occur in the substitution argument (renaming cannot fix
  // that occurrence, it refers to the lambda)
  if (n->tag == Tag::Lam && n->a->tag == Tag::Sub) {
    const LscPtr& s = n->a;
    if (s->var != n->var && !occurs_free_lsc(s->b, n->var))
      emit(ls_sub(ls_lam(n->var, s->a), s->var, s->b), AxiomKind::LamComm,
           AxiomDir::Backward);
  }

  if (n->tag == Tag::App) {
    // widen a scope over the application argument / function part; always
    // applicable modulo freshening the binder
    if (n->a->tag == Tag::Sub) {
      VarId x = n->a->var;
      LscPtr t = n->a->a;
      if (occurs_free_lsc(n->b, x)) {
        VarId nx = fresh_var(var_hint(x));
        t = apply_renaming(t, {{x, nx}});
        x = nx;
      }
      emit(ls_sub(ls_app(t, n->b), x, n->a->b), AxiomKind::AppL,
           AxiomDir::Backward);
    }
    if (n->b->tag == Tag::Sub) {
      VarId x = n->b->var;
      LscPtr u = n->b->a;
      if (occurs_free_lsc(n->a, x)) {
        VarId nx = fresh_var(var_hint(x));
        u = apply_renaming(u, {{x, nx}});
        x = nx;
      }
      emit(ls_sub(ls_app(n->a, u), x, n->b->b), AxiomKind::AppR,
           AxiomDir::Backward);
    }
  }
}

inline void collect_positions(const LscPtr& t, Path& cur,
                              std::vector<std::pair<LscPtr, Path>>& out) {
  out.emplace_back(t, cur);
  switch (t->tag) {
    case LscTerm::Tag::Var:
      return;
    case LscTerm::Tag::Lam:
      cur.push_back(Step::LamBody);
      collect_positions(t->a, cur, out);
      cur.pop_back();
      return;
    case LscTerm::Tag::App:
      cur.push_back(Step::AppLeft);
      collect_positions(t->a, cur, out);
      cur.back() = Step::AppRight;
      collect_positions(t->b, cur, out);
      cur.pop_back();
      return;
    case LscTerm::Tag::Sub:
      cur.push_back(Step::SubBody);
      collect_positions(t->a, cur, out);
      cur.back() = Step::SubArg;
      collect_positions(t->b, cur, out);
      cur.pop_back();
      return;
  }
}

}  // namespace detail

// Every one-step rewrite of t under the congruence, both directions, at all
// positions. The expansion direction of gc (inventing a dead substitution)
// is not enumerable and is omitted; the duplication split is capped (see
// occurrence_subsets). Plugging is done here so each entry is a full term.
inline std::vector<std::pair<LscPtr, Axiom>> axiom_neighbors(
    const LscPtr& t, std::size_t dup_cap = 3) {
  std::vector<std::pair<LscPtr, Axiom>> out;
  std::vector<std::pair<LscPtr, Path>> nodes;
  Path cur;
  detail::collect_positions(t, cur, nodes);
  std::vector<std::pair<LscPtr, Axiom>> local;
  for (const auto& [sub, pos] : nodes) {
    local.clear();
    detail::local_axiom_rewrites(sub, pos, dup_cap, local);
    for (auto& [nt, ax] : local) out.emplace_back(plug(t, pos, nt), ax);
  }
  return out;
}

namespace detail {

// Key invariant under renaming of binders: binders get sequential indices in
// traversal order (argument before body under a substitution, mirroring the
// scoping), free variables keep their identity.
inline void canonical_key_rec(const LscPtr& t,
                              std::unordered_map<VarId, int>& env, int& next,
                              std::string& out) {
  switch (t->tag) {
    case LscTerm::Tag::Var: {
      auto it = env.find(t->var);
      if (it != env.end()) {
        out += 'b';
        out += std::to_string(it->second);
      } else {
        out += 'f';
        out += std::to_string(t->var.raw);
      }
      out += ';';
      return;
    }
    case LscTerm::Tag::Lam: {
      out += "L(";
      auto it = env.find(t->var);
      std::optional<int> saved;
      if (it != env.end()) saved = it->second;
      env[t->var] = next++;
      canonical_key_rec(t->a, env, next, out);
      if (saved) env[t->var] = *saved; else env.erase(t->var);
      out += ')';
      return;
    }
    case LscTerm::Tag::App:
      out += "A(";
      canonical_key_rec(t->a, env, next, out);
      out += ',';
      canonical_key_rec(t->b, env, next, out);
      out += ')';
      return;
    case LscTerm::Tag::Sub: {
      out += "S(";
      canonical_key_rec(t->b, env, next, out);
      out += ',';
      auto it = env.find(t->var);
      std::optional<int> saved;
      if (it != env.end()) saved = it->second;
      env[t->var] = next++;
      canonical_key_rec(t->a, env, next, out);
      if (saved) env[t->var] = *saved; else env.erase(t->var);
      out += ')';
      return;
    }
  }
}

inline std::string canonical_key(const LscPtr& t) {
  std::string out;
  std::unordered_map<VarId, int> env;
  int next = 0;
  canonical_key_rec(t, env, next, out);
  return out;
}

}  // namespace detail

// Outcome of the bounded decision procedure. Equivalent carries a witness
// chain (axiom applications from the first term to the second; entries found
// from the far side appear direction-flipped). NotWithinDepth is inconclusive:
// chains longer than the bound, or passing through an omitted expansion, are
// out of reach by construction.
struct EquivResult {
  enum class Status { Equivalent, NotWithinDepth };
  Status status;
  std::vector<Axiom> witness;
  bool ok() const { return status == Status::Equivalent; }
};

struct EquivOptions {
  std::size_t dup_cap = 3;
  std::size_t node_budget = 400000;  // explored neighbors across both sides
  bool gc_only = false;  // restrict the step relation to forward gc (drops)
};

// Bidirectional breadth-first search over the one-step neighborhood, states
// identified up to renaming of binders via canonical keys. Each side explores
// up to `depth` layers (so witnesses can reach 2*depth entries). Both sides
// must go the full distance on their own because some rewrites cannot be
// walked backwards: dropping garbage is enumerable, inventing it is not, so a
// chain made of drops is only visible from its start.
inline EquivResult equiv_bounded(const LscPtr& t, const LscPtr& u,
                                 std::size_t depth, EquivOptions opts = {}) {
  using Chain = std::vector<Axiom>;
  auto kt = detail::canonical_key(t);
  auto ku = detail::canonical_key(u);
  if (kt == ku) return {EquivResult::Status::Equivalent, {}};

  auto flipped = [](Axiom a) {
    a.dir = a.dir == AxiomDir::Forward ? AxiomDir::Backward : AxiomDir::Forward;
    return a;
  };

  std::unordered_map<std::string, Chain> seen_l{{kt, {}}}, seen_r{{ku, {}}};
  std::vector<std::pair<LscPtr, Chain>> front_l{{t, {}}}, front_r{{u, {}}};
  std::size_t d_l = 0, d_r = 0, explored = 0;

  while ((d_l < depth && !front_l.empty()) || (d_r < depth && !front_r.empty())) {
    // alternate sides, a side stops at its own depth or an empty frontier
    bool left = d_l < depth && !front_l.empty() &&
                (d_r >= depth || front_r.empty() || d_l <= d_r);
    auto& front = left ? front_l : front_r;
    auto& seen_same = left ? seen_l : seen_r;
    auto& seen_other = left ? seen_r : seen_l;
    std::vector<std::pair<LscPtr, Chain>> next;
    for (auto& [node, chain] : front) {
      for (auto& [nt, ax] : axiom_neighbors(node, opts.dup_cap)) {
        if (opts.gc_only &&
            (ax.kind != AxiomKind::Gc || ax.dir != AxiomDir::Forward))
          continue;
        if (++explored > opts.node_budget)
          return {EquivResult::Status::NotWithinDepth, {}};
        auto k = detail::canonical_key(nt);
        if (seen_same.count(k)) continue;
        Chain c = chain;
        c.push_back(ax);
        auto hit = seen_other.find(k);
        if (hit != seen_other.end()) {
          // stitch the two half-chains into one left-to-right witness
          const Chain& lc = left ? c : hit->second;
          const Chain& rc = left ? hit->second : c;
          Chain wit = lc;
          for (auto it = rc.rbegin(); it != rc.rend(); ++it)
            wit.push_back(flipped(*it));
          return {EquivResult::Status::Equivalent, std::move(wit)};
        }
        seen_same.emplace(k, c);
        next.emplace_back(nt, std::move(c));
      }
    }
    front = std::move(next);
    ++(left ? d_l : d_r);
  }
  return {EquivResult::Status::NotWithinDepth, {}};
}

// Cheap necessary condition for congruence: both terms unfold to the same
// pure term. Every axiom preserves the unfolding, so a mismatch here is a
// definite "not congruent"; a match is only supporting evidence.
inline bool equiv_unfold_check(const LscPtr& t, const LscPtr& u) {
  return alpha_eq(unfold(t), unfold(u));
}

}  // namespace lonorm

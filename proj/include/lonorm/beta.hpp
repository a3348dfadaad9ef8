#pragma once

#include <cstdint>
#include <optional>

#include "lonorm/term.hpp"

namespace lonorm {

namespace detail {

inline TermPtr subst_rec(const TermPtr& t, VarId x, const TermPtr& r,
                         const std::set<VarId>& fvr) {
  switch (t->tag) {
    case PureTerm::Tag::Var:
      return t->var == x ? r : t;
    case PureTerm::Tag::Lam: {
      if (t->var == x) return t;  // shadowed, nothing to do below
      if (!occurs_free(t->a, x)) return t;
      if (fvr.count(t->var)) {
        // binder would capture a free variable of r: rename it first
        VarId fresh = fresh_var(var_hint(t->var));
        std::set<VarId> single{t->var};
        auto body = subst_rec(t->a, t->var, mk_var(fresh), single);
        return mk_lam(fresh, subst_rec(body, x, r, fvr));
      }
      return mk_lam(t->var, subst_rec(t->a, x, r, fvr));
    }
    case PureTerm::Tag::App:
      return mk_app(subst_rec(t->a, x, r, fvr), subst_rec(t->b, x, r, fvr));
  }
  throw std::logic_error("subst: bad tag");
}

}  // namespace detail

// Capture-avoiding substitution t{x := r}.
inline TermPtr subst(const TermPtr& t, VarId x, const TermPtr& r) {
  return detail::subst_rec(t, x, r, free_vars(r));
}

// One leftmost-outermost beta step: the redex whose application node comes
// first in preorder (node before children, function before argument) fires.
inline std::optional<TermPtr> beta_lo_step(const TermPtr& t) {
  switch (t->tag) {
    case PureTerm::Tag::Var:
      return std::nullopt;
    case PureTerm::Tag::Lam:
      if (auto s = beta_lo_step(t->a)) return mk_lam(t->var, *s);
      return std::nullopt;
    case PureTerm::Tag::App:
      if (t->a->tag == PureTerm::Tag::Lam)
        return subst(t->a->a, t->a->var, t->b);
      if (auto s = beta_lo_step(t->a)) return mk_app(*s, t->b);
      if (auto s = beta_lo_step(t->b)) return mk_app(t->a, *s);
      return std::nullopt;
  }
  return std::nullopt;
}

struct BetaResult {
  std::optional<TermPtr> normal_form;  // empty: budget ran out
  std::uint64_t steps = 0;
};

// Reference normalizer. Leftmost-outermost is normalizing, so this finds the
// beta normal form whenever one exists and the budget allows.
inline BetaResult beta_normalize(TermPtr t, std::uint64_t budget) {
  BetaResult res;
  while (res.steps < budget) {
    auto s = beta_lo_step(t);
    if (!s) {
      res.normal_form = t;
      return res;
    }
    t = *s;
    ++res.steps;
  }
  return res;
}

inline bool is_beta_normal(const TermPtr& t) {
  switch (t->tag) {
    case PureTerm::Tag::Var: return true;
    case PureTerm::Tag::Lam: return is_beta_normal(t->a);
    case PureTerm::Tag::App:
      return t->a->tag != PureTerm::Tag::Lam && is_beta_normal(t->a) &&
             is_beta_normal(t->b);
  }
  return false;
}

}  // namespace lonorm

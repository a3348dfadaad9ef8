#pragma once

// Readback from machine states to calculus terms. A state decodes to a term
// with a distinguished focus position: the evaluation context rebuilt from
// the frame, environment and stack, with the current code plugged in. On top
// of the readback sit the per-transition correspondence checks: commutative
// steps must not change the readback (except the scope-closing step, which
// may drop garbage), and principal steps must track the reference strategy.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lonorm/equiv.hpp"
#include "lonorm/lsc.hpp"
#include "lonorm/machine.hpp"
#include "lonorm/term.hpp"

namespace lonorm {

// ---------------------------------------------------------------------------
// Weak/trunk factorization. The newest end of the frame holds parked pairs
// (arguments under evaluation); the newest end of the environment holds the
// substitutions and fully closed scopes accumulated since the last still-open
// scope. Splitting those weak layers off leaves the trunk, which alternates
// binders (frame) and open markers (environment) layer by layer.

struct SplitFrame {
  std::vector<FrameEntry> trunk;  // older part, ends before the first pair
  std::vector<FrameEntry> weak;   // maximal run of pairs at the newest end
};

struct SplitEnv {
  std::vector<EnvEntry> trunk;  // older part, empty or with an open marker on top
  std::vector<EnvEntry> weak;   // substitutions and balanced closed fragments
};

inline SplitFrame split_frame(const std::vector<FrameEntry>& frame) {
  std::size_t i = frame.size();
  while (i > 0 && frame[i - 1].kind == FrameEntry::Kind::Pair) --i;
  return {{frame.begin(), frame.begin() + i}, {frame.begin() + i, frame.end()}};
}

inline SplitEnv split_env(const std::vector<EnvEntry>& env) {
  std::size_t i = env.size();
  while (i > 0) {
    const auto& e = env[i - 1];
    if (e.kind == EnvEntry::Kind::Sub) {
      --i;
    } else if (e.kind == EnvEntry::Kind::Close) {
      std::size_t depth = 1;
      std::size_t j = i - 1;
      while (j > 0 && depth > 0) {
        --j;
        if (env[j].kind == EnvEntry::Kind::Close) ++depth;
        if (env[j].kind == EnvEntry::Kind::Open) --depth;
      }
      if (depth != 0) throw std::logic_error("split_env: unmatched close marker");
      i = j;
    } else {
      break;  // open marker: the trunk starts here
    }
  }
  return {{env.begin(), env.begin() + i}, {env.begin() + i, env.end()}};
}

// Environment with every balanced close..open fragment removed. Dropping
// them must not change the readback; the checker below relies on that.
inline std::vector<EnvEntry> strip_closed_fragments(
    const std::vector<EnvEntry>& env) {
  std::vector<EnvEntry> out;
  std::size_t depth = 0;
  // walk oldest to newest so fragment interiors are recognized by nesting
  std::vector<EnvEntry> pending;
  for (const auto& e : env) {
    if (e.kind == EnvEntry::Kind::Open) {
      ++depth;
      pending.push_back(e);
    } else if (e.kind == EnvEntry::Kind::Close) {
      if (depth == 0) throw std::logic_error("strip_closed_fragments: stray close");
      // discard everything back to the matching open
      while (pending.back().kind != EnvEntry::Kind::Open) pending.pop_back();
      pending.pop_back();
      --depth;
    } else {
      pending.push_back(e);
    }
    if (depth == 0) {
      for (auto& kept : pending) out.push_back(std::move(kept));
      pending.clear();
    }
  }
  if (depth != 0) {
    // an open scope still in progress: keep the tail as-is
    for (auto& kept : pending) out.push_back(std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Readback. Contexts are materialized as the context with a chosen term
// plugged at the hole, plus the path leading to it; plugging and predicate
// checks then share the position machinery of the calculus.

struct DecodedContext {
  LscPtr term;
  Path hole;
};

namespace detail {

// Builder that grows a term outward. Steps are recorded outermost-last, so
// the hole path is the reverse of the recorded list.
struct ReadbackBuilder {
  LscPtr term;
  Path rsteps;

  DecodedContext finish() && {
    Path hole(rsteps.rbegin(), rsteps.rend());
    return {std::move(term), std::move(hole)};
  }
};

// Arguments pile up left of the focus, most recently pushed one closest.
inline void wrap_stack(ReadbackBuilder& b, const std::vector<TermPtr>& stack) {
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    b.term = ls_app(b.term, from_pure(*it));
    b.rsteps.push_back(Step::AppLeft);
  }
}

// Weak environment: each substitution wraps the focus, newest innermost;
// closed fragments contribute nothing.
inline void wrap_weak_env(ReadbackBuilder& b, const std::vector<EnvEntry>& env,
                          std::size_t lo, std::size_t& hi) {
  while (hi > lo) {
    const auto& e = env[hi - 1];
    if (e.kind == EnvEntry::Kind::Sub) {
      b.term = ls_sub(b.term, e.var, from_pure(e.code));
      b.rsteps.push_back(Step::SubBody);
      --hi;
    } else if (e.kind == EnvEntry::Kind::Close) {
      std::size_t depth = 1;
      while (hi - 1 > lo && depth > 0) {
        --hi;
        if (env[hi - 1].kind == EnvEntry::Kind::Close) ++depth;
        if (env[hi - 1].kind == EnvEntry::Kind::Open) --depth;
      }
      if (depth != 0) throw std::logic_error("readback: unmatched close marker");
      --hi;  // past the matching open
    } else {
      break;  // open marker: end of the weak part
    }
  }
}

// Weak frame: each parked pair puts its finished head to the left of the
// focus and its saved arguments around that application, newest pair first.
inline void wrap_weak_frame(ReadbackBuilder& b,
                            const std::vector<FrameEntry>& frame,
                            std::size_t lo, std::size_t& hi) {
  while (hi > lo && frame[hi - 1].kind == FrameEntry::Kind::Pair) {
    const auto& p = frame[hi - 1];
    b.term = ls_app(from_pure(p.head), b.term);
    b.rsteps.push_back(Step::AppRight);
    wrap_stack(b, p.stack);
    --hi;
  }
}

}  // namespace detail

// The stack alone, as a context around `inner`.
inline DecodedContext decode_stack(const std::vector<TermPtr>& stack,
                                   LscPtr inner) {
  detail::ReadbackBuilder b{std::move(inner), {}};
  detail::wrap_stack(b, stack);
  return std::move(b).finish();
}

// A weak environment slice (substitutions and closed fragments only).
inline DecodedContext decode_weak_env(const std::vector<EnvEntry>& env,
                                      LscPtr inner) {
  detail::ReadbackBuilder b{std::move(inner), {}};
  std::size_t hi = env.size();
  detail::wrap_weak_env(b, env, 0, hi);
  if (hi != 0) throw std::logic_error("decode_weak_env: slice is not weak");
  return std::move(b).finish();
}

// A weak frame slice (pairs only).
inline DecodedContext decode_weak_frame(const std::vector<FrameEntry>& frame,
                                        LscPtr inner) {
  detail::ReadbackBuilder b{std::move(inner), {}};
  std::size_t hi = frame.size();
  detail::wrap_weak_frame(b, frame, 0, hi);
  if (hi != 0) throw std::logic_error("decode_weak_frame: slice is not weak");
  return std::move(b).finish();
}

// Frame and environment together. Layer by layer from the focus outward:
// first the parked pairs of the current layer, then the substitutions that
// wrap them, then the abstraction for the binder/open-marker boundary, and
// so on until both lists are exhausted. The two lists must stay compatible;
// a mismatch means the state is broken and is reported as such.
inline DecodedContext decode_pair(const std::vector<FrameEntry>& frame,
                                  const std::vector<EnvEntry>& env,
                                  LscPtr inner) {
  detail::ReadbackBuilder b{std::move(inner), {}};
  std::size_t fi = frame.size();
  std::size_t ei = env.size();
  for (;;) {
    detail::wrap_weak_frame(b, frame, 0, fi);
    detail::wrap_weak_env(b, env, 0, ei);
    if (fi == 0 && ei == 0) break;
    if (fi == 0 || ei == 0)
      throw std::logic_error("readback: frame and environment out of step");
    const auto& f = frame[fi - 1];
    const auto& e = env[ei - 1];
    if (f.kind != FrameEntry::Kind::Binder || e.kind != EnvEntry::Kind::Open ||
        f.var != e.var)
      throw std::logic_error("readback: binder does not match its open scope");
    b.term = ls_lam(f.var, b.term);
    b.rsteps.push_back(Step::LamBody);
    --fi;
    --ei;
  }
  return std::move(b).finish();
}

// A whole state: the code under its argument stack, inside the context the
// frame and environment describe.
inline DecodedContext decode_state(const MachineState& s) {
  DecodedContext stk = decode_stack(s.stack, from_pure(s.code));
  DecodedContext ctx = decode_pair(s.frame, s.env, stk.term);
  Path hole = ctx.hole;
  hole.insert(hole.end(), stk.hole.begin(), stk.hole.end());
  return {std::move(ctx.term), std::move(hole)};
}

// ---------------------------------------------------------------------------
// The discipline a readback context must satisfy: the focus is the position
// the leftmost-outermost strategy works at. Checked in two independent ways.

// Clause form: walk the path and check, at each node, the condition its step
// imposes. An argument position demands a neutral function on the left; a
// function position must not already be an answer around the hole; entering
// a substitution body demands that the bound variable has no free occurrence
// left of the hole below.
inline bool is_lo_context(const LscPtr& t, const Path& hole) {
  LscPtr node = t;
  for (std::size_t i = 0; i < hole.size(); ++i) {
    switch (hole[i]) {
      case Step::LamBody:
        node = node->a;
        break;
      case Step::AppLeft: {
        // the subcontext below must not be a lambda under substitutions
        LscPtr q = node->a;
        std::size_t j = i + 1;
        while (q->tag == LscTerm::Tag::Sub && j < hole.size() &&
               hole[j] == Step::SubBody) {
          q = q->a;
          ++j;
        }
        if (q->tag == LscTerm::Tag::Lam && j < hole.size()) return false;
        node = node->a;
        break;
      }
      case Step::AppRight:
        if (!is_neutral(node->a)) return false;
        node = node->b;
        break;
      case Step::SubBody: {
        auto left = lfv(node->a, hole, i + 1);
        if (left.count(node->var)) return false;
        node = node->a;
        break;
      }
      case Step::SubArg:
        node = node->b;  // no clause constrains argument positions
        break;
    }
  }
  return true;
}

// Grammar form: the inductive definition of the same discipline. It differs
// from the clause form on holes inside substitution arguments, which the
// grammar never produces; readback contexts have no such holes, and the two
// forms are asserted to agree on them.
inline bool is_lo_context_grammar(const LscPtr& t, const Path& hole,
                                  std::size_t i = 0) {
  if (i == hole.size()) return true;
  switch (hole[i]) {
    case Step::LamBody:
      return is_lo_context_grammar(t->a, hole, i + 1);
    case Step::AppLeft: {
      LscPtr q = t->a;
      std::size_t j = i + 1;
      while (q->tag == LscTerm::Tag::Sub && j < hole.size() &&
             hole[j] == Step::SubBody) {
        q = q->a;
        ++j;
      }
      if (q->tag == LscTerm::Tag::Lam && j < hole.size()) return false;
      return is_lo_context_grammar(t->a, hole, i + 1);
    }
    case Step::AppRight:
      return is_neutral(t->a) && is_lo_context_grammar(t->b, hole, i + 1);
    case Step::SubBody:
      return !lfv(t->a, hole, i + 1).count(t->var) &&
             is_lo_context_grammar(t->a, hole, i + 1);
    case Step::SubArg:
      return false;
  }
  throw std::logic_error("is_lo_context_grammar: bad step");
}

// ---------------------------------------------------------------------------
// Per-transition correspondence. Commutative transitions keep the readback
// unchanged up to renaming; closing a scope may additionally drop the garbage
// substitutions of that scope; a beta transition matches a strategy beta step
// followed by floating the created substitution out of the argument spine;
// a copy transition matches a strategy copy step on the nose.

struct DistillReport {
  bool ok = true;
  std::size_t chain_len = 0;  // congruence steps used (beta float / gc drops)
  std::string detail;         // empty when ok
};

namespace detail {

struct FloatResult {
  LscPtr term;
  std::size_t moves = 0;
  bool blocked = false;  // a sibling captured the substituted variable
};

// Move the substitution node at `pos` outward while its parent is an
// application: (t[x<-u]) w becomes (t w)[x<-u], and w (t[x<-u]) becomes
// (w t)[x<-u]. Each move is sound only if x is not free in the sibling,
// which machine renaming guarantees; a violation is reported, not assumed.
inline FloatResult float_sub_out(LscPtr whole, Path pos) {
  FloatResult r{std::move(whole), 0, false};
  while (!pos.empty()) {
    Path parent_pos(pos.begin(), pos.end() - 1);
    LscPtr parent = subterm_at(r.term, parent_pos);
    if (parent->tag != LscTerm::Tag::App) break;
    LscPtr sub = pos.back() == Step::AppLeft ? parent->a : parent->b;
    LscPtr sibling = pos.back() == Step::AppLeft ? parent->b : parent->a;
    if (occurs_free_lsc(sibling, sub->var)) {
      r.blocked = true;
      return r;
    }
    LscPtr body = pos.back() == Step::AppLeft ? ls_app(sub->a, sibling)
                                              : ls_app(sibling, sub->a);
    r.term = plug(r.term, parent_pos, ls_sub(body, sub->var, sub->b));
    pos = std::move(parent_pos);
    ++r.moves;
  }
  return r;
}

}  // namespace detail

inline DistillReport distill_check(const MachineState& before,
                                   TransitionLabel label,
                                   const MachineState& after) {
  DistillReport rep;
  auto fail = [&](std::string m) {
    rep.ok = false;
    rep.detail = std::move(m);
    return rep;
  };
  DecodedContext src = decode_state(before);
  DecodedContext dst = decode_state(after);
  switch (label) {
    case TransitionLabel::C1:
    case TransitionLabel::C2:
    case TransitionLabel::C3:
    case TransitionLabel::C5:
    case TransitionLabel::C6:
      if (!alpha_eq_lsc(src.term, dst.term))
        return fail(std::string(label_name(label)) +
                    ": readback changed across a commutative step");
      return rep;
    case TransitionLabel::C4: {
      // closing a scope drops that scope's leftover substitutions: they are
      // the weak part of the source environment and sit innermost around the
      // focus, so dropping them from the inside out is a garbage-collection
      // chain whose side condition is asserted at every step
      auto weak = strip_closed_fragments(split_env(before.env).weak);
      for (const auto& e : weak)
        if (e.kind != EnvEntry::Kind::Sub)
          return fail("C4: weak environment contains a stray marker");
      const std::size_t drops = weak.size();
      LscPtr cur = src.term;
      Path pos = src.hole;
      for (std::size_t k = 0; k < drops; ++k) {
        if (pos.empty() || pos.back() != Step::SubBody)
          return fail("C4: leftover substitution is missing from the readback");
        pos.pop_back();
        LscPtr node = subterm_at(cur, pos);
        if (node->tag != LscTerm::Tag::Sub)
          return fail("C4: leftover substitution is missing from the readback");
        if (occurs_free_lsc(node->a, node->var))
          return fail("C4: a supposedly dead substitution is still referenced");
        cur = plug(cur, pos, node->a);
      }
      rep.chain_len = drops;
      if (!alpha_eq_lsc(cur, dst.term))
        return fail("C4: dropping the scope's garbage misses the target readback");
      if (lsc_size(src.term) <= 15) {
        // small instances are re-certified by the blind bounded search
        EquivOptions opts;
        opts.gc_only = true;
        auto depth = static_cast<std::size_t>(es_count(src.term));
        if (!equiv_bounded(src.term, dst.term, depth, opts).ok())
          return fail("C4: the bounded search disagrees with the drop chain");
      }
      return rep;
    }
    case TransitionLabel::M: {
      auto st = step_lo(src.term);
      if (!st || st->kind != RedexKind::Multiplicative)
        return fail("M: the strategy does not fire a beta step on the readback");
      if (src.hole.empty() || src.hole.back() != Step::AppLeft)
        return fail("M: the focus is not the function of an application");
      Path redex(src.hole.begin(), src.hole.end() - 1);
      if (st->pos != redex)
        return fail("M: the strategy's beta redex is away from the focus");
      auto fl = detail::float_sub_out(st->term, st->pos);
      if (fl.blocked)
        return fail("M: the created substitution cannot float over a sibling");
      rep.chain_len = fl.moves;
      if (!alpha_eq_lsc(fl.term, dst.term))
        return fail("M: floating the substitution out misses the target readback");
      if (lsc_size(src.term) <= 15) {
        // small instances are re-certified by the blind bounded search
        std::size_t depth =
            2 * (before.stack.size() +
                 static_cast<std::size_t>(es_count(src.term)));
        if (!equiv_bounded(st->term, dst.term, depth).ok())
          return fail("M: the bounded search disagrees with the float chain");
      }
      return rep;
    }
    case TransitionLabel::E: {
      auto st = step_lo(src.term);
      if (!st || st->kind != RedexKind::Exponential)
        return fail("E: the strategy does not fire a copy step on the readback");
      if (st->pos != src.hole)
        return fail("E: the strategy copies away from the focus");
      if (!alpha_eq_lsc(st->term, dst.term))
        return fail("E: readback after the copy differs from the target");
      if (!st->copied || !is_pure(st->copied) ||
          !lonorm::detail::skel_eq(to_pure(st->copied), after.code))
        return fail("E: the copied code differs in shape from the new focus");
      return rep;
    }
  }
  throw std::logic_error("distill_check: bad label");
}

// ---------------------------------------------------------------------------
// Standing readback checks for a single state, suitable for running along an
// execution: the focus obeys the strategy's context discipline (both
// predicate forms agreeing), and closed scopes contribute nothing.

inline std::vector<std::string> decode_checks(const MachineState& s) {
  std::vector<std::string> problems;
  DecodedContext d = decode_state(s);
  bool clause = is_lo_context(d.term, d.hole);
  bool grammar = is_lo_context_grammar(d.term, d.hole);
  if (!clause)
    problems.push_back("readback: focus breaks the strategy's context discipline");
  if (clause != grammar)
    problems.push_back("readback: clause and grammar context forms disagree");
  LscPtr marker = ls_var(fresh_var("hole"));
  DecodedContext p = decode_pair(s.frame, s.env, marker);
  if (!is_lo_context(p.term, p.hole))
    problems.push_back("readback: frame/environment context breaks the discipline");
  MachineState stripped = s;
  stripped.env = strip_closed_fragments(s.env);
  if (!structural_eq_lsc(d.term, decode_state(stripped).term))
    problems.push_back("readback: a closed scope leaks into the readback");
  return problems;
}

}  // namespace lonorm

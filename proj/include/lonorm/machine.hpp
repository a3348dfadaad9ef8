#pragma once

// A strong-normalization machine over plain codes. Evaluation (Eval phase)
// walks down the leftmost spine pushing application arguments on a stack and
// turning beta redexes into environment entries; when it bottoms out on an
// abstraction with no pending argument it goes under the binder, leaving an
// open-scope marker, and when it hits a variable bound to such a marker it
// backtracks (Backtrack phase), rebuilding the normal prefix and resuming on
// the next pending argument. Substitution is by need: a variable bound to a
// code steps to a freshly renamed copy of it, never mutating the environment.
//
// The environment is an ordered list because the readback needs the history:
// scope markers divide it into segments, and a closed segment (a Close
// matched by its Open) is dead weight that lookups and the readback skip,
// which is the machine's built-in garbage collection. A hash index gives
// constant-time variable access; on live states it provably agrees with the
// formal list scan, and the full check level asserts that instead of
// assuming it.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lonorm/beta.hpp"
#include "lonorm/term.hpp"

namespace lonorm {

enum class Phase { Eval, Backtrack };

enum class TransitionLabel { C1, M, C2, E, C3, C4, C5, C6 };

inline const char* label_name(TransitionLabel l) {
  switch (l) {
    case TransitionLabel::C1: return "C1";
    case TransitionLabel::M: return "M";
    case TransitionLabel::C2: return "C2";
    case TransitionLabel::E: return "E";
    case TransitionLabel::C3: return "C3";
    case TransitionLabel::C4: return "C4";
    case TransitionLabel::C5: return "C5";
    case TransitionLabel::C6: return "C6";
  }
  return "?";
}

// M and E do the real rewriting work; the six C-steps only move the focus.
inline bool is_principal(TransitionLabel l) {
  return l == TransitionLabel::M || l == TransitionLabel::E;
}

// A frame entry is either a binder we are currently under (pushed when
// evaluation enters an abstraction) or a finished function part together
// with the stack that was pending when its argument evaluation started.
struct FrameEntry {
  enum class Kind { Binder, Pair };
  Kind kind;
  VarId var{};                  // Binder
  TermPtr head;                 // Pair: the finished function code
  std::vector<TermPtr> stack;   // Pair: the saved argument stack
};

// Environment entries: a substitution created by a beta step, or a scope
// marker. Open records entering an abstraction body, Close records having
// finished it; the markers are never consumed by transitions, they only
// structure the list for lookups, checks, and the readback.
struct EnvEntry {
  enum class Kind { Sub, Open, Close };
  Kind kind;
  VarId var;
  TermPtr code;  // Sub only
};

struct LookupResult {
  enum class Kind { Bound, OpenScope, Undefined };
  Kind kind;
  TermPtr code;  // Bound only
};

// Formal lookup on the entry list, newest entry first. A Close starts a
// closed segment that is skipped wholesale (markers may nest); an Open seen
// at top level means the variable names a scope we are inside of. `end`
// limits the scan to the prefix before that index: the environment as an
// entry created at `end` saw it.
inline LookupResult env_lookup(const std::vector<EnvEntry>& env, VarId x,
                               std::size_t end) {
  std::size_t depth = 0;
  for (std::size_t i = end; i-- > 0;) {
    const auto& e = env[i];
    switch (e.kind) {
      case EnvEntry::Kind::Close:
        ++depth;
        break;
      case EnvEntry::Kind::Open:
        if (depth > 0) {
          --depth;
          break;
        }
        if (e.var == x) return {LookupResult::Kind::OpenScope, nullptr};
        break;
      case EnvEntry::Kind::Sub:
        if (depth == 0 && e.var == x)
          return {LookupResult::Kind::Bound, e.code};
        break;
    }
  }
  if (depth != 0)
    throw std::logic_error("env_lookup: unmatched close marker");
  return {LookupResult::Kind::Undefined, nullptr};
}

inline LookupResult env_lookup(const std::vector<EnvEntry>& env, VarId x) {
  return env_lookup(env, x, env.size());
}

// Machine state. Stacks, frames and environments are push/pop-at-the-back
// vectors: the back is the newest entry (the head, in list terms). The index
// maps a variable to the position of its Sub or Open entry; variables are
// never rebound (names are globally fresh), so entries are permanent.
struct MachineState {
  Phase phase = Phase::Eval;
  std::vector<FrameEntry> frame;
  TermPtr code;
  std::vector<TermPtr> stack;
  std::vector<EnvEntry> env;
  std::unordered_map<VarId, std::size_t> index;
};

inline LookupResult env_lookup_indexed(const MachineState& s, VarId x) {
  auto it = s.index.find(x);
  if (it == s.index.end()) return {LookupResult::Kind::Undefined, nullptr};
  const auto& entry = s.env[it->second];
  if (entry.kind == EnvEntry::Kind::Sub)
    return {LookupResult::Kind::Bound, entry.code};
  return {LookupResult::Kind::OpenScope, nullptr};
}

struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Initial state: the code is the (well-named) input, everything else empty.
inline MachineState machine_init(const TermPtr& t) {
  if (!is_closed(t))
    throw std::invalid_argument("machine_init: term is not closed");
  MachineState s;
  s.code = well_name(t);
  return s;
}

inline bool is_final(const MachineState& s) {
  return s.phase == Phase::Backtrack && s.frame.empty() && s.stack.empty();
}

struct StepInfo {
  bool did_step;          // false: the state was final and is untouched
  TransitionLabel label;  // valid when did_step
};

// One transition, in place. Dispatch is deterministic: in Eval the code's
// head constructor picks the row (with the variable case split by lookup);
// in Backtrack a pending stack takes priority, then the frame top.
// verify_lookup cross-checks the hash index against the formal list scan on
// the variable actually queried.
inline StepInfo machine_step(MachineState& s, bool verify_lookup = false) {
  using Tag = PureTerm::Tag;
  if (s.phase == Phase::Eval) {
    switch (s.code->tag) {
      case Tag::App: {  // C1: focus on the function, argument goes on the stack
        s.stack.push_back(s.code->b);
        s.code = s.code->a;
        return {true, TransitionLabel::C1};
      }
      case Tag::Lam: {
        if (!s.stack.empty()) {  // M: a beta redex becomes an environment entry
          auto arg = std::move(s.stack.back());
          s.stack.pop_back();
          s.index.emplace(s.code->var, s.env.size());
          s.env.push_back({EnvEntry::Kind::Sub, s.code->var, std::move(arg)});
          s.code = s.code->a;
          return {true, TransitionLabel::M};
        }
        // C2: go under the binder, opening a scope
        s.frame.push_back(
            FrameEntry{FrameEntry::Kind::Binder, s.code->var, nullptr, {}});
        s.index.emplace(s.code->var, s.env.size());
        s.env.push_back({EnvEntry::Kind::Open, s.code->var, nullptr});
        s.code = s.code->a;
        return {true, TransitionLabel::C2};
      }
      case Tag::Var: {
        auto r = env_lookup_indexed(s, s.code->var);
        if (verify_lookup) {
          auto formal = env_lookup(s.env, s.code->var);
          if (formal.kind != r.kind || formal.code != r.code)
            throw InvariantViolation(
                "lookup index disagrees with the formal scan on " +
                var_hint(s.code->var));
        }
        if (r.kind == LookupResult::Kind::Bound) {  // E: substitute a fresh copy
          s.code = rename_fresh(r.code);
          return {true, TransitionLabel::E};
        }
        if (r.kind == LookupResult::Kind::OpenScope) {  // C3: a normal head
          s.phase = Phase::Backtrack;
          return {true, TransitionLabel::C3};
        }
        throw std::logic_error(
            "machine_step: undefined variable in code; unreachable from "
            "closed initial terms");
      }
    }
    throw std::logic_error("machine_step: bad code tag");
  }
  // Backtrack phase
  if (!s.stack.empty()) {  // C6: park the finished code, evaluate the next arg
    auto arg = std::move(s.stack.back());
    s.stack.pop_back();
    FrameEntry pair{FrameEntry::Kind::Pair, VarId{}, std::move(s.code),
                    std::move(s.stack)};
    s.frame.push_back(std::move(pair));
    s.code = std::move(arg);
    s.stack = {};
    s.phase = Phase::Eval;
    return {true, TransitionLabel::C6};
  }
  if (!s.frame.empty()) {
    auto& top = s.frame.back();
    if (top.kind == FrameEntry::Kind::Binder) {  // C4: rebuild the abstraction
      s.code = mk_lam(top.var, s.code);
      s.env.push_back({EnvEntry::Kind::Close, top.var, nullptr});
      s.frame.pop_back();
      return {true, TransitionLabel::C4};
    }
    // C5: rebuild the application, restore the saved stack
    s.code = mk_app(top.head, s.code);
    s.stack = std::move(top.stack);
    s.frame.pop_back();
    return {true, TransitionLabel::C5};
  }
  return {false, TransitionLabel::C1};  // final
}

// ---------------------------------------------------------------------------
// Counters and the step measure.

struct MachineCounters {
  std::uint64_t c1 = 0, m = 0, c2 = 0, e = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;

  void bump(TransitionLabel l) {
    switch (l) {
      case TransitionLabel::C1: ++c1; break;
      case TransitionLabel::M: ++m; break;
      case TransitionLabel::C2: ++c2; break;
      case TransitionLabel::E: ++e; break;
      case TransitionLabel::C3: ++c3; break;
      case TransitionLabel::C4: ++c4; break;
      case TransitionLabel::C5: ++c5; break;
      case TransitionLabel::C6: ++c6; break;
    }
  }

  std::uint64_t commutative_eval() const { return c1 + c2 + c3; }
  std::uint64_t commutative_back() const { return c4 + c5 + c6; }
  std::uint64_t commutative() const {
    return commutative_eval() + commutative_back();
  }
  std::uint64_t principal() const { return m + e; }
  std::uint64_t total() const { return commutative() + principal(); }
};

inline std::uint64_t stack_measure(const std::vector<TermPtr>& pi) {
  std::uint64_t n = 0;
  for (const auto& c : pi) n += c->size;
  return n;
}

inline std::uint64_t frame_measure(const std::vector<FrameEntry>& f) {
  std::uint64_t n = 0;
  for (const auto& fe : f)
    if (fe.kind == FrameEntry::Kind::Pair) n += stack_measure(fe.stack);
  return n;
}

// Size of the not-yet-processed part of the state: the code counts only
// while evaluating, stacks always, binders and finished heads never. Every
// transition moves this by a fixed sign, which is what makes the commutative
// step count bilinear in the input size and the substitution count.
inline std::uint64_t machine_measure(const MachineState& s) {
  auto base = frame_measure(s.frame) + stack_measure(s.stack);
  return s.phase == Phase::Eval ? base + s.code->size : base;
}

// Per-transition change of the measure. Substitution may grow it by at most
// the size of one stored code (a fragment of the input); the eval-side moves
// strictly shrink it; the backtracking moves only shuffle it around.
inline std::optional<std::string> measure_delta_violation(
    TransitionLabel l, std::uint64_t before, std::uint64_t after,
    std::uint64_t t0_size) {
  switch (l) {
    case TransitionLabel::E:
      if (after > before + t0_size)
        return "measure: substitution grew the state by more than the input "
               "size";
      return std::nullopt;
    case TransitionLabel::M:
    case TransitionLabel::C1:
    case TransitionLabel::C2:
    case TransitionLabel::C3:
      if (after >= before)
        return std::string("measure: ") + label_name(l) +
               " did not strictly decrease";
      return std::nullopt;
    case TransitionLabel::C4:
    case TransitionLabel::C5:
    case TransitionLabel::C6:
      if (after != before)
        return std::string("measure: ") + label_name(l) + " changed the value";
      return std::nullopt;
  }
  return std::nullopt;
}

// Prefix inequalities tying the bookkeeping work to the real work: the
// eval-side commutative steps and beta steps are paid for by substitutions
// (each can re-inject at most one input-sized fragment), backtracking is
// paid for by the eval side, and each backtracking flavor is bounded by the
// step that creates what it consumes.
inline std::optional<std::string> counter_bound_violation(
    const MachineCounters& c, std::uint64_t t0_size) {
  if (c.commutative_eval() + c.m > (1 + c.e) * t0_size)
    return "counters: eval-side steps exceed (1+e)*|t0|";
  if (c.commutative_back() > 2 * c.commutative_eval())
    return "counters: backtracking steps exceed twice the eval-side steps";
  if (c.commutative() > 3 * (1 + c.e) * t0_size)
    return "counters: commutative steps exceed 3*(1+e)*|t0|";
  if (c.c4 > c.c2) return "counters: more scopes closed than opened";
  if (c.c5 > c.c6) return "counters: more pairs popped than parked";
  if (c.c6 > c.c3) return "counters: more arguments resumed than heads found";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Structural checks.

// The scope markers must nest like parentheses, newest first: every Close is
// matched, further down, by an Open of the same variable; Opens may stay
// unmatched (we are still inside those scopes).
inline bool env_scopes_well_formed(const std::vector<EnvEntry>& env) {
  std::vector<VarId> pending;  // Close markers awaiting their Open
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    if (it->kind == EnvEntry::Kind::Close) pending.push_back(it->var);
    if (it->kind == EnvEntry::Kind::Open) {
      if (pending.empty()) continue;  // an open scope of the trunk
      if (pending.back() != it->var) return false;
      pending.pop_back();
    }
  }
  return pending.empty();
}

// Frame/environment agreement: stripping the newest weak layers (finished
// pairs on the frame; substitutions and closed scopes on the environment)
// must expose a binder entry and an Open marker for the same variable, layer
// by layer, until both run out together.
inline bool check_compat(const std::vector<FrameEntry>& frame,
                         const std::vector<EnvEntry>& env) {
  std::size_t fi = frame.size(), ei = env.size();
  while (true) {
    while (fi > 0 && frame[fi - 1].kind == FrameEntry::Kind::Pair) --fi;
    while (ei > 0) {
      const auto& en = env[ei - 1];
      if (en.kind == EnvEntry::Kind::Sub) {
        --ei;
        continue;
      }
      if (en.kind == EnvEntry::Kind::Close) {
        std::vector<VarId> pending{en.var};
        --ei;
        while (ei > 0 && !pending.empty()) {
          const auto& in = env[ei - 1];
          if (in.kind == EnvEntry::Kind::Close) pending.push_back(in.var);
          if (in.kind == EnvEntry::Kind::Open) {
            if (pending.back() != in.var) return false;
            pending.pop_back();
          }
          --ei;
        }
        if (!pending.empty()) return false;
        continue;
      }
      break;  // Open: the trunk starts here
    }
    if (fi == 0 && ei == 0) return true;
    if (fi == 0 || ei == 0) return false;
    const auto& fe = frame[fi - 1];
    const auto& ee = env[ei - 1];
    if (fe.kind != FrameEntry::Kind::Binder ||
        ee.kind != EnvEntry::Kind::Open || fe.var != ee.var)
      return false;
    --fi;
    --ei;
  }
}

namespace detail {

inline void collect_codes(const MachineState& s,
                          std::vector<TermPtr>& out) {
  out.push_back(s.code);
  for (const auto& c : s.stack) out.push_back(c);
  for (const auto& fe : s.frame) {
    if (fe.kind != FrameEntry::Kind::Pair) continue;
    out.push_back(fe.head);
    for (const auto& c : fe.stack) out.push_back(c);
  }
  for (const auto& en : s.env)
    if (en.kind == EnvEntry::Kind::Sub) out.push_back(en.code);
}

}  // namespace detail

// Every invariant a live state satisfies, evaluated on an arbitrary state;
// violations come back as data so tests can probe handcrafted bad states.
// t0 is the initial code of the run this state belongs to.
inline std::vector<std::string> check_invariants(const MachineState& s,
                                                 const TermPtr& t0) {
  std::vector<std::string> out;

  if (!env_scopes_well_formed(s.env))
    out.push_back("environment: scope markers unmatched or crossed");
  if (!check_compat(s.frame, s.env))
    out.push_back("compatibility: frame and environment do not agree");

  // normal form: a backtracking code is finished, and is not an abstraction
  // when an argument is still pending; parked heads are finished non-lambdas
  if (s.phase == Phase::Backtrack) {
    if (!is_beta_normal(s.code))
      out.push_back("normal form: backtracking code is not normal");
    if (!s.stack.empty() && s.code->tag == PureTerm::Tag::Lam)
      out.push_back("normal form: backtracking code not neutral under a "
                    "pending stack");
  }
  for (const auto& fe : s.frame) {
    if (fe.kind != FrameEntry::Kind::Pair) continue;
    if (!is_beta_normal(fe.head) || fe.head->tag == PureTerm::Tag::Lam)
      out.push_back("normal form: parked head is not a neutral normal form");
  }

  // backtracking free variables: a finished code only references binders we
  // are still under; a parked head only references binders below its entry
  std::unordered_set<VarId> binders_below;
  if (s.phase == Phase::Backtrack) {
    std::unordered_set<VarId> all;
    for (const auto& fe : s.frame)
      if (fe.kind == FrameEntry::Kind::Binder) all.insert(fe.var);
    for (auto v : free_vars(s.code))
      if (!all.count(v)) {
        out.push_back("backtracking: finished code escapes the open binders");
        break;
      }
  }
  for (const auto& fe : s.frame) {
    if (fe.kind == FrameEntry::Kind::Binder) {
      binders_below.insert(fe.var);
      continue;
    }
    for (auto v : free_vars(fe.head))
      if (!binders_below.count(v)) {
        out.push_back("backtracking: parked head escapes the binders below "
                      "it");
        break;
      }
  }

  // naming. Codes still to be consumed carry binders that are globally
  // fresh: distinct from each other, from substitution variables, and from
  // scope variables. Rebuilt codes (the backtracking focus and parked heads)
  // are different: every lambda in them was reassembled from a closed scope,
  // so their binders must be exactly closed-scope variables, one use each.
  {
    std::vector<TermPtr> consumable;
    if (s.phase == Phase::Eval) consumable.push_back(s.code);
    for (const auto& c : s.stack) consumable.push_back(c);
    std::vector<TermPtr> rebuilt;
    if (s.phase == Phase::Backtrack) rebuilt.push_back(s.code);
    for (const auto& fe : s.frame) {
      if (fe.kind != FrameEntry::Kind::Pair) continue;
      rebuilt.push_back(fe.head);
      for (const auto& c : fe.stack) consumable.push_back(c);
    }
    for (const auto& en : s.env)
      if (en.kind == EnvEntry::Kind::Sub) consumable.push_back(en.code);

    bool ill = false;
    for (const auto& c : consumable)
      if (!is_well_named(c)) ill = true;
    for (const auto& c : rebuilt)
      if (!is_well_named(c)) ill = true;
    if (ill) out.push_back("naming: a live code is not well-named");

    std::unordered_set<VarId> seen;
    bool dup = false;
    for (const auto& c : consumable) {
      std::vector<VarId> bs;
      collect_binders(c, bs);
      for (auto v : bs)
        if (!seen.insert(v).second) dup = true;
    }
    for (const auto& en : s.env) {
      if (en.kind == EnvEntry::Kind::Close) continue;  // mirrors its Open
      if (!seen.insert(en.var).second) dup = true;
    }
    if (dup) out.push_back("naming: a variable is bound twice across the state");

    // closed scopes: opens that have found their close, newest first
    std::unordered_set<VarId> closed;
    {
      std::vector<VarId> pending;
      for (auto it = s.env.rbegin(); it != s.env.rend(); ++it) {
        if (it->kind == EnvEntry::Kind::Close) pending.push_back(it->var);
        if (it->kind == EnvEntry::Kind::Open && !pending.empty() &&
            pending.back() == it->var) {
          pending.pop_back();
          closed.insert(it->var);
        }
      }
    }
    bool stray = false;
    std::unordered_set<VarId> used;
    for (const auto& c : rebuilt) {
      std::vector<VarId> bs;
      collect_binders(c, bs);
      for (auto v : bs)
        if (!closed.count(v) || !used.insert(v).second) stray = true;
    }
    if (stray)
      out.push_back("naming: a rebuilt binder does not own a closed scope");
  }

  // closure: every free variable of the focused code, the stacks, and the
  // parked heads resolves in the environment as seen from the top; a
  // substitution's code resolves in the prefix older than the entry itself,
  // which is the environment it was created under (its scope may have been
  // closed over since, hiding it from the top)
  {
    std::vector<TermPtr> codes{s.code};
    for (const auto& c : s.stack) codes.push_back(c);
    for (const auto& fe : s.frame) {
      if (fe.kind != FrameEntry::Kind::Pair) continue;
      codes.push_back(fe.head);
      for (const auto& c : fe.stack) codes.push_back(c);
    }
    bool unresolved = false;
    for (const auto& c : codes) {
      for (auto v : free_vars(c))
        if (env_lookup(s.env, v).kind == LookupResult::Kind::Undefined) {
          unresolved = true;
          break;
        }
      if (unresolved) break;
    }
    if (unresolved)
      out.push_back("closure: a live code references an undefined variable");

    // one sweep oldest-to-newest: `visible` is what an entry created at this
    // point could see (equivalent to a prefix-limited lookup, but linear);
    // closing a scope removes every name it introduced
    std::unordered_set<VarId> visible;
    std::vector<std::vector<VarId>> scopes(1);
    bool forward_ref = false;
    for (const auto& en : s.env) {
      if (en.kind == EnvEntry::Kind::Sub) {
        for (auto v : free_vars(en.code))
          if (!visible.count(v)) {
            forward_ref = true;
            break;
          }
        if (forward_ref) break;
        visible.insert(en.var);
        scopes.back().push_back(en.var);
      } else if (en.kind == EnvEntry::Kind::Open) {
        visible.insert(en.var);
        scopes.emplace_back();
        scopes.back().push_back(en.var);
      } else {
        if (scopes.size() <= 1) {
          forward_ref = true;  // a close without its open hides everything
          break;
        }
        for (auto v : scopes.back()) visible.erase(v);
        scopes.pop_back();
      }
    }
    if (forward_ref)
      out.push_back("closure: a substitution escapes its creation scope");
  }

  // subterm: the codes still being consumed are fragments of the input (the
  // focused code while evaluating, stacked arguments, parked stacks, and
  // substitution bodies); rebuilt normal forms are exempt
  {
    auto sub_ok = [&](const TermPtr& c) {
      return is_subterm_upto_names(c, t0);
    };
    bool bad = false;
    if (s.phase == Phase::Eval && !sub_ok(s.code)) bad = true;
    for (const auto& c : s.stack)
      if (!sub_ok(c)) bad = true;
    for (const auto& fe : s.frame)
      if (fe.kind == FrameEntry::Kind::Pair)
        for (const auto& c : fe.stack)
          if (!sub_ok(c)) bad = true;
    for (const auto& en : s.env)
      if (en.kind == EnvEntry::Kind::Sub && !sub_ok(en.code)) bad = true;
    if (bad)
      out.push_back("subterm: a consumable code is not a fragment of the "
                    "input");
  }

  return out;
}

// ---------------------------------------------------------------------------
// Budgeted execution.

enum class CheckLevel { Off, Counters, Full };

enum class RunOutcome { Final, BudgetExhausted };

struct Execution {
  MachineState initial;
  std::vector<TransitionLabel> labels;
  std::vector<MachineState> states;  // parallel to labels when recorded
  MachineCounters counters;
  RunOutcome outcome = RunOutcome::BudgetExhausted;
  MachineState last;
};

using StepHook =
    std::function<void(const MachineState&, TransitionLabel)>;

// Runs up to `budget` transitions from s0 (assumed initial). Counters level
// asserts the measure movement and the counter bounds after every step; Full
// adds the whole invariant battery and the lookup cross-check. Violations
// throw InvariantViolation. The hook, if any, sees the state after each step.
inline Execution machine_run(MachineState s0, std::uint64_t budget,
                             CheckLevel level = CheckLevel::Counters,
                             bool record_states = false,
                             const StepHook& hook = {}) {
  Execution ex;
  ex.initial = s0;
  const TermPtr t0 = s0.code;
  const std::uint64_t t0_size = t0->size;
  MachineState s = std::move(s0);

  for (std::uint64_t i = 0; i < budget; ++i) {
    const std::uint64_t before =
        level == CheckLevel::Off ? 0 : machine_measure(s);
    auto info = machine_step(s, level == CheckLevel::Full);
    if (!info.did_step) {
      ex.outcome = RunOutcome::Final;
      break;
    }
    ex.labels.push_back(info.label);
    ex.counters.bump(info.label);
    if (level != CheckLevel::Off) {
      if (auto v = measure_delta_violation(info.label, before,
                                           machine_measure(s), t0_size))
        throw InvariantViolation(*v + " at step " +
                                 std::to_string(ex.labels.size()));
      if (auto v = counter_bound_violation(ex.counters, t0_size))
        throw InvariantViolation(*v + " at step " +
                                 std::to_string(ex.labels.size()));
    }
    if (level == CheckLevel::Full) {
      auto violations = check_invariants(s, t0);
      if (!violations.empty()) {
        std::ostringstream msg;
        msg << "after step " << ex.labels.size() << " ("
            << label_name(info.label) << "):";
        for (const auto& v : violations) msg << " [" << v << "]";
        throw InvariantViolation(msg.str());
      }
    }
    if (record_states) ex.states.push_back(s);
    if (hook) hook(s, info.label);
  }
  if (ex.outcome != RunOutcome::Final && is_final(s)) {
    // the budget ended exactly on a final state; classify it as finished
    ex.outcome = RunOutcome::Final;
  }
  ex.last = std::move(s);
  return ex;
}

// One-line state description for traces and error messages.
inline std::string describe_state(const MachineState& s) {
  std::ostringstream os;
  os << (s.phase == Phase::Eval ? "v" : "^") << " |frame|=" << s.frame.size()
     << " |stack|=" << s.stack.size() << " |env|=" << s.env.size()
     << " code.size=" << s.code->size;
  return os.str();
}

}  // namespace lonorm

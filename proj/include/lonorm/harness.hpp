#pragma once

// Drives the machine and the reference strategy side by side and aggregates
// everything the test suites assert: per-transition readback laws, invariant
// sweeps, step-count agreement keyed on principal transitions, the counter
// inequalities with their margins, and final-result agreement through
// unfolding. Also hosts the corpus generators the suites and the CLI share.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lonorm/beta.hpp"
#include "lonorm/decode.hpp"
#include "lonorm/lsc.hpp"
#include "lonorm/machine.hpp"
#include "lonorm/parse.hpp"
#include "lonorm/term.hpp"

namespace lonorm {

// ---------------------------------------------------------------------------
// Reports.

struct BoundSides {
  std::uint64_t lhs = 0;
  std::uint64_t rhs = 0;
  bool holds() const { return lhs <= rhs; }
};

struct RunCheckOptions {
  bool invariants = true;  // full state battery + lookup cross-check per step
  bool distill = true;     // readback law per transition + standing checks
};

struct Report {
  std::string term;
  std::uint64_t size = 0;
  bool normal_form = false;  // false: budget ran out (or lock-step broke)
  MachineCounters counters;
  std::uint64_t strategy_m = 0;
  std::uint64_t strategy_e = 0;
  std::uint64_t distill_checked = 0;

  bool distill_ok = true;
  bool invariants_ok = true;
  bool bilinear_ok = true;
  bool counts_ok = true;
  bool final_ok = true;

  BoundSides ev_bound;     // c-ev + m  vs  (1+e)*|t0|
  BoundSides bt_bound;     // c-bt      vs  2*c-ev
  BoundSides total_bound;  // c         vs  3*(1+e)*|t0|

  double machine_ms = 0;
  double strategy_ms = 0;
  std::vector<std::string> failures;

  bool all_ok() const {
    return distill_ok && invariants_ok && bilinear_ok && counts_ok && final_ok;
  }
};

// ---------------------------------------------------------------------------
// Lock-step comparison. The machine leads; every principal label advances the
// strategy by one step and the kinds must line up, which keeps the (m, e)
// counts equal on every prefix by construction and verified explicitly. All
// failures are recorded in the report rather than thrown; only a state the
// machine cannot leave (a bug, not a property failure) escapes as an
// exception from machine_step itself.
inline Report run_and_compare(const TermPtr& t, std::uint64_t budget = 100000,
                              const RunCheckOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
  };

  Report rep;
  rep.term = print_term(t);
  MachineState s = machine_init(t);
  const TermPtr t0 = s.code;
  rep.size = t0->size;
  LscPtr strat = from_pure(t0);

  auto note = [&](bool& flag, std::string msg) {
    flag = false;
    rep.failures.push_back(std::move(msg));
  };
  auto at_step = [&](std::uint64_t i) {
    return " at step " + std::to_string(i + 1);
  };

  MachineState prev;
  bool finished = false;
  bool lockstep_broken = false;
  for (std::uint64_t i = 0; i < budget; ++i) {
    if (opts.distill) prev = s;
    const std::uint64_t before = machine_measure(s);
    auto m0 = clock::now();
    auto info = machine_step(s, opts.invariants);
    rep.machine_ms += ms(clock::now() - m0);
    if (!info.did_step) {
      finished = true;
      break;
    }
    rep.counters.bump(info.label);

    if (auto v = measure_delta_violation(info.label, before,
                                         machine_measure(s), t0->size))
      note(rep.bilinear_ok, *v + at_step(i));
    if (auto v = counter_bound_violation(rep.counters, t0->size))
      note(rep.bilinear_ok, *v + at_step(i));

    if (opts.invariants)
      for (const auto& v : check_invariants(s, t0))
        note(rep.invariants_ok, v + at_step(i));

    if (opts.distill) {
      auto dr = distill_check(prev, info.label, s);
      ++rep.distill_checked;
      if (!dr.ok) note(rep.distill_ok, dr.detail + at_step(i));
      for (const auto& v : decode_checks(s))
        note(rep.distill_ok, v + at_step(i));
    }

    if (is_principal(info.label)) {
      auto s0 = clock::now();
      auto st = step_lo(strat);
      rep.strategy_ms += ms(clock::now() - s0);
      if (!st) {
        note(rep.counts_ok,
             "strategy is normal where the machine fired a principal step" +
                 at_step(i));
        lockstep_broken = true;
        break;
      }
      const bool machine_beta = info.label == TransitionLabel::M;
      const bool strategy_beta = st->kind == RedexKind::Multiplicative;
      if (machine_beta != strategy_beta)
        note(rep.counts_ok, "principal step kinds disagree" + at_step(i));
      strat = st->term;
      if (strategy_beta)
        ++rep.strategy_m;
      else
        ++rep.strategy_e;
      if (rep.strategy_m != rep.counters.m || rep.strategy_e != rep.counters.e)
        note(rep.counts_ok, "prefix step counts diverge" + at_step(i));
    }
  }

  rep.normal_form = !lockstep_broken && (finished || is_final(s));
  if (rep.normal_form) {
    auto m0 = clock::now();
    auto mach_nf = unfold(decode_state(s).term);
    rep.machine_ms += ms(clock::now() - m0);

    auto s0 = clock::now();
    if (step_lo(strat))
      note(rep.counts_ok, "strategy still has a redex after the machine halted");
    auto strat_nf = unfold(strat);
    rep.strategy_ms += ms(clock::now() - s0);

    if (!alpha_eq(mach_nf, strat_nf))
      note(rep.final_ok, "unfolded results of the two engines disagree");
    auto naive = beta_normalize(t0, budget);
    if (!naive.normal_form)
      note(rep.final_ok, "naive normalizer ran out of budget on a finished run");
    else if (!alpha_eq(mach_nf, *naive.normal_form))
      note(rep.final_ok, "naive normalizer disagrees with the machine result");
  }

  rep.ev_bound = {rep.counters.commutative_eval() + rep.counters.m,
                  (1 + rep.counters.e) * t0->size};
  rep.bt_bound = {rep.counters.commutative_back(),
                  2 * rep.counters.commutative_eval()};
  rep.total_bound = {rep.counters.commutative(),
                     3 * (1 + rep.counters.e) * t0->size};
  return rep;
}

// Corpus entries are independent; spread them over a small worker pool and
// keep the output indexed like the input.
inline std::vector<Report> run_corpus(const std::vector<TermPtr>& terms,
                                      std::uint64_t budget = 100000,
                                      const RunCheckOptions& opts = {}) {
  std::vector<Report> out(terms.size());
  std::atomic<std::size_t> next{0};
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (workers > 8) workers = 8;
  if (terms.size() < workers) workers = static_cast<unsigned>(terms.size());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= out.size()) break;
        out[i] = run_and_compare(terms[i], budget, opts);
      }
    });
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------------------
// Corpora.

struct CorpusSpec {
  enum class Family { ChurchArith, Combinators, RandomClosed, File };
  Family family = Family::ChurchArith;
  std::size_t size = 3;       // numeral bound / tree depth / term size
  std::size_t count = 100;    // sampled families only
  std::uint32_t seed = 42;
  std::string path;           // File only
};

inline TermPtr church_numeral(std::size_t n) {
  VarId f = fresh_var("f");
  VarId x = fresh_var("x");
  TermPtr body = mk_var(x);
  for (std::size_t i = 0; i < n; ++i) body = mk_app(mk_var(f), body);
  return mk_lam(f, mk_lam(x, body));
}

inline TermPtr church_add() { return parse_term("\\m. \\n. \\f. \\x. m f (n f x)"); }
inline TermPtr church_mul() { return parse_term("\\m. \\n. \\f. m (n f)"); }
inline TermPtr church_exp() { return parse_term("\\m. \\n. n m"); }

inline TermPtr ski_s() { return parse_term("\\x. \\y. \\z. x z (y z)"); }
inline TermPtr ski_k() { return parse_term("\\x. \\y. x"); }
inline TermPtr ski_i() { return parse_term("\\x. x"); }

// Closed pure term of at most max_size nodes; a variable is only drawn when
// a binder is in scope, so the result is closed by construction.
inline TermPtr gen_random_closed(std::mt19937& rng, std::size_t max_size) {
  std::vector<VarId> scope;
  // size accounting: lam costs 1 + body, app costs 1 + both sides, var 1;
  // with no binder in scope the smallest closed subterm is \v. v (size 2),
  // so splits under an empty scope reserve two nodes per side
  std::function<TermPtr(std::size_t)> gen = [&](std::size_t budget) -> TermPtr {
    bool can_var = !scope.empty();
    const std::size_t leaf = scope.empty() ? 2 : 1;
    bool can_lam = budget >= 2;
    bool can_app = budget >= 1 + 2 * leaf;
    unsigned pick = rng() % 6;
    if (can_app && pick >= 4) {
      std::size_t span = budget - 1 - 2 * leaf;
      std::size_t left = leaf + (span ? rng() % (span + 1) : 0);
      TermPtr a = gen(left);
      TermPtr b = gen(budget - 1 - a->size);
      return mk_app(a, b);
    }
    if (can_lam && (pick >= 2 || !can_var)) {
      VarId v = fresh_var("r");
      scope.push_back(v);
      TermPtr body = gen(budget - 1);
      scope.pop_back();
      return mk_lam(v, body);
    }
    if (can_var) return mk_var(scope[rng() % scope.size()]);
    VarId v = fresh_var("r");
    return mk_lam(v, mk_var(v));
  };
  std::size_t budget = max_size < 2 ? 2 : max_size;
  return gen(budget);
}

// Possibly-open term with explicit substitutions, for exercising the strategy
// and the congruence on their own; substitution arguments are generated
// outside the binder's scope, matching how the syntax scopes them.
inline LscPtr gen_random_lsc(std::mt19937& rng, std::size_t max_size,
                             const std::vector<VarId>& free_pool) {
  std::vector<VarId> scope(free_pool);
  std::function<LscPtr(std::size_t)> gen = [&](std::size_t budget) -> LscPtr {
    const std::size_t leaf = scope.empty() ? 2 : 1;
    bool can_lam = budget >= 2;
    bool can_app = budget >= 1 + 2 * leaf;
    bool can_sub = budget >= 2 + leaf;  // the body sees one more binder
    unsigned pick = rng() % 8;
    if (can_app && pick >= 6) {
      std::size_t span = budget - 1 - 2 * leaf;
      std::size_t left = leaf + (span ? rng() % (span + 1) : 0);
      LscPtr a = gen(left);
      LscPtr b = gen(budget - 1 - lsc_size(a));
      return ls_app(a, b);
    }
    if (can_sub && pick >= 4) {
      std::size_t span = budget - 2 - leaf;
      std::size_t arg_budget = leaf + (span ? rng() % (span + 1) : 0);
      LscPtr arg = gen(arg_budget);  // scoped outside the binder
      VarId v = fresh_var("s");
      scope.push_back(v);
      LscPtr body = gen(budget - 1 - lsc_size(arg));
      scope.pop_back();
      return ls_sub(body, v, arg);
    }
    if (can_lam && pick >= 2) {
      VarId v = fresh_var("g");
      scope.push_back(v);
      LscPtr body = gen(budget - 1);
      scope.pop_back();
      return ls_lam(v, body);
    }
    if (!scope.empty()) return ls_var(scope[rng() % scope.size()]);
    VarId v = fresh_var("g");
    return ls_lam(v, ls_var(v));
  };
  std::size_t budget = max_size < 2 ? 2 : max_size;
  return gen(budget);
}

namespace detail {

// All application trees over {S, K, I} with left spines up to the given
// length; the classic small compositions (like S K K applied to I) all show
// up by spine length four.
inline void ski_spines(std::size_t max_spine, std::vector<TermPtr>& out) {
  std::vector<TermPtr> atoms{ski_s(), ski_k(), ski_i()};
  std::vector<std::vector<TermPtr>> by_len{atoms};
  for (std::size_t len = 2; len <= max_spine; ++len) {
    std::vector<TermPtr> cur;
    for (const auto& spine : by_len.back())
      for (std::size_t a = 0; a < 3; ++a)
        cur.push_back(mk_app(spine, atoms[a]));
    by_len.push_back(cur);
  }
  for (const auto& level : by_len)
    for (const auto& t : level) out.push_back(t);
}

inline TermPtr ski_random_tree(std::mt19937& rng, std::size_t depth) {
  if (depth == 0 || rng() % 4 == 0) {
    switch (rng() % 3) {
      case 0: return ski_s();
      case 1: return ski_k();
      default: return ski_i();
    }
  }
  TermPtr a = ski_random_tree(rng, depth - 1);
  TermPtr b = ski_random_tree(rng, depth - 1);
  return mk_app(a, b);
}

}  // namespace detail

inline std::vector<TermPtr> gen_corpus(const CorpusSpec& spec) {
  std::vector<TermPtr> out;
  switch (spec.family) {
    case CorpusSpec::Family::ChurchArith: {
      TermPtr add = church_add();
      TermPtr mul = church_mul();
      TermPtr exp = church_exp();
      for (std::size_t a = 0; a <= spec.size; ++a)
        for (std::size_t b = 0; b <= spec.size; ++b) {
          out.push_back(mk_app(mk_app(add, church_numeral(a)), church_numeral(b)));
          out.push_back(mk_app(mk_app(mul, church_numeral(a)), church_numeral(b)));
          out.push_back(mk_app(mk_app(exp, church_numeral(a)), church_numeral(b)));
        }
      break;
    }
    case CorpusSpec::Family::Combinators: {
      detail::ski_spines(std::min<std::size_t>(spec.size + 2, 4), out);
      std::mt19937 rng(spec.seed);
      while (out.size() < spec.count)
        out.push_back(detail::ski_random_tree(rng, spec.size));
      break;
    }
    case CorpusSpec::Family::RandomClosed: {
      std::mt19937 rng(spec.seed);
      for (std::size_t i = 0; i < spec.count; ++i)
        out.push_back(gen_random_closed(rng, spec.size));
      break;
    }
    case CorpusSpec::Family::File: {
      std::ifstream in(spec.path);
      if (!in) throw std::runtime_error("cannot open corpus file: " + spec.path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_term(line));
      }
      break;
    }
  }
  return out;
}

// Splits a corpus by whether the naive normalizer finishes within the given
// number of beta steps; the rest is routed to divergence-style suites.
struct CorpusSplit {
  std::vector<TermPtr> normalizing;
  std::vector<TermPtr> diverging;
};

inline CorpusSplit split_by_normalization(const std::vector<TermPtr>& terms,
                                          std::uint64_t beta_budget) {
  CorpusSplit split;
  for (const auto& t : terms) {
    if (beta_normalize(t, beta_budget).normal_form)
      split.normalizing.push_back(t);
    else
      split.diverging.push_back(t);
  }
  return split;
}

// "family:size[:count[:seed]]", e.g. "church:3", "ski:4:200", "random:25:150:7".
inline CorpusSpec parse_corpus_spec(const std::string& text) {
  CorpusSpec spec;
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t colon = text.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, colon - start));
    start = colon + 1;
  }
  if (parts.empty() || parts[0].empty())
    throw std::invalid_argument("corpus spec needs a family name");
  const std::string& fam = parts[0];
  if (fam == "church" || fam == "church-arith")
    spec.family = CorpusSpec::Family::ChurchArith;
  else if (fam == "ski" || fam == "combinators")
    spec.family = CorpusSpec::Family::Combinators;
  else if (fam == "random" || fam == "random-closed")
    spec.family = CorpusSpec::Family::RandomClosed;
  else if (fam == "file") {
    spec.family = CorpusSpec::Family::File;
    if (parts.size() < 2 || parts[1].empty())
      throw std::invalid_argument("file corpus needs a path: file:PATH");
    spec.path = parts[1];
    return spec;
  } else {
    throw std::invalid_argument("unknown corpus family: " + fam);
  }
  auto num = [&](std::size_t idx, std::size_t fallback) -> std::size_t {
    if (parts.size() <= idx || parts[idx].empty()) return fallback;
    return static_cast<std::size_t>(std::stoull(parts[idx]));
  };
  spec.size = num(1, spec.size);
  spec.count = num(2, spec.count);
  spec.seed = static_cast<std::uint32_t>(num(3, spec.seed));
  return spec;
}

}  // namespace lonorm

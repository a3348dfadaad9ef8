// Acceptance gate: nine independent checks, one line of output each, exit
// code equal to the number of failed lines. Corpus sizes, budgets, and the
// performance tolerance are pinned as the constants below; the checks
// themselves are exact.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lonorm/harness.hpp"

using namespace lonorm;

namespace {

constexpr std::uint64_t kRunBudget = 10'000'000;     // machine transitions
constexpr std::uint64_t kFilterBudget = 4'000;       // naive beta steps
constexpr std::uint64_t kFilterNfCap = 5'000;        // naive normal form size
constexpr std::size_t kOracleCorpusMin = 500;        // line 1 corpus floor
constexpr double kOracleSecondsMax = 60.0;           // line 1 wall clock
constexpr std::uint64_t kDeepPrefixSteps = 10'000;   // line 4 loopers
constexpr std::size_t kSearchTerms = 2'000;          // lines 6 and 8
constexpr std::size_t kSearchTermSize = 25;
constexpr std::size_t kDiagramTerms = 1'000;         // line 7
constexpr std::size_t kDiagramTermSize = 12;
constexpr std::size_t kDiagramDepth = 4;
constexpr std::size_t kDiagramConfirmDepth = 8;
constexpr double kPerfFactorMax = 2.0;               // line 9

struct Verdict {
  bool pass = false;
  std::string note = "did not run";
};
Verdict g_verdicts[10];

void line(int n, bool pass, const std::string& note) {
  g_verdicts[n] = {pass, note};
}

template <class F>
void guarded(int n, F body) {
  try {
    body();
  } catch (const std::exception& e) {
    line(n, false, std::string("unexpected exception: ") + e.what());
  }
}

template <class F>
void parallel_for(std::size_t n, F body) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (workers > 8) workers = 8;
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        body(i);
      }
    });
  for (auto& th : pool) th.join();
}

// Normalizing closed corpus: all church arithmetic instances with operands
// up to five, plus seeded combinator trees and random closed terms with
// their non-normalizing (or naive-normal-form-explosive) entries filtered
// out so every run in the suite is expected to finish.
std::vector<TermPtr> build_oracle_corpus() {
  CorpusSpec church;
  church.family = CorpusSpec::Family::ChurchArith;
  church.size = 5;

  CorpusSpec ski;
  ski.family = CorpusSpec::Family::Combinators;
  ski.size = 5;
  ski.count = 260;
  ski.seed = 20250815;

  CorpusSpec random;
  random.family = CorpusSpec::Family::RandomClosed;
  random.size = 40;
  random.count = 280;
  random.seed = 20250816;

  std::vector<TermPtr> corpus = gen_corpus(church);
  for (const auto& spec : {ski, random})
    for (const auto& t : gen_corpus(spec)) {
      auto nf = beta_normalize(t, kFilterBudget);
      if (nf.normal_form && (*nf.normal_form)->size <= kFilterNfCap)
        corpus.push_back(t);
    }
  return corpus;
}

std::vector<TermPtr> build_deep_check_corpus() {
  CorpusSpec church;
  church.family = CorpusSpec::Family::ChurchArith;
  church.size = 3;

  CorpusSpec ski;
  ski.family = CorpusSpec::Family::Combinators;
  ski.size = 3;
  ski.count = 150;
  ski.seed = 7;

  CorpusSpec random;
  random.family = CorpusSpec::Family::RandomClosed;
  random.size = 25;
  random.count = 150;
  random.seed = 3;

  std::vector<TermPtr> corpus = gen_corpus(church);
  corpus.push_back(parse_term("(\\x. x) (\\y. y)"));
  corpus.push_back(parse_term("\\w. ((\\x. x) (\\y. y)) w"));
  corpus.push_back(parse_term("(\\x. x x) (\\y. y)"));
  corpus.push_back(parse_term("\\f. (\\x. f (x x)) (\\y. f y)"));
  for (const auto& spec : {ski, random})
    for (const auto& t : gen_corpus(spec)) {
      auto nf = beta_normalize(t, kFilterBudget);
      if (nf.normal_form && (*nf.normal_form)->size <= kFilterNfCap)
        corpus.push_back(t);
    }
  return corpus;
}

std::string seconds(double s) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(1) << s << "s";
  return o.str();
}

}  // namespace

int main() {
  // ---- 1: machine result vs the naive normalizer, at scale ---------------
  std::vector<TermPtr> corpus;
  guarded(1, [&] {
    corpus = build_oracle_corpus();
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::uint8_t> ok(corpus.size(), 0);
    parallel_for(corpus.size(), [&](std::size_t i) {
      auto ex = machine_run(machine_init(corpus[i]), kRunBudget, CheckLevel::Off);
      if (ex.outcome != RunOutcome::Final) return;
      auto got = unfold(decode_state(ex.last).term);
      auto nf = beta_normalize(corpus[i], kRunBudget);
      ok[i] = nf.normal_form && alpha_eq(got, *nf.normal_form);
    });
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t good = 0;
    for (auto b : ok) good += b;
    bool pass = corpus.size() >= kOracleCorpusMin && good == corpus.size() &&
                secs < kOracleSecondsMax;
    line(1, pass,
         std::to_string(good) + "/" + std::to_string(corpus.size()) +
             " normalizing terms match the naive normal form in " + seconds(secs));
  });

  // ---- 2 + 5: lock-step counts and the exact bounds, same corpus ---------
  guarded(2, [&] {
    RunCheckOptions fast;
    fast.invariants = false;
    fast.distill = false;
    auto reports = run_corpus(corpus, kRunBudget, fast);

    std::size_t finished = 0, counts_bad = 0, bounds_bad = 0, margins_bad = 0;
    std::string first_fail;
    for (const auto& r : reports) {
      finished += r.normal_form;
      if (!r.counts_ok || !r.final_ok) ++counts_bad;
      if (!r.bilinear_ok) ++bounds_bad;
      if (!r.ev_bound.holds() || !r.bt_bound.holds() || !r.total_bound.holds())
        ++margins_bad;
      if (first_fail.empty() && !r.failures.empty())
        first_fail = r.failures.front();
    }
    bool all_finished = finished == reports.size();
    line(2, all_finished && counts_bad == 0,
         all_finished && counts_bad == 0
             ? "machine and strategy agree on (m, e) at every principal prefix of " +
                   std::to_string(reports.size()) + " runs"
             : std::to_string(counts_bad) + " runs disagree (" +
                   std::to_string(reports.size() - finished) +
                   " unfinished); first: " + first_fail);
    line(5, all_finished && bounds_bad == 0 && margins_bad == 0,
         bounds_bad == 0 && margins_bad == 0
             ? "per-step measure deltas, counter inequalities, and final margins hold on all " +
                   std::to_string(reports.size()) + " runs"
             : std::to_string(bounds_bad) + " runs break a per-step bound; first: " +
                   first_fail);
  });

  // ---- 3 + 4: per-transition readback law and the full state battery -----
  guarded(3, [&] {
    auto deep = build_deep_check_corpus();
    auto reports = run_corpus(deep, kRunBudget, RunCheckOptions{});

    std::size_t distill_bad = 0, invariant_bad = 0;
    std::uint64_t transitions = 0;
    MachineCounters agg;
    std::string first_fail;
    for (const auto& r : reports) {
      if (!r.distill_ok) ++distill_bad;
      if (!r.invariants_ok) ++invariant_bad;
      transitions += r.distill_checked;
      agg.m += r.counters.m;
      agg.e += r.counters.e;
      agg.c1 += r.counters.c1;
      agg.c2 += r.counters.c2;
      agg.c3 += r.counters.c3;
      agg.c4 += r.counters.c4;
      agg.c5 += r.counters.c5;
      agg.c6 += r.counters.c6;
      if (first_fail.empty() && !r.failures.empty()) first_fail = r.failures.front();
    }
    bool every_flavor = agg.m && agg.e && agg.c1 && agg.c2 && agg.c3 &&
                        agg.c4 && agg.c5 && agg.c6;
    line(3, distill_bad == 0 && every_flavor,
         distill_bad == 0 && every_flavor
             ? "readback law holds on " + std::to_string(transitions) +
                   " transitions over " + std::to_string(deep.size()) +
                   " runs, all eight step flavors exercised"
             : std::to_string(distill_bad) + " runs fail; first: " + first_fail);

    bool loopers_ok = true;
    std::string looper_note;
    for (const char* src : {"(\\x. x x) (\\x. x x)", "(\\x. x x x) (\\x. x x x)"}) {
      try {
        auto ex = machine_run(machine_init(parse_term(src)), kDeepPrefixSteps,
                              CheckLevel::Full);
        if (ex.outcome != RunOutcome::BudgetExhausted) {
          loopers_ok = false;
          looper_note = std::string("looper finished unexpectedly: ") + src;
        }
      } catch (const std::exception& e) {
        loopers_ok = false;
        looper_note = e.what();
      }
    }
    line(4, invariant_bad == 0 && loopers_ok,
         invariant_bad == 0 && loopers_ok
             ? "state battery clean on all runs and on two 10,000-step looping prefixes"
             : (loopers_ok ? std::to_string(invariant_bad) + " runs fail; first: " + first_fail
                           : looper_note));
  });

  // ---- 6 + 8: the two redex searches agree; the position order is total --
  std::vector<LscPtr> search_terms;
  guarded(6, [&] {
    std::mt19937 rng(20250817);
    std::vector<VarId> pool{fresh_var("a"), fresh_var("b"), fresh_var("c")};
    std::size_t disagree = 0;
    std::string first;
    for (std::size_t i = 0; i < kSearchTerms; ++i) {
      LscPtr t = gen_random_lsc(rng, kSearchTermSize, pool);
      search_terms.push_back(t);
      auto a = find_lo_redex_ilo(t);
      auto b = find_lo_redex_by_order(t);
      bool same = a.has_value() == b.has_value() &&
                  (!a || (a->pos == b->pos && a->kind == b->kind &&
                          a->binder_prefix == b->binder_prefix));
      if (!same) {
        ++disagree;
        if (first.empty()) first = print_term(t);
      }
    }
    line(6, disagree == 0,
         disagree == 0
             ? "inductive and order-minimum searches agree on " +
                   std::to_string(kSearchTerms) + " terms"
             : std::to_string(disagree) + " disagreements; first term: " + first);
  });

  guarded(8, [&] {
    std::size_t pairs = 0, triples = 0, bad = 0;
    for (const auto& t : search_terms) {
      auto rs = enumerate_redexes(t);
      for (std::size_t i = 0; i < rs.size(); ++i) {
        if (lo_compare(rs[i].pos, rs[i].pos) != 0) ++bad;
        for (std::size_t j = i + 1; j < rs.size(); ++j) {
          int ab = lo_compare(rs[i].pos, rs[j].pos);
          int ba = lo_compare(rs[j].pos, rs[i].pos);
          ++pairs;
          if (rs[i].pos == rs[j].pos) {
            ++bad;  // distinct redexes must sit at distinct positions
            continue;
          }
          if (ab == 0 || ba == 0 || (ab < 0) == (ba < 0)) ++bad;
          for (std::size_t k = j + 1; k < rs.size(); ++k) {
            ++triples;
            int bc = lo_compare(rs[j].pos, rs[k].pos);
            int ac = lo_compare(rs[i].pos, rs[k].pos);
            if (ab < 0 && bc < 0 && ac >= 0) ++bad;
            if (ab > 0 && bc > 0 && ac <= 0) ++bad;
          }
        }
      }
    }
    line(8, bad == 0 && pairs > 0,
         bad == 0 ? "order is total, antisymmetric, and transitive on " +
                        std::to_string(pairs) + " position pairs (" +
                        std::to_string(triples) + " triples)"
                  : std::to_string(bad) + " violations over " +
                        std::to_string(pairs) + " pairs");
  });

  // ---- 7: one congruence step commutes with one strategy step ------------
  guarded(7, [&] {
    std::mt19937 rng(20250818);
    std::vector<VarId> pool{fresh_var("p"), fresh_var("q")};
    std::vector<LscPtr> terms;
    for (std::size_t i = 0; i < kDiagramTerms; ++i)
      terms.push_back(gen_random_lsc(rng, kDiagramTermSize, pool));

    std::atomic<std::size_t> diagrams{0}, deep_retries{0}, confirmed{0},
        mismatched{0};
    parallel_for(terms.size(), [&](std::size_t i) {
      const LscPtr& t = terms[i];
      auto st = step_lo(t);
      for (const auto& [u, ax] : axiom_neighbors(t)) {
        auto su = step_lo(u);
        if (st.has_value() != su.has_value()) {
          ++mismatched;
          continue;
        }
        if (!st) continue;
        ++diagrams;
        if (st->kind != su->kind) {
          ++mismatched;
          continue;
        }
        if (equiv_bounded(st->term, su->term, kDiagramDepth).ok()) continue;
        ++deep_retries;
        if (!equiv_bounded(st->term, su->term, kDiagramConfirmDepth).ok())
          ++confirmed;
      }
    });
    bool pass = mismatched == 0 && confirmed == 0 && diagrams > 0;
    std::ostringstream note;
    if (pass) {
      note << diagrams.load() << " diagrams closed with matching step kinds";
      if (deep_retries) note << " (" << deep_retries.load() << " needed the deeper search)";
    } else {
      note << mismatched.load() << " kind/normality mismatches, "
           << confirmed.load() << " diagrams open after the deeper search";
    }
    line(7, pass, note.str());
  });

  // ---- 9: commutative step cost does not follow environment length -------
  guarded(9, [&] {
    TermPtr exp = church_exp();
    auto instance = [&](std::size_t k) {
      return mk_app(mk_app(exp, church_numeral(2)), church_numeral(k));
    };
    // warm caches and the allocator before the timed runs
    machine_run(machine_init(instance(7)), kRunBudget, CheckLevel::Off);

    struct Point {
      std::size_t k;
      std::size_t env_len;
      double med_ns;
    };
    std::vector<Point> points;
    for (std::size_t k : {7, 8, 9, 10, 11, 12}) {
      MachineState s = machine_init(instance(k));
      std::vector<std::int64_t> samples;
      samples.reserve(1 << 20);
      for (std::uint64_t i = 0; i < kRunBudget; ++i) {
        auto a = std::chrono::steady_clock::now();
        auto info = machine_step(s);
        auto b = std::chrono::steady_clock::now();
        if (!info.did_step) break;
        if (!is_principal(info.label))
          samples.push_back(
              std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
      }
      if (samples.empty() || !is_final(s))
        throw std::logic_error("instance did not finish");
      auto mid = samples.begin() + samples.size() / 2;
      std::nth_element(samples.begin(), mid, samples.end());
      points.push_back({k, s.env.size(), static_cast<double>(*mid)});
    }
    double lo = points.front().med_ns, hi = points.front().med_ns;
    for (const auto& p : points) {
      lo = std::min(lo, p.med_ns);
      hi = std::max(hi, p.med_ns);
    }
    double factor = hi / std::max(lo, 1.0);
    bool grew = points.back().env_len >= 1000;
    std::ostringstream note;
    note << "median ns per bookkeeping step:";
    for (const auto& p : points) note << " " << p.med_ns;
    note << " over env sizes";
    for (const auto& p : points) note << " " << p.env_len;
    note << ", spread factor " << std::fixed << std::setprecision(2) << factor;
    line(9, factor < kPerfFactorMax && grew, note.str());
  });

  int failures = 0;
  for (int n = 1; n <= 9; ++n) {
    const auto& v = g_verdicts[n];
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL")
              << " - " << v.note << "\n";
    failures += !v.pass;
  }
  return failures;
}

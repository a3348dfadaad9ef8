#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "lonorm/decode.hpp"
#include "lonorm/machine.hpp"
#include "lonorm/parse.hpp"

using namespace lonorm;

namespace {

using TL = TransitionLabel;

FrameEntry binder(VarId x) { return {FrameEntry::Kind::Binder, x, nullptr, {}}; }

FrameEntry pair_of(TermPtr head, std::vector<TermPtr> stack) {
  return {FrameEntry::Kind::Pair, VarId{}, std::move(head), std::move(stack)};
}

EnvEntry sub(VarId x, TermPtr code) {
  return {EnvEntry::Kind::Sub, x, std::move(code)};
}

EnvEntry open(VarId x) { return {EnvEntry::Kind::Open, x, nullptr}; }
EnvEntry close(VarId x) { return {EnvEntry::Kind::Close, x, nullptr}; }

Execution run_recorded(const char* src) {
  auto ex = machine_run(machine_init(parse_term(src)), 10000, CheckLevel::Full,
                        /*record_states=*/true);
  REQUIRE(ex.outcome == RunOutcome::Final);
  REQUIRE(ex.states.size() == ex.labels.size());
  return ex;
}

// Runs the readback law on every transition of an execution and the standing
// readback checks on every state; returns the per-transition reports.
std::vector<DistillReport> check_trace_readback(const Execution& ex) {
  std::vector<DistillReport> reports;
  CHECK(decode_checks(ex.initial).empty());
  const MachineState* prev = &ex.initial;
  for (std::size_t i = 0; i < ex.labels.size(); ++i) {
    const MachineState& cur = ex.states[i];
    auto standing = decode_checks(cur);
    if (!standing.empty())
      UNSCOPED_INFO("state " << i << ": " << standing.front());
    CHECK(standing.empty());
    auto rep = distill_check(*prev, ex.labels[i], cur);
    if (!rep.ok)
      UNSCOPED_INFO("step " << i << " (" << label_name(ex.labels[i])
                            << "): " << rep.detail);
    REQUIRE(rep.ok);
    reports.push_back(rep);
    prev = &cur;
  }
  return reports;
}

}  // namespace

TEST_CASE("frame splits into parked pairs and the binder trunk") {
  VarId x = fresh_var("x");
  auto head = parse_term("\\q. q");
  std::vector<FrameEntry> frame{binder(x), pair_of(head, {parse_term("\\r. r")})};

  auto sp = split_frame(frame);
  REQUIRE(sp.weak.size() == 1);
  CHECK(sp.weak[0].kind == FrameEntry::Kind::Pair);
  REQUIRE(sp.trunk.size() == 1);
  CHECK(sp.trunk[0].kind == FrameEntry::Kind::Binder);
  CHECK(sp.trunk[0].var == x);

  CHECK(split_frame({}).weak.empty());
  CHECK(split_frame({binder(x)}).weak.empty());
}

TEST_CASE("environment splits at the newest open marker") {
  VarId x = fresh_var("x");
  VarId y = fresh_var("y");
  VarId z = fresh_var("z");
  auto u = parse_term("\\q. q");

  SECTION("a substitution above an open scope is weak") {
    std::vector<EnvEntry> env{open(x), sub(y, u)};
    auto sp = split_env(env);
    REQUIRE(sp.weak.size() == 1);
    CHECK(sp.weak[0].kind == EnvEntry::Kind::Sub);
    CHECK(sp.weak[0].var == y);
    REQUIRE(sp.trunk.size() == 1);
    CHECK(sp.trunk[0].kind == EnvEntry::Kind::Open);
  }

  SECTION("a balanced closed fragment is weak as a whole") {
    std::vector<EnvEntry> env{open(z), open(x), sub(y, u), close(x)};
    auto sp = split_env(env);
    REQUIRE(sp.weak.size() == 3);
    CHECK(sp.weak.front().kind == EnvEntry::Kind::Open);
    CHECK(sp.weak.back().kind == EnvEntry::Kind::Close);
    REQUIRE(sp.trunk.size() == 1);
    CHECK(sp.trunk[0].var == z);
  }

  SECTION("a close without its open is rejected") {
    std::vector<EnvEntry> env{sub(y, u), close(x)};
    CHECK_THROWS_AS(split_env(env), std::logic_error);
  }
}

TEST_CASE("stack readback piles arguments left of the focus, newest closest") {
  VarId m = fresh_var("m");
  auto marker = ls_var(m);
  auto u1 = parse_term("\\a. a");
  auto u2 = parse_term("\\b. b");

  auto one = decode_stack({u1}, marker);
  REQUIRE(one.hole == Path{Step::AppLeft});
  CHECK(one.term->tag == LscTerm::Tag::App);
  CHECK(structural_eq_lsc(one.term->a, marker));
  CHECK(structural_eq_lsc(one.term->b, from_pure(u1)));

  auto two = decode_stack({u1, u2}, marker);  // u2 pushed last
  REQUIRE(two.hole == (Path{Step::AppLeft, Step::AppLeft}));
  CHECK(structural_eq_lsc(two.term->b, from_pure(u1)));      // oldest outermost
  CHECK(structural_eq_lsc(two.term->a->b, from_pure(u2)));   // newest innermost
  CHECK(structural_eq_lsc(subterm_at(two.term, two.hole), marker));
}

TEST_CASE("weak environment readback wraps substitutions and drops fragments") {
  VarId a = fresh_var("a");
  VarId x = fresh_var("x");
  VarId y = fresh_var("y");
  auto u = parse_term("\\q. q");
  auto w = parse_term("\\r. \\s. r");
  VarId m = fresh_var("m");
  auto marker = ls_var(m);

  std::vector<EnvEntry> env{open(a), sub(y, u), close(a), sub(x, w)};
  auto d = decode_weak_env(env, marker);
  REQUIRE(d.hole == Path{Step::SubBody});
  REQUIRE(d.term->tag == LscTerm::Tag::Sub);
  CHECK(d.term->var == x);
  CHECK(structural_eq_lsc(d.term->b, from_pure(w)));
  CHECK(structural_eq_lsc(d.term->a, marker));

  auto stripped = strip_closed_fragments(env);
  REQUIRE(stripped.size() == 1);
  CHECK(stripped[0].kind == EnvEntry::Kind::Sub);
  CHECK(stripped[0].var == x);

  CHECK_THROWS_AS(decode_weak_env({open(a)}, marker), std::logic_error);
}

TEST_CASE("paired readback alternates weak layers and binder scopes") {
  VarId x = fresh_var("x");
  VarId y = fresh_var("y");
  auto u = parse_term("\\q. q");
  VarId m = fresh_var("m");
  auto marker = ls_var(m);

  // one open scope for x, with a substitution on y created inside it
  std::vector<FrameEntry> frame{binder(x)};
  std::vector<EnvEntry> env{open(x), sub(y, u)};
  auto d = decode_pair(frame, env, marker);
  REQUIRE(d.hole == (Path{Step::LamBody, Step::SubBody}));
  REQUIRE(d.term->tag == LscTerm::Tag::Lam);
  CHECK(d.term->var == x);
  REQUIRE(d.term->a->tag == LscTerm::Tag::Sub);
  CHECK(d.term->a->var == y);
  CHECK(structural_eq_lsc(subterm_at(d.term, d.hole), marker));

  // a parked pair sits between the focus and the scopes around it
  auto head = parse_term("\\h. h h");
  std::vector<FrameEntry> frame2{binder(x), pair_of(head, {u})};
  auto d2 = decode_pair(frame2, env, marker);
  REQUIRE(d2.hole ==
          (Path{Step::LamBody, Step::SubBody, Step::AppLeft, Step::AppRight}));
  CHECK(structural_eq_lsc(subterm_at(d2.term, d2.hole), marker));
  auto app = subterm_at(d2.term, {Step::LamBody, Step::SubBody, Step::AppLeft});
  CHECK(structural_eq_lsc(app->a, from_pure(head)));

  // frame binder without its open marker is a broken state
  std::vector<EnvEntry> bad{open(y)};
  CHECK_THROWS_AS(decode_pair(frame, bad, marker), std::logic_error);
}

TEST_CASE("focus discipline accepts strategy positions and rejects others") {
  SECTION("the empty context is fine") {
    CHECK(is_lo_context(parse_lsc("\\x. x"), {}));
    CHECK(is_lo_context_grammar(parse_lsc("\\x. x"), {}));
  }

  SECTION("argument of a neutral head is fine, of an answer is not") {
    auto neutral = parse_lsc("y (\\x. x)");
    CHECK(is_lo_context(neutral, {Step::AppRight}));
    CHECK(is_lo_context_grammar(neutral, {Step::AppRight}));

    auto answer = parse_lsc("(\\x. x) y");
    CHECK_FALSE(is_lo_context(answer, {Step::AppRight}));
    CHECK_FALSE(is_lo_context_grammar(answer, {Step::AppRight}));
  }

  SECTION("the function of an application is fine at the focus itself") {
    auto t = parse_lsc("(\\x. x) y");
    CHECK(is_lo_context(t, {Step::AppLeft}));
    CHECK(is_lo_context_grammar(t, {Step::AppLeft}));
  }

  SECTION("descending into an applied abstraction is not") {
    auto t = parse_lsc("((\\x. x)[y <- z]) w");
    Path hole{Step::AppLeft, Step::SubBody, Step::LamBody};
    CHECK_FALSE(is_lo_context(t, hole));
    CHECK_FALSE(is_lo_context_grammar(t, hole));
  }

  SECTION("a substitution body is fine only left of every bound occurrence") {
    auto t = parse_lsc("(x y)[x <- z]");
    CHECK(is_lo_context(t, {Step::SubBody, Step::AppLeft}));
    CHECK(is_lo_context_grammar(t, {Step::SubBody, Step::AppLeft}));
    CHECK_FALSE(is_lo_context(t, {Step::SubBody, Step::AppRight}));
    CHECK_FALSE(is_lo_context_grammar(t, {Step::SubBody, Step::AppRight}));
  }

  SECTION("the two forms differ only inside substitution arguments") {
    auto t = parse_lsc("x[y <- z]");
    CHECK(is_lo_context(t, {Step::SubArg}));
    CHECK_FALSE(is_lo_context_grammar(t, {Step::SubArg}));
  }
}

TEST_CASE("readback of the identity application trace") {
  auto ex = run_recorded("(\\x. x) (\\y. y)");
  REQUIRE(ex.labels ==
          (std::vector<TL>{TL::C1, TL::M, TL::E, TL::C2, TL::C3, TL::C4}));
  auto reports = check_trace_readback(ex);
  CHECK(reports[1].chain_len == 0);  // beta fires at the root, nothing to float
  CHECK(reports[5].chain_len == 0);  // the closing scope holds no garbage

  auto d0 = decode_state(ex.initial);
  CHECK(d0.hole.empty());
  CHECK(structural_eq_lsc(d0.term, from_pure(ex.initial.code)));

  auto df = decode_state(ex.last);
  CHECK(alpha_eq_lsc(df.term, parse_lsc("(\\a. a)[x <- \\y. y]")));
}

TEST_CASE("readback of the self-application trace keeps the leftover chain") {
  auto ex = run_recorded("(\\x. x x) (\\y. y)");
  REQUIRE(ex.counters.m == 2);
  REQUIRE(ex.counters.e == 3);
  check_trace_readback(ex);

  auto df = decode_state(ex.last);
  CHECK(alpha_eq_lsc(df.term, parse_lsc("(\\a. a)[b <- x][x <- \\y. y]")));
}

TEST_CASE("readback of a normal-form trace never moves") {
  auto ex = run_recorded("\\x. x (\\y. y)");
  REQUIRE(ex.counters.principal() == 0);
  check_trace_readback(ex);
  // with no principal steps every readback equals the input
  auto d0 = decode_state(ex.initial);
  for (const auto& s : ex.states)
    CHECK(alpha_eq_lsc(decode_state(s).term, d0.term));
}

TEST_CASE("a beta step under a binder floats its substitution over the stack") {
  auto ex = run_recorded("\\w. ((\\x. x) (\\y. y)) w");
  REQUIRE(ex.labels == (std::vector<TL>{TL::C2, TL::C1, TL::C1, TL::M, TL::E,
                                        TL::M, TL::E, TL::C3, TL::C4}));

  // the state before the first beta step focuses the inner function
  auto before_m = decode_state(ex.states[2]);
  CHECK(before_m.hole == (Path{Step::LamBody, Step::AppLeft, Step::AppLeft}));

  auto reports = check_trace_readback(ex);
  CHECK(reports[3].chain_len == 1);  // floats over the still-pending argument
  CHECK(reports[5].chain_len == 0);
  CHECK(reports[8].chain_len == 2);  // closing w's scope drops two leftovers

  auto df = decode_state(ex.last);
  CHECK(alpha_eq_lsc(df.term, parse_lsc("\\a. a")));
  CHECK(alpha_eq_lsc(df.term, from_pure(ex.last.code)));
}

TEST_CASE("closing a scope drops exactly the garbage it owns") {
  auto ex = run_recorded("\\x. (\\y. y) x");
  REQUIRE(ex.labels == (std::vector<TL>{TL::C2, TL::C1, TL::M, TL::E, TL::C3,
                                        TL::C4}));
  auto reports = check_trace_readback(ex);
  CHECK(reports[5].chain_len == 1);
  CHECK(alpha_eq_lsc(decode_state(ex.last).term, parse_lsc("\\a. a")));
}

TEST_CASE("beta transitions survive the blind bounded search as well") {
  for (const char* src : {"(\\x. x) (\\y. y)", "(\\x. x x) (\\y. y)",
                          "\\w. ((\\x. x) (\\y. y)) w"}) {
    auto ex = run_recorded(src);
    const MachineState* prev = &ex.initial;
    for (std::size_t i = 0; i < ex.labels.size(); ++i) {
      if (ex.labels[i] == TL::M) {
        auto d_src = decode_state(*prev);
        auto d_dst = decode_state(ex.states[i]);
        auto st = step_lo(d_src.term);
        REQUIRE(st.has_value());
        REQUIRE(st->kind == RedexKind::Multiplicative);
        std::size_t depth =
            2 * (prev->stack.size() +
                 static_cast<std::size_t>(es_count(d_src.term)));
        auto r = equiv_bounded(st->term, d_dst.term, depth);
        CHECK(r.ok());
      }
      prev = &ex.states[i];
    }
  }
}

TEST_CASE("substitutions float over whole stacks") {
  std::mt19937 rng(20250816u);
  const char* pool[] = {"\\a. a", "\\a. \\b. a", "\\a. \\b. b", "\\f. \\z. f z",
                        "\\a. a a"};
  auto pick = [&]() { return parse_term(pool[rng() % 5]); };

  for (int round = 0; round < 25; ++round) {
    std::size_t n = static_cast<std::size_t>(round) % 5;
    std::vector<TermPtr> stack;
    for (std::size_t i = 0; i < n; ++i) stack.push_back(pick());

    VarId x = fresh_var("x");
    LscPtr body = ls_app(ls_var(x), from_pure(pick()));
    LscPtr arg = from_pure(pick());

    LscPtr inside = decode_stack(stack, ls_sub(body, x, arg)).term;
    LscPtr outside = ls_sub(decode_stack(stack, body).term, x, arg);

    auto r = equiv_bounded(inside, outside, 2 * n);
    REQUIRE(r.ok());
    CHECK(r.witness.size() <= 2 * n);
    for (const auto& ax : r.witness) CHECK(ax.kind == AxiomKind::AppL);
  }
}

TEST_CASE("closed fragments never leak into a state's readback") {
  auto ex = run_recorded("(\\x. x x) (\\y. y)");
  // the final environment ends in a closed scope; drop it by hand and compare
  auto stripped = ex.last;
  stripped.env = strip_closed_fragments(ex.last.env);
  REQUIRE(stripped.env.size() < ex.last.env.size());
  CHECK(structural_eq_lsc(decode_state(stripped).term,
                          decode_state(ex.last).term));
}

#include <catch2/catch_amalgamated.hpp>

#include "lonorm/parse.hpp"

using namespace lonorm;

TEST_CASE("application is left associative, lambda body extends right") {
  CHECK(alpha_eq(parse_term("f x y"), parse_term("(f x) y")));
  CHECK(!alpha_eq(parse_term("f x y"), parse_term("f (x y)")));
  CHECK(alpha_eq(parse_term("\\x. x y"), parse_term("\\x. (x y)")));
  CHECK(alpha_eq(parse_term("\\x y. x"), parse_term("\\x. \\y. x")));
  // a trailing lambda is the last argument
  CHECK(alpha_eq(parse_term("f \\x. x"), parse_term("f (\\x. x)")));
}

TEST_CASE("names may contain digits, underscores and primes") {
  auto t = parse_term("\\x1 _y. x1 (_y z')");
  CHECK(size(t) == 7);
  auto r = parse_term(print_term(t));
  CHECK(alpha_eq(t, r));
}

TEST_CASE("parse errors are reported, not swallowed") {
  CHECK_THROWS_AS(parse_term("(x"), ParseError);
  CHECK_THROWS_AS(parse_term("\\. x"), ParseError);
  CHECK_THROWS_AS(parse_term("x)"), ParseError);
  CHECK_THROWS_AS(parse_term(""), ParseError);
  CHECK_THROWS_AS(parse_term("x [y <- z]"), ParseError);   // pure grammar
  CHECK_THROWS_AS(parse_lsc("x [y < z]"), ParseError);
  CHECK_THROWS_AS(parse_lsc("x [y <- z"), ParseError);
}

TEST_CASE("substitution postfix binds the preceding atom") {
  auto a = parse_lsc("x y[z <- w]");
  REQUIRE(a->tag == LscTerm::Tag::App);
  CHECK(a->b->tag == LscTerm::Tag::Sub);

  auto b = parse_lsc("(x y)[z <- w]");
  REQUIRE(b->tag == LscTerm::Tag::Sub);
  CHECK(b->a->tag == LscTerm::Tag::App);

  // chains nest left
  auto c = parse_lsc("x[a <- b][c <- d]");
  REQUIRE(c->tag == LscTerm::Tag::Sub);
  CHECK(c->a->tag == LscTerm::Tag::Sub);
}

TEST_CASE("substitution scoping: body bound, argument not") {
  // in x[x <- x] the body occurrence is bound, the argument one is free
  auto t = parse_lsc("x[x <- x]");
  REQUIRE(t->tag == LscTerm::Tag::Sub);
  CHECK(t->a->var == t->var);
  CHECK(t->b->var != t->var);
  auto fvs = fv(t);
  REQUIRE(fvs.size() == 1);
  CHECK(*fvs.begin() == detail::intern_free_name("x"));
}

TEST_CASE("printer round-trips pure terms") {
  for (const char* src : {
           "x",
           "\\x. x",
           "\\x y. x y y",
           "(\\x. x) (\\y. y)",
           "f (g h) (\\x. x (f x))",
           "\\f x. f (f (f x))",
           "(\\x. x x) (\\x. x x)",
           "x y z w",
           "\\x. \\x. x",  // shadowing must survive the round trip
       }) {
    auto t = parse_term(src);
    auto printed = print_term(t);
    INFO(src << "  printed as  " << printed);
    CHECK(alpha_eq(parse_term(printed), t));
  }
}

TEST_CASE("printer round-trips terms with substitutions") {
  for (const char* src : {
           "x[x <- y]",
           "(x y)[x <- \\z. z]",
           "x[x <- y][y <- z]",
           "(\\x. x[y <- z]) w",
           "((\\x. x) y)[q <- (a b)[c <- d]]",
           "x[x <- x]",
       }) {
    auto t = parse_lsc(src);
    auto printed = print_term(t);
    INFO(src << "  printed as  " << printed);
    CHECK(alpha_eq_lsc(parse_lsc(printed), t));
  }
}

TEST_CASE("printer renames clashing binders instead of capturing") {
  // two distinct binders that share a hint plus a free of the same name
  VarId x1 = fresh_var("x");
  VarId x2 = fresh_var("x");
  auto xf = detail::intern_free_name("x");
  auto t = from_pure(mk_lam(x1, mk_lam(x2, mk_app(mk_app(mk_var(x1), mk_var(x2)), mk_var(xf)))));
  auto printed = print_term(t);
  auto r = parse_lsc(printed);
  CHECK(alpha_eq_lsc(r, t));
}

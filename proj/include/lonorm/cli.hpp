#pragma once

// Command-line front end. Kept in a header with injectable streams so the
// test suite can drive every subcommand in-process and assert on the exact
// output; tools/main.cpp is a two-line shim over run_cli.

#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lonorm/harness.hpp"

namespace lonorm {

inline nlohmann::json report_json(const Report& r) {
  nlohmann::json j{
      {"schema", 1},
      {"term", r.term},
      {"size", r.size},
      {"outcome", r.normal_form ? "NormalForm" : "Diverged"},
      {"counters",
       {{"m", r.counters.m},
        {"e", r.counters.e},
        {"c1", r.counters.c1},
        {"c2", r.counters.c2},
        {"c3", r.counters.c3},
        {"c4", r.counters.c4},
        {"c5", r.counters.c5},
        {"c6", r.counters.c6}}},
      {"strategy", {{"m", r.strategy_m}, {"e", r.strategy_e}}},
      {"checks",
       {{"distill", r.distill_ok},
        {"invariants", r.invariants_ok},
        {"bilinear", r.bilinear_ok}}},
      {"margins",
       {{"ev_bound", {r.ev_bound.lhs, r.ev_bound.rhs}},
        {"bt_bound", {r.bt_bound.lhs, r.bt_bound.rhs}},
        {"total_bound", {r.total_bound.lhs, r.total_bound.rhs}}}},
      {"time_ms", {{"machine", r.machine_ms}, {"strategy", r.strategy_ms}}},
  };
  if (!r.failures.empty()) j["failures"] = r.failures;
  return j;
}

namespace detail {

// A positional argument is a path when a file of that name opens; anything
// else is taken as source text.
inline std::string load_source(const std::string& input) {
  std::ifstream f(input);
  if (!f) return input;
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

inline int cmd_normalize(const std::string& input, std::uint64_t budget,
                         const std::string& engine, std::ostream& out,
                         std::ostream& err) {
  TermPtr t = parse_term(load_source(input));
  if (engine == "beta") {
    auto r = beta_normalize(t, budget);
    if (!r.normal_form) {
      err << "budget of " << budget << " beta steps exhausted\n";
      return 1;
    }
    out << print_term(*r.normal_form) << "\n";
    return 0;
  }
  if (engine == "lsc") {
    LscPtr cur = from_pure(well_name(t));
    for (std::uint64_t i = 0; i < budget; ++i) {
      auto st = step_lo(cur);
      if (!st) {
        out << print_term(unfold(cur)) << "\n";
        return 0;
      }
      cur = st->term;
    }
    err << "budget of " << budget << " strategy steps exhausted\n";
    return 1;
  }
  auto ex = machine_run(machine_init(t), budget, CheckLevel::Off);
  if (ex.outcome != RunOutcome::Final) {
    err << "budget of " << budget << " transitions exhausted\n";
    return 1;
  }
  out << print_term(unfold(decode_state(ex.last).term)) << "\n";
  return 0;
}

inline int cmd_trace(const std::string& input, std::uint64_t budget,
                     const std::string& format, bool states,
                     std::ostream& out) {
  TermPtr t = parse_term(load_source(input));
  auto ex = machine_run(machine_init(t), budget, CheckLevel::Counters, states);
  const bool final = ex.outcome == RunOutcome::Final;
  if (format == "json") {
    nlohmann::json j{{"schema", 1},
                     {"term", print_term(t)},
                     {"labels", nlohmann::json::array()},
                     {"outcome", final ? "Final" : "BudgetExhausted"}};
    for (auto l : ex.labels) j["labels"].push_back(label_name(l));
    if (states) {
      j["states"] = nlohmann::json::array();
      for (const auto& s : ex.states)
        j["states"].push_back(print_term(decode_state(s).term));
    }
    out << j.dump(2) << "\n";
    return final ? 0 : 1;
  }
  for (std::size_t i = 0; i < ex.labels.size(); ++i) {
    out << label_name(ex.labels[i]) << "\n";
    if (states) out << "  " << print_term(decode_state(ex.states[i]).term) << "\n";
  }
  out << (final ? "FINAL" : "BUDGET") << "\n";
  return final ? 0 : 1;
}

inline int cmd_compare(const std::string& expr, const std::string& corpus,
                       std::uint64_t budget, std::ostream& out,
                       std::ostream& err) {
  std::vector<TermPtr> terms;
  if (!corpus.empty())
    terms = gen_corpus(parse_corpus_spec(corpus));
  else
    terms.push_back(parse_term(load_source(expr)));
  auto reports = run_corpus(terms, budget);
  std::size_t bad = 0;
  for (const auto& r : reports) {
    out << report_json(r).dump() << "\n";
    if (!r.all_ok()) ++bad;
  }
  if (bad) {
    err << bad << " of " << reports.size() << " runs failed their checks\n";
    return 1;
  }
  return 0;
}

inline int cmd_check(const std::string& input, std::uint64_t budget,
                     std::ostream& out, std::ostream& err) {
  TermPtr t = parse_term(load_source(input));
  Report r = run_and_compare(t, budget);
  if (!r.all_ok()) {
    for (const auto& f : r.failures) err << "check failed: " << f << "\n";
    return 1;
  }
  out << "ok: " << r.counters.total() << " transitions, "
      << (r.normal_form ? "normal form reached" : "budget exhausted")
      << ", all checks passed\n";
  return 0;
}

inline int cmd_stats(const std::string& corpus, std::uint64_t budget,
                     std::ostream& out) {
  auto terms = gen_corpus(parse_corpus_spec(corpus));
  RunCheckOptions fast;
  fast.invariants = false;
  fast.distill = false;
  auto reports = run_corpus(terms, budget, fast);
  out << std::setw(5) << "idx" << std::setw(8) << "size" << std::setw(8) << "m"
      << std::setw(8) << "e" << std::setw(9) << "c-ev" << std::setw(9) << "c-bt"
      << std::setw(10) << "ev-slack" << std::setw(10) << "bt-slack"
      << std::setw(11) << "tot-slack" << "  outcome\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << std::setw(5) << i << std::setw(8) << r.size << std::setw(8)
        << r.counters.m << std::setw(8) << r.counters.e << std::setw(9)
        << r.counters.commutative_eval() << std::setw(9)
        << r.counters.commutative_back() << std::setw(10)
        << r.ev_bound.rhs - r.ev_bound.lhs << std::setw(10)
        << r.bt_bound.rhs - r.bt_bound.lhs << std::setw(11)
        << r.total_bound.rhs - r.total_bound.lhs << "  "
        << (r.normal_form ? "normal-form" : "diverged") << "\n";
  }
  return 0;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"strong call-by-name normalizer with a verified readback"};
  app.require_subcommand(1);

  std::string input;
  std::string corpus;
  std::string engine = "mam";
  std::string format = "text";
  std::uint64_t budget = 100000;
  bool states = false;

  auto* normalize = app.add_subcommand("normalize", "reduce to normal form");
  normalize->add_option("input", input, "expression or file")->required();
  normalize->add_option("--budget", budget, "step budget");
  normalize->add_option("--engine", engine, "mam, lsc, or beta")
      ->check(CLI::IsMember({"mam", "lsc", "beta"}));

  auto* trace = app.add_subcommand("trace", "print the transition sequence");
  trace->add_option("input", input, "expression or file")->required();
  trace->add_option("--budget", budget, "step budget");
  trace->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  trace->add_flag("--states", states, "also print each state's readback");

  auto* compare = app.add_subcommand(
      "compare", "run machine and strategy in lock step, report as json");
  compare->add_option("input", input, "expression or file");
  compare->add_option("--corpus", corpus, "family:size[:count[:seed]]");
  compare->add_option("--budget", budget, "step budget");

  auto* check = app.add_subcommand("check", "full invariant and readback sweep");
  check->add_option("input", input, "expression or file")->required();
  check->add_option("--budget", budget, "step budget");

  auto* stats = app.add_subcommand("stats", "step counts and bound slack");
  stats->add_option("--corpus", corpus, "family:size[:count[:seed]]")
      ->required();
  stats->add_option("--budget", budget, "step budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (normalize->parsed())
      return detail::cmd_normalize(input, budget, engine, out, err);
    if (trace->parsed()) return detail::cmd_trace(input, budget, format, states, out);
    if (compare->parsed()) {
      if (input.empty() == corpus.empty()) {
        err << "compare needs exactly one of an expression or --corpus\n";
        return 2;
      }
      return detail::cmd_compare(input, corpus, budget, out, err);
    }
    if (check->parsed()) return detail::cmd_check(input, budget, out, err);
    if (stats->parsed()) return detail::cmd_stats(corpus, budget, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand\n";
  return 2;
}

}  // namespace lonorm

#pragma once

#include <cctype>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lonorm/lsc.hpp"
#include "lonorm/term.hpp"

namespace lonorm {

// Concrete syntax:
//   var  ::= [a-zA-Z_][a-zA-Z0-9_']*
//   term ::= var | "\" var+ "." term | term term | "(" term ")"
// plus, when explicit substitutions are enabled, the postfix form
//   term "[" var "<-" term "]"
// Application associates left, a lambda body extends as far right as
// possible, and the substitution postfix attaches to the preceding atom;
// parenthesize to scope it over an application: (t u)[x <- w].

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

// Free names are interned: the same name resolves to the same id in every
// parse, so terms from separate parses share their free variables and a
// printed term reparses alpha-equal, free occurrences included.
inline VarId intern_free_name(const std::string& name) {
  static std::unordered_map<std::string, VarId> table;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = table.find(name);
  if (it != table.end()) return it->second;
  VarId v = fresh_var(name);
  table.emplace(name, v);
  return v;
}

// Names-as-strings AST. The substitution postfix binds a name in a body that
// is parsed before the binder is seen, so resolution is a separate pass.
struct RawTerm {
  enum class Tag { Var, Lam, App, Sub };
  Tag tag;
  std::string name;  // Var / Lam / Sub binder
  std::shared_ptr<RawTerm> a, b;
};

using RawPtr = std::shared_ptr<RawTerm>;

inline RawPtr raw(RawTerm::Tag tag, std::string name, RawPtr a, RawPtr b) {
  return std::make_shared<RawTerm>(RawTerm{tag, std::move(name), std::move(a), std::move(b)});
}

class Parser {
 public:
  Parser(std::string_view src, bool allow_es) : src_(src), allow_es_(allow_es) {}

  RawPtr parse() {
    auto t = parse_term();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    std::ostringstream os;
    os << "parse error at offset " << pos_ << ": " << what;
    throw ParseError(os.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  static bool name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  }

  std::string parse_name() {
    skip_ws();
    if (pos_ >= src_.size() || !name_start(src_[pos_])) fail("expected a variable name");
    std::size_t start = pos_;
    while (pos_ < src_.size() && name_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  RawPtr parse_term() {
    if (peek() == '\\') return parse_lambda();
    return parse_appseq();
  }

  RawPtr parse_lambda() {
    if (!eat('\\')) fail("expected lambda");
    std::vector<std::string> names;
    names.push_back(parse_name());
    while (peek() != '.' && peek() != '\0') names.push_back(parse_name());
    if (!eat('.')) fail("expected '.' after lambda binders");
    auto body = parse_term();
    for (auto it = names.rbegin(); it != names.rend(); ++it)
      body = raw(RawTerm::Tag::Lam, *it, body, nullptr);
    return body;
  }

  RawPtr parse_appseq() {
    auto head = parse_item();
    while (true) {
      char c = peek();
      if (c == '\\') {
        head = raw(RawTerm::Tag::App, "", head, parse_lambda());
        break;  // a trailing lambda extends to the end: f \x. x is f (\x. x)
      }
      if (name_start(c) || c == '(') {
        head = raw(RawTerm::Tag::App, "", head, parse_item());
        continue;
      }
      break;
    }
    return head;
  }

  RawPtr parse_item() {
    RawPtr t;
    if (eat('(')) {
      t = parse_term();
      if (!eat(')')) fail("expected ')'");
    } else {
      t = raw(RawTerm::Tag::Var, parse_name(), nullptr, nullptr);
    }
    while (peek() == '[') {
      if (!allow_es_) fail("explicit substitution not allowed in this grammar");
      eat('[');
      auto n = parse_name();
      skip_ws();
      if (pos_ + 1 >= src_.size() || src_[pos_] != '<' || src_[pos_ + 1] != '-')
        fail("expected '<-' in substitution");
      pos_ += 2;
      auto arg = parse_term();
      if (!eat(']')) fail("expected ']'");
      t = raw(RawTerm::Tag::Sub, n, t, arg);
    }
    return t;
  }

  std::string_view src_;
  bool allow_es_;
  std::size_t pos_ = 0;
};

// Resolution: binders get fresh ids (so parsed terms are well-named by
// construction), occurrences resolve to the innermost binder of that name,
// anything unbound becomes an interned free variable.
inline LscPtr resolve_raw(const RawPtr& t,
                          std::vector<std::pair<std::string, VarId>>& scope) {
  switch (t->tag) {
    case RawTerm::Tag::Var: {
      for (auto it = scope.rbegin(); it != scope.rend(); ++it)
        if (it->first == t->name) return ls_var(it->second);
      return ls_var(intern_free_name(t->name));
    }
    case RawTerm::Tag::Lam: {
      VarId v = fresh_var(t->name);
      scope.emplace_back(t->name, v);
      auto body = resolve_raw(t->a, scope);
      scope.pop_back();
      return ls_lam(v, body);
    }
    case RawTerm::Tag::App: {
      auto f = resolve_raw(t->a, scope);
      auto x = resolve_raw(t->b, scope);
      return ls_app(f, x);
    }
    case RawTerm::Tag::Sub: {
      auto arg = resolve_raw(t->b, scope);  // argument is outside the binding
      VarId v = fresh_var(t->name);
      scope.emplace_back(t->name, v);
      auto body = resolve_raw(t->a, scope);
      scope.pop_back();
      return ls_sub(body, v, arg);
    }
  }
  throw std::logic_error("resolve_raw: bad tag");
}

}  // namespace detail

inline LscPtr parse_lsc(std::string_view src) {
  detail::Parser p(src, /*allow_es=*/true);
  auto raw = p.parse();
  std::vector<std::pair<std::string, VarId>> scope;
  return detail::resolve_raw(raw, scope);
}

inline TermPtr parse_term(std::string_view src) {
  detail::Parser p(src, /*allow_es=*/false);
  auto raw = p.parse();
  std::vector<std::pair<std::string, VarId>> scope;
  return to_pure(detail::resolve_raw(raw, scope));
}

// ---------------------------------------------------------------------------
// Printing. Emits the grammar above; parse(print(t)) is alpha-equal to t.
// Binders print their hint, primed then numbered on collision with anything
// visible at that point.

namespace detail {

class Printer {
 public:
  explicit Printer(const LscPtr& t) {
    for (auto v : fv(t)) {
      auto name = var_hint(v);
      // two distinct free ids with one hint cannot both keep it
      if (!used_frees_.insert(name).second) name = name + "_" + std::to_string(v.raw);
      used_frees_.insert(name);
      free_names_[v] = name;
    }
  }

  std::string run(const LscPtr& t) {
    std::string out;
    print(t, Pos::Top, out);
    return out;
  }

 private:
  enum class Pos { Top, AppLeft, AppRight, SubBody };

  static bool needs_parens(const LscPtr& t, Pos pos) {
    switch (t->tag) {
      case LscTerm::Tag::Var: return false;
      case LscTerm::Tag::Sub: return pos == Pos::SubBody ? false : false;
      case LscTerm::Tag::Lam: return pos != Pos::Top;
      case LscTerm::Tag::App: return pos == Pos::AppRight || pos == Pos::SubBody;
    }
    return false;
  }

  std::string pick_name(const std::string& hint) {
    auto taken = [&](const std::string& n) {
      if (used_frees_.count(n)) return true;
      for (auto& s : scope_names_)
        if (s == n) return true;
      return false;
    };
    if (!taken(hint)) return hint;
    std::string primed = hint + "'";
    if (!taken(primed)) return primed;
    primed += "'";
    if (!taken(primed)) return primed;
    for (int i = 2;; ++i) {
      auto cand = hint + "_" + std::to_string(i);
      if (!taken(cand)) return cand;
    }
  }

  std::string name_of(VarId v) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == v) return it->second;
    auto fn = free_names_.find(v);
    if (fn != free_names_.end()) return fn->second;
    // not free in the printed root: a stray id (possible when printing
    // fragments); make something stable and legal
    return var_hint(v) + "_" + std::to_string(v.raw);
  }

  void push_binder(VarId v, const std::string& name) {
    scope_.emplace_back(v, name);
    scope_names_.push_back(name);
  }

  void pop_binder() {
    scope_.pop_back();
    scope_names_.pop_back();
  }

  void print(const LscPtr& t, Pos pos, std::string& out) {
    bool parens = needs_parens(t, pos);
    if (parens) out += '(';
    switch (t->tag) {
      case LscTerm::Tag::Var:
        out += name_of(t->var);
        break;
      case LscTerm::Tag::Lam: {
        out += '\\';
        // collapse a run of binders: \x y z. body
        std::vector<VarId> binders;
        const LscTerm* cur = t.get();
        while (cur->tag == LscTerm::Tag::Lam) {
          binders.push_back(cur->var);
          cur = cur->a.get();
        }
        std::size_t pushed = 0;
        for (auto v : binders) {
          auto name = pick_name(var_hint(v));
          if (pushed++) out += ' ';
          out += name;
          push_binder(v, name);
        }
        out += ". ";
        // cur is owned by t through the chain; reconstruct a shared_ptr view
        LscPtr body = t;
        for (std::size_t i = 0; i < binders.size(); ++i) body = body->a;
        print(body, Pos::Top, out);
        for (std::size_t i = 0; i < binders.size(); ++i) pop_binder();
        break;
      }
      case LscTerm::Tag::App:
        print(t->a, Pos::AppLeft, out);
        out += ' ';
        print(t->b, Pos::AppRight, out);
        break;
      case LscTerm::Tag::Sub: {
        // binder scopes the body, so its display name is fixed before the
        // body prints, even though it only appears after it in the output
        auto name = pick_name(var_hint(t->var));
        push_binder(t->var, name);
        print(t->a, Pos::SubBody, out);
        pop_binder();
        out += '[';
        out += name;
        out += " <- ";
        print(t->b, Pos::Top, out);
        out += ']';
        break;
      }
    }
    if (parens) out += ')';
  }

  std::unordered_map<VarId, std::string> free_names_;
  std::unordered_set<std::string> used_frees_;
  std::vector<std::pair<VarId, std::string>> scope_;
  std::vector<std::string> scope_names_;
};

}  // namespace detail

inline std::string print_term(const LscPtr& t) {
  detail::Printer p(t);
  return p.run(t);
}

inline std::string print_term(const TermPtr& t) { return print_term(from_pure(t)); }

}  // namespace lonorm


#include "pdgen/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace pdgen {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// ---------------------------------------------------------------------------
// S-expression reader
// ---------------------------------------------------------------------------

struct Sexpr {
  bool is_list = false;
  std::string symbol;        // lowercase when !is_list
  std::vector<Sexpr> items;  // when is_list
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Token {
  enum Kind { LParen, RParen, Symbol, End } kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    if (pos_ >= text_.size()) return {Token::End, "", line_, column_};
    const std::size_t line = line_;
    const std::size_t column = column_;
    const char c = text_[pos_];
    if (c == '(') {
      advance();
      return {Token::LParen, "(", line, column};
    }
    if (c == ')') {
      advance();
      return {Token::RParen, ")", line, column};
    }
    std::string sym;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) {
      sym.push_back(text_[pos_]);
      advance();
    }
    return {Token::Symbol, lowercase(sym), line, column};
  }

 private:
  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c));
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

Sexpr read_expr(Lexer& lex, const Token& first) {
  if (first.kind == Token::Symbol) {
    return Sexpr{false, first.text, {}, first.line, first.column};
  }
  if (first.kind != Token::LParen) {
    throw ParseError(first.line, first.column,
                     first.kind == Token::RParen ? "expression before ')'" : "expression");
  }
  Sexpr list{true, "", {}, first.line, first.column};
  for (;;) {
    Token t = lex.next();
    if (t.kind == Token::RParen) return list;
    if (t.kind == Token::End) throw ParseError(t.line, t.column, "')'");
    list.items.push_back(read_expr(lex, t));
  }
}

Sexpr read_single_form(std::string_view text) {
  Lexer lex(text);
  Token first = lex.next();
  if (first.kind == Token::End) throw ParseError(first.line, first.column, "'('");
  Sexpr form = read_expr(lex, first);
  Token rest = lex.next();
  if (rest.kind != Token::End) throw ParseError(rest.line, rest.column, "end of input");
  return form;
}

[[noreturn]] void unsupported(const Sexpr& at, const std::string& what) {
  std::ostringstream os;
  os << "unsupported at " << at.line << ":" << at.column << ": " << what;
  throw UnsupportedFeature(os.str());
}

const std::string& want_symbol(const Sexpr& sx, const char* expected) {
  if (sx.is_list) throw ParseError(sx.line, sx.column, expected);
  return sx.symbol;
}

Name want_name(const Sexpr& sx, const char* expected) {
  const std::string& sym = want_symbol(sx, expected);
  try {
    return Name(sym);
  } catch (const InvalidName&) {
    throw ParseError(sx.line, sx.column, expected);
  }
}

Name want_constant(const Sexpr& sx, const char* expected) {
  Name n = want_name(sx, expected);
  if (n.variable()) throw ParseError(sx.line, sx.column, expected);
  return n;
}

// Typed list: `a b - t c - u d`. Trailing entries without a `- type` default
// to `object`. `variables` selects whether entries must be `?vars` or plain
// names.
std::vector<TypedObject> parse_typed_list(const std::vector<Sexpr>& items, std::size_t begin,
                                          bool variables) {
  const char* entry_expected = variables ? "variable like '?x'" : "name";
  std::vector<TypedObject> out;
  std::size_t pending = out.size();  // first entry not yet given a type
  for (std::size_t i = begin; i < items.size(); ++i) {
    const Sexpr& sx = items[i];
    const std::string& sym = want_symbol(sx, entry_expected);
    if (sym == "-") {
      if (pending == out.size()) throw ParseError(sx.line, sx.column, entry_expected);
      if (i + 1 >= items.size()) {
        throw ParseError(sx.line, sx.column, "type name after '-'");
      }
      Name type = want_constant(items[i + 1], "type name after '-'");
      for (; pending < out.size(); ++pending) out[pending].type = type;
      ++i;
      continue;
    }
    Name entry = want_name(sx, entry_expected);
    if (entry.variable() != variables) throw ParseError(sx.line, sx.column, entry_expected);
    out.push_back({entry, Name("object")});
  }
  return out;
}

Atom parse_atom(const Sexpr& sx, bool allow_variables) {
  if (!sx.is_list || sx.items.empty()) {
    throw ParseError(sx.line, sx.column, "atom like '(predicate arg ...)'");
  }
  const Sexpr& head = sx.items[0];
  Atom atom;
  atom.predicate = want_constant(head, "predicate name");
  for (std::size_t i = 1; i < sx.items.size(); ++i) {
    Name arg = want_name(sx.items[i], allow_variables ? "argument" : "object name");
    if (arg.variable() && !allow_variables) {
      throw ParseError(sx.items[i].line, sx.items[i].column, "object name, not a variable");
    }
    atom.args.push_back(std::move(arg));
  }
  return atom;
}

bool is_connective(const std::string& sym) {
  return sym == "and" || sym == "or" || sym == "not" || sym == "imply" || sym == "when" ||
         sym == "forall" || sym == "exists" || sym == "=" || sym == "increase" ||
         sym == "decrease" || sym == "assign";
}

void parse_condition_into(const Sexpr& sx, bool allow_variables, Condition& out) {
  if (!sx.is_list) throw ParseError(sx.line, sx.column, "condition");
  if (sx.items.empty()) return;  // () reads as an empty conjunction
  const Sexpr& head = sx.items[0];
  const std::string sym = head.is_list ? "" : head.symbol;
  if (sym == "and") {
    for (std::size_t i = 1; i < sx.items.size(); ++i) {
      parse_condition_into(sx.items[i], allow_variables, out);
    }
    return;
  }
  if (sym == "not") {
    if (sx.items.size() != 2) throw ParseError(sx.line, sx.column, "single atom inside (not ...)");
    const Sexpr& inner = sx.items[1];
    if (inner.is_list && !inner.items.empty() && !inner.items[0].is_list &&
        is_connective(inner.items[0].symbol)) {
      unsupported(inner, "negation of a compound condition");
    }
    out.add({parse_atom(inner, allow_variables), true});
    return;
  }
  if (is_connective(sym)) unsupported(sx, "'" + sym + "' condition");
  out.add({parse_atom(sx, allow_variables), false});
}

Condition parse_condition(const Sexpr& sx, bool allow_variables) {
  Condition c;
  parse_condition_into(sx, allow_variables, c);
  return c;
}

void parse_effect_into(const Sexpr& sx, std::vector<Atom>& add, std::vector<Atom>& del) {
  if (!sx.is_list) throw ParseError(sx.line, sx.column, "effect");
  if (sx.items.empty()) return;
  const Sexpr& head = sx.items[0];
  const std::string sym = head.is_list ? "" : head.symbol;
  if (sym == "and") {
    for (std::size_t i = 1; i < sx.items.size(); ++i) parse_effect_into(sx.items[i], add, del);
    return;
  }
  if (sym == "not") {
    if (sx.items.size() != 2) throw ParseError(sx.line, sx.column, "single atom inside (not ...)");
    Atom atom = parse_atom(sx.items[1], true);
    if (std::find(del.begin(), del.end(), atom) == del.end()) del.push_back(std::move(atom));
    return;
  }
  if (is_connective(sym)) unsupported(sx, "'" + sym + "' effect");
  Atom atom = parse_atom(sx, true);
  if (std::find(add.begin(), add.end(), atom) == add.end()) add.push_back(std::move(atom));
}

void check_action_variables(const ActionSchema& action, const Sexpr& at) {
  std::set<Name> declared;
  for (const auto& p : action.params) declared.insert(p.name);
  auto check = [&](const Atom& atom) {
    for (const auto& arg : atom.args) {
      if (arg.variable() && !declared.count(arg)) {
        throw ParseError(at.line, at.column,
                         "'" + arg.str() + "' declared in :parameters of action '" +
                             action.name.str() + "'");
      }
    }
  };
  for (const auto& lit : action.precondition.literals()) check(lit.atom);
  for (const auto& atom : action.add) check(atom);
  for (const auto& atom : action.del) check(atom);
}

ActionSchema parse_action(const Sexpr& sx) {
  // (:action name :parameters (...) [:precondition C] :effect E)
  ActionSchema action;
  if (sx.items.size() < 2) throw ParseError(sx.line, sx.column, "action name after :action");
  action.name = want_constant(sx.items[1], "action name");
  bool saw_effect = false;
  for (std::size_t i = 2; i < sx.items.size(); i += 2) {
    const std::string& key = want_symbol(sx.items[i], "action keyword like :parameters");
    if (i + 1 >= sx.items.size()) {
      throw ParseError(sx.items[i].line, sx.items[i].column, "value after '" + key + "'");
    }
    const Sexpr& value = sx.items[i + 1];
    if (key == ":parameters") {
      if (!value.is_list) throw ParseError(value.line, value.column, "parameter list");
      action.params = parse_typed_list(value.items, 0, /*variables=*/true);
      std::set<Name> seen;
      for (const auto& p : action.params) {
        if (!seen.insert(p.name).second) {
          throw ParseError(value.line, value.column,
                           "distinct parameter names ('" + p.name.str() + "' repeats)");
        }
      }
    } else if (key == ":precondition") {
      action.precondition = parse_condition(value, /*allow_variables=*/true);
    } else if (key == ":effect") {
      parse_effect_into(value, action.add, action.del);
      saw_effect = true;
    } else {
      throw ParseError(sx.items[i].line, sx.items[i].column,
                       ":parameters, :precondition or :effect");
    }
  }
  if (!saw_effect) throw ParseError(sx.line, sx.column, ":effect in action '" + action.name.str() + "'");
  // Adding and deleting the same atom means the add wins; drop the delete.
  std::erase_if(action.del, [&](const Atom& a) {
    return std::find(action.add.begin(), action.add.end(), a) != action.add.end();
  });
  check_action_variables(action, sx);
  return action;
}

void check_type_hierarchy(const Domain& d, const Sexpr& at) {
  const Name root("object");
  for (const auto& [type, _] : d.types) {
    std::set<Name> seen;
    Name cursor = type;
    while (cursor != root) {
      if (!seen.insert(cursor).second) {
        throw ParseError(at.line, at.column,
                         "acyclic type hierarchy ('" + type.str() + "' loops)");
      }
      auto it = d.types.find(cursor);
      if (it == d.types.end()) break;  // parent outside the map roots at object
      cursor = it->second;
    }
  }
}

const Sexpr& want_header(const Sexpr& form, const char* kind) {
  if (!form.is_list || form.items.size() < 2 || form.items[0].is_list ||
      form.items[0].symbol != "define") {
    throw ParseError(form.line, form.column, std::string("(define (") + kind + " ...) ...)");
  }
  const Sexpr& header = form.items[1];
  if (!header.is_list || header.items.size() != 2 || header.items[0].is_list ||
      header.items[0].symbol != kind) {
    throw ParseError(header.line, header.column, std::string("(") + kind + " <name>)");
  }
  return header;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string indent_block(const std::string& block, const std::string& prefix) {
  std::string out;
  std::size_t start = 0;
  while (start <= block.size()) {
    std::size_t end = block.find('\n', start);
    if (end == std::string::npos) end = block.size();
    out += prefix;
    out.append(block, start, end - start);
    if (end == block.size()) break;
    out += '\n';
    start = end + 1;
  }
  return out;
}

void print_typed(std::ostream& os, const std::vector<TypedObject>& list) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) os << ' ';
    os << list[i].name.str() << " - " << list[i].type.str();
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Basic types
// ---------------------------------------------------------------------------

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& expected)
    : Error("parse error at " + std::to_string(line) + ":" + std::to_string(column) +
            ": expected " + expected),
      line_(line),
      column_(column),
      expected_(expected) {}

Name::Name(std::string_view text) : text_(lowercase(text)) {
  std::string_view body = text_;
  if (!body.empty() && body[0] == '?') body.remove_prefix(1);
  bool ok = !body.empty() && std::isalpha(static_cast<unsigned char>(body[0]));
  for (std::size_t i = 1; ok && i < body.size(); ++i) {
    const char c = body[i];
    ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }
  if (!ok) throw InvalidName("invalid name '" + std::string(text) + "'");
}

bool Atom::ground() const noexcept {
  return std::none_of(args.begin(), args.end(), [](const Name& n) { return n.variable(); });
}

std::string Atom::str() const {
  std::string out = "(" + predicate.str();
  for (const auto& arg : args) out += " " + arg.str();
  return out + ")";
}

std::string Literal::str() const {
  return negated ? "(not " + atom.str() + ")" : atom.str();
}

Condition::Condition(std::vector<Literal> literals) {
  for (auto& lit : literals) add(std::move(lit));
}

void Condition::add(Literal literal) {
  if (std::find(literals_.begin(), literals_.end(), literal) == literals_.end()) {
    literals_.push_back(std::move(literal));
  }
}

const PredicateDecl* Domain::find_predicate(const Name& n) const {
  for (const auto& p : predicates) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

const ActionSchema* Domain::find_action(const Name& n) const {
  for (const auto& a : actions) {
    if (a.name == n) return &a;
  }
  return nullptr;
}

bool Domain::has_type(const Name& t) const {
  return t == Name("object") || types.count(t) > 0;
}

std::string GroundAction::str() const {
  std::string out = "(" + schema.str();
  for (const auto& arg : args) out += " " + arg.str();
  return out + ")";
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Domain parse_domain(std::string_view text) {
  Sexpr form = read_single_form(text);
  const Sexpr& header = want_header(form, "domain");
  Domain d;
  d.name = want_constant(header.items[1], "domain name");
  for (std::size_t i = 2; i < form.items.size(); ++i) {
    const Sexpr& section = form.items[i];
    if (!section.is_list || section.items.empty() || section.items[0].is_list) {
      throw ParseError(section.line, section.column, "domain section like (:predicates ...)");
    }
    const std::string& key = section.items[0].symbol;
    if (key == ":requirements") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const std::string& req = want_symbol(section.items[j], "requirement keyword");
        if (req.empty() || req[0] != ':') {
          throw ParseError(section.items[j].line, section.items[j].column,
                           "requirement keyword starting with ':'");
        }
        d.requirements.push_back(req);
      }
    } else if (key == ":types") {
      for (const auto& entry : parse_typed_list(section.items, 1, /*variables=*/false)) {
        if (entry.name == Name("object")) {
          if (entry.type != Name("object")) {
            throw ParseError(section.line, section.column, "'object' to stay the root type");
          }
          continue;
        }
        auto [it, inserted] = d.types.emplace(entry.name, entry.type);
        if (!inserted && it->second != entry.type) {
          throw ParseError(section.line, section.column,
                           "single supertype for '" + entry.name.str() + "'");
        }
      }
      // Supertypes mentioned only on the right-hand side are types as well.
      for (bool changed = true; changed;) {
        changed = false;
        for (const auto& [_, super] : d.types) {
          if (super != Name("object") && !d.types.count(super)) {
            d.types.emplace(super, Name("object"));
            changed = true;
            break;
          }
        }
      }
      check_type_hierarchy(d, section);
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const Sexpr& psx = section.items[j];
        if (!psx.is_list || psx.items.empty()) {
          throw ParseError(psx.line, psx.column, "predicate declaration like (on ?x ?y)");
        }
        PredicateDecl decl;
        decl.name = want_constant(psx.items[0], "predicate name");
        decl.params = parse_typed_list(psx.items, 1, /*variables=*/true);
        std::set<Name> seen;
        for (const auto& p : decl.params) {
          if (!seen.insert(p.name).second) {
            throw ParseError(psx.line, psx.column,
                             "distinct parameters in predicate '" + decl.name.str() + "'");
          }
        }
        if (d.find_predicate(decl.name)) {
          throw ParseError(psx.line, psx.column,
                           "unique predicate name ('" + decl.name.str() + "' redeclared)");
        }
        d.predicates.push_back(std::move(decl));
      }
    } else if (key == ":action") {
      ActionSchema action = parse_action(section);
      if (d.find_action(action.name)) {
        throw ParseError(section.line, section.column,
                         "unique action name ('" + action.name.str() + "' redeclared)");
      }
      d.actions.push_back(std::move(action));
    } else if (key == ":constants" || key == ":functions") {
      unsupported(section, key + " section");
    } else {
      throw ParseError(section.items[0].line, section.items[0].column,
                       "one of :requirements, :types, :predicates, :action");
    }
  }
  std::sort(d.requirements.begin(), d.requirements.end());
  d.requirements.erase(std::unique(d.requirements.begin(), d.requirements.end()),
                       d.requirements.end());
  return d;
}

Problem parse_problem(std::string_view text) {
  Sexpr form = read_single_form(text);
  const Sexpr& header = want_header(form, "problem");
  Problem p;
  p.name = want_constant(header.items[1], "problem name");
  bool saw_goal = false;
  for (std::size_t i = 2; i < form.items.size(); ++i) {
    const Sexpr& section = form.items[i];
    if (!section.is_list || section.items.empty() || section.items[0].is_list) {
      throw ParseError(section.line, section.column, "problem section like (:init ...)");
    }
    const std::string& key = section.items[0].symbol;
    if (key == ":domain") {
      if (section.items.size() != 2) {
        throw ParseError(section.line, section.column, "(:domain <name>)");
      }
      p.domain_name = want_constant(section.items[1], "domain name");
    } else if (key == ":objects") {
      p.objects = parse_typed_list(section.items, 1, /*variables=*/false);
    } else if (key == ":init") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const Sexpr& isx = section.items[j];
        if (isx.is_list && !isx.items.empty() && !isx.items[0].is_list &&
            is_connective(isx.items[0].symbol)) {
          unsupported(isx, "'" + isx.items[0].symbol + "' in :init");
        }
        // Variables survive parsing here so the validator can report them.
        p.init.push_back(parse_atom(isx, /*allow_variables=*/true));
      }
      std::sort(p.init.begin(), p.init.end());
      p.init.erase(std::unique(p.init.begin(), p.init.end()), p.init.end());
    } else if (key == ":goal") {
      if (section.items.size() != 2) {
        throw ParseError(section.line, section.column, "single condition inside (:goal ...)");
      }
      p.goal = parse_condition(section.items[1], /*allow_variables=*/true);
      saw_goal = true;
    } else {
      throw ParseError(section.items[0].line, section.items[0].column,
                       "one of :domain, :objects, :init, :goal");
    }
  }
  if (p.domain_name.empty()) throw ParseError(form.line, form.column, "(:domain <name>) section");
  if (!saw_goal) throw ParseError(form.line, form.column, "(:goal ...) section");
  return p;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string print_objects_block(const std::vector<TypedObject>& objects) {
  if (objects.empty()) return "(:objects)";
  std::ostringstream os;
  os << "(:objects";
  for (const auto& obj : objects) os << "\n  " << obj.name.str() << " - " << obj.type.str();
  os << ")";
  return os.str();
}

std::string print_init_block(const std::vector<Atom>& init) {
  std::vector<Atom> sorted = init;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.empty()) return "(:init)";
  std::ostringstream os;
  os << "(:init";
  for (const auto& atom : sorted) os << "\n  " << atom.str();
  os << ")";
  return os.str();
}

std::string print_goal_block(const Condition& goal) {
  if (goal.empty()) return "(:goal (and))";
  std::ostringstream os;
  os << "(:goal (and";
  for (const auto& lit : goal.literals()) os << "\n  " << lit.str();
  os << "))";
  return os.str();
}

std::string print_domain(const Domain& d) {
  std::ostringstream os;
  os << "(define (domain " << d.name.str() << ")";
  if (!d.requirements.empty()) {
    os << "\n  (:requirements";
    for (const auto& req : d.requirements) os << ' ' << req;
    os << ")";
  }
  if (!d.types.empty()) {
    os << "\n  (:types";
    for (const auto& [type, super] : d.types) {
      os << "\n    " << type.str() << " - " << super.str();
    }
    os << ")";
  }
  if (!d.predicates.empty()) {
    os << "\n  (:predicates";
    for (const auto& pred : d.predicates) {
      os << "\n    (" << pred.name.str();
      if (!pred.params.empty()) {
        os << ' ';
        print_typed(os, pred.params);
      }
      os << ")";
    }
    os << ")";
  }
  for (const auto& action : d.actions) {
    os << "\n  (:action " << action.name.str();
    os << "\n    :parameters (";
    print_typed(os, action.params);
    os << ")";
    os << "\n    :precondition (and";
    for (const auto& lit : action.precondition.literals()) os << "\n      " << lit.str();
    os << ")";
    os << "\n    :effect (and";
    for (const auto& atom : action.add) os << "\n      " << atom.str();
    for (const auto& atom : action.del) os << "\n      (not " << atom.str() << ")";
    os << "))";
  }
  os << ")\n";
  return os.str();
}

std::string print_problem(const Problem& p) {
  std::ostringstream os;
  os << "(define (problem " << p.name.str() << ")";
  os << "\n  (:domain " << p.domain_name.str() << ")";
  os << "\n" << indent_block(print_objects_block(p.objects), "  ");
  os << "\n" << indent_block(print_init_block(p.init), "  ");
  os << "\n" << indent_block(print_goal_block(p.goal), "  ");
  os << ")\n";
  return os.str();
}

std::vector<Literal> flatten_goal(const Problem& p) {
  std::vector<Literal> out = p.goal.literals();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_subtype(const Domain& d, const Name& t1, const Name& t2) {
  if (!d.has_type(t1)) throw UnknownType("unknown type '" + t1.str() + "'");
  if (!d.has_type(t2)) throw UnknownType("unknown type '" + t2.str() + "'");
  Name cursor = t1;
  for (;;) {
    if (cursor == t2) return true;
    auto it = d.types.find(cursor);
    if (it == d.types.end()) return false;  // reached the root without meeting t2
    cursor = it->second;
  }
}

}  // namespace pdgen

#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pdgen {

/// Base class for all toolchain errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed PDDL text. Carries the source position of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& expected);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string expected_;
};

/// Syntactically valid PDDL that uses a construct outside the supported
/// STRIPS+typing subset (numeric fluents, quantified goals, ...).
class UnsupportedFeature : public Error {
 public:
  using Error::Error;
};

class UnknownType : public Error {
 public:
  using Error::Error;
};

class InvalidName : public Error {
 public:
  using Error::Error;
};

/// Case-insensitive PDDL identifier, stored lowercase. A leading '?' marks a
/// variable; the identifier proper starts with a letter and may contain
/// letters, digits, '-' and '_'.
class Name {
 public:
  Name() = default;
  Name(std::string_view text);
  Name(const char* text) : Name(std::string_view(text)) {}
  Name(const std::string& text) : Name(std::string_view(text)) {}

  const std::string& str() const noexcept { return text_; }
  bool empty() const noexcept { return text_.empty(); }
  bool variable() const noexcept { return !text_.empty() && text_[0] == '?'; }

  friend bool operator==(const Name&, const Name&) = default;
  friend auto operator<=>(const Name&, const Name&) = default;

 private:
  std::string text_;
};

struct TypedObject {
  Name name;
  Name type;

  friend bool operator==(const TypedObject&, const TypedObject&) = default;
};

struct PredicateDecl {
  Name name;
  std::vector<TypedObject> params;  // param names are variables

  std::size_t arity() const noexcept { return params.size(); }

  friend bool operator==(const PredicateDecl&, const PredicateDecl&) = default;
};

/// A predicate applied to arguments; ground when no argument is a variable.
struct Atom {
  Name predicate;
  std::vector<Name> args;

  bool ground() const noexcept;
  std::string str() const;  // "(at carrot counter)"

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  std::string str() const;  // "(not (at a b))" when negated

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

/// Conjunction of literals. Duplicates (same atom, same polarity) collapse;
/// insertion order of the survivors is preserved.
class Condition {
 public:
  Condition() = default;
  explicit Condition(std::vector<Literal> literals);

  void add(Literal literal);
  const std::vector<Literal>& literals() const noexcept { return literals_; }
  bool empty() const noexcept { return literals_.empty(); }

  friend bool operator==(const Condition&, const Condition&) = default;

 private:
  std::vector<Literal> literals_;
};

struct ActionSchema {
  Name name;
  std::vector<TypedObject> params;
  Condition precondition;
  std::vector<Atom> add;
  std::vector<Atom> del;

  friend bool operator==(const ActionSchema&, const ActionSchema&) = default;
};

struct Domain {
  Name name;
  std::vector<std::string> requirements;  // sorted, deduplicated
  std::map<Name, Name> types;             // type -> supertype; root "object" is implicit
  std::vector<PredicateDecl> predicates;
  std::vector<ActionSchema> actions;

  const PredicateDecl* find_predicate(const Name& n) const;
  const ActionSchema* find_action(const Name& n) const;
  bool has_type(const Name& t) const;

  friend bool operator==(const Domain&, const Domain&) = default;
};

struct Problem {
  Name name;
  Name domain_name;
  std::vector<TypedObject> objects;  // declaration order, duplicates kept for the validator
  std::vector<Atom> init;            // sorted, deduplicated at construction
  Condition goal;

  friend bool operator==(const Problem&, const Problem&) = default;
};

struct GroundAction {
  Name schema;
  std::vector<Name> args;

  std::string str() const;  // "(pick-up red_block robot)"

  friend bool operator==(const GroundAction&, const GroundAction&) = default;
};

struct Plan {
  std::vector<GroundAction> steps;  // may be empty

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Parse a complete `(define (domain ...) ...)` form.
Domain parse_domain(std::string_view text);

/// Parse a complete `(define (problem ...) ...)` form. Stays domain-agnostic:
/// undeclared predicates, unknown objects and variables in :init survive
/// parsing and are reported by the validator instead.
Problem parse_problem(std::string_view text);

/// Canonical printers. Output is a stable contract: lowercase names, two-space
/// indentation, objects in declaration order, :init sorted lexicographically,
/// goal literals in insertion order.
std::string print_domain(const Domain& d);
std::string print_problem(const Problem& p);

/// Canonical section fragments, as embedded in print_problem.
std::string print_objects_block(const std::vector<TypedObject>& objects);
std::string print_init_block(const std::vector<Atom>& init);
std::string print_goal_block(const Condition& goal);

/// Goal conjunction as a sorted, deduplicated set of literals.
std::vector<Literal> flatten_goal(const Problem& p);

/// True iff t1 == t2 or t1 transitively descends from t2.
/// Throws UnknownType when either type is not part of d's hierarchy.
bool is_subtype(const Domain& d, const Name& t1, const Name& t2);

}  // namespace pdgen

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pdgen/pddl.hpp"

namespace pdgen {

enum class IssueKind {
  UndefinedType,
  UndefinedPredicate,
  ArityMismatch,
  TypeMismatch,
  UndefinedObject,
  DuplicateObject,
  UngroundAtom,
  UnknownDomainReference,
};

enum class ProblemPart { Header, Objects, Init, Goal };

std::string_view to_string(IssueKind kind);    // kebab-case, e.g. "undefined-object"
std::string_view to_string(ProblemPart part);  // "header", "objects", "init", "goal"

struct ValidationIssue {
  IssueKind kind;
  ProblemPart part;
  std::string subject;  // the offending symbol or atom
  std::string message;

  std::string str() const;  // "<kind> in :<part>: <message>"

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
};

/// render_error was asked to describe a report with no issues.
class EmptyReport : public Error {
 public:
  using Error::Error;
};

/// Check a problem against its domain. Collects every issue rather than
/// stopping at the first, in section order: header, objects, init, goal.
ValidationReport validate(const Domain& d, const Problem& p);

/// All issues rendered one per line, suitable for corrective re-prompting.
/// Throws EmptyReport when the report has nothing to describe.
std::string render_error(const ValidationReport& report);

}  // namespace pdgen

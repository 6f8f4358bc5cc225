#include "pdgen/validate.hpp"

#include <map>
#include <set>
#include <sstream>

namespace pdgen {
namespace {

class Collector {
 public:
  Collector(const Domain& d, const Problem& p) : d_(d), p_(p) {}

  ValidationReport run() {
    check_header();
    check_objects();
    for (const auto& atom : p_.init) check_atom(atom, ProblemPart::Init);
    for (const auto& lit : p_.goal.literals()) check_atom(lit.atom, ProblemPart::Goal);
    return std::move(report_);
  }

 private:
  void add(IssueKind kind, ProblemPart part, std::string subject, std::string message) {
    report_.issues.push_back({kind, part, std::move(subject), std::move(message)});
  }

  void check_header() {
    if (p_.domain_name != d_.name) {
      add(IssueKind::UnknownDomainReference, ProblemPart::Header, p_.domain_name.str(),
          "problem references domain '" + p_.domain_name.str() + "' but the domain is '" +
              d_.name.str() + "'");
    }
  }

  void check_objects() {
    for (const auto& obj : p_.objects) {
      if (!d_.has_type(obj.type)) {
        add(IssueKind::UndefinedType, ProblemPart::Objects, obj.type.str(),
            "object '" + obj.name.str() + "' has undefined type '" + obj.type.str() + "'");
      }
      auto [it, inserted] = object_types_.emplace(obj.name, obj.type);
      if (!inserted) {
        add(IssueKind::DuplicateObject, ProblemPart::Objects, obj.name.str(),
            "object '" + obj.name.str() + "' is declared more than once");
      }
      (void)it;
    }
  }

  void check_atom(const Atom& atom, ProblemPart part) {
    if (!atom.ground()) {
      add(IssueKind::UngroundAtom, part, atom.str(),
          "atom " + atom.str() + " contains variables");
    }
    const PredicateDecl* decl = d_.find_predicate(atom.predicate);
    if (!decl) {
      add(IssueKind::UndefinedPredicate, part, atom.predicate.str(),
          "predicate '" + atom.predicate.str() + "' is not declared in domain '" +
              d_.name.str() + "'");
      return;
    }
    if (decl->arity() != atom.args.size()) {
      std::ostringstream os;
      os << "predicate '" << atom.predicate.str() << "' expects " << decl->arity()
         << " argument" << (decl->arity() == 1 ? "" : "s") << " but " << atom.str() << " has "
         << atom.args.size();
      add(IssueKind::ArityMismatch, part, atom.predicate.str(), os.str());
      return;
    }
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      const Name& arg = atom.args[i];
      if (arg.variable()) continue;  // already reported as unground
      auto it = object_types_.find(arg);
      if (it == object_types_.end()) {
        add(IssueKind::UndefinedObject, part, arg.str(),
            "object '" + arg.str() + "' is not declared in :objects");
        continue;
      }
      const Name& required = decl->params[i].type;
      if (!d_.has_type(it->second) || !d_.has_type(required)) continue;  // reported elsewhere
      if (!is_subtype(d_, it->second, required)) {
        add(IssueKind::TypeMismatch, part, arg.str(),
            "argument '" + arg.str() + "' of " + atom.str() + " has type '" +
                it->second.str() + "' where '" + required.str() + "' is required");
      }
    }
  }

  const Domain& d_;
  const Problem& p_;
  std::map<Name, Name> object_types_;  // first declaration wins
  ValidationReport report_;
};

}  // namespace

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::UndefinedType: return "undefined-type";
    case IssueKind::UndefinedPredicate: return "undefined-predicate";
    case IssueKind::ArityMismatch: return "arity-mismatch";
    case IssueKind::TypeMismatch: return "type-mismatch";
    case IssueKind::UndefinedObject: return "undefined-object";
    case IssueKind::DuplicateObject: return "duplicate-object";
    case IssueKind::UngroundAtom: return "unground-atom";
    case IssueKind::UnknownDomainReference: return "unknown-domain-reference";
  }
  return "unknown-issue";
}

std::string_view to_string(ProblemPart part) {
  switch (part) {
    case ProblemPart::Header: return "header";
    case ProblemPart::Objects: return "objects";
    case ProblemPart::Init: return "init";
    case ProblemPart::Goal: return "goal";
  }
  return "unknown-part";
}

std::string ValidationIssue::str() const {
  std::string out;
  out += to_string(kind);
  out += " in :";
  out += to_string(part);
  out += ": ";
  out += message;
  return out;
}

ValidationReport validate(const Domain& d, const Problem& p) {
  return Collector(d, p).run();
}

std::string render_error(const ValidationReport& report) {
  if (report.ok()) throw EmptyReport("validation report has no issues to render");
  std::string out;
  for (std::size_t i = 0; i < report.issues.size(); ++i) {
    if (i) out += '\n';
    out += report.issues[i].str();
  }
  return out;
}

}  // namespace pdgen

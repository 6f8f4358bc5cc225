#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pdgen/pddl.hpp"

namespace pdgen {

/// A template named `name` exists neither in the library nor on disk.
class MissingTemplate : public Error {
 public:
  explicit MissingTemplate(const std::string& name)
      : Error("no prompt template named '" + name + "'") {}
};

/// A template references a {placeholder} the caller did not supply.
class MissingPlaceholder : public Error {
 public:
  MissingPlaceholder(const std::string& tmpl, const std::string& placeholder)
      : Error("template '" + tmpl + "' references {" + placeholder +
              "} but no value was provided") {}
};

/// Named text templates with `{placeholder}` substitution. Placeholders are
/// `{` followed by a lowercase identifier ([a-z0-9_]+) and `}`; anything else
/// involving braces is passed through literally, so PDDL text inside a
/// template never needs escaping.
class PromptLibrary {
 public:
  /// Loads every *.txt file in `dir`, keyed by filename stem. A single
  /// trailing newline is stripped from each file so that templates can be
  /// stored as ordinary text files without forcing a newline into the
  /// rendered prompt.
  static PromptLibrary load_dir(const std::filesystem::path& dir);

  void set(const std::string& name, std::string text);
  bool contains(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  std::vector<std::string> names() const;

  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& vars) const;

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace pdgen

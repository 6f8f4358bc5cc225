#include "pdgen/prompts.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace pdgen {

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("prompt directory does not exist: " + dir.string());
  }
  PromptLibrary lib;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) throw Error("cannot read prompt template: " + entry.path().string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    lib.set(entry.path().stem().string(), std::move(text));
  }
  return lib;
}

void PromptLibrary::set(const std::string& name, std::string text) {
  templates_[name] = std::move(text);
}

bool PromptLibrary::contains(const std::string& name) const {
  return templates_.count(name) != 0;
}

const std::string& PromptLibrary::text(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw MissingTemplate(name);
  return it->second;
}

std::vector<std::string> PromptLibrary::names() const {
  std::vector<std::string> out;
  out.reserve(templates_.size());
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

namespace {

bool placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

std::string PromptLibrary::render(
    const std::string& name, const std::map<std::string, std::string>& vars) const {
  const std::string& tmpl = text(name);
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && placeholder_char(tmpl[j])) ++j;
    if (j == i + 1 || j >= tmpl.size() || tmpl[j] != '}') {
      // Not a placeholder; keep the brace as literal text.
      out.push_back(tmpl[i++]);
      continue;
    }
    std::string key = tmpl.substr(i + 1, j - i - 1);
    auto it = vars.find(key);
    if (it == vars.end()) throw MissingPlaceholder(name, key);
    out += it->second;
    i = j + 1;
  }
  return out;
}

}  // namespace pdgen

#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "beliefbench/ids.hpp"

namespace beliefbench::detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Tab-separated records with '#' comment lines and `[name]\tcount` section
/// markers. Errors carry the archive kind and line number.
class LineReader {
 public:
  LineReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return split_tabs(line);
    }
    throw Error(what_ + " truncated at line " + std::to_string(lineno_));
  }

  std::size_t section(std::string_view name) {
    const auto f = next();
    if (f.size() != 2 || f[0] != "[" + std::string(name) + "]")
      fail("expected section [" + std::string(name) + "]");
    return to_size(f[1]);
  }

  std::size_t to_size(const std::string& text) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(text, &used);
      if (used != text.size()) fail("bad count '" + text + "'");
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      fail("bad count '" + text + "'");
    }
  }

  void expect_magic(std::string_view magic, int version) {
    const auto f = next();
    if (f.size() != 2 || f[0] != magic) fail("not a " + std::string(magic) + " file");
    if (f[1] != std::to_string(version)) fail("unsupported format version " + f[1]);
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(what_ + " line " + std::to_string(lineno_) + ": " + message);
  }

 private:
  std::istream& in_;
  std::string what_;
  std::size_t lineno_ = 0;
};

}  // namespace beliefbench::detail

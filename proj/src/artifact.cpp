#include "beliefbench/artifact.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "beliefbench/ids.hpp"

namespace beliefbench {

std::string ArtifactHeader::render_comment_block() const {
  std::ostringstream out;
  out << "# " << kToolName << ' ' << kToolVersion << '\n'
      << "# config-hash: " << config_hash << '\n'
      << "# seed: " << seed << '\n'
      << "# config: " << config_text << '\n';
  return out.str();
}

ArtifactHeader make_header(std::uint64_t seed,
                           const std::vector<std::pair<std::string, std::string>>& knobs) {
  ArtifactHeader h;
  h.seed = seed;
  h.config_text = "seed=" + std::to_string(seed);
  for (const auto& [key, value] : knobs) h.config_text += ' ' + key + '=' + value;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(h.config_text)));
  h.config_hash = hex;
  return h;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("cannot format double");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw Error("malformed number '" + std::string(text) + "'");
  return value;
}

void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& write) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
      write(out);
      out.flush();
      if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace beliefbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace beliefbench {

inline constexpr std::string_view kToolName = "beliefbench";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Provenance block written at the top of every artifact.
struct ArtifactHeader {
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  std::string config_text;  // canonical `key=value ...` echo of the run config

  /// `# `-prefixed lines, newline terminated.
  std::string render_comment_block() const;
};

/// Header for a run: `config_text` is the knobs as `key=value` joined by
/// spaces in the given order, `config_hash` the FNV-1a of that text.
ArtifactHeader make_header(std::uint64_t seed,
                           const std::vector<std::pair<std::string, std::string>>& knobs);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Writes `path` through a sibling temporary file that is renamed into place
/// on success and removed if `write` throws.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& write);

std::string read_file(const std::filesystem::path& path);

}  // namespace beliefbench

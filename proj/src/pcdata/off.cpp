#include <charconv>
#include <cstdio>
#include <string>

#include "pcd/error.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {
namespace {

struct Line {
  std::size_t number = 0;
  std::vector<std::string_view> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
      const std::size_t start = i;
      while (i < raw.size() && raw[i] != ' ' && raw[i] != '\t' && raw[i] != '\r') ++i;
      if (i > start) line.tokens.push_back(raw.substr(start, i - start));
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorDomain::parse, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T to_number(std::string_view tok, std::size_t line) {
  T value{};
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    parse_error(line, "non-numeric token '" + std::string(tok) + "'");
  return value;
}

bool is_header_keyword(std::string_view tok) {
  return tok == "OFF" || tok == "COFF" || tok == "NOFF" || tok == "CNOFF";
}

}  // namespace

Mesh parse_off(std::string_view text) {
  const std::vector<Line> lines = tokenize(text);
  if (lines.empty()) parse_error(1, "missing OFF header");

  // Header, optionally fused with the counts ("OFF3 1 0" or "OFF 3 1 0").
  std::size_t cursor = 0;
  std::vector<std::string_view> counts;
  std::size_t counts_line = lines[0].number;
  {
    const Line& head = lines[0];
    std::string_view tok = head.tokens[0];
    const auto off_pos = tok.find("OFF");
    if (off_pos == std::string_view::npos || !is_header_keyword(tok.substr(0, off_pos + 3)))
      parse_error(head.number, "missing OFF header");
    const std::string_view fused = tok.substr(off_pos + 3);
    if (!fused.empty()) counts.push_back(fused);
    for (std::size_t i = 1; i < head.tokens.size(); ++i) counts.push_back(head.tokens[i]);
    ++cursor;
    if (counts.empty()) {
      if (cursor >= lines.size()) parse_error(head.number + 1, "missing counts line");
      counts = lines[cursor].tokens;
      counts_line = lines[cursor].number;
      ++cursor;
    }
  }
  if (counts.size() < 2) parse_error(counts_line, "counts line needs 'nv nf [ne]'");
  const auto nv = to_number<long long>(counts[0], counts_line);
  const auto nf = to_number<long long>(counts[1], counts_line);
  if (counts.size() >= 3) (void)to_number<long long>(counts[2], counts_line);
  if (nv < 0 || nf < 0) parse_error(counts_line, "negative element count");

  Mesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long long v = 0; v < nv; ++v, ++cursor) {
    if (cursor >= lines.size())
      parse_error(lines.back().number + 1, "count mismatch: expected " + std::to_string(nv) +
                                               " vertices, found " + std::to_string(v));
    const Line& line = lines[cursor];
    if (line.tokens.size() < 3) parse_error(line.number, "vertex needs 3 coordinates");
    // Extra fields (COFF colors, normals) are ignored.
    mesh.vertices.emplace_back(to_number<double>(line.tokens[0], line.number),
                               to_number<double>(line.tokens[1], line.number),
                               to_number<double>(line.tokens[2], line.number));
  }
  for (long long f = 0; f < nf; ++f, ++cursor) {
    if (cursor >= lines.size())
      parse_error(lines.back().number + 1, "count mismatch: expected " + std::to_string(nf) +
                                               " faces, found " + std::to_string(f));
    const Line& line = lines[cursor];
    const auto k = to_number<long long>(line.tokens[0], line.number);
    if (k < 3) parse_error(line.number, "face needs at least 3 vertices");
    if (static_cast<long long>(line.tokens.size()) < k + 1)
      parse_error(line.number, "count mismatch: face declares " + std::to_string(k) +
                                   " indices, found " + std::to_string(line.tokens.size() - 1));
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(k));
    for (long long j = 0; j < k; ++j) {
      const auto i = to_number<long long>(line.tokens[static_cast<std::size_t>(j) + 1], line.number);
      if (i < 0 || i >= nv)
        parse_error(line.number, "face index " + std::to_string(i) + " out of range [0, " +
                                     std::to_string(nv) + ")");
      idx[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(i);
    }
    for (std::size_t j = 1; j + 1 < idx.size(); ++j) mesh.triangles.push_back({idx[0], idx[j], idx[j + 1]});
  }
  if (cursor < lines.size())
    parse_error(lines[cursor].number, "count mismatch: unexpected data after " +
                                          std::to_string(nf) + " faces");
  return mesh;
}

Mesh read_off(const std::filesystem::path& path) {
  try {
    return parse_off(read_file(path));
  } catch (const Error& e) {
    if (e.domain() != ErrorDomain::parse) throw;
    fail(ErrorDomain::parse, path.string() + ": " + e.what());
  }
}

std::string serialize_off(const Mesh& mesh) {
  std::string out = "OFF\n" + std::to_string(mesh.vertices.size()) + " " +
                    std::to_string(mesh.triangles.size()) + " 0\n";
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "3 %u %u %u\n", t[0], t[1], t[2]);
    out += buf;
  }
  return out;
}

}  // namespace pcd

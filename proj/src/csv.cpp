#include "drsae/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drsae/error.hpp"

namespace drsae::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line, const std::string& source, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw InputError(source + ":" + std::to_string(lineno) + ": unterminated quoted field");
  }
  out.emplace_back(trim(cur));
  return out;
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name, std::string_view file) const {
  auto c = column(name);
  if (!c) {
    throw InputError(std::string(file) + ": missing required column '" + std::string(name) + "'");
  }
  return *c;
}

Table parse(std::string_view text, const std::string& source) {
  Table t;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++lineno;
    pos = end + 1;
    if (lineno == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split_line(line, source, lineno);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.header.size()) {
        throw InputError(source + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(t.header.size()) + " fields, found " +
                         std::to_string(fields.size()));
      }
      t.rows.push_back(Row{lineno, std::move(fields)});
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw InputError(source + ": empty file (no header row)");
  return t;
}

Table read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  // Accept integral-valued decimals such as "3.0".
  auto d = to_double(s);
  if (d && std::floor(*d) == *d && std::fabs(*d) < 9.0e15) return static_cast<long long>(*d);
  return std::nullopt;
}

std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

}  // namespace drsae::csv

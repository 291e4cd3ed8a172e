#include "wsol/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "wsol/error.hpp"

namespace wsol::csv {

std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorKind::Numeric, "cannot format double");
  return std::string(buf, end);
}

std::vector<std::string> split(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double(std::string_view field, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(ErrorKind::Format, std::string(context) + ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

long long parse_int(std::string_view field, std::string_view context) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(ErrorKind::Format, std::string(context) + ": not an integer: '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::vector<std::string>> read(const std::filesystem::path& path,
                                           std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Format, path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    fail(ErrorKind::Format, path.string() + ": expected header '" + std::string(expected_header) + "'");
  }
  const auto width = split(expected_header).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != width) {
      fail(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(width) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

Writer::Writer(const std::filesystem::path& path, std::string_view header) : path_(path) {
  buffer_.append(header);
  buffer_.push_back('\n');
}

Writer::~Writer() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) buffer_.push_back(',');
    buffer_.append(fields[i]);
  }
  buffer_.push_back('\n');
}

void Writer::close() {
  closed_ = true;
  write_text(path_, buffer_);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_key_values(const std::filesystem::path& path, const std::map<std::string, std::string>& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
  write_text(path, os.str());
}

}  // namespace wsol::csv

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace wsol::csv {

/// Shortest decimal string that parses back to exactly `v`.
std::string format(double v);

std::vector<std::string> split(std::string_view line);

double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

/// Rows of a CSV file with the header checked against `expected_header`.
/// Blank lines are skipped. Throws Format on a header or field-count mismatch.
std::vector<std::vector<std::string>> read(const std::filesystem::path& path,
                                           std::string_view expected_header);

/// Line-oriented writer; throws Io on failure.
class Writer {
 public:
  Writer(const std::filesystem::path& path, std::string_view header);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::string buffer_;
  bool closed_ = false;
};

void write_text(const std::filesystem::path& path, std::string_view text);

/// `key=value` lines in sorted key order.
void write_key_values(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);

}  // namespace wsol::csv

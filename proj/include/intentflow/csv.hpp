#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace intentflow::csv {

// Quotes a field when it holds a comma, quote, or line break.
std::string escape(std::string_view field);
std::string format_double(double v, int significant = 10);

// Splits one CSV record (no embedded newlines).
std::vector<std::string> split_record(std::string_view line);

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace intentflow::csv

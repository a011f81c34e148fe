#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stresslab::csv {

struct Row {
  std::size_t line = 0;  // 1-based source line
  std::vector<std::string> fields;
};

/// RFC-4180-ish reader: comma separated, double-quote escaping, no embedded newlines.
std::vector<Row> read_file(const std::filesystem::path& path);
std::vector<Row> parse(std::string_view text);

/// Quotes a field when it contains a comma, quote, or leading/trailing space.
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

/// Fixed "%.*g" rendering used by every CSV emitter so output bytes are stable.
std::string num(double v, int significant = 10);

}  // namespace stresslab::csv

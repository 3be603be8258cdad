#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace srbrcnn {

#if defined(__GNUC__)
__attribute__((format(printf, 1, 2)))
#endif
inline std::string strf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(n > 0 ? static_cast<size_t>(n) : 0, '\0');
  if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

// Malformed input file (CoNLL-U, JSONL, embeddings). Carries the 1-based line.
struct ParseError : std::runtime_error {
  size_t line;
  ParseError(const std::string& msg, size_t line_no)
      : std::runtime_error(strf("line %zu: %s", line_no, msg.c_str())), line(line_no) {}
};

// Structurally invalid data that is not a file-format problem (bad spans,
// unknown labels, schema mismatches).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value produced by a numeric computation.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace srbrcnn

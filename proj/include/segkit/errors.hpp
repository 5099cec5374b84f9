#pragma once

#include <stdexcept>
#include <string>

namespace segkit {

// Error categories map 1:1 to CLI exit codes so callers can react
// without parsing message text.
enum class ErrorCategory {
  usage,     // bad command line
  config,    // invalid configuration value
  io,        // file missing / unreadable / unwritable
  format,    // file exists but cannot be parsed
  geometry,  // volumes disagree on dims/spacing/affine
  schema,    // label code outside the configured schema
  internal,
};

const char* to_string(ErrorCategory c);
int exit_code(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

  static Error usage(const std::string& m) { return {ErrorCategory::usage, m}; }
  static Error config(const std::string& m) { return {ErrorCategory::config, m}; }
  static Error io(const std::string& m) { return {ErrorCategory::io, m}; }
  static Error format(const std::string& m) { return {ErrorCategory::format, m}; }
  static Error geometry(const std::string& m) { return {ErrorCategory::geometry, m}; }
  static Error schema(const std::string& m) { return {ErrorCategory::schema, m}; }
  static Error internal(const std::string& m) { return {ErrorCategory::internal, m}; }

 private:
  ErrorCategory category_;
};

// Warning sink. Defaults to stderr; tests swap it to capture messages.
using WarnSink = void (*)(const std::string&);
void warn(const std::string& message);
WarnSink set_warn_sink(WarnSink sink);  // returns the previous sink

}  // namespace segkit

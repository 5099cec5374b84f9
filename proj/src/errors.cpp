#include "segkit/errors.hpp"

#include <cstdio>

namespace segkit {

const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::config: return 3;
    case ErrorCategory::io: return 4;
    case ErrorCategory::format: return 5;
    case ErrorCategory::geometry: return 6;
    case ErrorCategory::schema: return 7;
    case ErrorCategory::internal: return 9;
  }
  return 9;
}

namespace {
void default_warn(const std::string& message) {
  std::fprintf(stderr, "warning: %s\n", message.c_str());
}
WarnSink g_warn_sink = &default_warn;
}  // namespace

void warn(const std::string& message) { g_warn_sink(message); }

WarnSink set_warn_sink(WarnSink sink) {
  WarnSink prev = g_warn_sink;
  g_warn_sink = sink ? sink : &default_warn;
  return prev;
}

}  // namespace segkit

#pragma once

namespace segkit::cli {

// Entry point behind the segkit binary. Returns a process exit code;
// error categories map to distinct codes (usage=2, config=3, io=4,
// format=5, geometry=6, schema=7, internal=9).
int dispatch(int argc, const char* const* argv);

}  // namespace segkit::cli

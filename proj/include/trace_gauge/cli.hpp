#pragma once

// Command-line entry point. Subcommands stream JSONL from --in (or the input
// stream) to --out (or the output stream); diagnostics go to the error stream.
//
// Exit codes: 0 success, 1 input or schema error (including any failed
// record), 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace trace_gauge {

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace trace_gauge

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smin {

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err`. Returns 0 iff the command completed.
///
/// Commands: ingest, build-metapaths, train, evaluate, export-embeddings, synth.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smin

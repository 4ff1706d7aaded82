#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bdfnb/config.hpp"

namespace bdfnb {

// Runs one validated command: computes everything, then writes the outputs and <command>.manifest.json into
// out_dir. Returns the exit code; errors are reported on `err`.
int dispatch(const RunConfig& config, std::ostream& log, std::ostream& err);

// Full command line (without the program name) to exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace bdfnb

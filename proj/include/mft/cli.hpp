#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "mft/chat.hpp"

namespace mft::cli {

/// Injection points for tests; defaults talk to the network and really sleep.
struct Environment {
  chat::Transport* transport = nullptr;
  chat::Sleeper sleeper;
};

/// Runs one command line (args excludes the program name). Returns the exit
/// status; failures print one JSON line {"error":...,"message":...} to err.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err,
             const Environment& env = {});

}  // namespace mft::cli

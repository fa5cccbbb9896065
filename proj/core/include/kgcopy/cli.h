#ifndef KGCOPY_CLI_H_
#define KGCOPY_CLI_H_

#include <iosfwd>

namespace kgcopy {

// Subcommands: preprocess, train, evaluate, chat, serve. Returns 0 on
// success, 1 on a runtime failure and 2 on bad usage.
int RunCli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
           std::ostream& err);

}  // namespace kgcopy

#endif  // KGCOPY_CLI_H_

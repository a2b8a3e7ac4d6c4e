#ifndef IONFOUNTAIN_CLI_HPP
#define IONFOUNTAIN_CLI_HPP

namespace ionfountain::cli {

// Exit status: 0 success, 2 configuration/schema error, 3 simulation error.
int run_cli(int argc, const char* const* argv);

} // namespace ionfountain::cli

#endif

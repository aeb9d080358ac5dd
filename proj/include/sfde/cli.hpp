#ifndef SFDE_CLI_HPP
#define SFDE_CLI_HPP

#include <string>
#include <vector>

namespace sfde {

// Exit codes: 0 success, 1 failed check (a failed condition or an order
// violation under --expect-pass), 2 usage error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace sfde

#endif

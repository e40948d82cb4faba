#pragma once

#include <string>
#include <vector>

namespace qmetro::cli {

// Entry point shared by the binary and the tests.  Returns the process exit
// code: 0 success, 1 a scenario target missed its tolerance, 2 usage or
// argument errors.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace qmetro::cli

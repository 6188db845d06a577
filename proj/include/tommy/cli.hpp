#pragma once

#include <string>
#include <vector>

namespace tommy::cli {

// Exit codes: 0 ok, 2 usage/config, 3 I/O or parse, 4 numeric failure.
int run(const std::vector<std::string>& args);

}  // namespace tommy::cli

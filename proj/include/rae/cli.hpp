#pragma once

#include <string>
#include <vector>

namespace rae::cli {

// Exit codes: 0 ok, 2 capacity exceeded, 3 attack failed, 4 format/IO error,
// 5 usage error.
int run(const std::vector<std::string>& args);

}  // namespace rae::cli

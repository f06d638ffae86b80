#pragma once

// Command-line surface. Exit codes: 0 success, 1 usage error,
// 2 validation/format error, 3 numeric failure (NaN/checksum).

#include <iosfwd>

namespace sinefm::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sinefm::cli

#pragma once

namespace chtf::cli {

// Exit codes: 0 ok, 2 io, 3 format/shape, 4 numeric, 1 anything else.
int run(int argc, const char* const* argv);

} // namespace chtf::cli

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "freqsift/error.hpp"

namespace freqsift::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNotFound = 3;
inline constexpr int kExitBackend = 4;

int exit_code(ErrorKind kind) noexcept;

// 64-bit FNV-1a, used for config hashes in manifests.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

std::string_view tool_version() noexcept;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace freqsift::cli

#pragma once

#include <cstdint>
#include <string>

#include "ihsc/digest.hpp"

namespace ihsc {

/// On-chain anchor for an off-chain file: locator plus the SHA-256 of the
/// bytes at write time.
struct FileRef {
    std::string uri;
    Digest file_digest;
    std::uint64_t size_bytes = 0;

    auto operator<=>(const FileRef&) const = default;
};

}  // namespace ihsc

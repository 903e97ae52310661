#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ihsc {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

/// 32-byte hash value; rendered as 64 lowercase hex characters in every
/// external format.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    bool is_zero() const {
        for (auto b : bytes) {
            if (b != 0) return false;
        }
        return true;
    }

    std::string hex() const;
    static Digest from_hex(std::string_view hex);
};

class HexError : public std::runtime_error {
public:
    explicit HexError(const std::string& what) : std::runtime_error(what) {}
};

/// SHA-256 of the input.
Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

}  // namespace ihsc

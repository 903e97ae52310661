#include "ihsc/rng.hpp"

namespace ihsc {

std::uint64_t derive_seed(std::uint64_t master, const std::string& label) {
    Digest d = sha256("ihsc.stream.v1|" + std::to_string(master) + "|" + label);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) {
        seed = (seed << 8) | d.bytes[i];
    }
    return seed;
}

}  // namespace ihsc

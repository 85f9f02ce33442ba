#include "nomafl/rng.hpp"

namespace nomafl {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

// FNV-1a; std::hash is not stable across standard libraries.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

RngStream RngStream::derive(std::uint64_t master_seed, std::string_view purpose,
                            std::uint64_t index, std::uint64_t sub_index) {
    std::uint64_t s = splitmix64(master_seed);
    s = splitmix64(s ^ fnv1a(purpose));
    s = splitmix64(s ^ index);
    s = splitmix64(s ^ (sub_index * 0xd1342543de82ef95ULL));
    return RngStream(s);
}

}  // namespace nomafl

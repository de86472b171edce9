#include "hlt/numkit/rng.hpp"

#include <vector>

namespace hlt::num {

namespace {

std::seed_seq make_seq(std::initializer_list<std::uint64_t> coordinates, std::vector<std::uint32_t>& words) {
    words.clear();
    words.push_back(static_cast<std::uint32_t>(coordinates.size()));
    for (std::uint64_t c : coordinates) {
        words.push_back(static_cast<std::uint32_t>(c & 0xffffffffULL));
        words.push_back(static_cast<std::uint32_t>(c >> 32));
    }
    return std::seed_seq(words.begin(), words.end());
}

}  // namespace

Rng derive_rng(std::initializer_list<std::uint64_t> coordinates) {
    std::vector<std::uint32_t> words;
    auto seq = make_seq(coordinates, words);
    return Rng(seq);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> coordinates) {
    std::vector<std::uint32_t> words;
    auto seq = make_seq(coordinates, words);
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double uniform01(Rng& rng) {
    // 53 random mantissa bits; avoids relying on generate_canonical rounding.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace hlt::num

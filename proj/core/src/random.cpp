#include "ctmdp/random.hpp"

#include <cmath>

namespace ctmdp {
namespace {

std::mt19937_64 make_engine(const StreamKey& key) {
    auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
    auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
    std::seed_seq seq{lo(key.seed),  hi(key.seed),  static_cast<std::uint32_t>(key.domain),
                      lo(key.epoch), hi(key.epoch), lo(key.index), hi(key.index)};
    return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(const StreamKey& key) : engine_(make_engine(key)) {}

double RandomStream::exponential(double rate) { return -std::log(uniform_open()) / rate; }

}  // namespace ctmdp

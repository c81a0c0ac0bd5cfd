#pragma once

#include <cstdint>

namespace nrulesim {

// Counter-based RNG (Philox4x32-10). Each trajectory gets its own stream
// keyed by (master seed, trial index); draws within a stream are indexed
// by a 64-bit counter, so streams never overlap and trials can run in
// any order on any number of workers.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : key0_(static_cast<std::uint32_t>(master_seed)),
          key1_(static_cast<std::uint32_t>(master_seed >> 32)),
          stream_lo_(static_cast<std::uint32_t>(stream_id)),
          stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

    // Uniform double in the open interval (0,1).
    double uniform01() {
        const std::uint64_t bits = next_u64();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t next_u64() {
        std::uint32_t x[4] = {static_cast<std::uint32_t>(draw_index_),
                              static_cast<std::uint32_t>(draw_index_ >> 32),
                              stream_lo_, stream_hi_};
        ++draw_index_;
        block(x, key0_, key1_);
        return (static_cast<std::uint64_t>(x[1]) << 32) | x[0];
    }

    // One keyed block of four 32-bit words; exposed for known-answer tests.
    static void block(std::uint32_t x[4], std::uint32_t k0, std::uint32_t k1) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * x[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * x[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t y0 = hi1 ^ x[1] ^ k0;
            const std::uint32_t y1 = lo1;
            const std::uint32_t y2 = hi0 ^ x[3] ^ k1;
            const std::uint32_t y3 = lo0;
            x[0] = y0;
            x[1] = y1;
            x[2] = y2;
            x[3] = y3;
            k0 += W0;
            k1 += W1;
        }
    }

private:
    std::uint32_t key0_, key1_;
    std::uint32_t stream_lo_, stream_hi_;
    std::uint64_t draw_index_ = 0;
};

} // namespace nrulesim

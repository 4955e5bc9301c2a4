#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every output
// block is a pure function of (key, counter), so any draw can be regenerated
// in isolation.

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

namespace ouimpact {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Pair of independent standard normals for block index `block` (< 2^32) of
/// stream (seed, stream), by the Marsaglia polar method. Rejected candidates
/// advance an attempt counter held in the second counter word, so the result
/// is still a pure function of (seed, stream, block).
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t block) noexcept {
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    constexpr double kScale = 0x1.0p-52;
    for (std::uint32_t attempt = 0;; ++attempt) {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block), attempt,
                                      static_cast<std::uint32_t>(stream),
                                      static_cast<std::uint32_t>(stream >> 32)};
        const auto out = Philox4x32::block(ctr, key);
        const std::uint64_t w0 = (std::uint64_t{out[0]} << 32) | out[1];
        const std::uint64_t w1 = (std::uint64_t{out[2]} << 32) | out[3];
        // Uniforms on (-1, 1) with 53-bit resolution.
        const double v0 = (static_cast<double>(w0 >> 11) + 0.5) * kScale - 1.0;
        const double v1 = (static_cast<double>(w1 >> 11) + 0.5) * kScale - 1.0;
        const double r2 = v0 * v0 + v1 * v1;
        if (r2 >= 1.0 || r2 == 0.0) continue;
        const double factor = std::sqrt(-2.0 * std::log(r2) / r2);
        return {v0 * factor, v1 * factor};
    }
}

}  // namespace ouimpact

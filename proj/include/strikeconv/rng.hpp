#pragma once

// Counter-based random numbers: every Monte Carlo path owns an independent
// stream addressed by (seed, stream id, path index), so results do not depend
// on how paths are split between workers.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace strikeconv {

/// Philox4x32-10 block cipher (Salmon et al., Random123).
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block counter, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
        }
        return counter;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Standard normals for one path: Box-Muller on consecutive Philox blocks.
class PathNormals {
public:
    PathNormals(std::uint64_t seed, std::uint32_t stream, std::uint64_t path)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path)),
          path_hi_(static_cast<std::uint32_t>(path >> 32)),
          stream_(stream) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto block = Philox4x32::generate({block_++, path_lo_, path_hi_, stream_}, key_);
        // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
        const double u1 = 1.0 - to_unit(block[0], block[1]);
        const double u2 = to_unit(block[2], block[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

private:
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
    std::uint32_t stream_;
    std::uint32_t block_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace strikeconv

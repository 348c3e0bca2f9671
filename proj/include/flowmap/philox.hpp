#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace flowmap {

/// Philox4x32-10 counter-based generator.
///
/// A stream is fixed by a 64-bit key and the upper two counter words; the
/// lower two words count blocks within the stream, so (seed, chunk) pairs
/// give independent, reproducible streams.
class Philox {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9U;
                key[1] += 0xBB67AE85U;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53U} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57U} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    Philox(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    std::uint32_t next_u32() {
        if (used_ == 4) {
            buffer_ = generate({static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32), stream_[0], stream_[1]},
                               key_);
            ++block_;
            used_ = 0;
        }
        return buffer_[used_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        return lo | (std::uint64_t{next_u32()} << 32);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) for small n.
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(uniform() * n);
    }

    /// Number of failures before the next success of a Bernoulli(p) sequence.
    std::uint64_t geometric(double p) {
        if (p >= 1.0) {
            return 0;
        }
        const double u = 1.0 - uniform();  // (0, 1]
        const double k = std::floor(std::log(u) / std::log1p(-p));
        return k >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(k);
    }

private:
    Key key_;
    std::array<std::uint32_t, 2> stream_;
    std::uint64_t block_ = 0;
    Block buffer_{};
    int used_ = 4;
};

}  // namespace flowmap

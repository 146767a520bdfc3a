#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace excurse {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11), exposed as a
/// UniformRandomBitGenerator with 64-bit output. The 64-bit seed is the key;
/// the stream is the sequence of 128-bit counter values 0, 1, 2, ...
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    explicit Philox4x32(std::uint64_t seed = 0) { this->seed(seed); }

    void seed(std::uint64_t s) {
        key_ = {static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
        counter_ = {0, 0, 0, 0};
        index_ = 2;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (index_ == 2) {
            block_ = generate(counter_, key_);
            increment();
            index_ = 0;
        }
        const std::size_t k = 2 * index_++;
        return (static_cast<std::uint64_t>(block_[k + 1]) << 32) | block_[k];
    }

    /// Raw block for a given counter and key.
    static std::array<std::uint32_t, 4> generate(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key) {
        constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
        constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }

private:
    void increment() {
        for (auto& c : counter_)
            if (++c != 0) break;
    }

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int index_ = 2;
};

/// Seed of replication `index` in a run started from `seed`.
constexpr std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

}  // namespace excurse

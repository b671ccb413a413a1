#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace rclb {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Streams are cheap: the 128-bit counter block is (draw counter, stream id),
// with the stream id derived from a domain label and a chain index. Two
// streams with different ids never overlap, draws within a stream are
// addressable, and checkpointing is just saving the draw counter.
class Philox {
  public:
    Philox() : Philox(0, 0) {}
    Philox(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    static std::uint64_t stream_id(std::string_view domain, std::uint64_t chain) {
        // FNV-1a over the label, then mix in the chain index.
        std::uint64_t h = 1469598103934665603ull;
        for (char c : domain) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h ^= chain + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }

    Philox(std::uint64_t seed, std::string_view domain, std::uint64_t chain)
        : Philox(seed, stream_id(domain, chain)) {}

    /// Next 32 uniformly random bits.
    std::uint32_t next_u32() {
        if (have_ == 0) {
            block_ = block_at(counter_);
            ++counter_;
            have_ = 4;
        }
        return block_[--have_];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [a,b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer in [0,n). Unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Checkpoint state: (block counter, words left in the current block).
    // Restoring recomputes the partially consumed block deterministically.
    std::uint64_t counter() const { return counter_; }
    int buffered() const { return have_; }
    void restore(std::uint64_t counter, int buffered) {
        counter_ = counter;
        have_ = buffered;
        if (buffered > 0) block_ = block_at(counter - 1);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

  private:
    using Block = std::array<std::uint32_t, 4>;

    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    Block block_at(std::uint64_t counter) const {
        constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
        Block x = {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                   static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
        std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(kMul0, x[0], hi0, lo0);
            mulhilo(kMul1, x[2], hi1, lo1);
            x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return x;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    Block block_{};
    int have_ = 0;
};

}  // namespace rclb

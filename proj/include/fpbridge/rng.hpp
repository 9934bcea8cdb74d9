#pragma once

#include <cmath>
#include <cstdint>

namespace fpbridge {

// splitmix64: bijective mixer, used only to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent sub-seed from a master seed. Callers that run several
// estimators under one master seed must salt each one differently, otherwise the
// replicate streams coincide and the estimates are correlated.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt) {
    std::uint64_t sm = master ^ (0x9e3779b97f4a7c15ull * (salt + 0x51ull));
    return splitmix64(sm);
}

// xoshiro256++ with Box-Muller normals. One instance per replicate; construction from
// (master seed, replicate index) gives order-independent parallel streams.
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream) {
        std::uint64_t sm = master_seed + 0x632be59bd9b4e019ull * (stream + 1);
        for (auto& word : s_) word = splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x1ull; // xoshiro forbids all-zero state
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0,1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0,1], safe to pass to log()
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(uniform_pos()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace fpbridge

// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string_view>

namespace mmtwin {

// All reproducible randomness goes through splitmix64 so that datasets do
// not depend on libstdc++ distribution internals. Identical seeds produce
// bit-identical draw sequences on any platform.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 significant bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // Box-Muller pair of independent standard normals. A pair per call keeps
    // the draw count fixed, which keeps streams reproducible when a consumer
    // needs an odd number of variates.
    std::complex<double> gaussian_pair()
    {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps log() finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

  private:
    std::uint64_t state_;
};

// FNV-1a, 64 bit. Used for stream-seed derivation and file digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull)
{
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i)
    {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s)
{
    return fnv1a64(s.data(), s.size());
}

// Stream seeds derive from the master seed and a stable label so that adding
// streams never perturbs existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label)
{
    SplitMix64 g(master ^ fnv1a64(label));
    return g.next();
}

// Per-draw seed inside a stream (one seed per packet, per GPS fix, ...).
inline std::uint64_t mix_seed(std::uint64_t stream_seed, std::uint64_t counter)
{
    SplitMix64 g(stream_seed ^ (0x632be59bd9b4e019ull * (counter + 1)));
    return g.next();
}

} // namespace mmtwin

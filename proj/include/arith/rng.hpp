#pragma once

#include <cstdint>
#include <vector>

namespace arith {

// splitmix64 stream. Standard-library engines and distributions leave the
// generated sequence implementation-defined; search and training runs must
// replay byte-identically from a seed, so the whole algorithm is pinned here.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased draw in [0, n). Lemire multiply-with-rejection.
    uint64_t below(uint64_t n) {
        unsigned __int128 m = (unsigned __int128)next() * n;
        auto lo = (uint64_t)m;
        if (lo < n) {
            uint64_t t = (0 - n) % n;
            while (lo < t) {
                m = (unsigned __int128)next() * n;
                lo = (uint64_t)m;
            }
        }
        return (uint64_t)(m >> 64);
    }

    double uniform01() { return (double)(next() >> 11) * 0x1.0p-53; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = (size_t)below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Deterministic sub-stream seed derivation.
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        Rng r(seed ^ (stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
        r.next();
        return r.next();
    }

private:
    uint64_t state_;
};

} // namespace arith

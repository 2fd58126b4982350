#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iqloc::detail {

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Maps 64 random bits to [-1, 1).
constexpr double unit_symmetric(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

/// mt19937_64 with a portable unbiased bounded draw. The standard
/// distributions are implementation-defined, which would make seeded
/// sampling differ between standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    template <typename RandomIt>
    void shuffle(RandomIt first, RandomIt last)
    {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::iter_swap(first + (i - 1), first + j);
        }
    }

    std::uint64_t next() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace iqloc::detail

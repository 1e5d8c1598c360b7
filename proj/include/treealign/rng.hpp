#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace treealign {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// A master seed plus a derivation path. Every sampled object draws from the
/// stream identified by (value, path), so results do not depend on the order
/// in which parallel tasks run.
class Seed {
public:
    explicit Seed(std::uint64_t value = 0) : value_(value) {}
    Seed(std::uint64_t value, std::vector<std::uint64_t> path) : value_(value), path_(std::move(path)) {}

    std::uint64_t value() const noexcept { return value_; }
    const std::vector<std::uint64_t>& path() const noexcept { return path_; }

    Seed derive(std::uint64_t index) const {
        Seed child = *this;
        child.path_.push_back(index);
        return child;
    }

    /// 64-bit key of the stream; distinct paths give unrelated keys.
    std::uint64_t stream_key() const noexcept {
        std::uint64_t h = detail::splitmix64(value_);
        for (std::uint64_t p : path_) h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
        return h;
    }

    Rng engine() const { return Rng(stream_key()); }

    friend bool operator==(const Seed&, const Seed&) = default;

private:
    std::uint64_t value_;
    std::vector<std::uint64_t> path_;
};

/// Poisson draw that accepts a zero mean (std::poisson_distribution does not).
template <class URBG>
std::size_t draw_poisson(double mean, URBG& rng) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long long> dist(mean);
    return static_cast<std::size_t>(dist(rng));
}

template <class URBG>
bool draw_bernoulli(double p, URBG& rng) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return std::bernoulli_distribution(p)(rng);
}

}  // namespace treealign

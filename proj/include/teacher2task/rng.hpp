#ifndef TEACHER2TASK_RNG_HPP
#define TEACHER2TASK_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace t2t {

// Labeled counter-based random stream. The same (seed, label) pair yields the
// same draw sequence on every platform and regardless of what other streams
// were used before it, which is what makes seed-comparable ablations possible.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string label)
        : seed_(seed), label_(std::move(label)) {
        state_ = mix(seed_ ^ fnv1a(label_));
        // decorrelate streams whose (seed ^ hash) happen to collide numerically
        state_ = mix(state_ + 0x9e3779b97f4a7c15ULL);
    }

    std::uint64_t seed() const { return seed_; }
    const std::string& label() const { return label_; }

    // splitmix64 step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    // standard normal via Box-Muller; stateless between calls so the draw
    // sequence is a pure function of the stream position
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // child stream with a derived label; independent of this stream's position
    RandomStream child(std::string_view sub) const {
        return RandomStream(seed_, label_ + "/" + std::string(sub));
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::string label_;
    std::uint64_t state_;
};

inline RandomStream derive_stream(std::uint64_t seed, std::string label) {
    return RandomStream(seed, std::move(label));
}

}  // namespace t2t

#endif

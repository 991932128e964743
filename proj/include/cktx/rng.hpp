#ifndef CKTX_RNG_HPP
#define CKTX_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>

namespace cktx {

// Deterministic RNG used everywhere in the project. std::mt19937_64 produces
// the same stream on every platform; the std:: distributions do not, so the
// uniform draws are done by hand here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in {0, ..., n-1}. Exact for n dividing 2^53 (all our uses are n=4).
    int next_int(int n) { return static_cast<int>(next_double() * n); }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-stage seed derivation: hash of (master seed, stage name, ids...).
// Adding new stages or cells never perturbs the seeds of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::initializer_list<std::string_view> ids = {}) {
    std::uint64_t h = fnv1a64(stage);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&master), sizeof(master)), h);
    for (auto id : ids) {
        h = fnv1a64("|", h);
        h = fnv1a64(id, h);
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&base), sizeof(base)));
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&index), sizeof(index)), h);
    return h;
}

} // namespace cktx

#endif

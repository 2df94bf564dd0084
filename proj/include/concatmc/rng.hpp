#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace concatmc {

// Reproducible random stream addressed by (seed, stream_id).
//
// Replicate i of a Monte Carlo run always draws from stream_id = i, so the
// i-th sampled path is bit-identical no matter how replicates are scheduled
// across threads.  The (seed, stream_id) pair is mixed through splitmix64
// before seeding the mt19937_64, so nearby ids yield decorrelated streams.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : engine_(mix(seed, stream_id)) {}

    // Uniform on the open interval (0,1): the raw 53-bit mantissa is offset
    // by half an ulp so 0.0 is never returned and -log(u01()) is finite.
    double u01() {
        const std::uint64_t x = engine_();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    // Exponential with the given rate, by inversion.  rate must be > 0.
    double exponential(double rate) { return -std::log(u01()) / rate; }

    // Standard normal via Box-Muller; one value per call, the second of the
    // pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(u01()));
        const double theta = 6.283185307179586476925286766559 * u01();
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t raw() { return engine_(); }

  private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream_id) {
        // splitmix64 finalizer applied to seed, then to seed ^ f(stream_id).
        auto smix = [](std::uint64_t z) {
            z += 0x9e3779b97f4a7c15ULL;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        };
        return smix(smix(seed) ^ smix(stream_id + 0x632be59bd9b4e019ULL));
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace concatmc

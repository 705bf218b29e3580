// Copyright 2026 The fairsample Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRSAMPLE_RNG_H
#define FAIRSAMPLE_RNG_H

#include <cmath>
#include <cstdint>
#include <random>

namespace fairsample {

/// Recorded in run manifests.
inline constexpr const char *kRngAlgorithm =
    "mt19937_64; substream seed = splitmix64(seed ^ splitmix64(index * 4 + purpose))";

/// Independent substreams carved out of one run seed.
enum class SeedPurpose : uint64_t { Block = 0, Timing = 1, Dark = 2, Test = 3 };

inline constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr uint64_t derive_seed(uint64_t seed, uint64_t index, SeedPurpose purpose) {
    return splitmix64(seed ^ splitmix64(index * 4 + static_cast<uint64_t>(purpose)));
}

/// mt19937_64 plus distribution code written out here, so that draws are
/// identical on every standard library (std:: distributions are
/// implementation-defined).
class Rng {
   public:
    explicit Rng(uint64_t seed) : engine_(seed) {
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Exponential with the given mean.
    double exponential(double mean) {
        return -mean * std::log1p(-uniform());
    }

    /// Standard normal, Box-Muller. The second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 == 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::mt19937_64 &engine() {
        return engine_;
    }

   private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

}  // namespace fairsample

#endif

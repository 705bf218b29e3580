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

#ifndef FAIRSAMPLE_DETECTION_MODEL_H
#define FAIRSAMPLE_DETECTION_MODEL_H

#include <cstdint>
#include <utility>
#include <vector>

#include "fairsample/block_counts.h"
#include "fairsample/quantum_model.h"
#include "fairsample/rng.h"

namespace fairsample {

/// Base single-photon detection probability of each of the four channels.
struct EfficiencyConfig {
    double a_plus = 1;
    double a_minus = 1;
    double b_plus = 1;
    double b_minus = 1;

    /// Throws std::invalid_argument unless every channel lies in (0, 1].
    void validate() const;
    double at(Station st, Outcome e) const;
};

/// How per-photon detection depends on the hidden variable.
///
/// Fair: a photon is detected with its channel's base efficiency, so pair
/// detection factorizes into the product of single-channel efficiencies.
///
/// UnfairMalus: the base efficiency is modulated by
/// (1 - d + d cos^2(lambda - theta)), theta being the local analyzer axis of
/// the photon's channel. The modulation only sees the local setting and the
/// shared lambda, so it is local, but it biases which pairs get detected.
struct SamplingPolicy {
    enum class Kind { Fair, UnfairMalus };
    Kind kind = Kind::Fair;
    double d = 0;

    static SamplingPolicy fair() {
        return {};
    }
    static SamplingPolicy unfair_malus(double d);
    void validate() const;
};

/// Shared per-pair polarization-like variable, uniform on [0, pi).
struct HiddenVariable {
    double lambda = 0;
};

/// Inverse-CDF sampler over the four cells of a ProbTable. Zero-probability
/// cells are never returned.
class OutcomeSampler {
   public:
    explicit OutcomeSampler(const ProbTable &table);
    std::pair<Outcome, Outcome> operator()(double u) const;

   private:
    double cum_[3];
    int last_nonzero_;
};

std::pair<Outcome, Outcome> sample_pair_outcome(const SourceState &state, SettingsPair s, Rng &rng);

double detection_probability(const SamplingPolicy &policy, const EfficiencyConfig &eff, Station station, Outcome e,
                             double setting, HiddenVariable hv);

/// Fate of one emitted pair that produced at least one detection.
struct DetectedPair {
    uint64_t pair_index = 0;
    Outcome a = Outcome::Plus;
    Outcome b = Outcome::Plus;
    bool a_detected = false;
    bool b_detected = false;

    bool operator==(const DetectedPair &) const = default;
};

/// Event-generation output of a block: every pair with at least one detected
/// photon, in emission order.
struct PairDetections {
    uint64_t n_pairs = 0;
    SettingsPair settings;
    std::vector<DetectedPair> pairs;
};

/// Monte-Carlo block. Per pair, in order: lambda, outcome, Alice's detection
/// draw, Bob's detection draw. Every draw is consumed whatever the policy, so
/// the same seed gives aligned samples across policies and efficiencies.
BlockCounts simulate_block(const SourceState &state, const EfficiencyConfig &eff, const SamplingPolicy &policy,
                           SettingsPair s, uint64_t n_pairs, uint64_t seed);

/// Same draws as simulate_block, but keeps per-pair detection records.
PairDetections simulate_block_events(const SourceState &state, const EfficiencyConfig &eff,
                                     const SamplingPolicy &policy, SettingsPair s, uint64_t n_pairs, uint64_t seed);

BlockCounts counts_from_detections(const PairDetections &detections);

}  // namespace fairsample

#endif

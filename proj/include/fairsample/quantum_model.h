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

#ifndef FAIRSAMPLE_QUANTUM_MODEL_H
#define FAIRSAMPLE_QUANTUM_MODEL_H

#include <cstdint>
#include <numbers>

namespace fairsample {

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) {
    return deg * (kPi / 180.0);
}
inline constexpr double rad_to_deg(double rad) {
    return rad * (180.0 / kPi);
}

enum class Outcome : uint8_t { Plus = 0, Minus = 1 };
enum class Station : uint8_t { Alice = 0, Bob = 1 };

const char *to_string(Outcome e);
const char *to_string(Station s);

/// Two-photon source |psi> = (|H>|V> - p|V>|H>) / sqrt(1 + p^2).
///
/// p = 1 is the maximally entangled (singlet-like) state and p = 0 the product
/// state |H>|V>. Values outside [0, 1] are rejected: p > 1 is the same family
/// as 1/p with the channels relabelled.
class SourceState {
   public:
    SourceState() = default;
    explicit SourceState(double p);

    double p() const {
        return p_;
    }

   private:
    double p_ = 1.0;
};

/// Analyzer angles in radians. Any real value is accepted.
struct SettingsPair {
    double alpha = 0;
    double beta = 0;
};

/// Joint outcome probabilities indexed by (Alice outcome, Bob outcome).
struct ProbTable {
    double pp = 0;
    double pm = 0;
    double mp = 0;
    double mm = 0;

    double at(Outcome a, Outcome b) const;
    double &at(Outcome a, Outcome b);
    double sum() const {
        return pp + pm + mp + mm;
    }
};

double joint_prob(const SourceState &state, Outcome a, Outcome b, SettingsPair s);
ProbTable joint_prob_table(const SourceState &state, SettingsPair s);

/// Probability of `e` at `station`. Alice's value depends on alpha only and
/// Bob's on beta only.
double marginal(const SourceState &state, Station station, Outcome e, SettingsPair s);

/// E = P++ + P-- - P+- - P-+. Equals -cos(2(alpha - beta)) for p = 1.
double correlation_qt(const SourceState &state, SettingsPair s);

/// S = E(a1,b1) + E(a1,b2) + E(a2,b1) - E(a2,b2).
double chsh_value(const SourceState &state, double a1, double a2, double b1, double b2);

}  // namespace fairsample

#endif

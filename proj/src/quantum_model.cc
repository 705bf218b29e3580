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

#include "fairsample/quantum_model.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fairsample {

const char *to_string(Outcome e) {
    return e == Outcome::Plus ? "+" : "-";
}

const char *to_string(Station s) {
    return s == Station::Alice ? "alice" : "bob";
}

SourceState::SourceState(double p) : p_(p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("source parameter p must lie in [0, 1], got " + std::to_string(p));
    }
}

double ProbTable::at(Outcome a, Outcome b) const {
    if (a == Outcome::Plus) {
        return b == Outcome::Plus ? pp : pm;
    }
    return b == Outcome::Plus ? mp : mm;
}

double &ProbTable::at(Outcome a, Outcome b) {
    if (a == Outcome::Plus) {
        return b == Outcome::Plus ? pp : pm;
    }
    return b == Outcome::Plus ? mp : mm;
}

double joint_prob(const SourceState &state, Outcome a, Outcome b, SettingsPair s) {
    const double p = state.p();
    const double ca = std::cos(s.alpha);
    const double sa = std::sin(s.alpha);
    const double cb = std::cos(s.beta);
    const double sb = std::sin(s.beta);
    const double norm = 1.0 + p * p;

    double amp;
    if (a == Outcome::Plus && b == Outcome::Plus) {
        amp = p * sa * cb - ca * sb;
    } else if (a == Outcome::Plus) {
        amp = ca * cb + p * sa * sb;
    } else if (b == Outcome::Plus) {
        amp = p * ca * cb + sa * sb;
    } else {
        amp = sa * cb - p * ca * sb;
    }
    return amp * amp / norm;
}

ProbTable joint_prob_table(const SourceState &state, SettingsPair s) {
    return ProbTable{
        joint_prob(state, Outcome::Plus, Outcome::Plus, s),
        joint_prob(state, Outcome::Plus, Outcome::Minus, s),
        joint_prob(state, Outcome::Minus, Outcome::Plus, s),
        joint_prob(state, Outcome::Minus, Outcome::Minus, s),
    };
}

double marginal(const SourceState &state, Station station, Outcome e, SettingsPair s) {
    const double p2 = state.p() * state.p();
    const double norm = 1.0 + p2;
    if (station == Station::Alice) {
        const double c2 = std::cos(s.alpha) * std::cos(s.alpha);
        const double s2 = std::sin(s.alpha) * std::sin(s.alpha);
        return e == Outcome::Plus ? (c2 + p2 * s2) / norm : (p2 * c2 + s2) / norm;
    }
    const double c2 = std::cos(s.beta) * std::cos(s.beta);
    const double s2 = std::sin(s.beta) * std::sin(s.beta);
    return e == Outcome::Plus ? (p2 * c2 + s2) / norm : (c2 + p2 * s2) / norm;
}

double correlation_qt(const SourceState &state, SettingsPair s) {
    const ProbTable t = joint_prob_table(state, s);
    return t.pp + t.mm - t.pm - t.mp;
}

double chsh_value(const SourceState &state, double a1, double a2, double b1, double b2) {
    return correlation_qt(state, {a1, b1}) + correlation_qt(state, {a1, b2}) + correlation_qt(state, {a2, b1}) -
           correlation_qt(state, {a2, b2});
}

}  // namespace fairsample

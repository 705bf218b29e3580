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

#include "fairsample/detection_model.h"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fairsample {

uint64_t BlockCounts::coincidence(Outcome a, Outcome b) const {
    if (a == Outcome::Plus) {
        return b == Outcome::Plus ? n_pp : n_pm;
    }
    return b == Outcome::Plus ? n_mp : n_mm;
}

uint64_t &BlockCounts::coincidence(Outcome a, Outcome b) {
    if (a == Outcome::Plus) {
        return b == Outcome::Plus ? n_pp : n_pm;
    }
    return b == Outcome::Plus ? n_mp : n_mm;
}

uint64_t BlockCounts::singles(Station st, Outcome e) const {
    if (st == Station::Alice) {
        return e == Outcome::Plus ? s_a_plus : s_a_minus;
    }
    return e == Outcome::Plus ? s_b_plus : s_b_minus;
}

uint64_t &BlockCounts::singles(Station st, Outcome e) {
    if (st == Station::Alice) {
        return e == Outcome::Plus ? s_a_plus : s_a_minus;
    }
    return e == Outcome::Plus ? s_b_plus : s_b_minus;
}

std::ostream &operator<<(std::ostream &out, const BlockCounts &c) {
    return out << "BlockCounts{N=(" << c.n_pp << "," << c.n_pm << "," << c.n_mp << "," << c.n_mm << ") S_A=("
               << c.s_a_plus << "," << c.s_a_minus << ") S_B=(" << c.s_b_plus << "," << c.s_b_minus
               << ") alpha=" << c.alpha << " beta=" << c.beta << " emitted=" << c.n_pairs_emitted << "}";
}

void EfficiencyConfig::validate() const {
    const char *names[] = {"a_plus", "a_minus", "b_plus", "b_minus"};
    const double values[] = {a_plus, a_minus, b_plus, b_minus};
    for (int k = 0; k < 4; k++) {
        if (!(values[k] > 0.0 && values[k] <= 1.0)) {
            throw std::invalid_argument(std::string("efficiency ") + names[k] + " must lie in (0, 1], got " +
                                        std::to_string(values[k]));
        }
    }
}

double EfficiencyConfig::at(Station st, Outcome e) const {
    if (st == Station::Alice) {
        return e == Outcome::Plus ? a_plus : a_minus;
    }
    return e == Outcome::Plus ? b_plus : b_minus;
}

SamplingPolicy SamplingPolicy::unfair_malus(double d) {
    SamplingPolicy policy{Kind::UnfairMalus, d};
    policy.validate();
    return policy;
}

void SamplingPolicy::validate() const {
    if (!(d >= 0.0 && d <= 1.0)) {
        throw std::invalid_argument("unfairness strength d must lie in [0, 1], got " + std::to_string(d));
    }
}

OutcomeSampler::OutcomeSampler(const ProbTable &table) {
    const double cells[4] = {table.pp, table.pm, table.mp, table.mm};
    double acc = 0;
    for (int k = 0; k < 3; k++) {
        acc += cells[k];
        cum_[k] = acc;
    }
    last_nonzero_ = 3;
    while (last_nonzero_ > 0 && cells[last_nonzero_] <= 0.0) {
        last_nonzero_--;
    }
}

std::pair<Outcome, Outcome> OutcomeSampler::operator()(double u) const {
    static constexpr std::pair<Outcome, Outcome> kCells[4] = {
        {Outcome::Plus, Outcome::Plus},
        {Outcome::Plus, Outcome::Minus},
        {Outcome::Minus, Outcome::Plus},
        {Outcome::Minus, Outcome::Minus},
    };
    int k = 0;
    while (k < 3 && u >= cum_[k]) {
        k++;
    }
    // Rounding can leave the cumulative sum a hair below 1; never fall into a
    // trailing zero-probability cell.
    if (k > last_nonzero_) {
        k = last_nonzero_;
    }
    return kCells[k];
}

std::pair<Outcome, Outcome> sample_pair_outcome(const SourceState &state, SettingsPair s, Rng &rng) {
    return OutcomeSampler(joint_prob_table(state, s))(rng.uniform());
}

double detection_probability(const SamplingPolicy &policy, const EfficiencyConfig &eff, Station station, Outcome e,
                             double setting, HiddenVariable hv) {
    const double base = eff.at(station, e);
    if (policy.kind == SamplingPolicy::Kind::Fair) {
        return base;
    }
    const double axis = e == Outcome::Plus ? setting : setting + kPi / 2;
    const double c = std::cos(hv.lambda - axis);
    return base * (1.0 - policy.d + policy.d * c * c);
}

namespace {

template <typename Sink>
void run_pairs(const SourceState &state, const EfficiencyConfig &eff, const SamplingPolicy &policy, SettingsPair s,
               uint64_t n_pairs, uint64_t seed, Sink &&sink) {
    eff.validate();
    policy.validate();
    const OutcomeSampler sampler(joint_prob_table(state, s));
    Rng rng(seed);
    for (uint64_t i = 0; i < n_pairs; i++) {
        const HiddenVariable hv{rng.uniform() * kPi};
        const auto [a, b] = sampler(rng.uniform());
        const double pa = detection_probability(policy, eff, Station::Alice, a, s.alpha, hv);
        const double pb = detection_probability(policy, eff, Station::Bob, b, s.beta, hv);
        const bool a_det = rng.uniform() < pa;
        const bool b_det = rng.uniform() < pb;
        sink(i, a, b, a_det, b_det);
    }
}

void tally(BlockCounts &c, Outcome a, Outcome b, bool a_det, bool b_det) {
    if (a_det) {
        c.singles(Station::Alice, a)++;
    }
    if (b_det) {
        c.singles(Station::Bob, b)++;
    }
    if (a_det && b_det) {
        c.coincidence(a, b)++;
    }
}

}  // namespace

BlockCounts simulate_block(const SourceState &state, const EfficiencyConfig &eff, const SamplingPolicy &policy,
                           SettingsPair s, uint64_t n_pairs, uint64_t seed) {
    BlockCounts c;
    c.alpha = s.alpha;
    c.beta = s.beta;
    c.n_pairs_emitted = n_pairs;
    run_pairs(state, eff, policy, s, n_pairs, seed, [&](uint64_t, Outcome a, Outcome b, bool a_det, bool b_det) {
        tally(c, a, b, a_det, b_det);
    });
    return c;
}

PairDetections simulate_block_events(const SourceState &state, const EfficiencyConfig &eff,
                                     const SamplingPolicy &policy, SettingsPair s, uint64_t n_pairs, uint64_t seed) {
    PairDetections out;
    out.n_pairs = n_pairs;
    out.settings = s;
    run_pairs(state, eff, policy, s, n_pairs, seed, [&](uint64_t i, Outcome a, Outcome b, bool a_det, bool b_det) {
        if (a_det || b_det) {
            out.pairs.push_back(DetectedPair{i, a, b, a_det, b_det});
        }
    });
    return out;
}

BlockCounts counts_from_detections(const PairDetections &detections) {
    BlockCounts c;
    c.alpha = detections.settings.alpha;
    c.beta = detections.settings.beta;
    c.n_pairs_emitted = detections.n_pairs;
    for (const auto &d : detections.pairs) {
        tally(c, d.a, d.b, d.a_detected, d.b_detected);
    }
    return c;
}

}  // namespace fairsample

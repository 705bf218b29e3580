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

#ifndef FAIRSAMPLE_BLOCK_COUNTS_H
#define FAIRSAMPLE_BLOCK_COUNTS_H

#include <cstdint>
#include <iosfwd>

#include "fairsample/quantum_model.h"

namespace fairsample {

/// Coincidence and singles counts for one (alpha, beta) block.
///
/// Singles count every registered photon, including the ones that also
/// appear in a coincidence.
struct BlockCounts {
    uint64_t n_pp = 0;
    uint64_t n_pm = 0;
    uint64_t n_mp = 0;
    uint64_t n_mm = 0;
    uint64_t s_a_plus = 0;
    uint64_t s_a_minus = 0;
    uint64_t s_b_plus = 0;
    uint64_t s_b_minus = 0;
    double alpha = 0;
    double beta = 0;
    uint64_t n_pairs_emitted = 0;

    uint64_t coincidences() const {
        return n_pp + n_pm + n_mp + n_mm;
    }
    uint64_t coincidence(Outcome a, Outcome b) const;
    uint64_t &coincidence(Outcome a, Outcome b);
    uint64_t singles(Station st, Outcome e) const;
    uint64_t &singles(Station st, Outcome e);

    /// Every coincidence is also a single on both sides.
    bool consistent() const {
        return n_pp + n_pm <= s_a_plus && n_mp + n_mm <= s_a_minus && n_pp + n_mp <= s_b_plus &&
               n_pm + n_mm <= s_b_minus;
    }

    bool operator==(const BlockCounts &other) const = default;
};

std::ostream &operator<<(std::ostream &out, const BlockCounts &c);

}  // namespace fairsample

#endif

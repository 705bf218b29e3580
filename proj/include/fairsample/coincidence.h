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

#ifndef FAIRSAMPLE_COINCIDENCE_H
#define FAIRSAMPLE_COINCIDENCE_H

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "fairsample/block_counts.h"
#include "fairsample/timetag.h"

namespace fairsample {

/// Two events coincide iff |t_a - t_b| <= ticks.
struct CoincidenceWindow {
    uint64_t ticks = 0;
};

/// Only events carrying these setting indices take part in matching or in the
/// singles tallies.
struct SettingsFilter {
    uint8_t setting_a = 0;
    uint8_t setting_b = 0;
};

class CoincidenceError : public std::runtime_error {
   public:
    enum class Kind { UnsortedInput, TickResolutionMismatch };
    CoincidenceError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {
    }
    Kind kind() const {
        return kind_;
    }

   private:
    Kind kind_;
};

// Matching policy shared by both engines:
//   - Alice's events are visited in stream order.
//   - Each visited Alice event takes the earliest-timestamped unmatched Bob
//     event within the window; at equal timestamps a Plus-channel event beats a
//     Minus one, then stream order decides.
//   - Every event is matched at most once and counts as a single either way.
// The returned counts carry alpha = beta = 0 and no emitted-pair count; the
// caller fills those in.

/// Single forward pass with two cursors.
BlockCounts count_coincidences(const EventStream &a, const EventStream &b, CoincidenceWindow win,
                               std::optional<SettingsFilter> filter = std::nullopt);

/// O(n m) candidate enumeration. Verification oracle for count_coincidences.
BlockCounts count_coincidences_naive(const EventStream &a, const EventStream &b, CoincidenceWindow win,
                                     std::optional<SettingsFilter> filter = std::nullopt);

}  // namespace fairsample

#endif

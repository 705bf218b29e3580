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

#ifndef FAIRSAMPLE_TIMETAG_H
#define FAIRSAMPLE_TIMETAG_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fairsample/detection_model.h"
#include "fairsample/quantum_model.h"

namespace fairsample {

struct TimetagEvent {
    uint64_t t = 0;
    Outcome sign = Outcome::Plus;
    uint8_t setting_index = 0;  // 0..3

    bool operator==(const TimetagEvent &) const = default;
};

struct EventStream {
    Station station = Station::Alice;
    uint64_t tick_ps = 1;
    std::vector<TimetagEvent> events;

    bool is_sorted() const;
    bool operator==(const EventStream &) const = default;
};

/// Poisson dark-count rates per channel, in counts per second.
struct DarkRates {
    double a_plus = 0;
    double a_minus = 0;
    double b_plus = 0;
    double b_minus = 0;

    double at(Station st, Outcome e) const;
    bool any() const {
        return a_plus > 0 || a_minus > 0 || b_plus > 0 || b_minus > 0;
    }
};

struct StreamParams {
    double pair_rate_hz = 1e4;
    double jitter_sd_ticks = 0;
    uint64_t tick_ps = 100;
    DarkRates dark;
    uint8_t setting_index_a = 0;
    uint8_t setting_index_b = 0;
};

/// Places the detections of one block on a time axis.
///
/// Pair emission times form a Poisson process at `pair_rate_hz` starting at
/// t = 0; every pair, detected or not, advances the clock. Each detected photon
/// is stamped with its pair's emission tick plus independent Gaussian jitter,
/// rounded and clamped at zero. Dark counts are uncorrelated Poisson processes
/// over the same span. Both streams come back sorted.
std::pair<EventStream, EventStream> generate_streams(const PairDetections &detections, const StreamParams &params,
                                                     uint64_t seed);

// TTG1 layout, all integers little-endian:
//   header (24 bytes): "TTG1", u8 version = 1, u8 station (0 Alice, 1 Bob),
//                      u16 reserved = 0, u64 tick_resolution_ps, u64 event_count
//   record (9 bytes):  u64 t, u8 flags
//   flags: bit0 sign (0 Plus, 1 Minus), bits1-2 setting index, bits3-7 zero.
inline constexpr uint8_t kTtgVersion = 1;
inline constexpr size_t kTtgHeaderSize = 24;
inline constexpr size_t kTtgRecordSize = 9;

class TtgError : public std::runtime_error {
   public:
    enum class Kind { BadMagic, UnsupportedVersion, InvalidHeader, TruncatedFile, UnsortedTimestamps, InvalidFlags,
                      TrailingData, Io };

    TtgError(Kind kind, uint64_t offset, const std::string &what);

    Kind kind() const {
        return kind_;
    }
    /// Byte offset of the header field or record that failed.
    uint64_t offset() const {
        return offset_;
    }

   private:
    Kind kind_;
    uint64_t offset_;
};

const char *to_string(TtgError::Kind kind);

uint8_t encode_flags(const TimetagEvent &e);

/// Returns the number of bytes written: 24 + 9 * events.
uint64_t write_ttg(const EventStream &stream, std::ostream &out);
EventStream read_ttg(std::istream &in);

void write_ttg_file(const EventStream &stream, const std::filesystem::path &path);
EventStream read_ttg_file(const std::filesystem::path &path);

/// Debug format: a header row "t_ticks,sign,setting_index" then one row per
/// event with sign written as + or -.
void write_csv(const EventStream &stream, std::ostream &out);

}  // namespace fairsample

#endif

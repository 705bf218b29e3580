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

#include "fairsample/timetag.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "fairsample/rng.h"

namespace fairsample {

bool EventStream::is_sorted() const {
    return std::is_sorted(events.begin(), events.end(),
                          [](const TimetagEvent &x, const TimetagEvent &y) { return x.t < y.t; });
}

double DarkRates::at(Station st, Outcome e) const {
    if (st == Station::Alice) {
        return e == Outcome::Plus ? a_plus : a_minus;
    }
    return e == Outcome::Plus ? b_plus : b_minus;
}

namespace {

uint64_t jittered(uint64_t tick, double jitter_sd, Rng &rng) {
    if (jitter_sd <= 0) {
        return tick;
    }
    const double shifted = static_cast<double>(tick) + std::nearbyint(rng.normal() * jitter_sd);
    return shifted <= 0 ? 0 : static_cast<uint64_t>(shifted);
}

void sort_stream(EventStream &s) {
    std::sort(s.events.begin(), s.events.end(), [](const TimetagEvent &x, const TimetagEvent &y) {
        if (x.t != y.t) {
            return x.t < y.t;
        }
        return encode_flags(x) < encode_flags(y);
    });
}

}  // namespace

std::pair<EventStream, EventStream> generate_streams(const PairDetections &detections, const StreamParams &params,
                                                     uint64_t seed) {
    if (!(params.pair_rate_hz > 0) || !std::isfinite(params.pair_rate_hz)) {
        throw std::invalid_argument("pair rate must be positive");
    }
    if (!(params.jitter_sd_ticks >= 0) || !std::isfinite(params.jitter_sd_ticks)) {
        throw std::invalid_argument("jitter standard deviation must be non-negative");
    }
    if (params.tick_ps == 0) {
        throw std::invalid_argument("tick resolution must be positive");
    }
    if (params.setting_index_a > 3 || params.setting_index_b > 3) {
        throw std::invalid_argument("setting index must lie in [0, 3]");
    }
    const double dark[4] = {params.dark.a_plus, params.dark.a_minus, params.dark.b_plus, params.dark.b_minus};
    for (double r : dark) {
        if (!(r >= 0) || !std::isfinite(r)) {
            throw std::invalid_argument("dark rates must be non-negative");
        }
    }

    EventStream a{Station::Alice, params.tick_ps, {}};
    EventStream b{Station::Bob, params.tick_ps, {}};
    const double ticks_per_second = 1e12 / static_cast<double>(params.tick_ps);
    const double mean_gap = ticks_per_second / params.pair_rate_hz;

    Rng rng(derive_seed(seed, 0, SeedPurpose::Timing));
    double clock = 0;
    uint64_t next_pair = 0;
    for (const auto &d : detections.pairs) {
        while (next_pair <= d.pair_index) {
            clock += rng.exponential(mean_gap);
            next_pair++;
        }
        const auto emitted = static_cast<uint64_t>(std::llround(clock));
        if (d.a_detected) {
            a.events.push_back({jittered(emitted, params.jitter_sd_ticks, rng), d.a, params.setting_index_a});
        }
        if (d.b_detected) {
            b.events.push_back({jittered(emitted, params.jitter_sd_ticks, rng), d.b, params.setting_index_b});
        }
    }
    // Undetected tail pairs still take up time; dark counts span the whole block.
    while (next_pair < detections.n_pairs) {
        clock += rng.exponential(mean_gap);
        next_pair++;
    }

    if (params.dark.any()) {
        const double span = clock;
        uint64_t channel = 0;
        for (Station st : {Station::Alice, Station::Bob}) {
            for (Outcome e : {Outcome::Plus, Outcome::Minus}) {
                const double rate = params.dark.at(st, e);
                Rng dark_rng(derive_seed(seed, channel++, SeedPurpose::Dark));
                if (rate <= 0) {
                    continue;
                }
                EventStream &target = st == Station::Alice ? a : b;
                const uint8_t setting = st == Station::Alice ? params.setting_index_a : params.setting_index_b;
                const double gap = ticks_per_second / rate;
                for (double t = dark_rng.exponential(gap); t < span; t += dark_rng.exponential(gap)) {
                    target.events.push_back({static_cast<uint64_t>(std::llround(t)), e, setting});
                }
            }
        }
    }

    sort_stream(a);
    sort_stream(b);
    return {std::move(a), std::move(b)};
}

TtgError::TtgError(Kind kind, uint64_t offset, const std::string &what)
    : std::runtime_error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) + ": " + what),
      kind_(kind),
      offset_(offset) {
}

const char *to_string(TtgError::Kind kind) {
    switch (kind) {
        case TtgError::Kind::BadMagic:
            return "BadMagic";
        case TtgError::Kind::UnsupportedVersion:
            return "UnsupportedVersion";
        case TtgError::Kind::InvalidHeader:
            return "InvalidHeader";
        case TtgError::Kind::TruncatedFile:
            return "TruncatedFile";
        case TtgError::Kind::UnsortedTimestamps:
            return "UnsortedTimestamps";
        case TtgError::Kind::InvalidFlags:
            return "InvalidFlags";
        case TtgError::Kind::TrailingData:
            return "TrailingData";
        case TtgError::Kind::Io:
            return "Io";
    }
    return "?";
}

uint8_t encode_flags(const TimetagEvent &e) {
    return static_cast<uint8_t>((e.sign == Outcome::Minus ? 1u : 0u) | ((e.setting_index & 3u) << 1));
}

namespace {

void put_u64(uint8_t *dst, uint64_t v) {
    for (int k = 0; k < 8; k++) {
        dst[k] = static_cast<uint8_t>(v >> (8 * k));
    }
}

uint64_t get_u64(const uint8_t *src) {
    uint64_t v = 0;
    for (int k = 0; k < 8; k++) {
        v |= static_cast<uint64_t>(src[k]) << (8 * k);
    }
    return v;
}

constexpr size_t kRecordsPerChunk = 4096;

}  // namespace

uint64_t write_ttg(const EventStream &stream, std::ostream &out) {
    if (stream.tick_ps == 0) {
        throw std::invalid_argument("tick resolution must be positive");
    }
    std::array<uint8_t, kTtgHeaderSize> header{};
    std::memcpy(header.data(), "TTG1", 4);
    header[4] = kTtgVersion;
    header[5] = stream.station == Station::Alice ? 0 : 1;
    put_u64(header.data() + 8, stream.tick_ps);
    put_u64(header.data() + 16, stream.events.size());
    out.write(reinterpret_cast<const char *>(header.data()), header.size());

    std::vector<uint8_t> buf(kRecordsPerChunk * kTtgRecordSize);
    size_t i = 0;
    while (i < stream.events.size()) {
        const size_t n = std::min(kRecordsPerChunk, stream.events.size() - i);
        for (size_t k = 0; k < n; k++) {
            const TimetagEvent &e = stream.events[i + k];
            if (e.setting_index > 3) {
                throw std::invalid_argument("setting index must lie in [0, 3]");
            }
            uint8_t *rec = buf.data() + k * kTtgRecordSize;
            put_u64(rec, e.t);
            rec[8] = encode_flags(e);
        }
        out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(n * kTtgRecordSize));
        i += n;
    }
    if (!out) {
        throw TtgError(TtgError::Kind::Io, 0, "write failed");
    }
    return kTtgHeaderSize + kTtgRecordSize * stream.events.size();
}

EventStream read_ttg(std::istream &in) {
    std::array<uint8_t, kTtgHeaderSize> header{};
    in.read(reinterpret_cast<char *>(header.data()), header.size());
    const auto got = static_cast<size_t>(in.gcount());
    if (got >= 4 && std::memcmp(header.data(), "TTG1", 4) != 0) {
        throw TtgError(TtgError::Kind::BadMagic, 0, "expected magic \"TTG1\"");
    }
    if (got < kTtgHeaderSize) {
        throw TtgError(TtgError::Kind::TruncatedFile, 0, "header needs 24 bytes, got " + std::to_string(got));
    }
    if (header[4] != kTtgVersion) {
        throw TtgError(TtgError::Kind::UnsupportedVersion, 4, "version " + std::to_string(header[4]));
    }
    if (header[5] > 1) {
        throw TtgError(TtgError::Kind::InvalidHeader, 5, "station byte " + std::to_string(header[5]));
    }
    if (header[6] != 0 || header[7] != 0) {
        throw TtgError(TtgError::Kind::InvalidHeader, 6, "reserved field is not zero");
    }
    EventStream s;
    s.station = header[5] == 0 ? Station::Alice : Station::Bob;
    s.tick_ps = get_u64(header.data() + 8);
    if (s.tick_ps == 0) {
        throw TtgError(TtgError::Kind::InvalidHeader, 8, "tick resolution is zero");
    }
    const uint64_t count = get_u64(header.data() + 16);

    // Do not trust event_count for the allocation; grow as records arrive.
    s.events.reserve(static_cast<size_t>(std::min<uint64_t>(count, 1u << 20)));
    std::vector<uint8_t> buf(kRecordsPerChunk * kTtgRecordSize);
    uint64_t i = 0;
    uint64_t prev_t = 0;
    while (i < count) {
        const auto want = static_cast<size_t>(std::min<uint64_t>(kRecordsPerChunk, count - i));
        in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(want * kTtgRecordSize));
        const auto bytes = static_cast<size_t>(in.gcount());
        const size_t complete = bytes / kTtgRecordSize;
        for (size_t k = 0; k < complete; k++, i++) {
            const uint8_t *rec = buf.data() + k * kTtgRecordSize;
            const uint64_t offset = kTtgHeaderSize + i * kTtgRecordSize;
            const uint64_t t = get_u64(rec);
            const uint8_t flags = rec[8];
            if (flags & 0xF8) {
                throw TtgError(TtgError::Kind::InvalidFlags, offset + 8,
                               "reserved flag bits set in record " + std::to_string(i));
            }
            if (i > 0 && t < prev_t) {
                throw TtgError(TtgError::Kind::UnsortedTimestamps, offset,
                               "record " + std::to_string(i) + " goes back in time");
            }
            prev_t = t;
            s.events.push_back({t, (flags & 1) ? Outcome::Minus : Outcome::Plus, static_cast<uint8_t>((flags >> 1) & 3)});
        }
        if (complete < want) {
            throw TtgError(TtgError::Kind::TruncatedFile, kTtgHeaderSize + i * kTtgRecordSize,
                           "record " + std::to_string(i) + " of " + std::to_string(count) + " is incomplete");
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw TtgError(TtgError::Kind::TrailingData, kTtgHeaderSize + count * kTtgRecordSize,
                       "bytes after the last record");
    }
    return s;
}

void write_ttg_file(const EventStream &stream, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw TtgError(TtgError::Kind::Io, 0, "cannot open " + path.string() + " for writing");
    }
    write_ttg(stream, out);
    out.close();
    if (!out) {
        throw TtgError(TtgError::Kind::Io, 0, "cannot finish writing " + path.string());
    }
}

EventStream read_ttg_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw TtgError(TtgError::Kind::Io, 0, "cannot open " + path.string());
    }
    return read_ttg(in);
}

void write_csv(const EventStream &stream, std::ostream &out) {
    out << "t_ticks,sign,setting_index\n";
    for (const auto &e : stream.events) {
        out << e.t << ',' << to_string(e.sign) << ',' << static_cast<int>(e.setting_index) << '\n';
    }
}

}  // namespace fairsample

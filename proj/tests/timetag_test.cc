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


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fairsample/timetag.h"

using namespace fairsample;

namespace {

std::string to_bytes(const EventStream &s) {
    std::ostringstream out;
    write_ttg(s, out);
    return out.str();
}

EventStream from_bytes(const std::string &bytes) {
    std::istringstream in(bytes);
    return read_ttg(in);
}

TtgError read_error(const std::string &bytes) {
    try {
        from_bytes(bytes);
    } catch (const TtgError &e) {
        return e;
    }
    ADD_FAILURE() << "expected a TtgError";
    return TtgError(TtgError::Kind::Io, 0, "none");
}

EventStream random_stream(Rng &rng) {
    EventStream s;
    s.station = rng.uniform() < 0.5 ? Station::Alice : Station::Bob;
    s.tick_ps = 1 + static_cast<uint64_t>(rng.uniform() * 5000);
    const auto n = static_cast<size_t>(rng.uniform() * 500);
    uint64_t t = rng.uniform() < 0.1 ? UINT64_MAX - 100000 : static_cast<uint64_t>(rng.uniform() * 1e15);
    for (size_t i = 0; i < n; i++) {
        t += static_cast<uint64_t>(rng.uniform() * (rng.uniform() < 0.2 ? 1 : 150));
        s.events.push_back({t, rng.uniform() < 0.5 ? Outcome::Plus : Outcome::Minus,
                            static_cast<uint8_t>(rng.uniform() * 4)});
    }
    return s;
}

PairDetections all_detected(uint64_t n) {
    PairDetections d;
    d.n_pairs = n;
    for (uint64_t i = 0; i < n; i++) {
        d.pairs.push_back({i, Outcome::Plus, Outcome::Minus, true, true});
    }
    return d;
}

}  // namespace

TEST(GenerateStreams, EmptyDetections) {
    PairDetections d;
    d.n_pairs = 1000;
    const auto [a, b] = generate_streams(d, StreamParams{}, 1);
    EXPECT_TRUE(a.events.empty());
    EXPECT_TRUE(b.events.empty());
    EXPECT_EQ(a.station, Station::Alice);
    EXPECT_EQ(b.station, Station::Bob);
}

TEST(GenerateStreams, OnePairNoJitter) {
    const auto [a, b] = generate_streams(all_detected(1), StreamParams{}, 2);
    ASSERT_EQ(a.events.size(), 1u);
    ASSERT_EQ(b.events.size(), 1u);
    EXPECT_EQ(a.events[0].t, b.events[0].t);
    EXPECT_EQ(a.events[0].sign, Outcome::Plus);
    EXPECT_EQ(b.events[0].sign, Outcome::Minus);
}

TEST(GenerateStreams, PoissonMeanGap) {
    // 1e4 pairs/s with 1 ns ticks: mean gap 1e5 ticks.
    const uint64_t n = 100000;
    StreamParams params;
    params.pair_rate_hz = 1e4;
    params.tick_ps = 1000;
    const auto [a, b] = generate_streams(all_detected(n), params, 3);
    ASSERT_EQ(a.events.size(), n);
    const double mean_gap = static_cast<double>(a.events.back().t) / n;
    EXPECT_NEAR(mean_gap, 1e5, 3 * 1e5 / std::sqrt(static_cast<double>(n)));

    // Gaps are exponential: their coefficient of variation is 1.
    double sum = 0, sum2 = 0;
    for (size_t i = 1; i < n; i++) {
        const double g = static_cast<double>(a.events[i].t - a.events[i - 1].t);
        sum += g;
        sum2 += g * g;
    }
    const double m = sum / (n - 1);
    const double cv = std::sqrt(sum2 / (n - 1) - m * m) / m;
    EXPECT_NEAR(cv, 1.0, 0.02);
}

TEST(GenerateStreams, SortedUnderHeavyJitter) {
    StreamParams params;
    params.pair_rate_hz = 1e6;
    params.tick_ps = 1;
    params.jitter_sd_ticks = 5e5;
    const auto [a, b] = generate_streams(all_detected(20000), params, 4);
    EXPECT_TRUE(a.is_sorted());
    EXPECT_TRUE(b.is_sorted());
    EXPECT_EQ(a.events.size(), 20000u);
}

TEST(GenerateStreams, JitterSpread) {
    StreamParams params;
    params.pair_rate_hz = 1e3;  // gaps of 1e7 ticks keep pairs apart
    params.tick_ps = 100;
    params.jitter_sd_ticks = 20;
    const uint64_t n = 20000;
    const auto [a, b] = generate_streams(all_detected(n), params, 5);
    double sum = 0, sum2 = 0;
    for (size_t i = 0; i < n; i++) {
        const double dt = static_cast<double>(a.events[i].t) - static_cast<double>(b.events[i].t);
        sum += dt;
        sum2 += dt * dt;
    }
    // Difference of two independent jitters: sd = 20 sqrt 2.
    const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    EXPECT_NEAR(sd, 20 * std::sqrt(2.0), 1.0);
    EXPECT_NEAR(sum / n, 0.0, 3 * 20 * std::sqrt(2.0 / n));
}

TEST(GenerateStreams, DarkCountRate) {
    PairDetections d;
    d.n_pairs = 100000;  // 10 s at 1e4 pairs/s
    StreamParams params;
    params.dark = {500, 0, 0, 2000};
    const auto [a, b] = generate_streams(d, params, 6);
    uint64_t a_plus = 0, b_minus = 0;
    for (const auto &e : a.events) {
        ASSERT_EQ(e.sign, Outcome::Plus);
        a_plus++;
    }
    for (const auto &e : b.events) {
        ASSERT_EQ(e.sign, Outcome::Minus);
        b_minus++;
    }
    // Poisson counts over ~10 s; the span itself fluctuates by ~0.3%.
    EXPECT_NEAR(a_plus, 5000.0, 4 * std::sqrt(5000.0) + 20);
    EXPECT_NEAR(b_minus, 20000.0, 4 * std::sqrt(20000.0) + 80);
    EXPECT_TRUE(a.is_sorted());
    EXPECT_TRUE(b.is_sorted());
}

TEST(GenerateStreams, Deterministic) {
    StreamParams params;
    params.jitter_sd_ticks = 3;
    params.dark = {100, 100, 100, 100};
    const auto d = all_detected(1000);
    EXPECT_EQ(generate_streams(d, params, 9), generate_streams(d, params, 9));
    EXPECT_NE(generate_streams(d, params, 9).first, generate_streams(d, params, 10).first);
}

TEST(GenerateStreams, RejectsBadParameters) {
    const auto d = all_detected(1);
    StreamParams p;
    p.pair_rate_hz = 0;
    EXPECT_THROW(generate_streams(d, p, 1), std::invalid_argument);
    p = {};
    p.jitter_sd_ticks = -1;
    EXPECT_THROW(generate_streams(d, p, 1), std::invalid_argument);
    p = {};
    p.tick_ps = 0;
    EXPECT_THROW(generate_streams(d, p, 1), std::invalid_argument);
}

TEST(WriteTtg, EmptyStreamIsHeaderOnly) {
    EventStream s{Station::Alice, 1000, {}};
    std::ostringstream out;
    EXPECT_EQ(write_ttg(s, out), 24u);
    const std::string bytes = out.str();
    ASSERT_EQ(bytes.size(), 24u);
    const std::string expected("TTG1\x01\x00\x00\x00\xE8\x03\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00",
                               24);
    EXPECT_EQ(bytes, expected);
}

TEST(WriteTtg, RecordLayout) {
    EventStream s{Station::Bob, 100, {{5, Outcome::Minus, 2}}};
    std::ostringstream out;
    EXPECT_EQ(write_ttg(s, out), 33u);
    const std::string bytes = out.str();
    ASSERT_EQ(bytes.size(), 33u);
    EXPECT_EQ(bytes[5], '\x01');  // Bob
    EXPECT_EQ(bytes[16], '\x01');  // one event
    EXPECT_EQ(bytes.substr(24), std::string("\x05\x00\x00\x00\x00\x00\x00\x00\x05", 9));
    EXPECT_EQ(encode_flags({0, Outcome::Minus, 2}), 0b101);
    EXPECT_EQ(encode_flags({0, Outcome::Plus, 3}), 0b110);
    EXPECT_EQ(encode_flags({0, Outcome::Plus, 0}), 0);
}

TEST(WriteTtg, LittleEndianTimestamps) {
    EventStream s{Station::Alice, 1, {{0x0102030405060708ULL, Outcome::Plus, 1}}};
    const std::string bytes = to_bytes(s);
    EXPECT_EQ(bytes.substr(24), std::string("\x08\x07\x06\x05\x04\x03\x02\x01\x02", 9));
}

TEST(ReadTtg, RoundTripRandomStreams) {
    Rng rng(77);
    for (int k = 0; k < 50; k++) {
        const EventStream s = random_stream(rng);
        const std::string bytes = to_bytes(s);
        EXPECT_EQ(bytes.size(), 24 + 9 * s.events.size());
        const EventStream back = from_bytes(bytes);
        EXPECT_EQ(back, s);
        EXPECT_EQ(to_bytes(back), bytes);
    }
}

TEST(ReadTtg, BadMagic) {
    std::string bytes = to_bytes({Station::Alice, 1, {{1, Outcome::Plus, 0}}});
    bytes.replace(0, 4, "XXXX");
    const TtgError e = read_error(bytes);
    EXPECT_EQ(e.kind(), TtgError::Kind::BadMagic);
    EXPECT_EQ(e.offset(), 0u);
}

TEST(ReadTtg, UnsupportedVersion) {
    std::string bytes = to_bytes({Station::Alice, 1, {}});
    bytes[4] = 2;
    const TtgError e = read_error(bytes);
    EXPECT_EQ(e.kind(), TtgError::Kind::UnsupportedVersion);
    EXPECT_EQ(e.offset(), 4u);
}

TEST(ReadTtg, InvalidHeaderFields) {
    std::string bytes = to_bytes({Station::Alice, 1, {}});
    std::string station = bytes;
    station[5] = 7;
    EXPECT_EQ(read_error(station).kind(), TtgError::Kind::InvalidHeader);
    EXPECT_EQ(read_error(station).offset(), 5u);
    std::string reserved = bytes;
    reserved[7] = 1;
    EXPECT_EQ(read_error(reserved).kind(), TtgError::Kind::InvalidHeader);
    EXPECT_EQ(read_error(reserved).offset(), 6u);
    std::string tick = bytes;
    tick[8] = 0;
    EXPECT_EQ(read_error(tick).kind(), TtgError::Kind::InvalidHeader);
    EXPECT_EQ(read_error(tick).offset(), 8u);
}

TEST(ReadTtg, TruncatedFileOffsets) {
    EventStream s{Station::Bob, 100, {}};
    for (uint64_t t = 0; t < 10; t++) {
        s.events.push_back({t * 10, Outcome::Plus, 1});
    }
    const std::string bytes = to_bytes(s);
    ASSERT_EQ(bytes.size(), 24u + 90u);
    // Cut inside every record: the error points at the start of the broken one.
    for (size_t cut = 25; cut < bytes.size(); cut++) {
        const size_t record = (cut - 24) / 9;
        if ((cut - 24) % 9 == 0) {
            const TtgError e = read_error(bytes.substr(0, cut));
            EXPECT_EQ(e.kind(), TtgError::Kind::TruncatedFile);
            EXPECT_EQ(e.offset(), cut) << "cut at record boundary " << cut;
            continue;
        }
        const TtgError e = read_error(bytes.substr(0, cut));
        EXPECT_EQ(e.kind(), TtgError::Kind::TruncatedFile);
        EXPECT_EQ(e.offset(), 24 + 9 * record) << "cut " << cut;
    }
    const TtgError header = read_error(bytes.substr(0, 10));
    EXPECT_EQ(header.kind(), TtgError::Kind::TruncatedFile);
    EXPECT_EQ(header.offset(), 0u);
}

TEST(ReadTtg, UnsortedTimestamps) {
    EventStream s{Station::Alice, 1, {{10, Outcome::Plus, 0}, {20, Outcome::Plus, 0}, {30, Outcome::Plus, 0}}};
    std::string bytes = to_bytes(s);
    bytes[24 + 18] = 15;  // third record: t = 15 < 20
    const TtgError e = read_error(bytes);
    EXPECT_EQ(e.kind(), TtgError::Kind::UnsortedTimestamps);
    EXPECT_EQ(e.offset(), 24u + 18u);

    // Ties are fine.
    s.events[2].t = 20;
    EXPECT_EQ(from_bytes(to_bytes(s)), s);
}

TEST(ReadTtg, InvalidFlags) {
    EventStream s{Station::Alice, 1, {{10, Outcome::Plus, 0}, {20, Outcome::Minus, 3}}};
    std::string bytes = to_bytes(s);
    bytes[24 + 9 + 8] = static_cast<char>(0x08 | 0x07);
    const TtgError e = read_error(bytes);
    EXPECT_EQ(e.kind(), TtgError::Kind::InvalidFlags);
    EXPECT_EQ(e.offset(), 24u + 9u + 8u);
}

TEST(ReadTtg, TrailingData) {
    std::string bytes = to_bytes({Station::Alice, 1, {{10, Outcome::Plus, 0}}});
    bytes += "x";
    const TtgError e = read_error(bytes);
    EXPECT_EQ(e.kind(), TtgError::Kind::TrailingData);
    EXPECT_EQ(e.offset(), 33u);
}

TEST(ReadTtg, ErrorKindsAreDistinct) {
    const TtgError::Kind kinds[] = {TtgError::Kind::BadMagic, TtgError::Kind::UnsupportedVersion,
                                    TtgError::Kind::TruncatedFile, TtgError::Kind::UnsortedTimestamps,
                                    TtgError::Kind::InvalidFlags};
    for (size_t i = 0; i < 5; i++) {
        for (size_t j = i + 1; j < 5; j++) {
            EXPECT_STRNE(to_string(kinds[i]), to_string(kinds[j]));
        }
    }
}

TEST(WriteCsv, Format) {
    EventStream s{Station::Alice, 1, {{5, Outcome::Minus, 2}, {7, Outcome::Plus, 0}}};
    std::ostringstream out;
    write_csv(s, out);
    EXPECT_EQ(out.str(), "t_ticks,sign,setting_index\n5,-,2\n7,+,0\n");
}

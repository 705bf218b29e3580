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

#include <algorithm>

#include "fairsample/coincidence.h"
#include "fairsample/rng.h"

using namespace fairsample;

namespace {

constexpr Outcome P = Outcome::Plus;
constexpr Outcome M = Outcome::Minus;

EventStream stream(Station st, std::vector<TimetagEvent> events) {
    return {st, 100, std::move(events)};
}

EventStream random_side(Station st, Rng &rng, uint64_t span) {
    EventStream s{st, 100, {}};
    const auto n = static_cast<size_t>(rng.uniform() * 201);
    for (size_t i = 0; i < n; i++) {
        s.events.push_back({static_cast<uint64_t>(rng.uniform() * span), rng.uniform() < 0.5 ? P : M,
                            static_cast<uint8_t>(rng.uniform() * 3)});
    }
    std::sort(s.events.begin(), s.events.end(), [](const auto &x, const auto &y) { return x.t < y.t; });
    return s;
}

void expect_both(const EventStream &a, const EventStream &b, uint64_t w, const BlockCounts &expected,
                 std::optional<SettingsFilter> f = std::nullopt) {
    EXPECT_EQ(count_coincidences(a, b, {w}, f), expected);
    EXPECT_EQ(count_coincidences_naive(a, b, {w}, f), expected);
}

}  // namespace

TEST(Coincidence, BothEmpty) {
    expect_both(stream(Station::Alice, {}), stream(Station::Bob, {}), 10, BlockCounts{});
}

TEST(Coincidence, InclusiveWindowAtZero) {
    BlockCounts c;
    c.n_pp = 1;
    c.s_a_plus = 1;
    c.s_b_plus = 1;
    expect_both(stream(Station::Alice, {{0, P, 0}}), stream(Station::Bob, {{0, P, 0}}), 0, c);
    // One tick apart needs w >= 1.
    BlockCounts apart = c;
    apart.n_pp = 0;
    expect_both(stream(Station::Alice, {{0, P, 0}}), stream(Station::Bob, {{1, P, 0}}), 0, apart);
    expect_both(stream(Station::Alice, {{0, P, 0}}), stream(Station::Bob, {{1, P, 0}}), 1, c);
}

TEST(Coincidence, OneMatchAmongSingles) {
    BlockCounts c;
    c.n_pm = 1;
    c.s_a_plus = 3;
    c.s_b_minus = 2;
    expect_both(stream(Station::Alice, {{100, P, 0}, {200, P, 0}, {300, P, 0}}),
                stream(Station::Bob, {{105, M, 0}, {450, M, 0}}), 10, c);
}

TEST(Coincidence, EarliestPartnerWins) {
    // A at 100 could pair with B at 95 or 104; 95 is taken, 104 stays single.
    const auto a = stream(Station::Alice, {{100, P, 0}, {113, P, 0}});
    const auto b = stream(Station::Bob, {{95, M, 0}, {104, P, 0}});
    BlockCounts c;
    c.n_pm = 1;
    c.n_pp = 1;  // 113 then takes 104
    c.s_a_plus = 2;
    c.s_b_minus = 1;
    c.s_b_plus = 1;
    expect_both(a, b, 10, c);

    BlockCounts single;
    single.n_pm = 1;
    single.s_a_plus = 1;
    single.s_b_minus = 1;
    single.s_b_plus = 1;
    expect_both(stream(Station::Alice, {{100, P, 0}}), b, 10, single);
}

TEST(Coincidence, TieAtEqualTimestampPrefersPlus) {
    const auto a = stream(Station::Alice, {{50, M, 0}});
    const auto b = stream(Station::Bob, {{48, M, 0}, {48, P, 0}});
    BlockCounts c;
    c.n_mp = 1;
    c.s_a_minus = 1;
    c.s_b_plus = 1;
    c.s_b_minus = 1;
    expect_both(a, b, 5, c);
}

TEST(Coincidence, SingleSided) {
    const auto a = stream(Station::Alice, {{1, P, 0}, {2, M, 0}, {3, M, 0}});
    BlockCounts c;
    c.s_a_plus = 1;
    c.s_a_minus = 2;
    expect_both(a, stream(Station::Bob, {}), 100, c);
}

TEST(Coincidence, SettingsFilterIgnoresOtherEvents) {
    const auto a = stream(Station::Alice, {{10, P, 1}, {20, P, 0}});
    const auto b = stream(Station::Bob, {{10, M, 0}, {20, M, 2}});
    // Only setting (0, 2) events exist for matching: A at 20 with B at 20.
    BlockCounts c;
    c.n_pm = 1;
    c.s_a_plus = 1;
    c.s_b_minus = 1;
    expect_both(a, b, 0, c, SettingsFilter{0, 2});
    // Without the filter, A@10 and B@10 match too.
    BlockCounts all;
    all.n_pm = 2;
    all.s_a_plus = 2;
    all.s_b_minus = 2;
    expect_both(a, b, 0, all);
}

TEST(Coincidence, Errors) {
    const auto sorted = stream(Station::Alice, {{1, P, 0}, {2, P, 0}});
    const auto unsorted = stream(Station::Bob, {{5, P, 0}, {2, P, 0}});
    for (auto fn : {count_coincidences, count_coincidences_naive}) {
        try {
            fn(sorted, unsorted, {1}, std::nullopt);
            ADD_FAILURE();
        } catch (const CoincidenceError &e) {
            EXPECT_EQ(e.kind(), CoincidenceError::Kind::UnsortedInput);
        }
        EventStream other = sorted;
        other.station = Station::Bob;
        other.tick_ps = 50;
        try {
            fn(sorted, other, {1}, std::nullopt);
            ADD_FAILURE();
        } catch (const CoincidenceError &e) {
            EXPECT_EQ(e.kind(), CoincidenceError::Kind::TickResolutionMismatch);
        }
    }
}

TEST(Coincidence, FastMatchesNaiveOnRandomInstances) {
    Rng rng(2024);
    for (int k = 0; k < 300; k++) {
        const uint64_t span = 1 + static_cast<uint64_t>(rng.uniform() * 2000);
        const auto a = random_side(Station::Alice, rng, span);
        const auto b = random_side(Station::Bob, rng, span);
        const uint64_t w = static_cast<uint64_t>(rng.uniform() * 40);
        std::optional<SettingsFilter> f;
        if (rng.uniform() < 0.5) {
            f = SettingsFilter{static_cast<uint8_t>(rng.uniform() * 3), static_cast<uint8_t>(rng.uniform() * 3)};
        }
        ASSERT_EQ(count_coincidences(a, b, {w}, f), count_coincidences_naive(a, b, {w}, f)) << "instance " << k;
    }
}

TEST(Coincidence, Conservation) {
    Rng rng(5);
    for (int k = 0; k < 200; k++) {
        const auto a = random_side(Station::Alice, rng, 500);
        const auto b = random_side(Station::Bob, rng, 500);
        const BlockCounts c = count_coincidences(a, b, {static_cast<uint64_t>(rng.uniform() * 30)});
        EXPECT_TRUE(c.consistent());
        EXPECT_EQ(c.s_a_plus + c.s_a_minus, a.events.size());
        EXPECT_EQ(c.s_b_plus + c.s_b_minus, b.events.size());
    }
}

TEST(Coincidence, MonotoneInWindow) {
    Rng rng(6);
    for (int k = 0; k < 100; k++) {
        const auto a = random_side(Station::Alice, rng, 3000);
        const auto b = random_side(Station::Bob, rng, 3000);
        uint64_t prev = 0;
        for (uint64_t w = 0; w <= 200; w += 5) {
            const uint64_t n = count_coincidences(a, b, {w}).coincidences();
            EXPECT_GE(n, prev) << "w=" << w;
            prev = n;
        }
    }
}

TEST(Coincidence, TimeShiftInvariant) {
    Rng rng(7);
    for (int k = 0; k < 100; k++) {
        const auto a = random_side(Station::Alice, rng, 1000);
        const auto b = random_side(Station::Bob, rng, 1000);
        const uint64_t w = static_cast<uint64_t>(rng.uniform() * 20);
        const uint64_t shift = static_cast<uint64_t>(rng.uniform() * 1e12);
        auto a2 = a;
        auto b2 = b;
        for (auto &e : a2.events) e.t += shift;
        for (auto &e : b2.events) e.t += shift;
        EXPECT_EQ(count_coincidences(a, b, {w}), count_coincidences(a2, b2, {w}));
    }
}

TEST(Coincidence, HugeTimestampsDoNotOverflow) {
    const uint64_t top = UINT64_MAX - 5;
    const auto a = stream(Station::Alice, {{3, P, 0}, {top, P, 0}});
    const auto b = stream(Station::Bob, {{0, M, 0}, {UINT64_MAX, M, 0}});
    BlockCounts c;
    c.n_pm = 2;
    c.s_a_plus = 2;
    c.s_b_minus = 2;
    expect_both(a, b, 10, c);
}

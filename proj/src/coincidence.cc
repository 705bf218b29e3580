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

#include "fairsample/coincidence.h"

#include <span>
#include <tuple>
#include <vector>

namespace fairsample {

namespace {

void check_inputs(const EventStream &a, const EventStream &b) {
    if (a.tick_ps != b.tick_ps) {
        throw CoincidenceError(CoincidenceError::Kind::TickResolutionMismatch,
                               "tick resolutions differ: " + std::to_string(a.tick_ps) + " ps vs " +
                                   std::to_string(b.tick_ps) + " ps");
    }
    if (!a.is_sorted()) {
        throw CoincidenceError(CoincidenceError::Kind::UnsortedInput, "first stream is not sorted by time");
    }
    if (!b.is_sorted()) {
        throw CoincidenceError(CoincidenceError::Kind::UnsortedInput, "second stream is not sorted by time");
    }
}

std::vector<TimetagEvent> filtered(const EventStream &s, uint8_t setting) {
    std::vector<TimetagEvent> out;
    for (const auto &e : s.events) {
        if (e.setting_index == setting) {
            out.push_back(e);
        }
    }
    return out;
}

bool within(uint64_t ta, uint64_t tb, uint64_t w) {
    return ta >= tb ? ta - tb <= w : tb - ta <= w;
}

BlockCounts match_fast(std::span<const TimetagEvent> a, std::span<const TimetagEvent> b, uint64_t w) {
    BlockCounts c;
    for (const auto &e : b) {
        c.singles(Station::Bob, e.sign)++;
    }
    const size_t m = b.size();
    std::vector<uint8_t> matched(m, 0);
    size_t lo = 0;
    for (const auto &ea : a) {
        c.singles(Station::Alice, ea.sign)++;
        const uint64_t lower = ea.t >= w ? ea.t - w : 0;
        while (lo < m && (b[lo].t < lower || matched[lo])) {
            lo++;
        }
        if (lo == m || !within(ea.t, b[lo].t, w)) {
            continue;
        }
        size_t pick = lo;
        if (b[lo].sign == Outcome::Minus) {
            for (size_t k = lo + 1; k < m && b[k].t == b[lo].t; k++) {
                if (!matched[k] && b[k].sign == Outcome::Plus) {
                    pick = k;
                    break;
                }
            }
        }
        matched[pick] = 1;
        c.coincidence(ea.sign, b[pick].sign)++;
    }
    return c;
}

BlockCounts match_naive(std::span<const TimetagEvent> a, std::span<const TimetagEvent> b, uint64_t w) {
    BlockCounts c;
    std::vector<bool> matched(b.size(), false);
    for (const auto &ea : a) {
        c.singles(Station::Alice, ea.sign)++;
        bool found = false;
        std::tuple<uint64_t, int, size_t> best;
        for (size_t k = 0; k < b.size(); k++) {
            if (matched[k] || !within(ea.t, b[k].t, w)) {
                continue;
            }
            const std::tuple<uint64_t, int, size_t> key{b[k].t, b[k].sign == Outcome::Plus ? 0 : 1, k};
            if (!found || key < best) {
                best = key;
                found = true;
            }
        }
        if (found) {
            const size_t k = std::get<2>(best);
            matched[k] = true;
            c.coincidence(ea.sign, b[k].sign)++;
        }
    }
    for (const auto &e : b) {
        c.singles(Station::Bob, e.sign)++;
    }
    return c;
}

template <typename Engine>
BlockCounts run(const EventStream &a, const EventStream &b, CoincidenceWindow win,
                std::optional<SettingsFilter> filter, Engine engine) {
    check_inputs(a, b);
    if (!filter) {
        return engine(a.events, b.events, win.ticks);
    }
    const auto fa = filtered(a, filter->setting_a);
    const auto fb = filtered(b, filter->setting_b);
    return engine(fa, fb, win.ticks);
}

}  // namespace

BlockCounts count_coincidences(const EventStream &a, const EventStream &b, CoincidenceWindow win,
                               std::optional<SettingsFilter> filter) {
    return run(a, b, win, filter, match_fast);
}

BlockCounts count_coincidences_naive(const EventStream &a, const EventStream &b, CoincidenceWindow win,
                                     std::optional<SettingsFilter> filter) {
    return run(a, b, win, filter, match_naive);
}

}  // namespace fairsample

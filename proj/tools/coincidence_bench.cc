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


// Coincidence-engine throughput on synthetic streams.
//
//   coincidence_bench [events_per_side] [window_ticks]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "fairsample/coincidence.h"
#include "fairsample/rng.h"

using namespace fairsample;

int main(int argc, char **argv) {
    const uint64_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2000000;
    const uint64_t window = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 30;

    Rng rng(12345);
    EventStream a{Station::Alice, 100, {}};
    EventStream b{Station::Bob, 100, {}};
    uint64_t t = 0;
    for (uint64_t i = 0; i < n; i++) {
        t += 1 + static_cast<uint64_t>(rng.exponential(1000.0));
        const auto jitter = static_cast<uint64_t>(rng.uniform() * 20);
        a.events.push_back({t, rng.uniform() < 0.5 ? Outcome::Plus : Outcome::Minus, 0});
        b.events.push_back({t + jitter, rng.uniform() < 0.5 ? Outcome::Plus : Outcome::Minus, 0});
    }

    std::sort(b.events.begin(), b.events.end(), [](const auto &x, const auto &y) { return x.t < y.t; });

    const auto start = std::chrono::steady_clock::now();
    const BlockCounts c = count_coincidences(a, b, CoincidenceWindow{window});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("events/side %llu  window %llu  coincidences %llu  time %.3f s  rate %.3g events/s\n",
                static_cast<unsigned long long>(n), static_cast<unsigned long long>(window),
                static_cast<unsigned long long>(c.coincidences()), secs, 2.0 * n / secs);
    return 0;
}

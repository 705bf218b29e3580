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

#include "fairsample/estimator.h"

#include <cmath>
#include <limits>

namespace fairsample {

const char *to_string(EstimatorError::Kind kind) {
    switch (kind) {
        case EstimatorError::Kind::ZeroSingles:
            return "ZeroSingles";
        case EstimatorError::Kind::AllZeroRatios:
            return "AllZeroRatios";
        case EstimatorError::Kind::NoCoincidences:
            return "NoCoincidences";
        case EstimatorError::Kind::InsufficientPoints:
            return "InsufficientPoints";
        case EstimatorError::Kind::DegenerateWeights:
            return "DegenerateWeights";
        case EstimatorError::Kind::InvalidScan:
            return "InvalidScan";
    }
    return "?";
}

const char *to_string(MarginalSum m) {
    switch (m) {
        case MarginalSum::AlicePlus:
            return "a_plus";
        case MarginalSum::AliceMinus:
            return "a_minus";
        case MarginalSum::BobPlus:
            return "b_plus";
        case MarginalSum::BobMinus:
            return "b_minus";
    }
    return "?";
}

Station station_of(MarginalSum m) {
    return m == MarginalSum::AlicePlus || m == MarginalSum::AliceMinus ? Station::Alice : Station::Bob;
}

double Marginals::at(MarginalSum m) const {
    switch (m) {
        case MarginalSum::AlicePlus:
            return a_plus;
        case MarginalSum::AliceMinus:
            return a_minus;
        case MarginalSum::BobPlus:
            return b_plus;
        case MarginalSum::BobMinus:
            return b_minus;
    }
    return 0;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Forward-mode derivative with respect to the eight independent tallies
// N++, N+-, N-+, N--, U_A+, U_A-, U_B+, U_B-.
struct Dual {
    double v = 0;
    std::array<double, 8> g{};

    static Dual variable(double value, int k) {
        Dual d{value, {}};
        d.g[k] = 1;
        return d;
    }
};

Dual operator+(const Dual &x, const Dual &y) {
    Dual r{x.v + y.v, {}};
    for (int k = 0; k < 8; k++) r.g[k] = x.g[k] + y.g[k];
    return r;
}
Dual operator-(const Dual &x, const Dual &y) {
    Dual r{x.v - y.v, {}};
    for (int k = 0; k < 8; k++) r.g[k] = x.g[k] - y.g[k];
    return r;
}
Dual operator*(const Dual &x, const Dual &y) {
    Dual r{x.v * y.v, {}};
    for (int k = 0; k < 8; k++) r.g[k] = x.g[k] * y.v + x.v * y.g[k];
    return r;
}
Dual operator/(const Dual &x, const Dual &y) {
    Dual r{x.v / y.v, {}};
    for (int k = 0; k < 8; k++) r.g[k] = (x.g[k] * y.v - x.v * y.g[k]) / (y.v * y.v);
    return r;
}
Dual operator*(double c, const Dual &x) {
    Dual r{c * x.v, {}};
    for (int k = 0; k < 8; k++) r.g[k] = c * x.g[k];
    return r;
}

// Every estimator is written once over T so that the value path and the
// uncertainty path evaluate identical arithmetic.
template <typename T>
struct Raw {
    std::array<T, 4> n;  // ++, +-, -+, --
    std::array<T, 4> s;  // A+, A-, B+, B-
};

template <typename T>
std::array<T, 4> f_of(const Raw<T> &r) {
    return {
        0.25 * (r.n[0] / (r.s[0] * r.s[2])),
        0.25 * (r.n[1] / (r.s[0] * r.s[3])),
        0.25 * (r.n[2] / (r.s[1] * r.s[2])),
        0.25 * (r.n[3] / (r.s[1] * r.s[3])),
    };
}

template <typename T>
T sum4(const std::array<T, 4> &x) {
    return x[0] + x[1] + x[2] + x[3];
}

template <typename T>
std::array<T, 4> normalized(const std::array<T, 4> &x) {
    const T total = sum4(x);
    return {x[0] / total, x[1] / total, x[2] / total, x[3] / total};
}

// (A+, A-, B+, B-) from a table whose entries are in ++, +-, -+, -- order.
template <typename T>
std::array<T, 4> one_sided(const std::array<T, 4> &x) {
    const T total = sum4(x);
    return {(x[0] + x[1]) / total, (x[2] + x[3]) / total, (x[0] + x[2]) / total, (x[1] + x[3]) / total};
}

template <typename T>
T correlation_of(const std::array<T, 4> &x) {
    return (x[0] + x[3] - x[1] - x[2]) / sum4(x);
}

std::array<double, 4> n_of(const BlockCounts &c) {
    return {static_cast<double>(c.n_pp), static_cast<double>(c.n_pm), static_cast<double>(c.n_mp),
            static_cast<double>(c.n_mm)};
}

void require_coincidences(const BlockCounts &c) {
    if (c.coincidences() == 0) {
        throw EstimatorError(EstimatorError::Kind::NoCoincidences, "block has no coincidences");
    }
}

void require_positive_sum(const FRatios &f) {
    if (!(f.sum() > 0)) {
        throw EstimatorError(EstimatorError::Kind::AllZeroRatios, "all f-ratios are zero");
    }
}

}  // namespace

FRatios f_ratios(const BlockCounts &counts) {
    const char *names[] = {"a_plus", "a_minus", "b_plus", "b_minus"};
    const uint64_t singles[] = {counts.s_a_plus, counts.s_a_minus, counts.s_b_plus, counts.s_b_minus};
    for (int k = 0; k < 4; k++) {
        if (singles[k] == 0) {
            throw EstimatorError(EstimatorError::Kind::ZeroSingles,
                                 std::string("singles channel ") + names[k] + " is empty");
        }
    }
    Raw<double> r{n_of(counts),
                  {static_cast<double>(counts.s_a_plus), static_cast<double>(counts.s_a_minus),
                   static_cast<double>(counts.s_b_plus), static_cast<double>(counts.s_b_minus)}};
    const auto f = f_of(r);
    return {f[0], f[1], f[2], f[3]};
}

ProbTable estimate_joint(const FRatios &f) {
    require_positive_sum(f);
    const auto j = normalized(std::array<double, 4>{f.pp, f.pm, f.mp, f.mm});
    return {j[0], j[1], j[2], j[3]};
}

Marginals estimate_marginals(const FRatios &f) {
    require_positive_sum(f);
    const auto m = one_sided(std::array<double, 4>{f.pp, f.pm, f.mp, f.mm});
    return {m[0], m[1], m[2], m[3]};
}

double correlation_singles(const FRatios &f) {
    require_positive_sum(f);
    return correlation_of(std::array<double, 4>{f.pp, f.pm, f.mp, f.mm});
}

double correlation_standard(const BlockCounts &counts) {
    require_coincidences(counts);
    return correlation_of(n_of(counts));
}

double marginal_standard(const BlockCounts &counts, MarginalSum which) {
    return evenodd_sums_standard(counts).at(which);
}

Marginals evenodd_sums_standard(const BlockCounts &counts) {
    require_coincidences(counts);
    const auto m = one_sided(n_of(counts));
    return {m[0], m[1], m[2], m[3]};
}

Uncertainties counting_uncertainties(const BlockCounts &counts) {
    Uncertainties u;
    const auto n = n_of(counts);
    const std::array<uint64_t, 4> s = {counts.s_a_plus, counts.s_a_minus, counts.s_b_plus, counts.s_b_minus};
    for (int k = 0; k < 4; k++) {
        u.n[k] = std::sqrt(n[k]);
        u.singles[k] = std::sqrt(static_cast<double>(s[k]));
        if (n[k] < kLowCountThreshold || s[k] < kLowCountThreshold) {
            u.low_count = true;
        }
    }

    // Unmatched singles per channel. Inconsistent blocks (more coincidences
    // than singles) are clamped to zero rather than going negative.
    const auto unmatched = [](uint64_t single, uint64_t a, uint64_t b) {
        return single >= a + b ? static_cast<double>(single - a - b) : 0.0;
    };
    const std::array<double, 8> x = {
        n[0],
        n[1],
        n[2],
        n[3],
        unmatched(counts.s_a_plus, counts.n_pp, counts.n_pm),
        unmatched(counts.s_a_minus, counts.n_mp, counts.n_mm),
        unmatched(counts.s_b_plus, counts.n_pp, counts.n_mp),
        unmatched(counts.s_b_minus, counts.n_pm, counts.n_mm),
    };
    const auto sigma = [&x](const Dual &d) {
        if (!std::isfinite(d.v)) {
            return kNaN;
        }
        double var = 0;
        for (int k = 0; k < 8; k++) {
            var += d.g[k] * d.g[k] * x[k];
        }
        return std::sqrt(var);
    };

    Raw<Dual> r;
    for (int k = 0; k < 4; k++) {
        r.n[k] = Dual::variable(x[k], k);
    }
    const std::array<Dual, 4> unm = {Dual::variable(x[4], 4), Dual::variable(x[5], 5), Dual::variable(x[6], 6),
                                     Dual::variable(x[7], 7)};
    r.s = {r.n[0] + r.n[1] + unm[0], r.n[2] + r.n[3] + unm[1], r.n[0] + r.n[2] + unm[2], r.n[1] + r.n[3] + unm[3]};

    const bool has_singles = counts.s_a_plus && counts.s_a_minus && counts.s_b_plus && counts.s_b_minus;
    const bool has_coinc = counts.coincidences() > 0;

    Dual e_std, e_sn;
    if (has_singles) {
        const auto f = f_of(r);
        u.f = {sigma(f[0]), sigma(f[1]), sigma(f[2]), sigma(f[3])};
    } else {
        u.f = {kNaN, kNaN, kNaN, kNaN};
    }
    if (has_singles && has_coinc) {
        const auto f = f_of(r);
        const auto j = normalized(f);
        const auto m = one_sided(f);
        e_sn = correlation_of(f);
        u.joint = {sigma(j[0]), sigma(j[1]), sigma(j[2]), sigma(j[3])};
        u.marginals = {sigma(m[0]), sigma(m[1]), sigma(m[2]), sigma(m[3])};
        u.correlation_singles = sigma(e_sn);
    } else {
        u.joint = {kNaN, kNaN, kNaN, kNaN};
        u.marginals = {kNaN, kNaN, kNaN, kNaN};
        u.correlation_singles = kNaN;
    }
    if (has_coinc) {
        const auto m = one_sided(r.n);
        e_std = correlation_of(r.n);
        u.marginals_standard = {sigma(m[0]), sigma(m[1]), sigma(m[2]), sigma(m[3])};
        u.correlation_standard = sigma(e_std);
    } else {
        u.marginals_standard = {kNaN, kNaN, kNaN, kNaN};
        u.correlation_standard = kNaN;
    }
    u.correlation_difference = has_singles && has_coinc ? sigma(e_std - e_sn) : kNaN;
    return u;
}

EstimateSet estimate(const BlockCounts &counts) {
    EstimateSet est;
    const FRatios f = f_ratios(counts);
    est.joint = estimate_joint(f);
    est.marginals = estimate_marginals(f);
    est.correlation_singles = correlation_singles(f);
    est.correlation_standard = counts.coincidences() > 0 ? correlation_standard(counts) : kNaN;
    est.sigma = counting_uncertainties(counts);
    est.low_statistics = est.sigma.low_count;
    return est;
}

}  // namespace fairsample

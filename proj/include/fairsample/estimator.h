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

#ifndef FAIRSAMPLE_ESTIMATOR_H
#define FAIRSAMPLE_ESTIMATOR_H

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairsample/block_counts.h"
#include "fairsample/quantum_model.h"

namespace fairsample {

class EstimatorError : public std::runtime_error {
   public:
    enum class Kind { ZeroSingles, AllZeroRatios, NoCoincidences, InsufficientPoints, DegenerateWeights, InvalidScan };
    EstimatorError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {
    }
    Kind kind() const {
        return kind_;
    }

   private:
    Kind kind_;
};

const char *to_string(EstimatorError::Kind kind);

/// f = (1/4) N / (S_A S_B) for each of the four channel combinations.
struct FRatios {
    double pp = 0;
    double pm = 0;
    double mp = 0;
    double mm = 0;

    double sum() const {
        return pp + pm + mp + mm;
    }
};

/// The four one-sided sums, in the order A+, A-, B+, B-.
enum class MarginalSum { AlicePlus = 0, AliceMinus = 1, BobPlus = 2, BobMinus = 3 };
inline constexpr std::array<MarginalSum, 4> kMarginalSums = {MarginalSum::AlicePlus, MarginalSum::AliceMinus,
                                                             MarginalSum::BobPlus, MarginalSum::BobMinus};
const char *to_string(MarginalSum m);
Station station_of(MarginalSum m);

struct Marginals {
    double a_plus = 0;
    double a_minus = 0;
    double b_plus = 0;
    double b_minus = 0;

    double at(MarginalSum m) const;
};

FRatios f_ratios(const BlockCounts &counts);

/// Singles-normalized joint probabilities f / sum(f). Valid under fair
/// sampling whatever the channel efficiencies.
ProbTable estimate_joint(const FRatios &f);
Marginals estimate_marginals(const FRatios &f);
/// E from the singles-normalized joint table.
double correlation_singles(const FRatios &f);

/// Standard normalization by the coincidence total. Efficiency-free only when
/// one station has balanced channels.
double correlation_standard(const BlockCounts &counts);
/// Coincidence-normalized one-sided sum, e.g. (N++ + N+-) / N for A+. Biased
/// whenever the summed-over station's channels are imbalanced.
double marginal_standard(const BlockCounts &counts, MarginalSum which);
/// All four (N_even + N_odd) / N sums at once.
Marginals evenodd_sums_standard(const BlockCounts &counts);

/// Cells below this count mark a block as low-statistics.
inline constexpr uint64_t kLowCountThreshold = 10;

/// One-sigma counting uncertainties.
///
/// Raw counts are modelled as independent Poisson variables after splitting
/// every singles count into its coincident part and the unmatched remainder
/// (S_A+ = N++ + N+- + U_A+, and so on). The eight disjoint tallies N and U
/// are propagated to first order, which carries the correlation between a
/// coincidence count and the singles counts it belongs to. Quantities that
/// are undefined for the block (zero singles, zero coincidences) get NaN.
struct Uncertainties {
    std::array<double, 4> n{};        // sqrt(N) for ++, +-, -+, --
    std::array<double, 4> singles{};  // sqrt(S) for A+, A-, B+, B-
    FRatios f;
    ProbTable joint;
    Marginals marginals;
    Marginals marginals_standard;
    double correlation_standard = 0;
    double correlation_singles = 0;
    /// sigma of correlation_standard - correlation_singles on the same block.
    double correlation_difference = 0;
    bool low_count = false;
};

Uncertainties counting_uncertainties(const BlockCounts &counts);

struct EstimateSet {
    ProbTable joint;
    Marginals marginals;
    double correlation_standard = 0;  // NaN without coincidences
    double correlation_singles = 0;
    Uncertainties sigma;
    bool low_statistics = false;
};

/// Full singles-normalized estimate of one block. Throws ZeroSingles or
/// AllZeroRatios when the block carries no usable information.
EstimateSet estimate(const BlockCounts &counts);

// Scan fits.

enum class FitModel { Constant, Linear, Cosine };
const char *to_string(FitModel m);

struct FitReport {
    FitModel model = FitModel::Constant;
    /// Constant: {c0}. Linear: {c0, c1}. Cosine: {c0, a, b} for
    /// c0 + a cos 2x + b sin 2x, equivalently c0 + A cos(2x + phase).
    std::vector<double> params;
    std::vector<double> param_sigma;
    double chi2 = 0;
    int dof = 0;
    /// F-test of this model against Constant; NaN for the Constant model.
    double f_stat = 0;
    double p_value = 0;
    /// Set when both chi-squares vanish and the F ratio is 0/0.
    bool degenerate = false;
    double amplitude = 0;
    double amplitude_sigma = 0;
    double phase = 0;

    /// amplitude / amplitude_sigma, Cosine only.
    double amplitude_significance() const;
};

/// Weighted least squares of y(x) with weights 1/sigma^2. x in radians.
FitReport fit_model(FitModel model, std::span<const double> x, std::span<const double> y,
                    std::span<const double> sigma);

/// F-test p-value of `richer` against `constant`; fills f_stat and p_value.
void compare_to_constant(const FitReport &constant, FitReport &richer);

struct ScanPoint {
    double alpha = 0;
    double beta = 0;
    BlockCounts counts;
    EstimateSet est;
};

struct ScanResult {
    std::vector<ScanPoint> points;
};

enum class VariedSetting { Alpha, Beta };

struct MarginalFits {
    MarginalSum which = MarginalSum::AlicePlus;
    FitReport constant;
    FitReport linear;
    FitReport cosine;
};

struct NoSignallingReport {
    VariedSetting varied = VariedSetting::Alpha;
    double alpha_level = 0.01;
    size_t n_points = 0;
    std::array<MarginalFits, 4> fits;
    /// The station whose setting is held fixed.
    Station distant = Station::Bob;
    /// True iff no distant marginal prefers Cosine over Constant at
    /// p < alpha_level.
    bool distant_consistent = true;
    /// Smallest Cosine-vs-Constant p-value among the distant marginals, and
    /// the amplitude and significance of that fit.
    double distant_p_value = 1;
    double distant_amplitude = 0;
    double distant_significance = 0;
};

inline constexpr size_t kMinScanPoints = 5;

/// Fits Constant, Linear and Cosine models to each singles-normalized
/// marginal versus the varied angle and tests the distant station's
/// marginals for dependence on it.
NoSignallingReport nosignalling_stats(const ScanResult &scan, VariedSetting varied, double alpha_level = 0.01);

}  // namespace fairsample

#endif

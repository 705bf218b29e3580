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

#ifndef FAIRSAMPLE_PIPELINE_H
#define FAIRSAMPLE_PIPELINE_H

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fairsample/detection_model.h"
#include "fairsample/estimator.h"
#include "fairsample/quantum_model.h"
#include "fairsample/timetag.h"

namespace fairsample::pipeline {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char *kOutputDirEnv = "FAIRSAMPLE_OUTPUT_DIR";

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitStats = 4;

/// Invalid run configuration; `field()` is the dotted path, e.g. "source.p".
class ConfigError : public std::runtime_error {
   public:
    ConfigError(std::string field, const std::string &what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {
    }
    const std::string &field() const {
        return field_;
    }

   private:
    std::string field_;
};

/// Missing, unreadable or corrupt on-disk artifacts.
class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct ScanSpec {
    Station varied = Station::Alice;
    std::vector<double> angles_deg;
    double fixed_deg = 0;
};

struct RunConfig {
    SourceState source;
    EfficiencyConfig efficiencies;
    SamplingPolicy policy;
    ScanSpec scan;
    uint64_t pairs_per_point = 0;
    StreamParams stream;
    /// Suggested coincidence window, used by analyze when --window is absent.
    std::optional<uint64_t> window_ticks;
    uint64_t seed = 0;
    /// Empty means: $FAIRSAMPLE_OUTPUT_DIR, else ./fairsample-out.
    std::filesystem::path output_dir;
    bool write_csv = false;

    /// (alpha, beta) in radians of scan point i.
    SettingsPair settings(size_t i) const;
};

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path &path);
std::filesystem::path resolve_output_dir(const RunConfig &config);

/// Writes one Alice/Bob TTG1 pair per scan point, then manifest.json.
/// Returns the manifest path.
std::filesystem::path simulate_run(const RunConfig &config, const std::filesystem::path &output_dir);

struct AnalyzeOptions {
    std::optional<uint64_t> window_ticks;
    double alpha_level = 0.01;
    /// Empty means <manifest directory>/analysis.
    std::filesystem::path output_dir;
};

struct PointAnalysis {
    double alpha = 0;
    double beta = 0;
    BlockCounts counts;
    std::optional<EstimateSet> est;
    Marginals evenodd;  // NaN without coincidences
    Uncertainties sigma;
    std::string error;
};

struct AnalyzeResult {
    std::filesystem::path output_dir;
    std::vector<PointAnalysis> points;
    std::optional<NoSignallingReport> nosignalling;
    /// Why the fit step did not run, when it did not.
    std::string fit_note;
    bool degenerate = false;
};

/// Counts coincidences per point, runs the estimators, and writes
/// counts.csv, correlation.csv, evenodd_standard.csv, marginals_singles.csv,
/// nosignalling.json and analysis.json.
AnalyzeResult analyze_run(const std::filesystem::path &manifest_path, const AnalyzeOptions &options);

/// Renders summary.md for an analysis directory and returns its text.
std::string report(const std::filesystem::path &analysis_dir);

}  // namespace fairsample::pipeline

#endif

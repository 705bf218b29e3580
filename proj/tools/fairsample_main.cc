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


#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "fairsample/coincidence.h"
#include "fairsample/pipeline.h"

namespace pl = fairsample::pipeline;

namespace {

int run_simulate(const std::string &config_path, const std::string &out) {
    const pl::RunConfig config = pl::load_config(config_path);
    const std::filesystem::path dir = out.empty() ? pl::resolve_output_dir(config) : std::filesystem::path(out);
    const auto manifest = pl::simulate_run(config, dir);
    std::cout << "wrote " << config.scan.angles_deg.size() << " scan points; manifest: " << manifest.string() << "\n";
    return pl::kExitOk;
}

int run_analyze(const std::string &manifest, const std::optional<uint64_t> &window, double alpha_level,
                const std::string &out) {
    pl::AnalyzeOptions opt;
    opt.window_ticks = window;
    opt.alpha_level = alpha_level;
    opt.output_dir = out;
    const pl::AnalyzeResult r = pl::analyze_run(manifest, opt);
    size_t failed = 0;
    for (const auto &p : r.points) {
        if (!p.error.empty()) {
            std::cerr << "warning: point at alpha=" << fairsample::rad_to_deg(p.alpha)
                      << " beta=" << fairsample::rad_to_deg(p.beta) << ": " << p.error << "\n";
            failed++;
        }
    }
    std::cout << "analyzed " << r.points.size() << " points (" << failed << " without estimates) into "
              << r.output_dir.string() << "\n";
    if (r.nosignalling) {
        std::cout << "no-signalling (" << fairsample::to_string(r.nosignalling->distant)
                  << "): " << (r.nosignalling->distant_consistent ? "consistent" : "violated")
                  << ", p = " << r.nosignalling->distant_p_value << "\n";
    } else {
        std::cout << "fit " << r.fit_note << "\n";
    }
    return r.degenerate ? pl::kExitStats : pl::kExitOk;
}

int run_report(const std::string &dir) {
    std::cout << pl::report(dir);
    return pl::kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Fair-sampling test simulator and analyzer for photon-pair experiments"};
    app.require_subcommand(1);

    std::string config_path, sim_out;
    auto *sim = app.add_subcommand("simulate", "Simulate a setting scan and write TTG1 time-tag files");
    sim->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "Output directory (default: config output_dir, $FAIRSAMPLE_OUTPUT_DIR, "
                                      "or ./fairsample-out)");

    std::string manifest, ana_out;
    std::optional<uint64_t> window;
    double alpha_level = 0.01;
    auto *ana = app.add_subcommand("analyze", "Count coincidences and run the estimators and no-signalling fits");
    ana->add_option("--manifest", manifest, "manifest.json written by simulate")->required();
    ana->add_option("--window", window, "Coincidence window in ticks (inclusive)");
    ana->add_option("--alpha-level", alpha_level, "Significance level of the no-signalling test")
        ->check(CLI::Range(0.0, 1.0));
    ana->add_option("--out", ana_out, "Analysis directory (default: <manifest dir>/analysis)");

    std::string report_dir;
    auto *rep = app.add_subcommand("report", "Write summary.md for an analysis directory");
    rep->add_option("--dir", report_dir, "Analysis directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? pl::kExitOk : pl::kExitConfig;
    }

    try {
        if (*sim) {
            return run_simulate(config_path, sim_out);
        }
        if (*ana) {
            return run_analyze(manifest, window, alpha_level, ana_out);
        }
        return run_report(report_dir);
    } catch (const pl::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return pl::kExitConfig;
    } catch (const pl::DataError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return pl::kExitData;
    } catch (const fairsample::TtgError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return pl::kExitData;
    } catch (const fairsample::EstimatorError &e) {
        std::cerr << "statistics error: " << e.what() << "\n";
        return pl::kExitStats;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return pl::kExitData;
    }
}

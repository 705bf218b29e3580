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

#include "fairsample/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <thread>

#include "fairsample/coincidence.h"
#include "fairsample/rng.h"
#include "json.hpp"

namespace fairsample::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(0..n-1) on a small worker pool. Results must be written to
// per-index slots; the first failing index (lowest, not first in time) is
// rethrown so that errors are deterministic too.
template <typename F>
void parallel_for(size_t n, F &&fn) {
    const size_t workers = std::min<size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; i++) {
            fn(i);
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::jthread> pool;
    for (size_t w = 0; w < workers; w++) {
        pool.emplace_back([&] {
            for (size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string num(double x) {
    if (!std::isfinite(x)) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json num_or_null(double x) {
    return std::isfinite(x) ? json(x) : json(nullptr);
}

// ---- config parsing -------------------------------------------------------

std::string join(const std::string &path, const std::string &key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const json &obj, const std::string &path, std::initializer_list<const char *> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    }
    for (const auto &[key, value] : obj.items()) {
        bool ok = false;
        for (const char *a : allowed) {
            ok |= key == a;
        }
        if (!ok) {
            throw ConfigError(join(path, key), "unknown field");
        }
    }
}

const json &field(const json &obj, const std::string &path, const char *key) {
    if (!obj.contains(key)) {
        throw ConfigError(join(path, key), "required field is missing");
    }
    return obj.at(key);
}

double get_number(const json &obj, const std::string &path, const char *key) {
    const json &v = field(obj, path, key);
    if (!v.is_number()) {
        throw ConfigError(join(path, key), "expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ConfigError(join(path, key), "expected a finite number");
    }
    return x;
}

double get_number_or(const json &obj, const std::string &path, const char *key, double fallback) {
    return obj.contains(key) ? get_number(obj, path, key) : fallback;
}

uint64_t get_count(const json &obj, const std::string &path, const char *key) {
    const json &v = field(obj, path, key);
    if (v.is_number_unsigned()) {
        return v.get<uint64_t>();
    }
    if (v.is_number_integer() && v.get<int64_t>() >= 0) {
        return static_cast<uint64_t>(v.get<int64_t>());
    }
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 0 && x == std::floor(x) && x < 1.8e19) {
            return static_cast<uint64_t>(x);
        }
    }
    throw ConfigError(join(path, key), "expected a non-negative integer");
}

std::string get_string(const json &obj, const std::string &path, const char *key) {
    const json &v = field(obj, path, key);
    if (!v.is_string()) {
        throw ConfigError(join(path, key), "expected a string");
    }
    return v.get<std::string>();
}

Station parse_station(const std::string &s, const std::string &path) {
    if (s == "alice") {
        return Station::Alice;
    }
    if (s == "bob") {
        return Station::Bob;
    }
    throw ConfigError(path, "expected \"alice\" or \"bob\", got \"" + s + "\"");
}

double probability_in(double x, double lo, bool lo_open, const std::string &path) {
    const bool ok = (lo_open ? x > lo : x >= lo) && x <= 1.0;
    if (!ok) {
        throw ConfigError(path, std::string("must lie in ") + (lo_open ? "(" : "[") + num(lo) + ", 1], got " + num(x));
    }
    return x;
}

std::vector<double> parse_angles(const json &v, const std::string &path) {
    std::vector<double> angles;
    if (v.is_array()) {
        for (size_t i = 0; i < v.size(); i++) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
            }
            angles.push_back(v[i].get<double>());
        }
    } else if (v.is_object()) {
        check_keys(v, path, {"start", "stop", "count"});
        const double start = get_number(v, path, "start");
        const double stop = get_number(v, path, "stop");
        const uint64_t count = get_count(v, path, "count");
        if (count == 1) {
            angles.push_back(start);
        } else {
            for (uint64_t i = 0; i < count; i++) {
                angles.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
            }
        }
    } else {
        throw ConfigError(path, "expected an array of angles or {start, stop, count}");
    }
    if (angles.empty()) {
        throw ConfigError(path, "angle list is empty");
    }
    for (size_t i = 1; i < angles.size(); i++) {
        if (!(angles[i] > angles[i - 1])) {
            throw ConfigError(path, "angles must be strictly increasing");
        }
    }
    return angles;
}

json config_to_json(const RunConfig &c) {
    json policy = {{"kind", c.policy.kind == SamplingPolicy::Kind::Fair ? "fair" : "unfair_malus"}};
    if (c.policy.kind == SamplingPolicy::Kind::UnfairMalus) {
        policy["d"] = c.policy.d;
    }
    json j = {
        {"schema_version", kSchemaVersion},
        {"source", {{"p", c.source.p()}}},
        {"efficiencies",
         {{"a_plus", c.efficiencies.a_plus},
          {"a_minus", c.efficiencies.a_minus},
          {"b_plus", c.efficiencies.b_plus},
          {"b_minus", c.efficiencies.b_minus}}},
        {"policy", policy},
        {"scan",
         {{"varied", to_string(c.scan.varied)}, {"angles_deg", c.scan.angles_deg}, {"fixed_deg", c.scan.fixed_deg}}},
        {"pairs_per_point", c.pairs_per_point},
        {"pair_rate_hz", c.stream.pair_rate_hz},
        {"tick_ps", c.stream.tick_ps},
        {"jitter_sd_ticks", c.stream.jitter_sd_ticks},
        {"dark_rates_hz",
         {{"a_plus", c.stream.dark.a_plus},
          {"a_minus", c.stream.dark.a_minus},
          {"b_plus", c.stream.dark.b_plus},
          {"b_minus", c.stream.dark.b_minus}}},
        {"seed", c.seed},
        {"write_csv", c.write_csv},
    };
    if (c.window_ticks) {
        j["window_ticks"] = *c.window_ticks;
    }
    if (!c.output_dir.empty()) {
        j["output_dir"] = c.output_dir.string();
    }
    return j;
}

json counts_to_json(const BlockCounts &c) {
    return {{"n_pp", c.n_pp},         {"n_pm", c.n_pm},          {"n_mp", c.n_mp},
            {"n_mm", c.n_mm},         {"s_a_plus", c.s_a_plus},  {"s_a_minus", c.s_a_minus},
            {"s_b_plus", c.s_b_plus}, {"s_b_minus", c.s_b_minus}};
}

json marginals_to_json(const Marginals &m) {
    return {{"a_plus", num_or_null(m.a_plus)},
            {"a_minus", num_or_null(m.a_minus)},
            {"b_plus", num_or_null(m.b_plus)},
            {"b_minus", num_or_null(m.b_minus)}};
}

json fit_to_json(const FitReport &f) {
    json j = {{"model", to_string(f.model)}, {"params", f.params}, {"param_sigma", f.param_sigma},
              {"chi2", f.chi2},              {"dof", f.dof}};
    if (f.model != FitModel::Constant) {
        j["f_stat"] = std::isinf(f.f_stat) ? json("inf") : num_or_null(f.f_stat);
        j["p_value"] = num_or_null(f.p_value);
        j["degenerate"] = f.degenerate;
    }
    if (f.model == FitModel::Cosine) {
        j["amplitude"] = f.amplitude;
        j["amplitude_sigma"] = f.amplitude_sigma;
        j["amplitude_significance"] = num_or_null(f.amplitude_significance());
        j["phase_deg"] = rad_to_deg(f.phase);
    }
    return j;
}

json nosignalling_to_json(const NoSignallingReport &r) {
    json fits = json::object();
    for (const auto &mf : r.fits) {
        fits[to_string(mf.which)] = {
            {"constant", fit_to_json(mf.constant)},
            {"linear", fit_to_json(mf.linear)},
            {"cosine", fit_to_json(mf.cosine)},
            {"cosine_significant", mf.cosine.p_value < r.alpha_level},
        };
    }
    return {
        {"varied", r.varied == VariedSetting::Alpha ? "alice" : "bob"},
        {"distant_station", to_string(r.distant)},
        {"alpha_level", r.alpha_level},
        {"n_points", r.n_points},
        {"fits", fits},
        {"verdict", r.distant_consistent ? "consistent" : "violated"},
        {"distant_p_value", r.distant_p_value},
        {"distant_amplitude", r.distant_amplitude},
        {"distant_significance", num_or_null(r.distant_significance)},
    };
}

json read_json_file(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_text_atomically(const fs::path &path, const std::string &text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            throw DataError("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

char point_name_buf[64];

std::string point_file(size_t i, Station st) {
    std::snprintf(point_name_buf, sizeof point_name_buf, "point_%03zu_%s.ttg", i, to_string(st));
    return point_name_buf;
}

}  // namespace

// ---- configuration ------------------------------------------------------------

SettingsPair RunConfig::settings(size_t i) const {
    const double varied = deg_to_rad(scan.angles_deg.at(i));
    const double fixed = deg_to_rad(scan.fixed_deg);
    return scan.varied == Station::Alice ? SettingsPair{varied, fixed} : SettingsPair{fixed, varied};
}

RunConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
    check_keys(root, "",
               {"schema_version", "source", "efficiencies", "policy", "scan", "pairs_per_point", "pair_rate_hz",
                "tick_ps", "jitter_sd_ticks", "window_ticks", "dark_rates_hz", "seed", "output_dir", "write_csv"});

    RunConfig c;
    if (root.contains("schema_version") && get_count(root, "", "schema_version") != kSchemaVersion) {
        throw ConfigError("schema_version", "unsupported schema version");
    }

    const json &source = field(root, "", "source");
    check_keys(source, "source", {"p"});
    c.source = SourceState(probability_in(get_number(source, "source", "p"), 0.0, false, "source.p"));

    const json &eff = field(root, "", "efficiencies");
    check_keys(eff, "efficiencies", {"a_plus", "a_minus", "b_plus", "b_minus"});
    const auto channel = [&](const char *key) {
        return probability_in(get_number(eff, "efficiencies", key), 0.0, true, join("efficiencies", key));
    };
    c.efficiencies = {channel("a_plus"), channel("a_minus"), channel("b_plus"), channel("b_minus")};

    if (root.contains("policy")) {
        const json &policy = root.at("policy");
        check_keys(policy, "policy", {"kind", "d"});
        const std::string kind = get_string(policy, "policy", "kind");
        if (kind == "fair") {
            c.policy = SamplingPolicy::fair();
        } else if (kind == "unfair_malus") {
            c.policy.kind = SamplingPolicy::Kind::UnfairMalus;
            c.policy.d = probability_in(get_number(policy, "policy", "d"), 0.0, false, "policy.d");
        } else {
            throw ConfigError("policy.kind", "expected \"fair\" or \"unfair_malus\", got \"" + kind + "\"");
        }
    }

    const json &scan = field(root, "", "scan");
    check_keys(scan, "scan", {"varied", "angles_deg", "fixed_deg"});
    c.scan.varied = parse_station(get_string(scan, "scan", "varied"), "scan.varied");
    c.scan.angles_deg = parse_angles(field(scan, "scan", "angles_deg"), "scan.angles_deg");
    c.scan.fixed_deg = get_number_or(scan, "scan", "fixed_deg", 0.0);

    c.pairs_per_point = get_count(root, "", "pairs_per_point");
    c.stream.pair_rate_hz = get_number_or(root, "", "pair_rate_hz", 1e4);
    if (!(c.stream.pair_rate_hz > 0)) {
        throw ConfigError("pair_rate_hz", "must be positive");
    }
    c.stream.tick_ps = root.contains("tick_ps") ? get_count(root, "", "tick_ps") : 100;
    if (c.stream.tick_ps == 0) {
        throw ConfigError("tick_ps", "must be positive");
    }
    c.stream.jitter_sd_ticks = get_number_or(root, "", "jitter_sd_ticks", 0.0);
    if (!(c.stream.jitter_sd_ticks >= 0)) {
        throw ConfigError("jitter_sd_ticks", "must be non-negative");
    }
    if (root.contains("window_ticks")) {
        c.window_ticks = get_count(root, "", "window_ticks");
    }
    if (root.contains("dark_rates_hz")) {
        const json &dark = root.at("dark_rates_hz");
        check_keys(dark, "dark_rates_hz", {"a_plus", "a_minus", "b_plus", "b_minus"});
        const auto rate = [&](const char *key) {
            const double r = get_number_or(dark, "dark_rates_hz", key, 0.0);
            if (r < 0) {
                throw ConfigError(join("dark_rates_hz", key), "must be non-negative");
            }
            return r;
        };
        c.stream.dark = {rate("a_plus"), rate("a_minus"), rate("b_plus"), rate("b_minus")};
    }
    c.seed = get_count(root, "", "seed");
    if (root.contains("output_dir")) {
        c.output_dir = get_string(root, "", "output_dir");
    }
    if (root.contains("write_csv")) {
        if (!root.at("write_csv").is_boolean()) {
            throw ConfigError("write_csv", "expected true or false");
        }
        c.write_csv = root.at("write_csv").get<bool>();
    }
    return c;
}

RunConfig load_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("<file>", "cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

fs::path resolve_output_dir(const RunConfig &config) {
    if (!config.output_dir.empty()) {
        return config.output_dir;
    }
    if (const char *env = std::getenv(kOutputDirEnv); env && *env) {
        return env;
    }
    return "fairsample-out";
}

// ---- simulate -------------------------------------------------------------

fs::path simulate_run(const RunConfig &config, const fs::path &output_dir) {
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec) {
        throw DataError("cannot create " + output_dir.string() + ": " + ec.message());
    }
    const size_t n_points = config.scan.angles_deg.size();
    std::vector<BlockCounts> truth(n_points);
    std::vector<std::array<uint64_t, 2>> event_counts(n_points);

    parallel_for(n_points, [&](size_t i) {
        const SettingsPair s = config.settings(i);
        const PairDetections det =
            simulate_block_events(config.source, config.efficiencies, config.policy, s, config.pairs_per_point,
                                  derive_seed(config.seed, i, SeedPurpose::Block));
        truth[i] = counts_from_detections(det);
        const auto [a, b] = generate_streams(det, config.stream, derive_seed(config.seed, i, SeedPurpose::Timing));
        write_ttg_file(a, output_dir / point_file(i, Station::Alice));
        write_ttg_file(b, output_dir / point_file(i, Station::Bob));
        if (config.write_csv) {
            for (const EventStream *st : {&a, &b}) {
                fs::path p = output_dir / point_file(i, st->station);
                p.replace_extension(".csv");
                std::ofstream out(p);
                write_csv(*st, out);
            }
        }
        event_counts[i] = {a.events.size(), b.events.size()};
    });

    json points = json::array();
    for (size_t i = 0; i < n_points; i++) {
        const SettingsPair s = config.settings(i);
        points.push_back({
            {"index", i},
            {"alpha_deg", rad_to_deg(s.alpha)},
            {"beta_deg", rad_to_deg(s.beta)},
            {"alice_file", point_file(i, Station::Alice)},
            {"bob_file", point_file(i, Station::Bob)},
            {"setting_index_alice", config.stream.setting_index_a},
            {"setting_index_bob", config.stream.setting_index_b},
            {"n_pairs_emitted", config.pairs_per_point},
            {"alice_events", event_counts[i][0]},
            {"bob_events", event_counts[i][1]},
            {"true_counts", counts_to_json(truth[i])},
        });
    }
    const json manifest = {
        {"schema_version", kSchemaVersion},
        {"kind", "fairsample.manifest"},
        {"format", {{"name", "TTG1"}, {"version", kTtgVersion}}},
        {"rng", {{"algorithm", kRngAlgorithm}, {"seed", config.seed}}},
        {"tick_ps", config.stream.tick_ps},
        {"scan", {{"varied", to_string(config.scan.varied)}, {"fixed_deg", config.scan.fixed_deg}}},
        {"config", config_to_json(config)},
        {"points", points},
    };
    // Written last: its presence marks a complete run.
    const fs::path manifest_path = output_dir / "manifest.json";
    write_text_atomically(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

// ---- analyze ----------------------------------------------------------------

namespace {

double manifest_number(const json &point, const char *key, size_t i) {
    if (!point.contains(key) || !point.at(key).is_number()) {
        throw DataError("manifest point " + std::to_string(i) + ": missing numeric field \"" + key + "\"");
    }
    return point.at(key).get<double>();
}

std::string manifest_string(const json &point, const char *key, size_t i) {
    if (!point.contains(key) || !point.at(key).is_string()) {
        throw DataError("manifest point " + std::to_string(i) + ": missing field \"" + key + "\"");
    }
    return point.at(key).get<std::string>();
}

std::optional<VariedSetting> infer_varied(const json &manifest, const std::vector<PointAnalysis> &pts) {
    if (manifest.contains("scan") && manifest["scan"].contains("varied") && manifest["scan"]["varied"].is_string()) {
        const std::string v = manifest["scan"]["varied"].get<std::string>();
        if (v == "alice") {
            return VariedSetting::Alpha;
        }
        if (v == "bob") {
            return VariedSetting::Beta;
        }
    }
    if (pts.size() < 2) {
        return std::nullopt;
    }
    bool alpha_same = true;
    bool beta_same = true;
    for (const auto &p : pts) {
        alpha_same &= std::abs(p.alpha - pts.front().alpha) < 1e-12;
        beta_same &= std::abs(p.beta - pts.front().beta) < 1e-12;
    }
    if (beta_same && !alpha_same) {
        return VariedSetting::Alpha;
    }
    if (alpha_same && !beta_same) {
        return VariedSetting::Beta;
    }
    return std::nullopt;
}

}  // namespace

AnalyzeResult analyze_run(const fs::path &manifest_path, const AnalyzeOptions &options) {
    const json manifest = read_json_file(manifest_path);
    if (!manifest.contains("points") || !manifest["points"].is_array()) {
        throw DataError(manifest_path.string() + ": no \"points\" array");
    }
    std::optional<double> source_p;
    if (manifest.contains("config") && manifest["config"].contains("source") &&
        manifest["config"]["source"].contains("p") && manifest["config"]["source"]["p"].is_number()) {
        source_p = manifest["config"]["source"]["p"].get<double>();
    }
    std::optional<uint64_t> window = options.window_ticks;
    if (!window && manifest.contains("config") && manifest["config"].contains("window_ticks") &&
        manifest["config"]["window_ticks"].is_number_unsigned()) {
        window = manifest["config"]["window_ticks"].get<uint64_t>();
    }
    if (!window) {
        throw ConfigError("window", "no coincidence window given and none recorded in the manifest");
    }
    if (!(options.alpha_level > 0 && options.alpha_level < 1)) {
        throw ConfigError("alpha-level", "must lie in (0, 1)");
    }

    const fs::path base = manifest_path.parent_path();
    const json &mpoints = manifest["points"];
    const size_t n = mpoints.size();

    AnalyzeResult result;
    result.output_dir = options.output_dir.empty() ? base / "analysis" : options.output_dir;
    result.points.resize(n);

    parallel_for(n, [&](size_t i) {
        const json &mp = mpoints[i];
        PointAnalysis &pa = result.points[i];
        pa.alpha = deg_to_rad(manifest_number(mp, "alpha_deg", i));
        pa.beta = deg_to_rad(manifest_number(mp, "beta_deg", i));
        const fs::path fa = base / manifest_string(mp, "alice_file", i);
        const fs::path fb = base / manifest_string(mp, "bob_file", i);
        EventStream a, b;
        try {
            a = read_ttg_file(fa);
            b = read_ttg_file(fb);
        } catch (const TtgError &e) {
            throw DataError("point " + std::to_string(i) + ": " + e.what());
        }
        std::optional<SettingsFilter> filter;
        if (mp.contains("setting_index_alice") && mp.contains("setting_index_bob")) {
            filter = SettingsFilter{mp["setting_index_alice"].get<uint8_t>(), mp["setting_index_bob"].get<uint8_t>()};
        }
        try {
            pa.counts = count_coincidences(a, b, CoincidenceWindow{*window}, filter);
        } catch (const CoincidenceError &e) {
            throw DataError("point " + std::to_string(i) + ": " + e.what());
        }
        pa.counts.alpha = pa.alpha;
        pa.counts.beta = pa.beta;
        if (mp.contains("n_pairs_emitted") && mp["n_pairs_emitted"].is_number_unsigned()) {
            pa.counts.n_pairs_emitted = mp["n_pairs_emitted"].get<uint64_t>();
        }
        pa.sigma = counting_uncertainties(pa.counts);
        pa.evenodd = pa.counts.coincidences() > 0 ? evenodd_sums_standard(pa.counts) : Marginals{kNaN, kNaN, kNaN, kNaN};
        try {
            pa.est = estimate(pa.counts);
        } catch (const EstimatorError &e) {
            pa.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
    });

    // Fit step.
    const auto varied = infer_varied(manifest, result.points);
    ScanResult scan;
    for (const auto &p : result.points) {
        if (p.est) {
            scan.points.push_back({p.alpha, p.beta, p.counts, *p.est});
        }
    }
    if (!varied) {
        result.fit_note = "skipped: cannot tell which setting the scan varies";
    } else if (scan.points.size() < kMinScanPoints) {
        result.fit_note = "skipped: insufficient points (" + std::to_string(scan.points.size()) +
                          " usable, need " + std::to_string(kMinScanPoints) + ")";
    } else {
        try {
            result.nosignalling = nosignalling_stats(scan, *varied, options.alpha_level);
        } catch (const EstimatorError &e) {
            result.fit_note = std::string("skipped: ") + to_string(e.kind()) + ": " + e.what();
            result.degenerate = e.kind() == EstimatorError::Kind::DegenerateWeights;
        }
    }

    // Outputs.
    std::error_code ec;
    fs::create_directories(result.output_dir, ec);
    if (ec) {
        throw DataError("cannot create " + result.output_dir.string() + ": " + ec.message());
    }
    std::ostringstream counts_csv, corr_csv, evenodd_csv, marg_csv;
    counts_csv << "point,alpha_deg,beta_deg,n_pp,n_pm,n_mp,n_mm,s_a_plus,s_a_minus,s_b_plus,s_b_minus,"
                  "n_pairs_emitted,low_statistics\n";
    corr_csv << "point,alpha_deg,beta_deg,e_standard,e_standard_sigma,e_singles,e_singles_sigma,e_theory\n";
    evenodd_csv << "point,alpha_deg,beta_deg,a_plus,a_plus_sigma,a_minus,a_minus_sigma,b_plus,b_plus_sigma,b_minus,"
                   "b_minus_sigma\n";
    marg_csv << "point,alpha_deg,beta_deg,a_plus,a_plus_sigma,a_minus,a_minus_sigma,b_plus,b_plus_sigma,b_minus,"
                "b_minus_sigma,p_pp,p_pm,p_mp,p_mm,a_plus_theory,b_plus_theory,low_statistics,error\n";

    json jpoints = json::array();
    for (size_t i = 0; i < n; i++) {
        const PointAnalysis &p = result.points[i];
        const BlockCounts &c = p.counts;
        const std::string head = std::to_string(i) + "," + num(rad_to_deg(p.alpha)) + "," + num(rad_to_deg(p.beta));
        const SettingsPair s{p.alpha, p.beta};
        const double e_std = c.coincidences() > 0 ? correlation_standard(c) : kNaN;
        const double e_sn = p.est ? p.est->correlation_singles : kNaN;
        const double e_th = source_p ? correlation_qt(SourceState(*source_p), s) : kNaN;
        const Marginals m = p.est ? p.est->marginals : Marginals{kNaN, kNaN, kNaN, kNaN};
        const ProbTable j = p.est ? p.est->joint : ProbTable{kNaN, kNaN, kNaN, kNaN};
        Marginals m_th{kNaN, kNaN, kNaN, kNaN};
        if (source_p) {
            const SourceState st(*source_p);
            m_th = {marginal(st, Station::Alice, Outcome::Plus, s), marginal(st, Station::Alice, Outcome::Minus, s),
                    marginal(st, Station::Bob, Outcome::Plus, s), marginal(st, Station::Bob, Outcome::Minus, s)};
        }

        counts_csv << head << ',' << c.n_pp << ',' << c.n_pm << ',' << c.n_mp << ',' << c.n_mm << ',' << c.s_a_plus
                   << ',' << c.s_a_minus << ',' << c.s_b_plus << ',' << c.s_b_minus << ',' << c.n_pairs_emitted << ','
                   << (p.sigma.low_count ? 1 : 0) << '\n';
        corr_csv << head << ',' << num(e_std) << ',' << num(p.sigma.correlation_standard) << ',' << num(e_sn) << ','
                 << num(p.sigma.correlation_singles) << ',' << num(e_th) << '\n';
        evenodd_csv << head;
        for (MarginalSum w : kMarginalSums) {
            evenodd_csv << ',' << num(p.evenodd.at(w)) << ',' << num(p.sigma.marginals_standard.at(w));
        }
        evenodd_csv << '\n';
        marg_csv << head;
        for (MarginalSum w : kMarginalSums) {
            marg_csv << ',' << num(m.at(w)) << ',' << num(p.sigma.marginals.at(w));
        }
        marg_csv << ',' << num(j.pp) << ',' << num(j.pm) << ',' << num(j.mp) << ',' << num(j.mm) << ','
                 << num(m_th.a_plus) << ',' << num(m_th.b_plus) << ',' << (p.sigma.low_count ? 1 : 0) << ','
                 << p.error << '\n';

        jpoints.push_back({
            {"index", i},
            {"alpha_deg", rad_to_deg(p.alpha)},
            {"beta_deg", rad_to_deg(p.beta)},
            {"counts", counts_to_json(c)},
            {"coincidences", c.coincidences()},
            {"e_standard", num_or_null(e_std)},
            {"e_standard_sigma", num_or_null(p.sigma.correlation_standard)},
            {"e_singles", num_or_null(e_sn)},
            {"e_singles_sigma", num_or_null(p.sigma.correlation_singles)},
            {"e_theory", num_or_null(e_th)},
            {"marginals", marginals_to_json(m)},
            {"marginals_sigma", marginals_to_json(p.sigma.marginals)},
            {"evenodd_standard", marginals_to_json(p.evenodd)},
            {"low_statistics", p.sigma.low_count},
            {"error", p.error},
        });
    }

    const json fit = result.nosignalling ? nosignalling_to_json(*result.nosignalling)
                                         : json{{"skipped", result.fit_note}};
    json varied_json = nullptr;
    if (varied) {
        varied_json = *varied == VariedSetting::Alpha ? "alice" : "bob";
    }
    const json analysis = {
        {"schema_version", kSchemaVersion},
        {"kind", "fairsample.analysis"},
        {"manifest", fs::absolute(manifest_path).lexically_normal().string()},
        {"window_ticks", *window},
        {"alpha_level", options.alpha_level},
        {"source_p", source_p ? json(*source_p) : json(nullptr)},
        {"varied", varied_json},
        {"points", jpoints},
        {"nosignalling", fit},
    };

    write_text_atomically(result.output_dir / "counts.csv", counts_csv.str());
    write_text_atomically(result.output_dir / "correlation.csv", corr_csv.str());
    write_text_atomically(result.output_dir / "evenodd_standard.csv", evenodd_csv.str());
    write_text_atomically(result.output_dir / "marginals_singles.csv", marg_csv.str());
    write_text_atomically(result.output_dir / "nosignalling.json", fit.dump(2) + "\n");
    write_text_atomically(result.output_dir / "analysis.json", analysis.dump(2) + "\n");
    return result;
}

// ---- report -----------------------------------------------------------------

namespace {

double json_double(const json &j, const char *key) {
    return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : kNaN;
}

bool same_angle_deg(double x, double y) {
    const double d = std::remainder(x - y, 180.0);
    return std::abs(d) < 1e-6;
}

std::optional<double> lookup_e(const json &points, double a, double b, const char *key) {
    for (const auto &p : points) {
        if (same_angle_deg(json_double(p, "alpha_deg"), a) && same_angle_deg(json_double(p, "beta_deg"), b)) {
            const double e = json_double(p, key);
            if (std::isfinite(e)) {
                return e;
            }
        }
    }
    return std::nullopt;
}

std::string fixed(double x, int digits) {
    if (!std::isfinite(x)) {
        return "n/a";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string sci(double x) {
    if (std::isnan(x)) {
        return "n/a";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

}  // namespace

std::string report(const fs::path &analysis_dir) {
    const fs::path analysis_path = analysis_dir / "analysis.json";
    if (!fs::exists(analysis_path)) {
        throw DataError("no analysis artifacts found in " + analysis_dir.string());
    }
    const json a = read_json_file(analysis_path);
    const json &points = a.at("points");
    const json &ns = a.at("nosignalling");
    const double alpha_level = json_double(a, "alpha_level");
    const bool has_theory = a.contains("source_p") && a["source_p"].is_number();

    std::ostringstream out;
    out << "# fairsample analysis summary\n\n";
    out << "- manifest: `" << a.value("manifest", std::string("?")) << "`\n";
    out << "- scan points: " << points.size() << ", coincidence window: " << a.value("window_ticks", 0) << " ticks\n";
    if (has_theory) {
        out << "- source parameter p = " << num(a["source_p"].get<double>()) << "\n";
    }
    out << "\n## Correlation function\n\n";
    if (has_theory) {
        double ss_std = 0, ss_sn = 0, max_std = 0, max_sn = 0;
        size_t n_std = 0, n_sn = 0;
        for (const auto &p : points) {
            const double th = json_double(p, "e_theory");
            const double es = json_double(p, "e_standard");
            const double en = json_double(p, "e_singles");
            if (std::isfinite(th) && std::isfinite(es)) {
                ss_std += (es - th) * (es - th);
                max_std = std::max(max_std, std::abs(es - th));
                n_std++;
            }
            if (std::isfinite(th) && std::isfinite(en)) {
                ss_sn += (en - th) * (en - th);
                max_sn = std::max(max_sn, std::abs(en - th));
                n_sn++;
            }
        }
        out << "| normalization | points | RMS deviation from theory | max abs deviation |\n";
        out << "|---|---|---|---|\n";
        out << "| coincidence total | " << n_std << " | " << (n_std ? fixed(std::sqrt(ss_std / n_std), 4) : "n/a")
            << " | " << (n_std ? fixed(max_std, 4) : "n/a") << " |\n";
        out << "| singles | " << n_sn << " | " << (n_sn ? fixed(std::sqrt(ss_sn / n_sn), 4) : "n/a") << " | "
            << (n_sn ? fixed(max_sn, 4) : "n/a") << " |\n\n";
        if (n_std) {
            out << "E-curve RMS deviation (standard normalization): " << fixed(std::sqrt(ss_std / n_std), 4)
                << "\n\n";
        }
    } else {
        out << "No source parameter recorded; theory comparison skipped.\n\n";
    }

    // CHSH at a1 = 0, a2 = 45, b1 = 22.5, b2 = -22.5 degrees.
    out << "## CHSH\n\n";
    const double a1 = 0, a2 = 45, b1 = 22.5, b2 = -22.5;
    bool covered = false;
    for (const char *key : {"e_standard", "e_singles"}) {
        const auto e11 = lookup_e(points, a1, b1, key);
        const auto e12 = lookup_e(points, a1, b2, key);
        const auto e21 = lookup_e(points, a2, b1, key);
        const auto e22 = lookup_e(points, a2, b2, key);
        if (e11 && e12 && e21 && e22) {
            covered = true;
            out << "- S (" << key << ") = " << fixed(*e11 + *e12 + *e21 - *e22, 4) << "\n";
        }
    }
    if (!covered) {
        out << "- canonical settings (0, 45; 22.5, -22.5 deg) are not covered by this scan\n";
    }
    if (has_theory) {
        const SourceState st(a["source_p"].get<double>());
        out << "- quantum prediction at canonical settings: S = "
            << fixed(chsh_value(st, deg_to_rad(a1), deg_to_rad(a2), deg_to_rad(b1), deg_to_rad(b2)), 4) << "\n";
    }

    out << "\n## No-signalling\n\n";
    if (ns.contains("skipped")) {
        out << "Fit step " << ns["skipped"].get<std::string>() << "\n";
    } else {
        const std::string distant = ns.value("distant_station", std::string("?"));
        out << "Varied station: " << ns.value("varied", std::string("?")) << "; distant station: " << distant
            << "; significance level " << sci(alpha_level) << ".\n\n";
        out << "| marginal | cosine amplitude | sigma | significance | p (cosine vs constant) | p (linear vs constant) "
               "| cosine significant |\n";
        out << "|---|---|---|---|---|---|---|\n";
        for (MarginalSum w : kMarginalSums) {
            const json &f = ns["fits"][to_string(w)];
            const json &cos = f["cosine"];
            const json &lin = f["linear"];
            out << "| " << to_string(w) << " | " << fixed(json_double(cos, "amplitude"), 5) << " | "
                << fixed(json_double(cos, "amplitude_sigma"), 5) << " | "
                << fixed(json_double(cos, "amplitude_significance"), 1) << " | " << sci(json_double(cos, "p_value"))
                << " | " << sci(json_double(lin, "p_value")) << " | "
                << (f.value("cosine_significant", false) ? "yes" : "no") << " |\n";
        }
        out << "\n";
        if (ns.value("verdict", std::string()) == "violated") {
            out << "Verdict: " << distant << "'s marginals depend on the remote setting (amplitude "
                << fixed(json_double(ns, "distant_amplitude"), 5) << ", "
                << fixed(json_double(ns, "distant_significance"), 1) << " sigma, p = "
                << sci(json_double(ns, "distant_p_value")) << "). Under fair sampling this would be signalling: "
                << "fair sampling REJECTED at p<" << sci(alpha_level) << ".\n";
        } else {
            out << "Verdict: " << distant << "'s marginals are consistent with no-signalling (p = "
                << sci(json_double(ns, "distant_p_value")) << "); fair sampling not rejected at p<"
                << sci(alpha_level) << ".\n";
        }
    }

    out << "\n## Warnings\n\n";
    size_t warnings = 0;
    for (const auto &p : points) {
        const std::string err = p.value("error", std::string());
        if (p.value("low_statistics", false) || !err.empty()) {
            out << "- point " << p.value("index", 0) << " (alpha " << num(json_double(p, "alpha_deg")) << ", beta "
                << num(json_double(p, "beta_deg")) << "): "
                << (err.empty() ? "low statistics (a cell below " + std::to_string(kLowCountThreshold) + " counts)"
                                : err)
                << "\n";
            warnings++;
        }
    }
    if (warnings == 0) {
        out << "none\n";
    }

    const std::string text = out.str();
    write_text_atomically(analysis_dir / "summary.md", text);
    return text;
}

}  // namespace fairsample::pipeline

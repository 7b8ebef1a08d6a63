// SPDX-License-Identifier: Apache-2.0
//
// misar - sparse MIMO FMCW ISAR simulation, calibration and imaging toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// misar command-line front end. Every subcommand takes --config plus
// overrides and writes its artifacts under --out.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "misar/misar.h"

namespace {

struct Common {
    std::string config;
    std::optional<unsigned long long> seed;
    std::optional<int> workers;
    std::string out;
    std::optional<int> upsample;
    std::string window;
    std::optional<bool> deterministic;
};

struct CliError {
    misar_status status;
    std::string message;
};

void check(misar_status st)
{
    if (st != MISAR_OK) throw CliError{st, misar_last_error()};
}

class ConfigHandle {
public:
    explicit ConfigHandle(const Common& c)
    {
        check(c.config.empty() ? misar_config_new(&cfg_) : misar_config_load(c.config.c_str(), &cfg_));
        if (c.seed) set("experiment.seed", std::to_string(*c.seed));
        if (c.workers) set("experiment.workers", std::to_string(*c.workers));
        if (!c.out.empty()) set("experiment.out", c.out);
        if (c.upsample) set("image.upsample", std::to_string(*c.upsample));
        if (!c.window.empty()) set("image.window", c.window);
        if (c.deterministic) set("image.deterministic", *c.deterministic ? "true" : "false");
    }
    ~ConfigHandle() { misar_config_free(cfg_); }
    ConfigHandle(const ConfigHandle&) = delete;
    ConfigHandle& operator=(const ConfigHandle&) = delete;

    void set(const std::string& key, const std::string& value) { check(misar_config_set(cfg_, key.c_str(), value.c_str())); }
    std::string get(const std::string& key, const std::string& fallback) const
    {
        char buf[4096];
        return misar_config_get(cfg_, key.c_str(), buf, sizeof buf) == MISAR_OK ? std::string(buf) : fallback;
    }
    const misar_config* get() const { return cfg_; }

private:
    misar_config* cfg_ = nullptr;
};

// Takes ownership of a string returned by the library.
std::string take(char* s)
{
    std::string out = s ? s : "";
    misar_string_free(s);
    return out;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void write_text(const std::string& dir, const std::string& name, const std::string& text)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string path = dir + "/" + name;
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw CliError{MISAR_ERR_IO, "cannot write '" + path + "'"};
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "experiment config file (key = value)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--upsample", c.upsample, "range-profile upsampling factor")->check(CLI::PositiveNumber);
    sub->add_option("--window", c.window, "range window: none or hann")->check(CLI::IsMember({"none", "hann"}));
    sub->add_flag("--deterministic,!--no-deterministic", c.deterministic, "fixed-order reduction in imaging");
}

void env_workers()
{
    const char* env = std::getenv("MISAR_WORKERS");
    if (!env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
        throw CliError{MISAR_ERR_USAGE, std::string("MISAR_WORKERS must be a positive integer, got '") + env + "'"};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"misar: sparse MIMO FMCW ISAR simulation, calibration and imaging"};
    app.require_subcommand(1);
    app.set_version_flag("--version", misar_version());

    Common c;
    std::string scan_csv, measurements_csv, cube_path, calib_path, track_path, image_path, before_path;
    std::vector<int> bench_workers;

    auto* simulate = app.add_subcommand("simulate", "simulate the raw data cube (cube.bin)");
    auto* scan = app.add_subcommand("scan", "simulate the calibration scan (scan.csv)");
    auto* calibrate = app.add_subcommand("calibrate", "estimate per-antenna errors (calib.txt)");
    auto* track = app.add_subcommand("track", "filter position measurements (track.csv)");
    auto* image = app.add_subcommand("image", "back-project a cube (image.bin, slices/)");
    auto* metrics = app.add_subcommand("metrics", "PSF and sidelobe metrics of an image");
    auto* pipeline = app.add_subcommand("pipeline", "run the full experiment");
    auto* bench = app.add_subcommand("bench", "back-projection throughput per worker count (CSV)");

    for (auto* sub : {simulate, scan, calibrate, track, image, metrics, pipeline}) {
        add_common(sub, c);
        sub->add_option("--workers", c.workers, "worker threads (default MISAR_WORKERS or all cores)")
            ->check(CLI::PositiveNumber);
    }
    add_common(bench, c);
    bench->add_option("--workers", bench_workers, "comma-separated worker counts")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->default_str("1,2,4,8");

    calibrate->add_option("--scan", scan_csv, "scan observations (default <out>/scan.csv)");
    track->add_option("--measurements", measurements_csv, "measurement CSV (default: simulated from the truth)");
    image->add_option("--cube", cube_path, "raw data cube (default <out>/cube.bin)");
    image->add_option("--calib", calib_path, "calibration solution (default: none)");
    image->add_option("--track", track_path, "trajectory CSV (default: truth trajectory)");
    metrics->add_option("--image", image_path, "image file")->required();
    metrics->add_option("--before", before_path, "uncalibrated image for a before/after comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return MISAR_ERR_USAGE;
    }

    try {
        env_workers();
        ConfigHandle cfg(c);
        const std::string out_dir = cfg.get("experiment.out", "out");
        char* text = nullptr;
        if (simulate->parsed()) {
            check(misar_stage_simulate(cfg.get(), &text));
        } else if (scan->parsed()) {
            check(misar_stage_scan(cfg.get(), &text));
        } else if (calibrate->parsed()) {
            check(misar_stage_calibrate(cfg.get(), opt(scan_csv), &text));
        } else if (track->parsed()) {
            check(misar_stage_track(cfg.get(), opt(measurements_csv), &text));
        } else if (image->parsed()) {
            check(misar_stage_image(cfg.get(), opt(cube_path), opt(calib_path), opt(track_path), &text));
        } else if (pipeline->parsed()) {
            check(misar_run_experiment(cfg.get(), &text));
        } else if (metrics->parsed()) {
            misar_image* after = nullptr;
            misar_image* before = nullptr;
            misar_status st = misar_image_read(image_path.c_str(), &after);
            if (st == MISAR_OK && !before_path.empty()) st = misar_image_read(before_path.c_str(), &before);
            if (st == MISAR_OK) st = misar_metrics_report(after, before, &text);
            misar_image_free(after);
            misar_image_free(before);
            check(st);
            if (!c.out.empty()) {
                const std::string report = take(text);
                std::cout << report;
                write_text(out_dir, "metrics.txt", report);
                return 0;
            }
        } else if (bench->parsed()) {
            if (bench_workers.empty()) bench_workers = {1, 2, 4, 8};
            check(misar_bench(cfg.get(), bench_workers.data(), bench_workers.size(), &text));
            const std::string csv = take(text);
            std::cout << csv;
            if (!c.out.empty()) write_text(out_dir, "bench.csv", csv);
            return 0;
        }
        std::cout << take(text);
        return 0;
    } catch (const CliError& e) {
        std::cerr << "misar: " << e.message << "\n";
        return static_cast<int>(e.status);
    }
}

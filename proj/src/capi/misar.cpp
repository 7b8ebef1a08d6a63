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

#include "misar/misar.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <string_view>

#include "analysis.hpp"
#include "error.hpp"
#include "fileio.hpp"
#include "hash.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"

struct misar_config {
    misar::Config cfg;
};
struct misar_geometry {
    misar::ArrayGeometry geom;
};
struct misar_cube {
    misar::RawDataCube cube;
};
struct misar_calibration {
    misar::CalibrationSolution solution;
};
struct misar_trajectory {
    misar::Trajectory traj;
};
struct misar_image {
    misar::Image3D image;
};

namespace {

using namespace misar;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

template <typename F>
misar_status guard(F&& fn)
{
    try {
        fn();
        g_last_error.clear();
        return MISAR_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<misar_status>(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MISAR_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MISAR_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what)
{
    require(p != nullptr, ErrorKind::Usage, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put_hex(const std::string& hex, char out[65])
{
    std::memcpy(out, hex.c_str(), 64);
    out[64] = '\0';
}

const Config& config_or_empty(const misar_config* cfg)
{
    static const Config empty;
    return cfg ? cfg->cfg : empty;
}

ExperimentSpec prepared_spec(const misar_config* cfg)
{
    ExperimentSpec spec = ExperimentSpec::from_config(config_or_empty(cfg));
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    require(!ec, ErrorKind::Io, "cannot create output directory '" + spec.out_dir + "': " + ec.message());
    return spec;
}

RawDataCube simulate_in_memory(const ExperimentSpec& spec)
{
    const Scene scene = build_scene(spec);
    SimulationOptions so;
    so.spreading_loss = spec.spreading_loss;
    so.workers = resolve_workers(spec.workers);
    RawDataCube c = simulate_collection(scene, truth_trajectory(spec), spec.geometry, truth_errors(spec), spec.chirp,
                                        spec.n_bursts, spec.burst_interval, so);
    if (spec.snr_db != INFINITY) c = add_noise(c, spec.snr_db, mix_seed(spec.seed, 2), so.workers);
    return c;
}

std::string artifact(const ExperimentSpec& spec, const char* name) { return (fs::path(spec.out_dir) / name).string(); }

template <typename F>
auto tagged(const char* stage, F&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        if (std::string_view(e.what()).starts_with("stage ")) throw;
        throw Error(e.kind(), std::string("stage ") + stage + ": " + e.what());
    }
}

std::string kv(const std::string& key, const std::string& value) { return key + " = " + value + "\n"; }

}  // namespace

extern "C" {

const char* misar_version(void) { return "1.0.0"; }
const char* misar_last_error(void) { return g_last_error.c_str(); }
void misar_string_free(char* s) { std::free(s); }

misar_status misar_config_new(misar_config** out)
{
    return guard([&] {
        need(out, "out");
        *out = new misar_config{};
    });
}

misar_status misar_config_load(const char* path, misar_config** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new misar_config{Config::load(path)};
    });
}

misar_status misar_config_parse(const char* text, misar_config** out)
{
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new misar_config{Config::parse(text)};
    });
}

misar_status misar_config_set(misar_config* cfg, const char* key, const char* value)
{
    return guard([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        cfg->cfg.set(key, value);
    });
}

misar_status misar_config_get(const misar_config* cfg, const char* key, char* buf, size_t size)
{
    return guard([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(buf, "buf");
        const auto v = cfg->cfg.raw(key);
        require(v.has_value(), ErrorKind::Config, std::string("config key '") + key + "' is not set");
        require(v->size() < size, ErrorKind::Usage, "buffer too small for config value");
        std::memcpy(buf, v->c_str(), v->size() + 1);
    });
}

void misar_config_free(misar_config* cfg) { delete cfg; }

misar_status misar_geometry_create(const misar_config* cfg, misar_geometry** out)
{
    return guard([&] {
        need(out, "out");
        *out = new misar_geometry{geometry_from_config(config_or_empty(cfg))};
    });
}

misar_status misar_geometry_antenna(const misar_geometry* g, int antenna, double xyz[3])
{
    return guard([&] {
        need(g, "geometry");
        need(xyz, "xyz");
        require(antenna >= 0 && antenna < kNumAntennas, ErrorKind::Usage, "antenna index out of range");
        const Vec3 p = g->geom.antenna_position(antenna);
        xyz[0] = p.x;
        xyz[1] = p.y;
        xyz[2] = p.z;
    });
}

misar_status misar_geometry_fingerprint(const misar_geometry* g, char hex[65])
{
    return guard([&] {
        need(g, "geometry");
        need(hex, "hex");
        const auto fp = geometry_fingerprint(g->geom);
        put_hex(to_hex(fp.data(), fp.size()), hex);
    });
}

void misar_geometry_free(misar_geometry* g) { delete g; }

misar_status misar_burst_duration(const misar_config* cfg, int n_channels, double* seconds)
{
    return guard([&] {
        need(seconds, "seconds");
        *seconds = burst_schedule(ChirpParams::from_config(config_or_empty(cfg)), n_channels).duration;
    });
}

misar_status misar_range_bin_spacing(const misar_config* cfg, int upsample, double* meters)
{
    return guard([&] {
        need(meters, "meters");
        RangeCompressor rc(ChirpParams::from_config(config_or_empty(cfg)), Window::None, upsample);
        // One-way range per bin.
        *meters = 0.5 * rc.bin_spacing();
    });
}

misar_status misar_cube_simulate(const misar_config* cfg, misar_cube** out)
{
    return guard([&] {
        need(out, "out");
        const ExperimentSpec spec = ExperimentSpec::from_config(config_or_empty(cfg));
        const Scene scene = build_scene(spec);
        SimulationOptions so;
        so.spreading_loss = spec.spreading_loss;
        so.workers = resolve_workers(spec.workers);
        *out = new misar_cube{simulate_in_memory(spec)};
    });
}

misar_status misar_cube_read(const char* path, misar_cube** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new misar_cube{read_cube(path)};
    });
}

misar_status misar_cube_write(const misar_cube* cube, const char* path)
{
    return guard([&] {
        need(cube, "cube");
        need(path, "path");
        write_cube(path, cube->cube);
    });
}

misar_status misar_cube_dims(const misar_cube* cube, int* n_bursts, int* n_channels, int* n_samples)
{
    return guard([&] {
        need(cube, "cube");
        if (n_bursts) *n_bursts = cube->cube.n_bursts;
        if (n_channels) *n_channels = cube->cube.n_channels;
        if (n_samples) *n_samples = cube->cube.n_samples();
    });
}

misar_status misar_cube_pulse(const misar_cube* cube, int burst, int channel, double* buf, size_t n)
{
    return guard([&] {
        need(cube, "cube");
        need(buf, "buf");
        const auto& c = cube->cube;
        require(burst >= 0 && burst < c.n_bursts && channel >= 0 && channel < c.n_channels, ErrorKind::Usage,
                "pulse index out of range");
        require(n >= 2 * static_cast<size_t>(c.n_samples()), ErrorKind::Usage, "buffer too small for pulse");
        const auto p = c.pulse(burst, channel);
        for (std::size_t i = 0; i < p.size(); ++i) {
            buf[2 * i] = p[i].real();
            buf[2 * i + 1] = p[i].imag();
        }
    });
}

misar_status misar_cube_digest(const misar_cube* cube, char hex[65])
{
    return guard([&] {
        need(cube, "cube");
        need(hex, "hex");
        put_hex(cube_digest(cube->cube), hex);
    });
}

misar_status misar_cube_add_noise(const misar_cube* cube, double snr_db, uint64_t seed, misar_cube** out)
{
    return guard([&] {
        need(cube, "cube");
        need(out, "out");
        *out = new misar_cube{add_noise(cube->cube, snr_db, seed, resolve_workers(0))};
    });
}

void misar_cube_free(misar_cube* cube) { delete cube; }

misar_status misar_calibration_identity(const misar_geometry* g, misar_calibration** out)
{
    return guard([&] {
        need(g, "geometry");
        need(out, "out");
        *out = new misar_calibration{CalibrationSolution::identity(g->geom)};
    });
}

misar_status misar_calibration_read(const char* path, misar_calibration** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new misar_calibration{solution_from_text(read_file(path))};
    });
}

misar_status misar_calibration_write(const misar_calibration* c, const char* path)
{
    return guard([&] {
        need(c, "calibration");
        need(path, "path");
        write_file(path, solution_to_text(c->solution));
    });
}

misar_status misar_calibration_antenna(const misar_calibration* c, int antenna, double* amplitude, double* phase,
                                       double* delay, double offset[3])
{
    return guard([&] {
        need(c, "calibration");
        require(antenna >= 0 && antenna < kNumAntennas, ErrorKind::Usage, "antenna index out of range");
        const auto& e = c->solution.errors.antennas[antenna];
        if (amplitude) *amplitude = e.amplitude;
        if (phase) *phase = e.phase;
        if (delay) *delay = e.delay;
        if (offset) {
            offset[0] = e.offset.x;
            offset[1] = e.offset.y;
            offset[2] = e.offset.z;
        }
    });
}

void misar_calibration_free(misar_calibration* c) { delete c; }

misar_status misar_trajectory_read(const char* path, misar_trajectory** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new misar_trajectory{trajectory_from_csv(read_file(path))};
    });
}

misar_status misar_trajectory_constant_velocity(const double start[3], const double velocity[3], double t0, double t1,
                                                misar_trajectory** out)
{
    return guard([&] {
        need(start, "start");
        need(velocity, "velocity");
        need(out, "out");
        *out = new misar_trajectory{Trajectory::constant_velocity({start[0], start[1], start[2]},
                                                                  {velocity[0], velocity[1], velocity[2]}, t0, t1)};
    });
}

misar_status misar_trajectory_position(const misar_trajectory* t, double time, double xyz[3])
{
    return guard([&] {
        need(t, "trajectory");
        need(xyz, "xyz");
        const Vec3 p = t->traj.position_at(time);
        xyz[0] = p.x;
        xyz[1] = p.y;
        xyz[2] = p.z;
    });
}

void misar_trajectory_free(misar_trajectory* t) { delete t; }

misar_status misar_image_backproject(const misar_cube* cube, const misar_geometry* g, const misar_calibration* calib,
                                     const misar_trajectory* traj, const misar_config* cfg, int workers,
                                     misar_image** out)
{
    return guard([&] {
        need(cube, "cube");
        need(g, "geometry");
        need(traj, "trajectory");
        need(out, "out");
        const Config& c = config_or_empty(cfg);
        const VoxelGrid grid = VoxelGrid::from_config(c);
        const BackprojectOptions opts = BackprojectOptions::from_config(c);
        const CalibrationSolution sol = calib ? calib->solution : CalibrationSolution::identity(g->geom);
        *out = new misar_image{image_stage(cube->cube, g->geom, sol, traj->traj, grid, opts, workers)};
    });
}

misar_status misar_image_read(const char* path, misar_image** out)
{
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new misar_image{read_image(path)};
    });
}

misar_status misar_image_write(const misar_image* image, const char* path)
{
    return guard([&] {
        need(image, "image");
        need(path, "path");
        write_image(path, image->image);
    });
}

misar_status misar_image_dims(const misar_image* image, int dims[3])
{
    return guard([&] {
        need(image, "image");
        need(dims, "dims");
        for (int a = 0; a < 3; ++a) dims[a] = image->image.grid.dims[a];
    });
}

misar_status misar_image_magnitude(const misar_image* image, int ix, int iy, int iz, double* value)
{
    return guard([&] {
        need(image, "image");
        need(value, "value");
        const auto& d = image->image.grid.dims;
        require(ix >= 0 && ix < d[0] && iy >= 0 && iy < d[1] && iz >= 0 && iz < d[2], ErrorKind::Usage,
                "voxel index out of range");
        *value = std::abs(image->image.at(ix, iy, iz));
    });
}

misar_status misar_image_digest(const misar_image* image, char hex[65])
{
    return guard([&] {
        need(image, "image");
        need(hex, "hex");
        put_hex(sha256_hex(encode_image(image->image)), hex);
    });
}

void misar_image_free(misar_image* image) { delete image; }

misar_status misar_psf_metrics(const misar_image* image, misar_psf* out)
{
    return guard([&] {
        need(image, "image");
        need(out, "out");
        const PsfReport r = psf_metrics(image->image);
        for (int a = 0; a < 3; ++a) {
            out->peak_position[a] = r.peak_position[a];
            out->peak_index[a] = r.peak_index[a];
            out->widths[a] = r.widths[a];
        }
        out->peak_db = r.peak_db;
        out->psl_db = r.psl_db;
    });
}

misar_status misar_metrics_report(const misar_image* image, const misar_image* before, char** report)
{
    return guard([&] {
        need(image, "image");
        need(report, "report");
        std::string text = report_text(psf_metrics(image->image));
        if (before) text += comparison_text(compare_before_after(before->image, image->image));
        *report = dup_string(text);
    });
}

misar_status misar_stage_simulate(const misar_config* cfg, char** summary)
{
    return guard([&] {
        const ExperimentSpec spec = prepared_spec(cfg);
        const Scene scene = scene_stage(spec);
        const ChannelErrorModel truth = errors_stage(spec);
        std::string hash;
        const RawDataCube cube = simulate_stage(spec, scene, truth, truth_trajectory(spec), &hash);
        if (summary)
            *summary = dup_string(kv("cube", artifact(spec, "cube.bin")) + kv("cube_sha256", hash) +
                                  kv("scatterers", std::to_string(scene.scatterers.size())) +
                                  kv("dims", std::to_string(cube.n_bursts) + " " + std::to_string(cube.n_channels) +
                                                 " " + std::to_string(cube.n_samples())));
    });
}

misar_status misar_stage_scan(const misar_config* cfg, char** summary)
{
    return guard([&] {
        const ExperimentSpec spec = prepared_spec(cfg);
        const auto obs = scan_stage(spec, errors_stage(spec));
        if (summary)
            *summary = dup_string(kv("scan", artifact(spec, "scan.csv")) +
                                  kv("observations", std::to_string(obs.size())));
    });
}

misar_status misar_stage_calibrate(const misar_config* cfg, const char* scan_csv, char** summary)
{
    return guard([&] {
        const ExperimentSpec spec = prepared_spec(cfg);
        const std::string path = scan_csv ? scan_csv : artifact(spec, "scan.csv");
        const auto obs = tagged("calibrate", [&] { return observations_from_csv(read_file(path)); });
        std::string hash;
        const CalibrationSolution sol = calibrate_stage(spec, obs, &hash);
        double worst = 0.0;
        for (const auto& f : sol.fits) worst = std::max(worst, f.residual_rms);
        if (summary)
            *summary = dup_string(kv("calib", artifact(spec, "calib.txt")) + kv("calib_sha256", hash) +
                                  kv("converged", sol.converged ? "true" : "false") +
                                  kv("max_residual_rms_m", format_double(worst)));
    });
}

misar_status misar_stage_track(const misar_config* cfg, const char* measurements_csv, char** summary)
{
    return guard([&] {
        const ExperimentSpec spec = prepared_spec(cfg);
        std::vector<TrackMeasurement> ms;
        std::string text;
        if (measurements_csv) {
            ms = tagged("track", [&] { return measurements_from_csv(read_file(measurements_csv)); });
        } else {
            const Trajectory truth = truth_trajectory(spec);
            ms = measure_stage(spec, truth);
            text += kv("measurements_csv", artifact(spec, "measurements.csv"));
        }
        const TrackOutcome t = track_stage(spec, ms);
        text += kv("track", artifact(spec, "track.csv")) + kv("track_sha256", t.hash) +
                kv("measurements", std::to_string(t.measurements)) + kv("rejected", std::to_string(t.rejected));
        if (!measurements_csv) {
            const auto rmse = track_rmse(t.trajectory, truth_trajectory(spec), spec.warmup);
            text += kv("rmse_m", format_double(rmse[0]) + " " + format_double(rmse[1]) + " " + format_double(rmse[2]));
        }
        if (summary) *summary = dup_string(text);
    });
}

misar_status misar_stage_image(const misar_config* cfg, const char* cube_path, const char* calib_path,
                               const char* track_path, char** summary)
{
    return guard([&] {
        const ExperimentSpec spec = prepared_spec(cfg);
        const std::string cp = cube_path ? cube_path : artifact(spec, "cube.bin");
        const RawDataCube cube = tagged("image", [&] { return read_cube(cp); });
        const CalibrationSolution sol = tagged("image", [&] {
            return calib_path ? solution_from_text(read_file(calib_path)) : CalibrationSolution::identity(spec.geometry);
        });
        const Trajectory traj =
            track_path ? tagged("image", [&] { return trajectory_from_csv(read_file(track_path)); }) : truth_trajectory(spec);
        BackprojectStats stats;
        const Image3D image = image_stage(cube, spec.geometry, sol, traj, spec.grid, spec.imaging, spec.workers, &stats);
        const std::string hash = write_image_stage(spec, image);
        std::string text = kv("image", artifact(spec, "image.bin")) + kv("image_sha256", hash) +
                           kv("excluded_voxels", std::to_string(stats.excluded_voxels));
        for (const auto& w : stats.warnings) text += kv("warning", w);
        if (summary) *summary = dup_string(text);
    });
}

misar_status misar_run_experiment(const misar_config* cfg, char** report)
{
    return guard([&] {
        const ExperimentResult r = run_experiment(ExperimentSpec::from_config(config_or_empty(cfg)));
        if (report) *report = dup_string(r.report);
    });
}

misar_status misar_bench(const misar_config* cfg, const int* workers, size_t n_counts, char** csv)
{
    return guard([&] {
        need(workers, "workers");
        need(csv, "csv");
        require(n_counts > 0, ErrorKind::Usage, "bench needs at least one worker count");
        const ExperimentSpec spec = ExperimentSpec::from_config(config_or_empty(cfg));
        const RawDataCube cube = tagged("simulate", [&] { return simulate_in_memory(spec); });
        const Trajectory traj = truth_trajectory(spec);
        const int bursts = spec.imaging.n_bursts < 0 ? cube.n_bursts - spec.imaging.first_burst : spec.imaging.n_bursts;
        const double work = static_cast<double>(spec.grid.size()) * bursts * cube.n_channels;
        std::string out = "workers,seconds,voxel_pulses_per_s,speedup\n";
        double base = 0.0;
        for (size_t i = 0; i < n_counts; ++i) {
            require(workers[i] >= 1, ErrorKind::Usage, "bench worker counts must be >= 1");
            const auto t0 = std::chrono::steady_clock::now();
            tagged("image", [&] {
                return backproject_parallel(cube, spec.geometry, traj, spec.grid, spec.imaging, workers[i]);
            });
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (i == 0) base = s;
            out += std::to_string(workers[i]) + "," + format_double(s) + "," + format_double(work / s) + "," +
                   format_double(base / s) + "\n";
        }
        *csv = dup_string(out);
    });
}

}  // extern "C"

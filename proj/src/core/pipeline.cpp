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

#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <string_view>

#include "error.hpp"
#include "fileio.hpp"
#include "hash.hpp"
#include "parallel.hpp"

namespace misar {

namespace {

namespace fs = std::filesystem;

// Appends the radar-facing half (y <= center.y) of an ellipsoid shell with
// neighbor spacing at most d.
void sample_front_half(const Ellipsoid& e, double d, const std::vector<Ellipsoid>& all, std::size_t self,
                       double reflectivity, std::vector<Scatterer>& out)
{
    const double a = e.semi.x, b = e.semi.y, c = e.semi.z;
    const int n_theta = std::max(1, static_cast<int>(std::ceil(kPi * std::max({a, b, c}) / d)));
    for (int k = 0; k <= n_theta; ++k) {
        const double theta = kPi * k / n_theta;
        const double st = std::sin(theta);
        const int n_phi = std::max(1, static_cast<int>(std::ceil(kPi * st * std::max(a, b) / d)));
        const int last = st < 1e-12 ? 0 : n_phi;
        for (int j = 0; j <= last; ++j) {
            const double phi = kPi + kPi * j / n_phi;
            const Vec3 p{e.center.x + a * st * std::cos(phi), e.center.y + b * st * std::sin(phi),
                         e.center.z + c * std::cos(theta)};
            bool hidden = false;
            for (std::size_t o = 0; o < all.size() && !hidden; ++o) {
                if (o == self) continue;
                const Vec3 q = p - all[o].center;
                const double rr = q.x * q.x / (all[o].semi.x * all[o].semi.x) +
                                  q.y * q.y / (all[o].semi.y * all[o].semi.y) +
                                  q.z * q.z / (all[o].semi.z * all[o].semi.z);
                hidden = rr < 1.0 - 1e-9;
            }
            if (!hidden) out.push_back({p, {reflectivity, 0.0}});
        }
    }
}

int plate_count(double extent, double spacing) { return static_cast<int>(std::floor(extent / spacing + 1e-9)) + 1; }

template <typename F>
auto run_stage(const std::string& name, std::vector<StageTiming>* timings, F&& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto done = [&] {
        if (timings)
            timings->push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            done();
        } else {
            auto r = fn();
            done();
            return r;
        }
    } catch (const Error& e) {
        if (std::string_view(e.what()).starts_with("stage ")) throw;
        throw Error(e.kind(), "stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Internal, "stage " + name + ": " + e.what());
    }
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "experiment.name", "experiment.seed", "experiment.workers", "experiment.out",
        "geometry.arc_radius", "geometry.virtual_span", "geometry.layout", "geometry.n_tx", "geometry.n_rx",
        "chirp.f_start", "chirp.f_stop", "chirp.pulse_width", "chirp.prt", "chirp.n_samples",
        "scene.kind", "scene.points", "scene.reflectivity", "scene.file",
        "humanoid.height", "humanoid.spacing", "humanoid.body_reflectivity", "humanoid.plate_width",
        "humanoid.plate_height", "humanoid.plate_spacing", "humanoid.plate_reflectivity", "humanoid.plate_x",
        "humanoid.plate_z", "humanoid.plate_standoff",
        "collection.n_bursts", "collection.burst_interval",
        "trajectory.velocity", "trajectory.center", "trajectory.file",
        "errors.inject", "errors.sigma_phase_deg", "errors.sigma_delay_ps", "errors.sigma_position_mm",
        "errors.sigma_amplitude", "errors.file",
        "calib.enabled", "calib.grid_extent_x", "calib.grid_extent_z", "calib.grid_step", "calib.plane_offset",
        "calib.noise_db", "calib.amplitude_exponent", "calib.reference_delay", "calib.gauge_antenna",
        "calib.max_iterations",
        "tracking.enabled", "tracking.process_noise", "tracking.sigma", "tracking.gate_sigma", "tracking.smooth",
        "tracking.rate_hz", "tracking.noise_sigma", "tracking.outlier_fraction", "tracking.warmup",
        "noise.snr_db", "simulate.spreading_loss",
        "image.dims", "image.spacing", "image.center", "image.origin", "image.upsample", "image.window",
        "image.deterministic", "image.first_burst", "image.n_bursts",
        "analysis.compare",
        "slices.enabled", "slices.axis", "slices.mode", "slices.db_floor",
    };
    return keys;
}

bool known_key(const std::string& key)
{
    if (known_keys().count(key)) return true;
    return key.rfind("geometry.tx.", 0) == 0 || key.rfind("geometry.rx.", 0) == 0;
}

std::string fmt(double v) { return format_double(v); }

void add_metric(std::string& txt, std::string& csv, const std::string& key, const std::string& value)
{
    txt += key + " = " + value + "\n";
    csv += key + "," + value + "\n";
}

void add_metric(std::string& txt, std::string& csv, const std::string& key, double value)
{
    add_metric(txt, csv, key, fmt(value));
}

std::string write_artifact(const fs::path& dir, const std::string& name, const std::string& bytes)
{
    write_file((dir / name).string(), bytes);
    return sha256_hex(bytes);
}

}  // namespace

HumanoidParams HumanoidParams::from_config(const Config& cfg)
{
    HumanoidParams p;
    p.height = cfg.get_double("humanoid.height", p.height);
    p.spacing = cfg.get_double("humanoid.spacing", p.spacing);
    p.body_reflectivity = cfg.get_double("humanoid.body_reflectivity", p.body_reflectivity);
    p.plate_width = cfg.get_double("humanoid.plate_width", p.plate_width);
    p.plate_height = cfg.get_double("humanoid.plate_height", p.plate_height);
    p.plate_spacing = cfg.get_double("humanoid.plate_spacing", p.plate_spacing);
    p.plate_reflectivity = cfg.get_double("humanoid.plate_reflectivity", p.plate_reflectivity);
    p.plate_x = cfg.get_double("humanoid.plate_x", p.plate_x);
    p.plate_z = cfg.get_double("humanoid.plate_z", p.plate_z);
    p.plate_standoff = cfg.get_double("humanoid.plate_standoff", p.plate_standoff);
    return p;
}

std::vector<Ellipsoid> humanoid_parts(const HumanoidParams& params)
{
    const double s = params.height / 1.7;
    auto part = [s](Vec3 c, Vec3 r) { return Ellipsoid{c * s, r * s}; };
    return {
        part({0.0, 0.0, -0.05}, {0.17, 0.11, 0.30}),    // torso
        part({0.0, 0.0, 0.29}, {0.05, 0.05, 0.07}),     // neck
        part({0.0, 0.0, 0.44}, {0.08, 0.10, 0.11}),     // head
        part({-0.23, 0.0, -0.08}, {0.05, 0.05, 0.33}),  // arms
        part({0.23, 0.0, -0.08}, {0.05, 0.05, 0.33}),
        part({-0.09, 0.0, -0.75}, {0.075, 0.075, 0.40}),  // legs
        part({0.09, 0.0, -0.75}, {0.075, 0.075, 0.40}),
    };
}

double humanoid_front_y(const std::vector<Ellipsoid>& parts, double x, double z)
{
    double best = NAN;
    for (const auto& e : parts) {
        const double u = (x - e.center.x) / e.semi.x, w = (z - e.center.z) / e.semi.z;
        const double t = 1.0 - u * u - w * w;
        if (t < 0.0) continue;
        const double y = e.center.y - e.semi.y * std::sqrt(t);
        if (std::isnan(best) || y < best) best = y;
    }
    return best;
}

HumanoidScene make_humanoid(const HumanoidParams& p)
{
    require(p.height > 0.5 && p.height < 2.5, ErrorKind::Config, "humanoid height must lie in (0.5, 2.5) m");
    require(p.spacing > 0.0 && p.body_reflectivity > 0.0, ErrorKind::Config,
            "humanoid spacing and reflectivity must be positive");
    const double half_lambda = kSpeedOfLight / 24e9 / 2.0;
    HumanoidScene h;
    h.parts = humanoid_parts(p);
    if (p.spacing > half_lambda * (1.0 + 1e-9))
        h.warnings.push_back("humanoid spacing " + fmt(p.spacing) + " m exceeds lambda/2; surface undersampled");

    std::vector<Scatterer> body;
    for (std::size_t i = 0; i < h.parts.size(); ++i)
        sample_front_half(h.parts[i], p.spacing, h.parts, i, p.body_reflectivity, body);

    const bool plate = p.plate_width > 0.0 && p.plate_height > 0.0;
    if (plate) {
        require(p.plate_spacing > 0.0, ErrorKind::Config, "plate spacing must be positive");
        require(p.plate_reflectivity >= 3.0 * p.body_reflectivity, ErrorKind::Config,
                "plate reflectivity must be at least 3x the body reflectivity");
        if (p.plate_spacing > half_lambda * (1.0 + 1e-9))
            h.warnings.push_back("plate spacing " + fmt(p.plate_spacing) + " m exceeds lambda/2");
        const double surface = humanoid_front_y(h.parts, p.plate_x, p.plate_z);
        require(!std::isnan(surface), ErrorKind::Config, "plate center is not on the body");
        h.plate_y = surface - p.plate_standoff;
        const double hw = 0.5 * p.plate_width, hh = 0.5 * p.plate_height;
        for (const auto& s : body) {
            const bool behind = std::abs(s.position.x - p.plate_x) <= hw && std::abs(s.position.z - p.plate_z) <= hh &&
                                s.position.y > h.plate_y;
            if (behind)
                ++h.occluded_points;
            else
                h.scene.scatterers.push_back(s);
        }
        h.body_points = h.scene.scatterers.size();
        const int nx = plate_count(p.plate_width, p.plate_spacing);
        const int nz = plate_count(p.plate_height, p.plate_spacing);
        for (int iz = 0; iz < nz; ++iz)
            for (int ix = 0; ix < nx; ++ix)
                h.scene.scatterers.push_back({{p.plate_x + (ix - 0.5 * (nx - 1)) * p.plate_spacing, h.plate_y,
                                               p.plate_z + (iz - 0.5 * (nz - 1)) * p.plate_spacing},
                                              {p.plate_reflectivity, 0.0}});
        h.plate_points = static_cast<std::size_t>(nx) * nz;
    } else {
        h.scene.scatterers = std::move(body);
        h.body_points = h.scene.scatterers.size();
    }
    return h;
}

std::vector<SurfaceRegion> default_controls(const HumanoidParams& p)
{
    const double dz = p.plate_height + 0.01 * p.height / 1.7;
    return {{p.plate_x, p.plate_z + dz, p.plate_width, p.plate_height},
            {p.plate_x, p.plate_z - dz, p.plate_width, p.plate_height}};
}

RegionContrast plate_contrast(const Image3D& image, const HumanoidScene& h, const HumanoidParams& p,
                              const std::vector<SurfaceRegion>& controls, int depth_voxels)
{
    require(h.plate_points > 0, ErrorKind::Usage, "plate_contrast: scene has no plate");
    const auto& g = image.grid;
    const double depth = depth_voxels * g.spacing.y + 1e-12;

    // Mean magnitude over the voxels near the surface inside one rectangle.
    auto region_mean = [&](const SurfaceRegion& r, bool plate, std::size_t& count) {
        double sum = 0.0;
        count = 0;
        for (int iz = 0; iz < g.dims[2]; ++iz)
            for (int ix = 0; ix < g.dims[0]; ++ix) {
                const Vec3 c = g.position(ix, 0, iz);
                if (std::abs(c.x - r.x_center) > 0.5 * r.width + 1e-12 || std::abs(c.z - r.z_center) > 0.5 * r.height + 1e-12)
                    continue;
                const double ys = plate ? h.plate_y : humanoid_front_y(h.parts, c.x, c.z);
                if (std::isnan(ys)) continue;
                for (int iy = 0; iy < g.dims[1]; ++iy) {
                    if (std::abs(g.position(ix, iy, iz).y - ys) > depth) continue;
                    sum += std::abs(image.at(ix, iy, iz));
                    ++count;
                }
            }
        return count ? sum / static_cast<double>(count) : 0.0;
    };

    RegionContrast rc;
    rc.plate_mean = region_mean({p.plate_x, p.plate_z, p.plate_width, p.plate_height}, true, rc.plate_voxels);
    require(rc.plate_voxels > 0, ErrorKind::Usage, "plate_contrast: plate lies outside the image grid");
    double sum = 0.0;
    for (const auto& r : controls) {
        std::size_t n = 0;
        const double m = region_mean(r, false, n);
        sum += m * static_cast<double>(n);
        rc.control_voxels += n;
    }
    require(rc.control_voxels > 0, ErrorKind::Usage, "plate_contrast: control regions lie outside the image grid");
    rc.control_mean = sum / static_cast<double>(rc.control_voxels);
    require(rc.plate_mean > 0.0 && rc.control_mean > 0.0, ErrorKind::Numerical, "plate_contrast: empty image");
    rc.contrast_db = 20.0 * std::log10(rc.plate_mean / rc.control_mean);
    return rc;
}

ExperimentSpec ExperimentSpec::from_config(const Config& input)
{
    for (const auto& [key, value] : input.entries())
        require(known_key(key), ErrorKind::Config, "unknown config key '" + key + "'");

    ExperimentSpec s;
    s.source = input;
    const Config& cfg = input;
    s.name = cfg.get_string("experiment.name", s.name);
    const long long seed = cfg.get_int("experiment.seed", 1);
    require(seed >= 0, ErrorKind::Config, "experiment.seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.workers = static_cast<int>(cfg.get_int("experiment.workers", 0));
    s.out_dir = cfg.get_string("experiment.out", s.out_dir);

    s.geometry = geometry_from_config(cfg);
    s.chirp = ChirpParams::from_config(cfg);

    const std::string kind = cfg.get_string("scene.kind", "point");
    if (kind == "point") {
        s.scene_kind = SceneKind::Point;
        const auto xyz = cfg.get_doubles("scene.points", {0.0, 0.0, 0.0});
        require(!xyz.empty() && xyz.size() % 3 == 0, ErrorKind::Config, "scene.points needs x y z triples");
        const auto refl = cfg.get_doubles("scene.reflectivity", std::vector<double>(xyz.size() / 3, 1.0));
        require(refl.size() == xyz.size() / 3, ErrorKind::Config, "scene.reflectivity needs one value per point");
        for (std::size_t i = 0; i < refl.size(); ++i)
            s.points.push_back({{xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]}, {refl[i], 0.0}});
    } else if (kind == "humanoid") {
        s.scene_kind = SceneKind::Humanoid;
        s.humanoid = HumanoidParams::from_config(cfg);
    } else if (kind == "file") {
        s.scene_kind = SceneKind::File;
        s.scene_file = cfg.get_string("scene.file", "");
        require(!s.scene_file.empty() && fs::exists(s.scene_file), ErrorKind::Config,
                "scene.file '" + s.scene_file + "' does not exist");
    } else {
        fail(ErrorKind::Config, "scene.kind must be point, humanoid or file (got '" + kind + "')");
    }

    s.n_bursts = static_cast<int>(cfg.get_int("collection.n_bursts", s.n_bursts));
    s.burst_interval = cfg.get_double("collection.burst_interval", s.burst_interval);
    require(s.n_bursts >= 1, ErrorKind::Config, "collection.n_bursts must be >= 1");
    require(s.burst_interval >= burst_schedule(s.chirp).duration, ErrorKind::Config,
            "collection.burst_interval is shorter than one burst");
    s.velocity = cfg.get_vec3("trajectory.velocity", s.velocity);
    s.center = cfg.get_vec3("trajectory.center", s.center);
    s.trajectory_file = cfg.get_string("trajectory.file", "");
    require(s.trajectory_file.empty() || fs::exists(s.trajectory_file), ErrorKind::Config,
            "trajectory.file '" + s.trajectory_file + "' does not exist");

    s.inject_errors = cfg.get_bool("errors.inject", s.inject_errors);
    s.sigmas.phase_rad = cfg.get_double("errors.sigma_phase_deg", 30.0) * kPi / 180.0;
    s.sigmas.delay_s = cfg.get_double("errors.sigma_delay_ps", 20.0) * 1e-12;
    s.sigmas.position_m = cfg.get_double("errors.sigma_position_mm", 2.0) * 1e-3;
    s.sigmas.amplitude_rel = cfg.get_double("errors.sigma_amplitude", 0.1);
    require(s.sigmas.phase_rad >= 0 && s.sigmas.delay_s >= 0 && s.sigmas.position_m >= 0 && s.sigmas.amplitude_rel >= 0,
            ErrorKind::Config, "error sigmas must be non-negative");
    s.errors_file = cfg.get_string("errors.file", "");
    require(s.errors_file.empty() || fs::exists(s.errors_file), ErrorKind::Config,
            "errors.file '" + s.errors_file + "' does not exist");

    s.calibrate = cfg.get_bool("calib.enabled", s.calibrate);
    s.scan = ScanGrid::from_config(cfg);
    s.scan_options.noise_db = cfg.get_double("calib.noise_db", s.scan_options.noise_db);
    s.scan_options.amplitude_exponent = cfg.get_double("calib.amplitude_exponent", 2.0);
    s.scan_options.reference_delay = cfg.get_double("calib.reference_delay", 0.0);
    s.estimate_options.amplitude_exponent = s.scan_options.amplitude_exponent;
    s.estimate_options.reference_delay = s.scan_options.reference_delay;
    s.estimate_options.gauge_antenna = static_cast<int>(cfg.get_int("calib.gauge_antenna", -1));
    s.estimate_options.max_iterations = static_cast<int>(cfg.get_int("calib.max_iterations", 100));

    s.track = cfg.get_bool("tracking.enabled", s.track);
    s.tuning = TrackingTuning::from_config(cfg);
    s.tuning.process_noise = cfg.get_double("tracking.process_noise", kFocusProcessNoise);
    s.measurement.rate_hz = cfg.get_double("tracking.rate_hz", s.measurement.rate_hz);
    s.measurement.sigma = cfg.get_double("tracking.noise_sigma", s.tuning.measurement_sigma);
    s.measurement.outlier_fraction = cfg.get_double("tracking.outlier_fraction", 0.0);
    s.warmup = cfg.get_double("tracking.warmup", s.warmup);
    require(s.measurement.rate_hz > 0 && s.measurement.sigma >= 0 && s.warmup >= 0, ErrorKind::Config,
            "tracking rate, noise and warm-up must be positive");

    s.snr_db = cfg.get_double("noise.snr_db", s.snr_db);
    s.spreading_loss = cfg.get_bool("simulate.spreading_loss", s.spreading_loss);

    Config grid_cfg = cfg;
    if (s.scene_kind == SceneKind::Humanoid) {
        // Torso window around the plate.
        const double k = s.humanoid.height / 1.7;
        if (!cfg.has("image.dims")) grid_cfg.set("image.dims", "64 32 96");
        if (!cfg.has("image.center"))
            grid_cfg.set("image.center", fmt(s.humanoid.plate_x) + " " + fmt(-0.09 * k) + " " + fmt(s.humanoid.plate_z));
        if (!cfg.has("analysis.compare")) s.compare = false;
    }
    s.grid = VoxelGrid::from_config(grid_cfg);
    s.imaging = BackprojectOptions::from_config(cfg);
    s.compare = cfg.get_bool("analysis.compare", s.compare);

    s.write_slices = cfg.get_bool("slices.enabled", s.write_slices);
    const std::string axis = cfg.get_string("slices.axis", "y");
    require(axis == "x" || axis == "y" || axis == "z", ErrorKind::Config, "slices.axis must be x, y or z");
    s.slices.axis = axis == "x" ? 0 : axis == "y" ? 1 : 2;
    const std::string mode = cfg.get_string("slices.mode", "raw");
    require(mode == "raw" || mode == "max", ErrorKind::Config, "slices.mode must be raw or max");
    s.slices.mode = mode == "raw" ? SliceMode::Raw : SliceMode::MaxProjection;
    s.slices.db_floor = cfg.get_double("slices.db_floor", s.slices.db_floor);
    require(s.slices.db_floor < 0.0, ErrorKind::Config, "slices.db_floor must be negative");
    return s;
}

Scene build_scene(const ExperimentSpec& spec, HumanoidScene* humanoid)
{
    Scene sc;
    switch (spec.scene_kind) {
    case SceneKind::Point: sc.scatterers = spec.points; break;
    case SceneKind::File: sc = scene_from_csv(read_file(spec.scene_file)); break;
    case SceneKind::Humanoid: {
        HumanoidScene h = make_humanoid(spec.humanoid);
        sc = h.scene;
        if (humanoid) *humanoid = std::move(h);
        break;
    }
    }
    require(!sc.scatterers.empty(), ErrorKind::Config, "scene is empty");
    return sc;
}

ChannelErrorModel truth_errors(const ExperimentSpec& spec)
{
    if (!spec.errors_file.empty()) return error_model_from_config(Config::load(spec.errors_file), "errors");
    if (spec.inject_errors) return random_errors(spec.sigmas, mix_seed(spec.seed, 1));
    return ChannelErrorModel::identity();
}

Scene scene_stage(const ExperimentSpec& spec, HumanoidScene* humanoid)
{
    return run_stage("scene", nullptr, [&] {
        Scene sc = build_scene(spec, humanoid);
        write_file((fs::path(spec.out_dir) / "scene.csv").string(), scene_to_csv(sc));
        return sc;
    });
}

ChannelErrorModel errors_stage(const ExperimentSpec& spec)
{
    return run_stage("errors", nullptr, [&] {
        ChannelErrorModel m = truth_errors(spec);
        write_file((fs::path(spec.out_dir) / "errors_truth.txt").string(), error_model_to_text(m));
        return m;
    });
}

Trajectory truth_trajectory(const ExperimentSpec& spec)
{
    return run_stage("trajectory", nullptr, [&] {
        if (!spec.trajectory_file.empty()) return trajectory_from_csv(read_file(spec.trajectory_file));
        const double t_last = (spec.n_bursts - 1) * spec.burst_interval + (kNumChannels - 1) * spec.chirp.prt;
        const double t_mid = 0.5 * t_last;
        const double margin = 2.0 / spec.measurement.rate_hz;
        const double t0 = -(spec.warmup + margin), t1 = t_last + margin;
        return Trajectory::constant_velocity(spec.center + spec.velocity * (t0 - t_mid), spec.velocity, t0, t1);
    });
}

RawDataCube simulate_stage(const ExperimentSpec& spec, const Scene& scene, const ChannelErrorModel& truth,
                           const Trajectory& trajectory, std::string* hash)
{
    return run_stage("simulate", nullptr, [&] {
        const int workers = resolve_workers(spec.workers);
        SimulationOptions so;
        so.spreading_loss = spec.spreading_loss;
        so.workers = workers;
        RawDataCube c = simulate_collection(scene, trajectory, spec.geometry, truth, spec.chirp, spec.n_bursts,
                                            spec.burst_interval, so);
        if (spec.snr_db != INFINITY) c = add_noise(c, spec.snr_db, mix_seed(spec.seed, 2), workers);
        const fs::path dir(spec.out_dir);
        write_file((dir / "trajectory_truth.csv").string(), trajectory_to_csv(trajectory));
        const std::string bytes = encode_cube(c);
        const std::string h = write_artifact(dir, "cube.bin", bytes);
        if (hash) *hash = h;
        // Later stages see exactly what a reader of cube.bin sees.
        return decode_cube(bytes);
    });
}

std::vector<LinkObservation> scan_stage(const ExperimentSpec& spec, const ChannelErrorModel& truth)
{
    return run_stage("scan", nullptr, [&] {
        ScanOptions so = spec.scan_options;
        so.seed = mix_seed(spec.seed, 3);
        const auto obs = simulate_scan(spec.geometry, truth, spec.scan, spec.chirp, so);
        const std::string text = observations_to_csv(obs);
        write_file((fs::path(spec.out_dir) / "scan.csv").string(), text);
        return observations_from_csv(text);
    });
}

CalibrationSolution calibrate_stage(const ExperimentSpec& spec, const std::vector<LinkObservation>& observations,
                                    std::string* hash)
{
    return run_stage("calibrate", nullptr, [&] {
        EstimateOptions eo = spec.estimate_options;
        eo.workers = resolve_workers(spec.workers);
        const CalibrationSolution sol = estimate(observations, spec.geometry, spec.chirp, eo);
        const std::string text = solution_to_text(sol);
        const std::string h = write_artifact(fs::path(spec.out_dir), "calib.txt", text);
        if (hash) *hash = h;
        return solution_from_text(text);
    });
}

std::vector<TrackMeasurement> measure_stage(const ExperimentSpec& spec, const Trajectory& truth)
{
    return run_stage("measure", nullptr, [&] {
        MeasurementNoise mn = spec.measurement;
        mn.seed = mix_seed(spec.seed, 4);
        const auto sim = simulate_measurements(truth, mn);
        const std::string text = measurements_to_csv(sim.measurements);
        write_file((fs::path(spec.out_dir) / "measurements.csv").string(), text);
        return measurements_from_csv(text);
    });
}

TrackOutcome track_stage(const ExperimentSpec& spec, const std::vector<TrackMeasurement>& measurements)
{
    return run_stage("track", nullptr, [&] {
        const FilterResult fr = filter_track(measurements, spec.tuning);
        TrackOutcome out;
        out.measurements = measurements.size();
        out.rejected = fr.rejected;
        const std::string text = trajectory_to_csv(fr.trajectory);
        out.hash = write_artifact(fs::path(spec.out_dir), "track.csv", text);
        out.trajectory = trajectory_from_csv(text);
        return out;
    });
}

std::array<double, 3> track_rmse(const Trajectory& track, const Trajectory& truth, double warmup)
{
    std::array<double, 3> rmse{};
    std::size_t n = 0;
    for (const auto& s : track.samples()) {
        if (s.t < track.t_first() + warmup || !truth.covers(s.t)) continue;
        const Vec3 d = s.position - truth.position_at(s.t);
        for (int a = 0; a < 3; ++a) rmse[a] += d[a] * d[a];
        ++n;
    }
    for (double& r : rmse) r = n ? std::sqrt(r / static_cast<double>(n)) : 0.0;
    return rmse;
}

Image3D image_stage(const RawDataCube& cube, const ArrayGeometry& nominal, const CalibrationSolution& solution,
                    const Trajectory& trajectory, const VoxelGrid& grid, const BackprojectOptions& opts, int workers,
                    BackprojectStats* stats)
{
    return run_stage("image", nullptr, [&] {
        const RawDataCube compensated = compensate(cube, solution);
        return backproject_parallel(compensated, calibrated_geometry(nominal, solution), trajectory, grid, opts,
                                    resolve_workers(workers), stats);
    });
}

std::string write_image_stage(const ExperimentSpec& spec, const Image3D& image, const std::string& name)
{
    return run_stage("image", nullptr, [&] {
        const fs::path dir(spec.out_dir);
        const std::string h = write_artifact(dir, name, encode_image(image));
        if (spec.write_slices) write_slices((dir / "slices").string(), export_slices(image, spec.slices), image, spec.slices);
        return h;
    });
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    ExperimentResult res;
    res.out_dir = spec.out_dir;
    const fs::path dir(spec.out_dir);
    const int workers = resolve_workers(spec.workers);
    auto* timings = &res.timings;

    run_stage("prepare", timings, [&] {
        std::error_code ec;
        fs::create_directories(dir, ec);
        require(!ec, ErrorKind::Io, "cannot create output directory '" + spec.out_dir + "': " + ec.message());
        write_file((dir / "experiment.cfg").string(), spec.source.to_text());
    });

    HumanoidScene humanoid;
    const Scene scene = run_stage("scene", timings, [&] { return scene_stage(spec, &humanoid); });
    for (const auto& w : humanoid.warnings) res.warnings.push_back(w);
    res.truth = run_stage("errors", timings, [&] { return errors_stage(spec); });
    const Trajectory truth_traj = run_stage("trajectory", timings, [&] { return truth_trajectory(spec); });
    const RawDataCube cube = run_stage("simulate", timings,
                                       [&] { return simulate_stage(spec, scene, res.truth, truth_traj, &res.cube_hash); });

    if (spec.calibrate) {
        const auto obs = run_stage("scan", timings, [&] { return scan_stage(spec, res.truth); });
        res.solution = run_stage("calibrate", timings, [&] { return calibrate_stage(spec, obs, &res.calib_hash); });
    } else {
        res.solution = CalibrationSolution::identity(spec.geometry);
        res.calib_hash = write_artifact(dir, "calib.txt", solution_to_text(res.solution));
    }

    std::array<double, 3> rmse{};
    TrackOutcome track;
    if (spec.track) {
        const auto ms = run_stage("measure", timings, [&] { return measure_stage(spec, truth_traj); });
        track = run_stage("track", timings, [&] { return track_stage(spec, ms); });
        rmse = track_rmse(track.trajectory, truth_traj, spec.warmup);
        res.imaging_trajectory = track.trajectory;
        res.track_hash = track.hash;
    } else {
        const std::string text = trajectory_to_csv(truth_traj);
        res.track_hash = write_artifact(dir, "track.csv", text);
        res.imaging_trajectory = trajectory_from_csv(text);
    }

    BackprojectStats stats;
    const Image3D image = run_stage("image", timings, [&] {
        Image3D im = image_stage(cube, spec.geometry, res.solution, res.imaging_trajectory, spec.grid, spec.imaging,
                                 workers, &stats);
        res.image_hash = write_image_stage(spec, im);
        return im;
    });
    for (const auto& w : stats.warnings) res.warnings.push_back(w);
    Image3D uncal;
    if (spec.compare) {
        uncal = run_stage("image_uncalibrated", timings, [&] {
            Image3D im = backproject_parallel(cube, spec.geometry, res.imaging_trajectory, spec.grid, spec.imaging, workers);
            write_file((dir / "image_uncalibrated.bin").string(), encode_image(im));
            return im;
        });
    }

    run_stage("report", timings, [&] {
        std::string txt, csv = "metric,value\n";
        add_metric(txt, csv, "experiment.name", spec.name);
        add_metric(txt, csv, "experiment.seed", std::to_string(spec.seed));
        add_metric(txt, csv, "scene.scatterers", std::to_string(scene.scatterers.size()));
        const auto fp = geometry_fingerprint(spec.geometry);
        add_metric(txt, csv, "provenance.geometry", to_hex(fp.data(), fp.size()));
        add_metric(txt, csv, "provenance.cube", res.cube_hash);
        add_metric(txt, csv, "provenance.calib", res.calib_hash);
        add_metric(txt, csv, "provenance.track", res.track_hash);
        add_metric(txt, csv, "provenance.image", res.image_hash);
        add_metric(txt, csv, "imaging.options", spec.imaging.summary());
        add_metric(txt, csv, "imaging.excluded_voxels", std::to_string(stats.excluded_voxels));

        const double lambda = spec.chirp.wavelength_center();
        const double t_last = (spec.n_bursts - 1) * spec.burst_interval + (kNumChannels - 1) * spec.chirp.prt;
        const double aperture = std::hypot(spec.velocity.x, spec.velocity.z) * t_last;
        add_metric(txt, csv, "theory.range_bin_spacing", kSpeedOfLight / (2.0 * spec.chirp.bandwidth()));
        add_metric(txt, csv, "theory.range_width", 0.886 * kSpeedOfLight / (2.0 * spec.chirp.bandwidth()));
        add_metric(txt, csv, "theory.vertical_width",
                   0.886 * lambda * spec.geometry.arc_radius / (2.0 * spec.geometry.virtual_span * 127.0 / 128.0));
        if (aperture > 0.0)
            add_metric(txt, csv, "theory.horizontal_width", 0.886 * lambda * spec.geometry.arc_radius / (2.0 * aperture));

        if (spec.calibrate) {
            double d_tau = 0, d_pos = 0, d_phi = 0, d_amp = 0;
            const int gauge = spec.estimate_options.gauge_antenna;
            const double ref = gauge >= 0 ? res.truth.antennas[gauge].delay : 0.0;
            for (int i = 0; i < kNumAntennas; ++i) {
                const auto& t = res.truth.antennas[i];
                const auto& e = res.solution.errors.antennas[i];
                d_tau = std::max(d_tau, std::abs(e.delay - (t.delay - ref)));
                d_pos = std::max(d_pos, distance(e.offset, t.offset));
                d_phi = std::max(d_phi, std::abs(wrap_phase(e.phase - t.phase)));
                d_amp = std::max(d_amp, std::abs(e.amplitude / t.amplitude - 1.0));
            }
            add_metric(txt, csv, "calib.converged", res.solution.converged ? "true" : "false");
            add_metric(txt, csv, "calib.max_delay_error_s", d_tau);
            add_metric(txt, csv, "calib.max_position_error_m", d_pos);
            add_metric(txt, csv, "calib.max_phase_error_rad", d_phi);
            add_metric(txt, csv, "calib.max_amplitude_error", d_amp);
        }
        if (spec.track) {
            add_metric(txt, csv, "track.measurements", std::to_string(track.measurements));
            add_metric(txt, csv, "track.rejected", std::to_string(track.rejected));
            add_metric(txt, csv, "track.rmse_x", rmse[0]);
            add_metric(txt, csv, "track.rmse_y", rmse[1]);
            add_metric(txt, csv, "track.rmse_z", rmse[2]);
        }

        if (spec.scene_kind == SceneKind::Humanoid && humanoid.plate_points > 0) {
            res.contrast = plate_contrast(image, humanoid, spec.humanoid, default_controls(spec.humanoid));
            res.has_contrast = true;
            add_metric(txt, csv, "humanoid.body_points", std::to_string(humanoid.body_points));
            add_metric(txt, csv, "humanoid.plate_points", std::to_string(humanoid.plate_points));
            add_metric(txt, csv, "humanoid.plate_mean", res.contrast.plate_mean);
            add_metric(txt, csv, "humanoid.control_mean", res.contrast.control_mean);
            add_metric(txt, csv, "humanoid.contrast_db", res.contrast.contrast_db);
            add_metric(txt, csv, "humanoid.plate_detected", res.contrast.contrast_db >= 6.0 ? "true" : "false");
        } else {
            res.psf = psf_metrics(image);
            res.has_psf = true;
            txt += report_text(res.psf);
            const char* axes[] = {"x", "y", "z"};
            for (int a = 0; a < 3; ++a)
                csv += std::string("psf.width_") + axes[a] + "," + fmt(res.psf.widths[a]) + "\n";
            csv += "psf.psl_db," + fmt(res.psf.psl_db) + "\n";
            if (spec.compare) {
                res.comparison = compare_before_after(uncal, image);
                res.has_comparison = true;
                txt += comparison_text(res.comparison);
                csv += "compare.psl_before_db," + fmt(res.comparison.psl_before_db) + "\n";
                csv += "compare.psl_after_db," + fmt(res.comparison.psl_after_db) + "\n";
                csv += "compare.psl_improvement_db," + fmt(res.comparison.psl_improvement_db) + "\n";
            }
        }
        for (const auto& w : res.warnings) txt += "warning = " + w + "\n";
        res.report = txt;
        res.report_csv = csv;
        write_file((dir / "report.txt").string(), txt);
        write_file((dir / "report.csv").string(), csv);
    });

    std::string timing;
    for (const auto& t : res.timings) timing += "timing." + t.stage + "_s = " + fmt(t.seconds) + "\n";
    write_file((dir / "timing.txt").string(), timing);
    return res;
}

}  // namespace misar

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

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "calib.hpp"
#include "config.hpp"
#include "imaging.hpp"
#include "simulator.hpp"
#include "tracking.hpp"

namespace misar {

/// Parametric stand-in for a person facing the array (-y), target frame
/// origin at the chest. Only the radar-facing half of each ellipsoid shell
/// is sampled.
struct HumanoidParams {
    double height = 1.7;
    double spacing = kSpeedOfLight / 24e9 / 2.0;  // lambda_c / 2 at 24 GHz
    double body_reflectivity = 1.0;
    // Concealed plate on the torso front; zero width or height disables it.
    double plate_width = 0.10;
    double plate_height = 0.15;
    double plate_spacing = 0.006;
    double plate_reflectivity = 4.0;
    double plate_x = 0.0;
    double plate_z = -0.05;
    double plate_standoff = 0.005;  // in front of the torso apex

    static HumanoidParams from_config(const Config& cfg);
};

struct Ellipsoid {
    Vec3 center;
    Vec3 semi;
};

struct HumanoidScene {
    Scene scene;
    std::size_t body_points = 0;
    std::size_t plate_points = 0;
    std::size_t occluded_points = 0;  // body points hidden behind the plate
    double plate_y = 0.0;
    std::vector<Ellipsoid> parts;
    std::vector<std::string> warnings;
};

// Body parts of the humanoid, scaled by height.
std::vector<Ellipsoid> humanoid_parts(const HumanoidParams& params);
HumanoidScene make_humanoid(const HumanoidParams& params);
// Front (smallest y) surface of the body at (x, z); NaN when no part covers it.
double humanoid_front_y(const std::vector<Ellipsoid>& parts, double x, double z);

/// Rectangle on a surface used for region statistics. Columns (x, z) inside
/// the rectangle contribute voxels within depth of the surface y.
struct SurfaceRegion {
    double x_center = 0.0;
    double z_center = 0.0;
    double width = 0.0;
    double height = 0.0;
};

struct RegionContrast {
    double plate_mean = 0.0;
    double control_mean = 0.0;
    double contrast_db = 0.0;
    std::size_t plate_voxels = 0;
    std::size_t control_voxels = 0;
};

RegionContrast plate_contrast(const Image3D& image, const HumanoidScene& humanoid, const HumanoidParams& params,
                              const std::vector<SurfaceRegion>& controls, int depth_voxels = 2);
// Default control regions: plate-sized rectangles above and below the plate.
std::vector<SurfaceRegion> default_controls(const HumanoidParams& params);

// Experiment default for tracking.process_noise (constant-velocity cart).
inline constexpr double kFocusProcessNoise = 1e-4;

enum class SceneKind { Point, Humanoid, File };

/// Everything one end-to-end run needs. Stage configs are read from the
/// flat key-value config.
struct ExperimentSpec {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    int workers = 0;
    std::string out_dir = "out";

    ArrayGeometry geometry;
    ChirpParams chirp;

    SceneKind scene_kind = SceneKind::Point;
    std::vector<Scatterer> points;  // SceneKind::Point
    std::string scene_file;
    HumanoidParams humanoid;

    int n_bursts = 64;
    double burst_interval = 0.02;
    Vec3 velocity{0.55, 0.0, 0.0};
    Vec3 center;  // target position at mid-collection
    std::string trajectory_file;

    bool inject_errors = true;
    ErrorSigmas sigmas{30.0 * kPi / 180.0, 20e-12, 2e-3, 0.1};
    std::string errors_file;

    bool calibrate = true;
    ScanGrid scan;
    ScanOptions scan_options;
    EstimateOptions estimate_options;

    bool track = true;
    TrackingTuning tuning;
    MeasurementNoise measurement;
    double warmup = 0.5;

    double snr_db = INFINITY;
    bool spreading_loss = false;

    VoxelGrid grid;
    BackprojectOptions imaging;
    bool compare = true;  // also image the uncalibrated cube
    SliceOptions slices;
    bool write_slices = true;

    Config source;

    static ExperimentSpec from_config(const Config& cfg);
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct ExperimentResult {
    std::string out_dir;
    std::string report;      // report.txt contents
    std::string report_csv;  // report.csv contents
    std::string cube_hash;
    std::string calib_hash;
    std::string track_hash;
    std::string image_hash;
    CalibrationSolution solution;
    ChannelErrorModel truth;
    Trajectory imaging_trajectory;
    bool has_psf = false;
    PsfReport psf;
    bool has_comparison = false;
    Comparison comparison;
    bool has_contrast = false;
    RegionContrast contrast;
    std::vector<StageTiming> timings;
    std::vector<std::string> warnings;
};

// Scene and ground-truth channel errors of a spec, without side effects.
Scene build_scene(const ExperimentSpec& spec, HumanoidScene* humanoid = nullptr);
ChannelErrorModel truth_errors(const ExperimentSpec& spec);

// Stages of an experiment. Each persists its artifacts under spec.out_dir
// and returns what later stages consume. Errors carry the stage name.
Scene scene_stage(const ExperimentSpec& spec, HumanoidScene* humanoid = nullptr);
ChannelErrorModel errors_stage(const ExperimentSpec& spec);
// Covers the collection plus the tracker warm-up before it.
Trajectory truth_trajectory(const ExperimentSpec& spec);
RawDataCube simulate_stage(const ExperimentSpec& spec, const Scene& scene, const ChannelErrorModel& truth,
                           const Trajectory& trajectory, std::string* hash = nullptr);
std::vector<LinkObservation> scan_stage(const ExperimentSpec& spec, const ChannelErrorModel& truth);
CalibrationSolution calibrate_stage(const ExperimentSpec& spec, const std::vector<LinkObservation>& observations,
                                    std::string* hash = nullptr);
std::vector<TrackMeasurement> measure_stage(const ExperimentSpec& spec, const Trajectory& truth);

struct TrackOutcome {
    Trajectory trajectory;
    std::size_t measurements = 0;
    int rejected = 0;
    std::string hash;
};
TrackOutcome track_stage(const ExperimentSpec& spec, const std::vector<TrackMeasurement>& measurements);
// Per-axis RMSE of a track against the truth after the warm-up.
std::array<double, 3> track_rmse(const Trajectory& track, const Trajectory& truth, double warmup);

/// Imaging on upstream artifacts: compensate, then back-project with the
/// calibrated geometry along the given trajectory.
Image3D image_stage(const RawDataCube& cube, const ArrayGeometry& nominal, const CalibrationSolution& solution,
                    const Trajectory& trajectory, const VoxelGrid& grid, const BackprojectOptions& opts, int workers,
                    BackprojectStats* stats = nullptr);
// Writes image.bin (or `name`) and, when enabled, slices/. Returns the file hash.
std::string write_image_stage(const ExperimentSpec& spec, const Image3D& image, const std::string& name = "image.bin");

/// Runs scan-calibrate, simulate, track, compensate, image and report, and
/// writes every artifact under spec.out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace misar

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
#include <vector>

#include "config.hpp"
#include "trajectory.hpp"

namespace misar {

struct TrackMeasurement {
    double t = 0.0;
    Vec3 position;
    bool valid = true;
};

// Constant-velocity state of one axis: [position, velocity] and covariance.
struct AxisState {
    double pos = 0.0;
    double vel = 0.0;
    std::array<std::array<double, 2>, 2> cov{};
};

struct TrackState {
    double t = 0.0;
    std::array<AxisState, 3> axes;

    Vec3 position() const { return {axes[0].pos, axes[1].pos, axes[2].pos}; }
    Vec3 velocity() const { return {axes[0].vel, axes[1].vel, axes[2].vel}; }
    bool covariance_valid(double symmetry_tol = 1e-12) const;
};

struct TrackingTuning {
    double process_noise = 0.01;     // white-acceleration PSD q, (m/s^2)^2 * s
    double measurement_sigma = 0.01; // per-axis measurement std, m
    double gate_sigma = 3.0;
    bool smooth = true;              // fixed-interval (RTS) pass after filtering

    static TrackingTuning from_config(const Config& cfg);
};

struct StepResult {
    TrackState state;
    bool accepted = false;
};

/// Predict over dt, then gate: the measurement is rejected when any axis
/// innovation exceeds gate_sigma * sqrt(S) and only the prediction is kept.
StepResult kf_step(const TrackState& state, const TrackMeasurement& measurement, double process_noise,
                   double meas_variance, double gate_sigma);

struct FilterResult {
    Trajectory trajectory;
    std::vector<bool> accepted;  // per input measurement
    int rejected = 0;
};

/// Gated constant-velocity filter over time-sorted measurements, with an
/// optional RTS pass. The track starts at the first pair of valid
/// measurements whose extrapolation gates the next one; valid measurements
/// before that pair count as rejected.
FilterResult filter_track(const std::vector<TrackMeasurement>& measurements, const TrackingTuning& tuning);

Trajectory resample_track(const Trajectory& trajectory, const std::vector<double>& timestamps);

struct MeasurementNoise {
    double rate_hz = 30.0;
    double sigma = 0.01;
    double outlier_fraction = 0.0;
    double outlier_sigmas = 10.0;
    std::uint64_t seed = 0;
};

struct SimulatedTrack {
    std::vector<TrackMeasurement> measurements;
    std::vector<bool> is_outlier;
};

// Samples the truth at rate_hz over its span and adds white noise; outliers
// are displaced by +-outlier_sigmas * sigma on every axis.
SimulatedTrack simulate_measurements(const Trajectory& truth, const MeasurementNoise& noise);

}  // namespace misar

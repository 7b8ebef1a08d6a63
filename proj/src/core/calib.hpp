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

#include "arraygeom.hpp"
#include "channel_errors.hpp"
#include "simulator.hpp"
#include "waveform.hpp"

namespace misar {

/// Planar calibration scan grid facing the array.
struct ScanGrid {
    double extent_x = 1.0;
    double extent_z = 1.0;
    double step = 0.1;
    double plane_offset = 1.5;  // distance from the array baseline to the scan plane

    static ScanGrid from_config(const Config& cfg);
    int nx() const;
    int nz() const;
    std::size_t size() const { return static_cast<std::size_t>(nx()) * nz(); }
    // Point j in row-major (z outer, x inner) order.
    Vec3 point(const ArrayGeometry& geom, std::size_t j) const;
};

struct LinkObservation {
    int antenna = 0;
    int grid_index = 0;
    Vec3 point;
    double delay = 0.0;      // T_ij, seconds
    double amplitude = 0.0;  // A_ij, linear
    double phase = 0.0;      // phi_ij, wrapped to (-pi, pi]
};

struct ScanOptions {
    // Exponent of the amplitude range law (2 reproduces the printed model).
    double amplitude_exponent = 2.0;
    // Known constant delay of the reference cable, added to every delay.
    double reference_delay = 0.0;
    // Observation noise in dB relative to unit scale (-inf: noiseless).
    // Delay noise is that fraction of 1/B, phase noise that many radians,
    // amplitude noise that relative fraction.
    double noise_db = -INFINITY;
    std::uint64_t seed = 0;
};

/// One-way line-of-sight observables for every (antenna, grid point) link.
std::vector<LinkObservation> simulate_scan(const ArrayGeometry& geom, const ChannelErrorModel& truth,
                                           const ScanGrid& grid, const ChirpParams& params,
                                           const ScanOptions& opts = {});

struct LinkPulse {
    int antenna = 0;
    int grid_index = 0;
    Vec3 point;
    std::vector<cplx> samples;
};

// Dechirped one-way link pulse over `range` for antenna error e.
std::vector<cplx> link_pulse(double range, const AntennaError& e, const ChirpParams& params,
                             double amplitude_exponent = 2.0);

struct ExtractOptions {
    int upsample = 8;
    // Peak power must exceed this many times the median bin power.
    double floor_ratio = 10.0;
};

struct ExtractionResult {
    std::vector<LinkObservation> observations;
    std::vector<std::string> warnings;
};

/// Delay from the interpolated compressed peak; amplitude and phase from the
/// complex peak value (phase referenced to the pulse center).
ExtractionResult extract_observables(const std::vector<LinkPulse>& pulses, const ChirpParams& params,
                                     const ExtractOptions& opts = {});

struct EstimateOptions {
    int max_iterations = 100;
    double relative_tolerance = 1e-10;
    double amplitude_exponent = 2.0;
    double reference_delay = 0.0;
    // When >= 0, the delay estimate of this antenna is subtracted from all
    // antennas (unknown reference cable).
    int gauge_antenna = -1;
    int workers = 1;
};

struct AntennaFit {
    int iterations = 0;
    double final_cost = 0.0;     // sum of squared path residuals, m^2
    double residual_rms = 0.0;   // path residual, m
    double phase_rms = 0.0;      // wrapped phase residual, rad
    int n_observations = 0;
    bool converged = false;
};

struct CalibrationSolution {
    ChannelErrorModel errors;
    std::vector<AntennaFit> fits = std::vector<AntennaFit>(kNumAntennas);
    std::array<unsigned char, 32> geometry_fingerprint{};
    bool converged = true;

    static CalibrationSolution identity(const ArrayGeometry& geom);
};

CalibrationSolution estimate(const std::vector<LinkObservation>& observations, const ArrayGeometry& initial,
                             const ChirpParams& params, const EstimateOptions& opts = {});

// Sum of squared path residuals (m^2) of one antenna's delays at a trial
// offset and delay; used for identifiability probes.
double delay_cost(const std::vector<LinkObservation>& observations, int antenna, const Vec3& position,
                  double delay);

/// Removes per-channel gain, phase and delay; imaging afterwards should use
/// calibrated_geometry().
RawDataCube compensate(const RawDataCube& cube, const CalibrationSolution& solution);

// Compensation with a known error model (no fingerprint check).
RawDataCube compensate(const RawDataCube& cube, const ChannelErrorModel& errors);

ArrayGeometry calibrated_geometry(const ArrayGeometry& nominal, const CalibrationSolution& solution);

}  // namespace misar

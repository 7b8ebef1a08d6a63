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
#include <span>
#include <vector>

#include "arraygeom.hpp"
#include "channel_errors.hpp"
#include "trajectory.hpp"
#include "waveform.hpp"

namespace misar {

struct Scatterer {
    Vec3 position;  // target frame
    cplx reflectivity{1.0, 0.0};
};

struct Scene {
    std::vector<Scatterer> scatterers;
};

/// Dechirped samples indexed (burst, channel slot, fast-time sample).
struct RawDataCube {
    int n_bursts = 0;
    int n_channels = kNumChannels;
    ChirpParams chirp;
    double burst_interval = 0.02;
    bool spreading_loss = false;
    bool noisy = false;
    std::uint64_t seed = 0;
    std::array<unsigned char, 32> geometry_fingerprint{};
    std::vector<cplx> data;

    RawDataCube() = default;
    RawDataCube(int bursts, int channels, const ChirpParams& params, double interval);

    int n_samples() const { return chirp.n_samples; }
    std::size_t pulse_offset(int burst, int channel) const
    {
        return (static_cast<std::size_t>(burst) * n_channels + channel) * chirp.n_samples;
    }
    std::span<cplx> pulse(int burst, int channel)
    {
        return {data.data() + pulse_offset(burst, channel), static_cast<std::size_t>(chirp.n_samples)};
    }
    std::span<const cplx> pulse(int burst, int channel) const
    {
        return {data.data() + pulse_offset(burst, channel), static_cast<std::size_t>(chirp.n_samples)};
    }
    double burst_start(int burst) const { return burst * burst_interval; }
    double pulse_time(int burst, int channel) const { return burst_start(burst) + channel * chirp.prt; }
    double last_pulse_time() const { return pulse_time(n_bursts - 1, n_channels - 1); }
    void validate() const;
};

struct SimulationOptions {
    bool spreading_loss = false;
    int workers = 1;
};

/// Echo of one Tx/Rx pulse with the target frame at `target_origin`:
/// exact bistatic paths from the perturbed antenna positions, channel
/// amplitude/phase applied to each scatterer and the channel delay added.
std::vector<cplx> simulate_pulse(const Scene& scene, const Vec3& target_origin, const VirtualChannel& channel,
                                 const ArrayGeometry& geom, const ChannelErrorModel& errors,
                                 const ChirpParams& params, const SimulationOptions& opts = {});

/// Each pulse uses the target position at its own transmit time.
RawDataCube simulate_collection(const Scene& scene, const Trajectory& trajectory, const ArrayGeometry& geom,
                                const ChannelErrorModel& errors, const ChirpParams& params, int n_bursts,
                                double burst_interval, const SimulationOptions& opts = {});

/// Complex white Gaussian noise at the given mean-signal-to-noise ratio.
/// snr_db = +inf leaves the cube untouched. Per-pulse seeding keeps the
/// result independent of worker count.
RawDataCube add_noise(const RawDataCube& cube, double snr_db, std::uint64_t seed, int workers = 1);

// Counter-based stream seed (SplitMix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter);

}  // namespace misar

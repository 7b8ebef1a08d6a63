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
#include <random>
#include <vector>

#include "vec3.hpp"

namespace misar {

inline constexpr int kNumTx = 8;
inline constexpr int kNumRx = 16;
inline constexpr int kNumAntennas = kNumTx + kNumRx;
inline constexpr int kNumChannels = kNumTx * kNumRx;

// Physical antenna numbering shared by error models and calibration:
// Tx m -> m, Rx n -> kNumTx + n.
constexpr int tx_antenna(int m) { return m; }
constexpr int rx_antenna(int n) { return kNumTx + n; }

/// Per-antenna electrical and mechanical deviation from nominal.
struct AntennaError {
    double amplitude = 1.0;  // linear scale, > 0
    double phase = 0.0;      // radians
    double delay = 0.0;      // seconds
    Vec3 offset;             // phase-center displacement, meters

    friend bool operator==(const AntennaError&, const AntennaError&) = default;
};

struct ChannelErrorModel {
    std::vector<AntennaError> antennas = std::vector<AntennaError>(kNumAntennas);

    static ChannelErrorModel identity() { return {}; }

    bool is_identity() const;
    void validate() const;

    // Channel-level combination for (tx m, rx n).
    double channel_amplitude(int m, int n) const;
    double channel_phase(int m, int n) const;
    double channel_delay(int m, int n) const;
};

struct ErrorSigmas {
    double phase_rad = 0.0;
    double delay_s = 0.0;
    double position_m = 0.0;
    double amplitude_rel = 0.0;
};

// Zero-mean Gaussian draws per antenna; amplitude = max(1 + N(0, s), 0.05).
ChannelErrorModel random_errors(const ErrorSigmas& sigmas, std::uint64_t seed);

}  // namespace misar

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

#include "channel_errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace misar {

bool ChannelErrorModel::is_identity() const
{
    return std::all_of(antennas.begin(), antennas.end(),
                       [](const AntennaError& e) { return e == AntennaError{}; });
}

void ChannelErrorModel::validate() const
{
    require(antennas.size() == static_cast<std::size_t>(kNumAntennas), ErrorKind::Config,
            "channel error model needs " + std::to_string(kNumAntennas) + " antennas, got " +
                std::to_string(antennas.size()));
    for (std::size_t i = 0; i < antennas.size(); ++i) {
        const auto& e = antennas[i];
        require(e.amplitude > 0.0 && std::isfinite(e.amplitude), ErrorKind::Config,
                "antenna " + std::to_string(i) + ": amplitude must be positive");
        require(std::isfinite(e.phase) && std::isfinite(e.delay) && std::isfinite(e.offset.norm()),
                ErrorKind::Config, "antenna " + std::to_string(i) + ": non-finite error entry");
    }
}

double ChannelErrorModel::channel_amplitude(int m, int n) const
{
    return antennas[tx_antenna(m)].amplitude * antennas[rx_antenna(n)].amplitude;
}

double ChannelErrorModel::channel_phase(int m, int n) const
{
    return antennas[tx_antenna(m)].phase + antennas[rx_antenna(n)].phase;
}

double ChannelErrorModel::channel_delay(int m, int n) const
{
    return antennas[tx_antenna(m)].delay + antennas[rx_antenna(n)].delay;
}

ChannelErrorModel random_errors(const ErrorSigmas& sigmas, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ChannelErrorModel model;
    for (auto& e : model.antennas) {
        e.amplitude = std::max(1.0 + sigmas.amplitude_rel * gauss(rng), 0.05);
        e.phase = sigmas.phase_rad * gauss(rng);
        e.delay = sigmas.delay_s * gauss(rng);
        e.offset.x = sigmas.position_m * gauss(rng);
        e.offset.y = sigmas.position_m * gauss(rng);
        e.offset.z = sigmas.position_m * gauss(rng);
    }
    return model;
}

}  // namespace misar

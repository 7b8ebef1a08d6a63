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
#include <string>
#include <vector>

#include "channel_errors.hpp"
#include "config.hpp"
#include "vec3.hpp"

namespace misar {

enum class AntennaRole { Tx, Rx };
enum class LayoutMode { Arc, Planar };

struct AntennaElement {
    int index = 0;
    AntennaRole role = AntennaRole::Tx;
    Vec3 position;
};

struct GeometryConfig {
    double arc_radius = 1.5;
    double virtual_span = 0.5;
    LayoutMode layout = LayoutMode::Arc;
    int n_tx = kNumTx;
    int n_rx = kNumRx;

    static GeometryConfig from_config(const Config& cfg);
};

/// Sparse 8Tx/16Rx MIMO array. Immutable once built.
struct ArrayGeometry {
    std::vector<AntennaElement> tx;
    std::vector<AntennaElement> rx;
    double arc_radius = 1.5;
    double virtual_span = 0.5;
    LayoutMode layout = LayoutMode::Arc;

    const Vec3& antenna_position(int antenna) const
    {
        return antenna < kNumTx ? tx[antenna].position : rx[antenna - kNumTx].position;
    }
    void validate() const;
};

struct VirtualChannel {
    int tx_index = 0;
    int rx_index = 0;
    int sequence_slot = 0;
    Vec3 effective_center;
};

ArrayGeometry build_default_geometry(const GeometryConfig& config);

// Slot order: outer Tx, inner Rx, slot = 16 * tx + rx.
std::vector<VirtualChannel> virtual_channels(const ArrayGeometry& geom);

inline int channel_slot(int tx, int rx) { return kNumRx * tx + rx; }

ArrayGeometry perturb_geometry(const ArrayGeometry& geom, const ChannelErrorModel& errors);

// Largest |range to scene center - arc_radius| over all 24 elements.
double max_arc_deviation(const ArrayGeometry& geom);
bool satisfies_arc_constraint(const ArrayGeometry& geom, double tol = 1e-9);

// Largest y coordinate of any element; voxels at or behind it are not imaged.
double array_front_plane(const ArrayGeometry& geom);

// SHA-256 of the canonical text serialization.
std::array<unsigned char, 32> geometry_fingerprint(const ArrayGeometry& geom);

// `geometry.*` key-value form with full-precision element positions.
std::string geometry_to_text(const ArrayGeometry& geom);
ArrayGeometry geometry_from_config(const Config& cfg);

}  // namespace misar

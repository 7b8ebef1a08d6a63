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
#include "config.hpp"
#include "simulator.hpp"
#include "trajectory.hpp"
#include "waveform.hpp"

namespace misar {

/// Regular voxel lattice in the target frame.
struct VoxelGrid {
    Vec3 origin;
    Vec3 spacing{0.005, 0.005, 0.005};
    std::array<int, 3> dims{64, 64, 32};

    // Grid centered on `center`.
    static VoxelGrid centered(const Vec3& center, const Vec3& spacing, std::array<int, 3> dims);
    static VoxelGrid from_config(const Config& cfg);

    void validate() const;
    std::size_t size() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
    // x-fastest linear index.
    std::size_t index(int ix, int iy, int iz) const
    {
        return (static_cast<std::size_t>(iz) * dims[1] + iy) * dims[0] + ix;
    }
    Vec3 position(int ix, int iy, int iz) const
    {
        return {origin.x + ix * spacing.x, origin.y + iy * spacing.y, origin.z + iz * spacing.z};
    }
    bool same_as(const VoxelGrid& o) const { return origin == o.origin && spacing == o.spacing && dims == o.dims; }
};

struct Image3D {
    VoxelGrid grid;
    std::vector<cplx> values;
    std::string cube_hash;      // provenance: hash of the input cube
    std::string geometry_hash;  // provenance: imaging geometry fingerprint
    std::string options;        // provenance: imaging options summary

    explicit Image3D(const VoxelGrid& g = {}) : grid(g), values(g.size()) {}
    cplx& at(int ix, int iy, int iz) { return values[grid.index(ix, iy, iz)]; }
    const cplx& at(int ix, int iy, int iz) const { return values[grid.index(ix, iy, iz)]; }
};

struct BackprojectOptions {
    int upsample = 8;
    Window window = Window::None;
    // Fixed per-voxel accumulation order; when off, parallel runs split
    // pulses across workers and merge partial sums in completion order.
    bool deterministic = true;
    int tile_voxels = 4096;
    // Only bursts in [first_burst, first_burst + n_bursts) are used; -1 = all.
    int first_burst = 0;
    int n_bursts = -1;

    static BackprojectOptions from_config(const Config& cfg);
    std::string summary() const;
};

struct BackprojectStats {
    std::size_t excluded_voxels = 0;
    std::vector<std::string> warnings;
};

/// Time-domain back-projection: for every voxel and pulse, the exact
/// bistatic path at that pulse's time picks a linearly interpolated sample
/// of the range-compressed pulse, phase-compensated by exp(+j 2 pi f_c R / c).
Image3D backproject(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                    const VoxelGrid& grid, const BackprojectOptions& opts = {}, BackprojectStats* stats = nullptr);

/// Same contract, voxel tiles processed by `workers` threads.
Image3D backproject_parallel(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                             const VoxelGrid& grid, const BackprojectOptions& opts, int workers,
                             BackprojectStats* stats = nullptr);

// Per-pulse back-projected contributions at a single target-frame point.
std::vector<cplx> pulse_phasors(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                                const Vec3& point, const BackprojectOptions& opts = {});

// 1 - |mean of unit phasors|, ignoring zero contributions.
double circular_variance(const std::vector<cplx>& phasors);

enum class SliceMode { Raw, MaxProjection };

struct SliceOptions {
    int axis = 1;  // 0 = x, 1 = y, 2 = z
    SliceMode mode = SliceMode::Raw;
    double db_floor = -40.0;
};

/// 8-bit magnitude slice in dB relative to the image peak. Columns run along
/// the lower remaining axis, rows along the higher one.
struct Slice {
    int width = 0;
    int height = 0;
    int index = 0;          // position along the slicing axis
    double coordinate = 0;  // target-frame coordinate of the slice, m
    std::vector<std::uint8_t> pixels;
};

std::vector<Slice> export_slices(const Image3D& image, const SliceOptions& opts);

}  // namespace misar

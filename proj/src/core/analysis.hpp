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
#include <span>
#include <string>

#include "imaging.hpp"

namespace misar {

inline constexpr double kPslFloorDb = -200.0;

// Index box [lo, hi] inclusive; hi < 0 means "to the end of the axis".
struct SearchRegion {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{-1, -1, -1};
};

struct CutMetrics {
    double width = 0.0;       // -3 dB width, same unit as spacing
    double psl_db = kPslFloorDb;
    double peak_offset = 0.0; // quadratic-interpolated peak, in samples from the max sample
    std::size_t peak_index = 0;
};

/// -3 dB width and sidelobe level of a 1D magnitude cut. The cut is
/// oversampled by linear interpolation; the width never reports less than
/// one input sample. The mainlobe covers the samples at or above -3 dB
/// around the peak and continues down to the first minimum on each side.
CutMetrics analyze_cut(std::span<const double> magnitudes, double spacing, int oversample = 4);

struct PsfReport {
    Vec3 peak_position;
    std::array<int, 3> peak_index{};
    double peak_value = 0.0;  // linear magnitude
    double peak_db = 0.0;     // 20 log10(peak_value)
    std::array<double, 3> widths{};  // -3 dB widths along x, y, z, m
    double psl_db = kPslFloorDb;
    std::size_t mainlobe_voxels = 0;
    std::string mainlobe;     // description of the mainlobe convention
};

/// Peak, per-axis -3 dB widths through the peak, and peak sidelobe level.
/// The 3D mainlobe is the connected -3 dB region of the peak plus every
/// voxel reachable from it along non-increasing magnitude; PSL is the
/// largest magnitude outside it.
PsfReport psf_metrics(const Image3D& image, const SearchRegion& region = {}, int oversample = 4);

struct Comparison {
    double psl_before_db = 0.0;
    double psl_after_db = 0.0;
    double psl_improvement_db = 0.0;   // before - after
    std::array<double, 3> width_before{};
    std::array<double, 3> width_after{};
    std::array<double, 3> width_delta{};  // after - before
    double peak_displacement = 0.0;       // m
};

Comparison compare_before_after(const Image3D& uncalibrated, const Image3D& calibrated,
                                const SearchRegion& region = {});

std::string report_text(const PsfReport& r);
std::string comparison_text(const Comparison& c);

}  // namespace misar

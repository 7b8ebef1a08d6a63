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

#include <cstdint>
#include <string>
#include <vector>

#include "calib.hpp"
#include "imaging.hpp"
#include "simulator.hpp"
#include "tracking.hpp"

namespace misar {

inline constexpr char kCubeMagic[4] = {'M', 'I', 'S', 'R'};
inline constexpr std::uint8_t kCubeVersion = 0x01;
inline constexpr std::size_t kCubeHeaderBytes = 128;

// Binary cube layout: 128-byte little-endian header, then interleaved f32
// (re, im), sample fastest, channel next, burst outermost.
std::string encode_cube(const RawDataCube& cube);
RawDataCube decode_cube(const std::string& bytes);
void write_cube(const std::string& path, const RawDataCube& cube);
RawDataCube read_cube(const std::string& path);
// SHA-256 hex of the encoded cube.
std::string cube_digest(const RawDataCube& cube);

// Text header terminated by "end_header\n", then f32 (re, im) pairs, x fastest.
std::string encode_image(const Image3D& image);
Image3D decode_image(const std::string& bytes);
void write_image(const std::string& path, const Image3D& image);
Image3D read_image(const std::string& path);

// CSV: t,x,y,z,vx,vy,vz
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text);
// CSV: t,x,y,z[,valid]
std::string measurements_to_csv(const std::vector<TrackMeasurement>& ms);
std::vector<TrackMeasurement> measurements_from_csv(const std::string& text);

// CSV: i,j,x_j,y_j,z_j,T,A,phi
std::string observations_to_csv(const std::vector<LinkObservation>& obs);
std::vector<LinkObservation> observations_from_csv(const std::string& text);

// CSV: x,y,z,re,im
std::string scene_to_csv(const Scene& scene);
Scene scene_from_csv(const std::string& text);

// Key-value text; `prefix` is "errors" for truth models, "calib" inside solutions.
std::string error_model_to_text(const ChannelErrorModel& model, const std::string& prefix = "errors");
ChannelErrorModel error_model_from_config(const Config& cfg, const std::string& prefix = "errors");
std::string solution_to_text(const CalibrationSolution& sol);
CalibrationSolution solution_from_text(const std::string& text);

std::string encode_pgm(const Slice& slice);
std::string slice_sidecar(const std::vector<Slice>& slices, const Image3D& image, const SliceOptions& opts);
// Writes slice_NNN.pgm files and slices.txt into dir.
void write_slices(const std::string& dir, const std::vector<Slice>& slices, const Image3D& image,
                  const SliceOptions& opts);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace misar

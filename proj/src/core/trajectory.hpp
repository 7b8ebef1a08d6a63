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

#include <span>
#include <vector>

#include "vec3.hpp"

namespace misar {

struct TrajectorySample {
    double t = 0.0;
    Vec3 position;  // target-frame origin in the scene frame
    Vec3 velocity;
};

/// Time-ordered target motion, linearly interpolated between samples.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::vector<TrajectorySample> samples);

    static Trajectory stationary(const Vec3& position, double t0, double t1);
    static Trajectory constant_velocity(const Vec3& start, const Vec3& velocity, double t0, double t1);

    const std::vector<TrajectorySample>& samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }
    double t_first() const { return samples_.front().t; }
    double t_last() const { return samples_.back().t; }
    bool covers(double t) const;

    // Throws a Usage error when t falls outside the span.
    Vec3 position_at(double t) const;
    // Segment slope at t (right-continuous; last segment at t_last).
    Vec3 velocity_at(double t) const;

private:
    std::size_t segment(double t) const;
    std::vector<TrajectorySample> samples_;
};

}  // namespace misar

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

#include "trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace misar {

namespace {
// Pulse timestamps are sums of products of decimal constants; allow a few ulps.
constexpr double kSpanSlack = 1e-12;
}  // namespace

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples))
{
    require(!samples_.empty(), ErrorKind::Usage, "trajectory: no samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        require(std::isfinite(s.t) && std::isfinite(s.position.norm()) && std::isfinite(s.velocity.norm()),
                ErrorKind::DataFormat, "trajectory: non-finite sample " + std::to_string(i));
        if (i > 0)
            require(s.t > samples_[i - 1].t, ErrorKind::DataFormat,
                    "trajectory: timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
    }
}

Trajectory Trajectory::stationary(const Vec3& position, double t0, double t1)
{
    return Trajectory({{t0, position, {}}, {t1, position, {}}});
}

Trajectory Trajectory::constant_velocity(const Vec3& start, const Vec3& velocity, double t0, double t1)
{
    return Trajectory({{t0, start, velocity}, {t1, start + velocity * (t1 - t0), velocity}});
}

bool Trajectory::covers(double t) const
{
    return !samples_.empty() && t >= t_first() - kSpanSlack && t <= t_last() + kSpanSlack;
}

std::size_t Trajectory::segment(double t) const
{
    if (!covers(t))
        fail(ErrorKind::Usage, "trajectory does not cover t = " + std::to_string(t) + " s (span " +
                                   std::to_string(samples_.empty() ? 0.0 : t_first()) + " .. " +
                                   std::to_string(samples_.empty() ? 0.0 : t_last()) + ")");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const TrajectorySample& s) { return v < s.t; });
    std::size_t hi = static_cast<std::size_t>(it - samples_.begin());
    if (hi == 0) hi = 1;
    if (hi >= samples_.size()) hi = samples_.size() - 1;
    return hi - 1;
}

Vec3 Trajectory::position_at(double t) const
{
    if (samples_.size() == 1) {
        require(covers(t), ErrorKind::Usage, "trajectory does not cover t = " + std::to_string(t));
        return samples_.front().position;
    }
    const std::size_t i = segment(t);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    if (t == a.t) return a.position;
    if (t == b.t) return b.position;
    const double w = (t - a.t) / (b.t - a.t);
    return a.position + (b.position - a.position) * w;
}

Vec3 Trajectory::velocity_at(double t) const
{
    if (samples_.size() == 1) return samples_.front().velocity;
    const std::size_t i = segment(t);
    const auto& a = samples_[i];
    const auto& b = samples_[i + 1];
    return (b.position - a.position) * (1.0 / (b.t - a.t));
}

}  // namespace misar

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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "tracking.hpp"

using namespace misar;

namespace {

std::vector<TrackMeasurement> linear(const Vec3& p0, const Vec3& v, double rate, double span)
{
    std::vector<TrackMeasurement> ms;
    for (int i = 0; i * (1.0 / rate) <= span + 1e-12; ++i) {
        const double t = i / rate;
        ms.push_back({t, p0 + v * t, true});
    }
    return ms;
}

}  // namespace

TEST_CASE("noiseless linear motion is tracked exactly")
{
    const Vec3 p0{-0.5, 0.02, 0.1}, v{0.55, -0.01, 0.02};
    const auto ms = linear(p0, v, 30, 2);
    const auto res = filter_track(ms, TrackingTuning{});
    CHECK(res.rejected == 0);
    CHECK(std::all_of(res.accepted.begin(), res.accepted.end(), [](bool a) { return a; }));
    REQUIRE(res.trajectory.samples().size() == ms.size());
    for (const auto& s : res.trajectory.samples()) {
        if (s.t < 0.5) continue;
        CHECK((s.position - (p0 + v * s.t)).norm() < 1e-9);
        CHECK((s.velocity - v).norm() < 1e-9);
    }
}

TEST_CASE("a 10 sigma jump is rejected and the state coasts")
{
    const auto ms = linear({0, 0, 0}, {0.5, 0, 0}, 30, 1);
    TrackingTuning tuning;
    tuning.smooth = false;
    const auto prefix = filter_track(std::vector<TrackMeasurement>(ms.begin(), ms.begin() + 20), tuning);
    const auto& last = prefix.trajectory.samples().back();
    TrackState st;
    st.t = last.t;
    for (int k = 0; k < 3; ++k) {
        st.axes[k].pos = last.position[k];
        st.axes[k].vel = last.velocity[k];
        st.axes[k].cov = {{{1e-4, 0}, {0, 1e-4}}};
    }
    TrackMeasurement jump = ms[20];
    jump.position.y += 10 * tuning.measurement_sigma + 10 * std::sqrt(1e-4);
    const StepResult rej = kf_step(st, jump, tuning.process_noise, 1e-4, 3.0);
    CHECK_FALSE(rej.accepted);
    TrackMeasurement missing = ms[20];
    missing.valid = false;
    const StepResult coast = kf_step(st, missing, tuning.process_noise, 1e-4, 3.0);
    for (int k = 0; k < 3; ++k) {
        CHECK(rej.state.axes[k].pos == coast.state.axes[k].pos);
        CHECK(rej.state.axes[k].vel == coast.state.axes[k].vel);
        CHECK(rej.state.axes[k].cov == coast.state.axes[k].cov);
        CHECK(coast.state.axes[k].pos == doctest::Approx(st.axes[k].pos + st.axes[k].vel * (ms[20].t - st.t)));
    }
    CHECK(kf_step(st, ms[20], tuning.process_noise, 1e-4, 3.0).accepted);

    auto with_jump = ms;
    with_jump[20].position.y += 0.1;
    const auto res = filter_track(with_jump, TrackingTuning{});
    CHECK_FALSE(res.accepted[20]);
    CHECK(res.rejected == 1);
}

TEST_CASE("filter input validation")
{
    CHECK_THROWS_AS(filter_track({}, TrackingTuning{}), Error);
    auto ms = linear({0, 0, 0}, {0.5, 0, 0}, 30, 0.2);
    std::swap(ms[2], ms[3]);
    CHECK_THROWS_AS(filter_track(ms, TrackingTuning{}), Error);
    TrackState st;
    st.axes[0].cov = {{{1, 0}, {0, 1}}};
    st.axes[1].cov = st.axes[2].cov = st.axes[0].cov;
    CHECK_THROWS(kf_step(st, {0.0, {}, true}, 0.01, 1e-4, 3));
}

TEST_CASE("resampling")
{
    const Trajectory t({{0.0, {0, 0, 0}, {}}, {1.0, {1, 2, 3}, {}}, {2.0, {3, 2, 1}, {}}});
    SUBCASE("existing sample is returned exactly")
    {
        const auto r = resample_track(t, {1.0});
        CHECK(r.samples()[0].position == Vec3{1, 2, 3});
    }
    SUBCASE("segment midpoint is the mean of the endpoints")
    {
        const auto r = resample_track(t, {1.5});
        CHECK(r.samples()[0].position == Vec3{2, 2, 2});
        CHECK(r.samples()[0].velocity == Vec3{2, 0, -2});
    }
    SUBCASE("outside the span is an error")
    {
        CHECK_THROWS_AS(resample_track(t, {2.5}), Error);
    }
    SUBCASE("pulse-rate resampling of a 30 Hz linear track")
    {
        // Dyadic rates and velocities keep every operation exact.
        const Vec3 v{0.5, -0.25, 0.125};
        std::vector<TrajectorySample> s;
        for (int i = 0; i <= 64; ++i) s.push_back({i / 32.0, v * (i / 32.0), v});
        const Trajectory track(s);
        std::vector<double> ts;
        for (int k = 0; k < 2048; ++k) ts.push_back(k / 1024.0);
        double worst = 0;
        for (const auto& r : resample_track(track, ts).samples()) worst = std::max(worst, (r.position - v * r.t).norm());
        CHECK(worst == 0.0);

        // 30 Hz track at 40 us pulses: rounding only.
        std::vector<TrajectorySample> s30;
        for (int i = 0; i <= 60; ++i) s30.push_back({i / 30.0, v * (i / 30.0), v});
        std::vector<double> pulses;
        for (double t = 0; t <= 2.0; t += 40e-6) pulses.push_back(t);
        worst = 0;
        for (const auto& r : resample_track(Trajectory(s30), pulses).samples())
            worst = std::max(worst, (r.position - v * r.t).norm());
        CHECK(worst < 1e-15);
    }
}

TEST_CASE("simulated measurements")
{
    const auto truth = Trajectory::constant_velocity({-0.5, 0, 0}, {0.55, 0, 0}, 0, 2);
    MeasurementNoise n;
    n.outlier_fraction = 0.05;
    n.seed = 3;
    const auto a = simulate_measurements(truth, n);
    const auto b = simulate_measurements(truth, n);
    CHECK(a.measurements.size() == 61);
    CHECK(a.is_outlier == b.is_outlier);
    for (std::size_t i = 0; i < a.measurements.size(); ++i) {
        CHECK(a.measurements[i].position == b.measurements[i].position);
        if (a.is_outlier[i]) {
            const Vec3 d = a.measurements[i].position - truth.position_at(a.measurements[i].t);
            for (int k = 0; k < 3; ++k) CHECK(std::abs(d[k]) > 5 * n.sigma);
        }
    }
}

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

#include <cmath>
#include <vector>

#include "calib.hpp"
#include "oracles.hpp"

using namespace misar;

namespace {

const ArrayGeometry& arc()
{
    static const ArrayGeometry g = geometry_from_config(Config{});
    return g;
}

ScanGrid single_point()
{
    ScanGrid g;
    g.extent_x = 0;
    g.extent_z = 0;
    return g;
}

const LinkObservation& find(const std::vector<LinkObservation>& obs, int antenna, int j)
{
    for (const auto& o : obs)
        if (o.antenna == antenna && o.grid_index == j) return o;
    FAIL("missing observation");
    return obs.front();
}

}  // namespace

TEST_CASE("scan grid layout")
{
    const ScanGrid g;
    CHECK(g.nx() == 11);
    CHECK(g.nz() == 11);
    CHECK(g.size() == 121);
    const Vec3 first = g.point(arc(), 0), last = g.point(arc(), 120);
    CHECK(first.x == doctest::Approx(-0.5));
    CHECK(first.z == doctest::Approx(-0.5));
    CHECK(last.x == doctest::Approx(0.5));
    CHECK(last.z == doctest::Approx(0.5));
    CHECK(first.y == doctest::Approx(0.0));
}

TEST_CASE("scan observables: direct evaluation")
{
    const ChirpParams p;
    ArrayGeometry g = arc();
    g.tx[0].position = {0, -1.5, 0};  // 1.5 m from the single grid point at the origin
    const auto obs = simulate_scan(g, ChannelErrorModel::identity(), single_point(), p);
    CHECK(obs.size() == kNumAntennas);
    const auto& o = find(obs, 0, 0);
    CHECK(o.delay == doctest::Approx(1.5 / oracle::c0).epsilon(1e-14));
    CHECK(o.delay * 1e9 == doctest::Approx(5.0035).epsilon(1e-4));
    CHECK(o.amplitude == doctest::Approx(1 / 2.25).epsilon(1e-14));
    const double lambda = oracle::c0 / 24e9;
    CHECK(lambda * 1e3 == doctest::Approx(12.4913).epsilon(1e-5));
    CHECK(std::abs(wrap_phase(o.phase - 2 * oracle::pi * 1.5 / lambda)) < 1e-9);
}

TEST_CASE("scan observables: additive delay and multiplicative amplitude")
{
    const ChirpParams p;
    const auto clean = simulate_scan(arc(), ChannelErrorModel::identity(), ScanGrid{}, p);
    ChannelErrorModel e;
    e.antennas[5].delay = 50e-12;
    e.antennas[5].amplitude = 2.0;
    const auto dirty = simulate_scan(arc(), e, ScanGrid{}, p);
    REQUIRE(clean.size() == dirty.size());
    for (std::size_t k = 0; k < clean.size(); ++k) {
        if (clean[k].antenna != 5) {
            CHECK(dirty[k].delay == clean[k].delay);
            CHECK(dirty[k].amplitude == clean[k].amplitude);
            continue;
        }
        CHECK(std::abs(dirty[k].delay - clean[k].delay - 50e-12) < 1e-21);
        CHECK(dirty[k].amplitude / clean[k].amplitude == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("observable extraction")
{
    const ChirpParams p;
    SUBCASE("clean 1.5 m link recovers the delay within 5 ps")
    {
        for (double r : {1.5, 1.5013, 1.7237}) {
            const LinkPulse lp{0, 0, {}, link_pulse(r, AntennaError{}, p)};
            const auto res = extract_observables({lp}, p);
            REQUIRE(res.observations.size() == 1);
            CHECK(std::abs(res.observations[0].delay - r / oracle::c0) < 5e-12);
            CHECK(res.observations[0].amplitude == doctest::Approx(1 / (r * r)).epsilon(0.02));
        }
    }
    SUBCASE("zero-amplitude pulse is dropped")
    {
        const LinkPulse lp{3, 7, {}, std::vector<cplx>(p.n_samples)};
        const auto res = extract_observables({lp}, p);
        CHECK(res.observations.empty());
        CHECK(res.warnings.size() == 1);
    }
    SUBCASE("a phase rotation of the pulse rotates the phase estimate")
    {
        const double theta = 2.2;
        LinkPulse a{0, 0, {}, link_pulse(1.5, AntennaError{}, p)};
        LinkPulse b = a;
        for (auto& s : b.samples) s *= std::polar(1.0, theta);
        const auto res = extract_observables({a, b}, p);
        REQUIRE(res.observations.size() == 2);
        CHECK(std::abs(wrap_phase(res.observations[1].phase - res.observations[0].phase - theta)) < 1e-12);
        CHECK(std::abs(res.observations[1].delay - res.observations[0].delay) < 1e-20);
    }
}

TEST_CASE("estimation round trips")
{
    const ChirpParams p;
    SUBCASE("zero-error observations give the identity")
    {
        const auto sol = estimate(simulate_scan(arc(), ChannelErrorModel::identity(), ScanGrid{}, p), arc(), p);
        CHECK(sol.converged);
        for (const auto& e : sol.errors.antennas) {
            CHECK(std::abs(e.delay) < 0.1e-12);
            CHECK(e.offset.norm() < 10e-6);
            CHECK(std::abs(e.phase) < 1e-4);
            CHECK(e.amplitude == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("injected 10 ps delay on the full 11x11 grid")
    {
        ChannelErrorModel truth;
        truth.antennas[13].delay = 10e-12;
        const auto sol = estimate(simulate_scan(arc(), truth, ScanGrid{}, p), arc(), p);
        CHECK(std::abs(sol.errors.antennas[13].delay - 10e-12) < 1e-12);
        CHECK(std::abs(sol.errors.antennas[12].delay) < 1e-12);
    }
    SUBCASE("injected offset (1 mm, 0, 0.5 mm)")
    {
        ChannelErrorModel truth;
        truth.antennas[4].offset = {1e-3, 0, 0.5e-3};
        const auto sol = estimate(simulate_scan(arc(), truth, ScanGrid{}, p), arc(), p);
        const Vec3 d = sol.errors.antennas[4].offset - truth.antennas[4].offset;
        CHECK(std::abs(d.x) < 0.1e-3);
        CHECK(std::abs(d.y) < 0.1e-3);
        CHECK(std::abs(d.z) < 0.1e-3);
    }
    SUBCASE("an unknown reference delay is removed by the gauge antenna")
    {
        ChannelErrorModel truth;
        truth.antennas[9].delay = 15e-12;
        ScanOptions so;
        so.reference_delay = 400e-12;
        EstimateOptions eo;
        eo.gauge_antenna = 0;
        const auto sol = estimate(simulate_scan(arc(), truth, ScanGrid{}, p, so), arc(), p, eo);
        CHECK(std::abs(sol.errors.antennas[0].delay) < 1e-15);
        CHECK(std::abs(sol.errors.antennas[9].delay - 15e-12) < 1e-12);
    }
    SUBCASE("too few grid points is an error")
    {
        ScanGrid tiny = single_point();
        CHECK_THROWS(estimate(simulate_scan(arc(), ChannelErrorModel::identity(), tiny, p), arc(), p));
    }
}

TEST_CASE("compensation")
{
    const ChirpParams p;
    const Scene scene{{Scatterer{{0, 0, 0}, {1, 0}}, Scatterer{{0.03, 0.01, -0.02}, {0.5, 0.2}}}};
    const auto traj = Trajectory::stationary({}, 0, 1);
    const RawDataCube clean = simulate_collection(scene, traj, arc(), ChannelErrorModel::identity(), p, 1, 0.02);
    SUBCASE("identity solution leaves the cube unchanged")
    {
        const RawDataCube out = compensate(clean, CalibrationSolution::identity(arc()));
        CHECK(out.data == clean.data);
    }
    SUBCASE("true electrical errors are removed")
    {
        ErrorSigmas s{30.0 * oracle::pi / 180.0, 20e-12, 0.0, 0.1};
        const ChannelErrorModel truth = random_errors(s, 4);
        const RawDataCube dirty = simulate_collection(scene, traj, arc(), truth, p, 1, 0.02);
        const RawDataCube fixed = compensate(dirty, truth);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < clean.data.size(); ++i) {
            num = std::max(num, std::abs(fixed.data[i] - clean.data[i]));
            den = std::max(den, std::abs(clean.data[i]));
        }
        CHECK(num / den < 1e-9);
    }
    SUBCASE("a solution for another geometry is refused")
    {
        ArrayGeometry other = arc();
        other.tx[0].position.x += 1e-3;
        CHECK_THROWS(compensate(clean, CalibrationSolution::identity(other)));
    }
}

TEST_CASE("calibrated geometry applies the estimated offsets")
{
    CalibrationSolution sol = CalibrationSolution::identity(arc());
    sol.errors.antennas[rx_antenna(3)].offset = {0, 1e-3, 0};
    const ArrayGeometry g = calibrated_geometry(arc(), sol);
    CHECK(g.rx[3].position.y == doctest::Approx(arc().rx[3].position.y + 1e-3).epsilon(1e-12));
    CHECK(g.tx[0].position == arc().tx[0].position);
}

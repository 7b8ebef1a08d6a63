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

// Invariant suites for every module.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "analysis.hpp"
#include "arraygeom.hpp"
#include "calib.hpp"
#include "fileio.hpp"
#include "hash.hpp"
#include "imaging.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "simulator.hpp"
#include "tracking.hpp"
#include "waveform.hpp"

using namespace misar;
namespace fs = std::filesystem;

namespace {

double rel_dev(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    REQUIRE(a.size() == b.size());
    double dev = 0, ref = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dev = std::max(dev, std::abs(a[i] - b[i]));
        ref = std::max(ref, std::abs(b[i]));
    }
    return ref > 0 ? dev / ref : dev;
}

const char* kSmall = R"(
scene.kind = point
collection.n_bursts = 2
errors.inject = false
image.dims = 13 13 13
image.spacing = 0.005 0.005 0.005
image.center = 0 0 0
)";

Scene scene_of(std::initializer_list<Scatterer> pts) { return Scene{std::vector<Scatterer>(pts)}; }

RawDataCube sim(const ExperimentSpec& spec, const Scene& scene, const ChannelErrorModel& errors = {})
{
    return simulate_collection(scene, truth_trajectory(spec), spec.geometry, errors, spec.chirp, spec.n_bursts,
                               spec.burst_interval);
}

RawDataCube sum(RawDataCube a, const RawDataCube& b)
{
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
}

}  // namespace

TEST_SUITE("arraygeom")
{
    TEST_CASE("planar virtual array is uniform")
    {
        Config cfg;
        cfg.set("geometry.layout", "planar");
        const ArrayGeometry g = geometry_from_config(cfg);
        std::vector<double> z;
        for (const auto& vc : virtual_channels(g)) z.push_back(vc.effective_center.z);
        std::sort(z.begin(), z.end());
        const double gap = z[1] - z[0];
        for (std::size_t i = 1; i < z.size(); ++i) CHECK(std::abs(z[i] - z[i - 1] - gap) < 1e-15);
        CHECK(gap == doctest::Approx(0.5 / 128).epsilon(1e-12));
    }

    TEST_CASE("midpoint law, arc constraint and slot bijection")
    {
        for (const char* layout : {"arc", "planar"}) {
            Config cfg;
            cfg.set("geometry.layout", layout);
            const ArrayGeometry g = geometry_from_config(cfg);
            std::set<int> slots;
            for (const auto& vc : virtual_channels(g)) {
                const Vec3 mid = (g.tx[vc.tx_index].position + g.rx[vc.rx_index].position) * 0.5;
                for (int a = 0; a < 3; ++a) CHECK(vc.effective_center[a] == mid[a]);
                slots.insert(vc.sequence_slot);
            }
            CHECK(slots.size() == 128);
            CHECK(*slots.begin() == 0);
            CHECK(*slots.rbegin() == 127);
            if (std::string(layout) == "arc")
                for (int i = 0; i < kNumAntennas; ++i) CHECK(std::abs(g.antenna_position(i).norm() - 1.5) < 1e-9);
        }
    }
}

TEST_SUITE("waveform")
{
    TEST_CASE("range compression is linear")
    {
        const ChirpParams p;
        const auto x = sample_beat_signal(3.0, {1.0, 0.0}, p).samples;
        const auto y = sample_beat_signal(3.7, {0.3, -0.2}, p).samples;
        const cplx a{0.7, 0.4}, b{-1.1, 0.25};
        std::vector<cplx> mix(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mix[i] = a * x[i] + b * y[i];
        for (Window w : {Window::None, Window::Hann}) {
            const auto rx = range_compress(x, p, w, 8).bins;
            const auto ry = range_compress(y, p, w, 8).bins;
            const auto rm = range_compress(mix, p, w, 8).bins;
            std::vector<cplx> expect(rx.size());
            for (std::size_t i = 0; i < rx.size(); ++i) expect[i] = a * rx[i] + b * ry[i];
            CHECK(rel_dev(rm, expect) < 1e-12);
        }
    }

    TEST_CASE("shift theorem")
    {
        const ChirpParams p;
        const auto x = sample_beat_signal(3.0, {1.0, 0.0}, p).samples;
        const double df = 2.0 * p.sample_rate() / compressed_length(p.n_samples, 8) * 5;
        std::vector<cplx> shifted(x.size());
        for (std::size_t n = 0; n < x.size(); ++n)
            shifted[n] = x[n] * std::polar(1.0, -2.0 * kPi * df * n * p.sample_interval());
        const auto r0 = range_compress(x, p, Window::None, 8);
        const auto r1 = range_compress(shifted, p, Window::None, 8);
        auto peak = [](const RangeProfile& r) {
            return std::max_element(r.bins.begin(), r.bins.end(),
                                    [](cplx u, cplx v) { return std::abs(u) < std::abs(v); }) -
                   r.bins.begin();
        };
        const double moved = (peak(r1) - peak(r0)) * r0.bin_spacing;
        CHECK(moved == doctest::Approx(df * kSpeedOfLight / p.slope()).epsilon(1e-9));
    }

    TEST_CASE("beat signal round trip within half a bin across the unambiguous span")
    {
        const ChirpParams p;
        RangeCompressor rc(p, Window::None, 8);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.05, p.unambiguous_path() - 0.05);
        for (int i = 0; i < 50; ++i) {
            const double path = u(rng);
            const auto prof = rc.compress(sample_beat_signal(path, {1.0, 0.0}, p).samples);
            const auto it = std::max_element(prof.bins.begin(), prof.bins.end(),
                                             [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
            CHECK(std::abs((it - prof.bins.begin()) * prof.bin_spacing - path) <= 0.5 * prof.bin_spacing + 1e-12);
        }
    }
}

TEST_SUITE("simulator")
{
    TEST_CASE("superposition")
    {
        const ExperimentSpec spec = oracle::spec_from(kSmall);
        const Scatterer a{{0.01, 0.02, -0.03}, {1.0, 0.0}}, b{{-0.04, 0.0, 0.05}, {0.3, 0.7}};
        const ChannelErrorModel err = random_errors({0.5, 20e-12, 2e-3, 0.1}, 3);
        const auto ab = sim(spec, scene_of({a, b}), err);
        const auto sa = sim(spec, scene_of({a}), err);
        const auto sb = sim(spec, scene_of({b}), err);
        CHECK(rel_dev(ab.data, sum(sa, sb).data) < 1e-12);
    }

    TEST_CASE("reflectivity phase rotates the echo")
    {
        const ExperimentSpec spec = oracle::spec_from(kSmall);
        const double theta = 1.234;
        const auto s0 = sim(spec, scene_of({{{0.02, 0.01, 0.0}, {0.8, 0.0}}}));
        const auto s1 = sim(spec, scene_of({{{0.02, 0.01, 0.0}, std::polar(0.8, theta)}}));
        auto rotated = s0.data;
        for (auto& v : rotated) v *= std::polar(1.0, theta);
        CHECK(rel_dev(s1.data, rotated) < 1e-12);
    }

    TEST_CASE("compensating with the true error model restores the error-free cube")
    {
        const ExperimentSpec spec = oracle::spec_from(kSmall);
        const Scene scene = scene_of({{{0.01, 0.0, 0.02}, {1.0, 0.0}}, {{-0.03, 0.02, -0.01}, {0.5, 0.0}}});
        const ChannelErrorModel err = random_errors({0.5, 20e-12, 2e-3, 0.1}, 11);
        ChannelErrorModel geometric = ChannelErrorModel::identity();
        for (int i = 0; i < kNumAntennas; ++i) geometric.antennas[i].offset = err.antennas[i].offset;
        const auto restored = compensate(sim(spec, scene, err), err);
        CHECK(rel_dev(restored.data, sim(spec, scene, geometric).data) < 1e-9);
    }
}

TEST_SUITE("calib")
{
    const char* kCal = "scene.kind = point\n";

    TEST_CASE("identity solution leaves the cube unchanged")
    {
        const ExperimentSpec spec = oracle::spec_from(kSmall);
        const auto cube = sim(spec, scene_of({{{0, 0, 0}, {1, 0}}}), random_errors({0.5, 20e-12, 2e-3, 0.1}, 2));
        CHECK(compensate(cube, CalibrationSolution::identity(spec.geometry)).data == cube.data);
    }

    TEST_CASE("identifiability: delay and position shifts are not interchangeable")
    {
        const ExperimentSpec spec = oracle::spec_from(kCal);
        const ChannelErrorModel truth = random_errors({0.5, 20e-12, 2e-3, 0.1}, 9);
        const auto obs = simulate_scan(spec.geometry, truth, spec.scan, spec.chirp);
        for (int i : {0, 7, 8, 23}) {
            const Vec3 p = spec.geometry.antenna_position(i) + truth.antennas[i].offset;
            const double tau = truth.antennas[i].delay;
            const double at_truth = delay_cost(obs, i, p, tau);
            for (double dt : {-5e-12, -1e-12, 1e-12, 5e-12}) {
                const double d = kSpeedOfLight * dt;
                for (const Vec3& dir : {Vec3{0, 1, 0}, Vec3{0, -1, 0}, Vec3{1, 0, 0}, Vec3{0, 0, 1}, Vec3{0, 0, 0}})
                    CHECK(delay_cost(obs, i, p + dir * d, tau + dt) > at_truth + 1e-12);
            }
        }
    }

    TEST_CASE("estimation error shrinks with observation noise")
    {
        const ExperimentSpec spec = oracle::spec_from(kCal);
        const ChannelErrorModel truth = random_errors({0.5, 20e-12, 2e-3, 0.1}, 4);
        std::vector<double> err;
        for (double noise : {-HUGE_VAL, -40.0, -20.0}) {
            ScanOptions so;
            so.noise_db = noise;
            so.seed = 77;
            const auto obs = simulate_scan(spec.geometry, truth, spec.scan, spec.chirp, so);
            const auto sol = estimate(obs, spec.geometry, spec.chirp);
            double e = 0;
            for (int i = 0; i < kNumAntennas; ++i)
                e = std::max(e, distance(sol.errors.antennas[i].offset, truth.antennas[i].offset));
            err.push_back(e);
        }
        CHECK(err[0] < 1e-9);
        CHECK(err[0] <= err[1]);
        CHECK(err[1] <= err[2]);
    }

    TEST_CASE("adding 2 pi to a true phase leaves the estimates unchanged")
    {
        const ExperimentSpec spec = oracle::spec_from(kCal);
        ChannelErrorModel truth = random_errors({0.5, 20e-12, 2e-3, 0.1}, 6);
        const auto a = estimate(simulate_scan(spec.geometry, truth, spec.scan, spec.chirp), spec.geometry, spec.chirp);
        for (auto& e : truth.antennas) e.phase += 2.0 * kPi;
        const auto b = estimate(simulate_scan(spec.geometry, truth, spec.scan, spec.chirp), spec.geometry, spec.chirp);
        for (int i = 0; i < kNumAntennas; ++i) {
            CHECK(std::abs(wrap_phase(a.errors.antennas[i].phase - b.errors.antennas[i].phase)) < 1e-9);
            CHECK(std::abs(a.errors.antennas[i].delay - b.errors.antennas[i].delay) < 1e-16);
            CHECK(distance(a.errors.antennas[i].offset, b.errors.antennas[i].offset) < 1e-9);
        }
    }
}

TEST_SUITE("tracking")
{
    std::vector<TrackMeasurement> noisy_track(std::uint64_t seed, double outliers)
    {
        MeasurementNoise mn;
        mn.sigma = 0.01;
        mn.seed = seed;
        mn.outlier_fraction = outliers;
        return simulate_measurements(Trajectory::constant_velocity({0, 0, 0}, {0.5, 0.1, 0}, 0, 2), mn).measurements;
    }

    TEST_CASE("covariance stays symmetric positive definite")
    {
        const auto ms = noisy_track(3, 0.1);
        TrackState st;
        st.t = ms[0].t;
        for (int k = 0; k < 3; ++k) {
            st.axes[k].pos = ms[0].position[k];
            st.axes[k].cov = {{{1e-4, 0}, {0, 1.0}}};
        }
        int rejected = 0;
        for (std::size_t i = 1; i < ms.size(); ++i) {
            const auto r = kf_step(st, ms[i], 0.01, 1e-4, 3.0);
            rejected += !r.accepted;
            st = r.state;
            CHECK(st.covariance_valid());
            for (const auto& a : st.axes) {
                CHECK(a.cov[0][1] == a.cov[1][0]);
                CHECK(a.cov[0][0] > 0);
                CHECK(a.cov[0][0] * a.cov[1][1] - a.cov[0][1] * a.cov[1][0] > 0);
            }
        }
        CHECK(rejected > 0);
    }

    TEST_CASE("raising the gate never decreases the accepted count")
    {
        // Every measurement gated from the same state sequence (the filter
        // run with the widest gate), so only the gate differs.
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto ms = noisy_track(seed, 0.1);
            TrackingTuning wide;
            wide.gate_sigma = 100.0;
            wide.smooth = false;
            const Trajectory states = filter_track(ms, wide).trajectory;
            int last = -1;
            for (double gate : {0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 100.0}) {
                int accepted = 0;
                for (std::size_t i = 1; i < ms.size(); ++i) {
                    TrackState st;
                    st.t = ms[i - 1].t;
                    for (int k = 0; k < 3; ++k) {
                        st.axes[k].pos = states.samples()[i - 1].position[k];
                        st.axes[k].vel = states.samples()[i - 1].velocity[k];
                        st.axes[k].cov = {{{1e-4, 1e-4}, {1e-4, 1e-2}}};
                    }
                    accepted += kf_step(st, ms[i], 0.01, 1e-4, gate).accepted;
                }
                CHECK(accepted >= last);
                last = accepted;
            }
        }
    }

    TEST_CASE("filtered variance is below the measurement variance")
    {
        const Trajectory truth = Trajectory::constant_velocity({0, 0, 0}, {0.5, 0.1, 0}, 0, 2);
        double se = 0;
        int n = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            TrackingTuning t;
            t.smooth = false;
            const auto fr = filter_track(noisy_track(100 + seed, 0.0), t);
            for (const auto& s : fr.trajectory.samples()) {
                if (s.t < 0.5) continue;
                { const double d = (s.position - truth.position_at(s.t)).norm(); se += d * d / 3.0; }
                ++n;
            }
        }
        CHECK(se / n < 1e-4);
    }
}

TEST_SUITE("imaging")
{
    const char* kImg = R"(
scene.kind = point
errors.inject = false
image.dims = 13 13 13
image.spacing = 0.005 0.005 0.005
image.center = 0 0 0
)";

    TEST_CASE("back-projection is linear in the data")
    {
        const ExperimentSpec spec = oracle::spec_from(std::string(kImg) + "collection.n_bursts = 4\n");
        const auto c1 = sim(spec, scene_of({{{0.01, 0, 0}, {1, 0}}}));
        const auto c2 = sim(spec, scene_of({{{-0.02, 0.01, 0.01}, {0.4, 0.3}}}));
        const Trajectory traj = truth_trajectory(spec);
        const auto i1 = backproject(c1, spec.geometry, traj, spec.grid);
        const auto i2 = backproject(c2, spec.geometry, traj, spec.grid);
        const auto i12 = backproject(sum(c1, c2), spec.geometry, traj, spec.grid);
        std::vector<cplx> expect(i1.values.size());
        for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = i1.values[i] + i2.values[i];
        CHECK(rel_dev(i12.values, expect) < 1e-12);
    }

    TEST_CASE("translating the scene by one voxel moves the peak by one voxel")
    {
        const ExperimentSpec spec = oracle::spec_from(kImg);
        const Trajectory traj = truth_trajectory(spec);
        const auto base = psf_metrics(backproject(sim(spec, scene_of({{{0, 0, 0}, {1, 0}}})), spec.geometry, traj,
                                                  spec.grid));
        for (int a = 0; a < 3; ++a) {
            Vec3 shift;
            shift[a] = spec.grid.spacing[a];
            const auto moved = psf_metrics(
                backproject(sim(spec, scene_of({{shift, {1, 0}}})), spec.geometry, traj, spec.grid));
            CHECK(moved.peak_index[a] == base.peak_index[a] + 1);
            CHECK(std::abs(moved.peak_position[a] - base.peak_position[a] - shift[a]) <= 0.5 * spec.grid.spacing[a]);
        }
    }

    TEST_CASE("halving the synthetic aperture doubles the horizontal width")
    {
        const ExperimentSpec spec = oracle::spec_from(R"(
scene.kind = point
errors.inject = false
image.dims = 97 3 3
image.spacing = 0.0025 0.005 0.005
image.center = 0 0 0
)");
        const Trajectory traj = truth_trajectory(spec);
        const auto cube = sim(spec, scene_of({{{0, 0, 0}, {1, 0}}}));
        BackprojectOptions half = spec.imaging;
        half.first_burst = 16;
        half.n_bursts = 32;
        const double full_w = psf_metrics(backproject(cube, spec.geometry, traj, spec.grid)).widths[0];
        const double half_w = psf_metrics(backproject(cube, spec.geometry, traj, spec.grid, half)).widths[0];
        CHECK(half_w / full_w == doctest::Approx(2.0).epsilon(0.15));
    }

    TEST_CASE("phasors at the true point are coherent")
    {
        const ExperimentSpec spec = oracle::spec_from(std::string(kImg) + "collection.n_bursts = 8\n");
        const Vec3 q{0.012, -0.004, 0.007};
        const auto cube = sim(spec, scene_of({{q, {1, 0}}}));
        const auto ph = pulse_phasors(cube, spec.geometry, truth_trajectory(spec), q);
        CHECK(ph.size() == 8u * 128u);
        CHECK(circular_variance(ph) < 0.01);
    }
}

TEST_SUITE("analysis")
{
    Image3D blob(double gain, bool mirror)
    {
        Image3D img(VoxelGrid::centered({}, {0.005, 0.005, 0.005}, {17, 15, 13}));
        const auto& g = img.grid;
        for (int z = 0; z < g.dims[2]; ++z)
            for (int y = 0; y < g.dims[1]; ++y)
                for (int x = 0; x < g.dims[0]; ++x) {
                    const int xm = mirror ? g.dims[0] - 1 - x : x;
                    const double u = (xm - 6.3) * 0.7, v = (y - 7.2) * 0.5, w = (z - 5.8) * 0.9;
                    const auto sinc = [](double t) { return t == 0 ? 1.0 : std::sin(kPi * t) / (kPi * t); };
                    img.at(x, y, z) = gain * sinc(u) * sinc(v) * sinc(w);
                }
        return img;
    }

    TEST_CASE("scale invariance")
    {
        const auto a = psf_metrics(blob(1.0, false));
        const auto b = psf_metrics(blob(37.5, false));
        CHECK(a.peak_index == b.peak_index);
        for (int k = 0; k < 3; ++k) {
            CHECK(a.widths[k] == doctest::Approx(b.widths[k]).epsilon(1e-12));
            CHECK(a.peak_position[k] == doctest::Approx(b.peak_position[k]).epsilon(1e-12));
        }
        CHECK(a.psl_db == doctest::Approx(b.psl_db).epsilon(1e-12));
    }

    TEST_CASE("mirroring mirrors the peak")
    {
        const Image3D a = blob(1.0, false), b = blob(1.0, true);
        const auto pa = psf_metrics(a), pb = psf_metrics(b);
        CHECK(pb.peak_index[0] == a.grid.dims[0] - 1 - pa.peak_index[0]);
        const double centre = a.grid.origin.x + 0.5 * (a.grid.dims[0] - 1) * a.grid.spacing.x;
        CHECK(pb.peak_position.x - centre == doctest::Approx(centre - pa.peak_position.x).epsilon(1e-12));
        CHECK(pa.widths[0] == doctest::Approx(pb.widths[0]).epsilon(1e-12));
        CHECK(pa.psl_db == doctest::Approx(pb.psl_db).epsilon(1e-12));
    }
}

TEST_SUITE("files")
{
    TEST_CASE("cube round trip is byte-identical")
    {
        const ExperimentSpec spec = oracle::spec_from(kSmall);
        auto cube = add_noise(sim(spec, scene_of({{{0.01, 0, 0}, {1, 0}}})), 10.0, 4);
        const std::string a = encode_cube(cube);
        CHECK(encode_cube(decode_cube(a)) == a);
    }

    TEST_CASE("image round trip is byte-identical")
    {
        Image3D img(VoxelGrid::centered({0.1, -0.2, 0.3}, {0.004, 0.005, 0.006}, {5, 4, 3}));
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        for (auto& v : img.values) v = {g(rng), g(rng)};
        img.cube_hash = "abc";
        img.options = "upsample=8";
        const std::string a = encode_image(img);
        CHECK(encode_image(decode_image(a)) == a);
    }

    TEST_CASE("text and CSV round trips are byte-identical")
    {
        const ExperimentSpec spec = oracle::spec_from("scene.kind = point\n");
        const ChannelErrorModel err = random_errors({0.5, 20e-12, 2e-3, 0.1}, 8);
        const auto obs = simulate_scan(spec.geometry, err, spec.scan, spec.chirp);
        const std::string o = observations_to_csv(obs);
        CHECK(observations_to_csv(observations_from_csv(o)) == o);
        const std::string s = solution_to_text(estimate(obs, spec.geometry, spec.chirp));
        CHECK(solution_to_text(solution_from_text(s)) == s);
        const std::string e = error_model_to_text(err);
        CHECK(error_model_to_text(error_model_from_config(Config::parse(e))) == e);

        MeasurementNoise mn;
        mn.seed = 2;
        const Trajectory truth = Trajectory::constant_velocity({0, 0, 0}, {0.5, 0, 0}, 0, 1);
        const std::string m = measurements_to_csv(simulate_measurements(truth, mn).measurements);
        CHECK(measurements_to_csv(measurements_from_csv(m)) == m);
        const std::string t = trajectory_to_csv(filter_track(measurements_from_csv(m), {}).trajectory);
        CHECK(trajectory_to_csv(trajectory_from_csv(t)) == t);
        const std::string sc = scene_to_csv(make_humanoid({}).scene);
        CHECK(scene_to_csv(scene_from_csv(sc)) == sc);
    }
}

TEST_SUITE("pipeline")
{
    TEST_CASE("reruns are reproducible and the imaging stage is isolated")
    {
        const fs::path base = fs::temp_directory_path() / "misar_property_pipeline";
        fs::remove_all(base);
        auto spec_for = [&](const char* sub) {
            return oracle::spec_from(std::string(R"(
scene.kind = point
scene.points = 0 0 0  0.015 0.01 -0.01
collection.n_bursts = 8
image.dims = 16 16 8
experiment.workers = 3
experiment.out = )") + (base / sub).string() + "\n");
        };
        const auto spec = spec_for("a");
        const ExperimentResult a = run_experiment(spec);
        const ExperimentResult b = run_experiment(spec_for("b"));
        for (const char* f : {"cube.bin", "scan.csv", "calib.txt", "measurements.csv", "track.csv", "image.bin",
                              "image_uncalibrated.bin", "report.txt", "report.csv"})
            CHECK_MESSAGE(read_file((base / "a" / f).string()) == read_file((base / "b" / f).string()), f);

        const RawDataCube cube = read_cube((base / "a" / "cube.bin").string());
        const auto sol = solution_from_text(read_file((base / "a" / "calib.txt").string()));
        const auto traj = trajectory_from_csv(read_file((base / "a" / "track.csv").string()));
        const Image3D img = image_stage(cube, spec.geometry, sol, traj, spec.grid, spec.imaging, 1);
        CHECK(sha256_hex(encode_image(img)) == a.image_hash);
        fs::remove_all(base);
    }
}

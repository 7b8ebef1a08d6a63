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

#include "simulator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "error.hpp"
#include "parallel.hpp"

namespace misar {

namespace {
constexpr double kMinRange = 1e-9;

constexpr std::size_t kLanes = 8;

// acc[n][l] += p[l] * step[l]^n for n in [0, ns).
void advance_lanes(std::size_t ns, double* pr, double* pi, const double* sr, const double* si, double* acc_r,
                   double* acc_i)
{
    for (std::size_t n = 0; n < ns; ++n) {
        double* ar = acc_r + n * kLanes;
        double* ai = acc_i + n * kLanes;
        for (std::size_t l = 0; l < kLanes; ++l) {
            ar[l] += pr[l];
            ai[l] += pi[l];
            const double nr = pr[l] * sr[l] - pi[l] * si[l];
            pi[l] = pr[l] * si[l] + pi[l] * sr[l];
            pr[l] = nr;
        }
    }
}

// Sums the dechirped tones of all scatterers into out. Scatterers are
// advanced eight at a time by phasor recurrence (drift ~1e-13 over a pulse).
void accumulate_pulse(std::span<cplx> out, const Scene& scene, const Vec3& origin, const Vec3& tx, const Vec3& rx,
                      cplx channel_gain, double channel_delay, const ChirpParams& params, bool spreading_loss)
{
    const std::size_t ns = out.size();
    const double step_scale = params.slope() * params.sample_interval();
    std::vector<double> acc_r(ns * kLanes, 0.0), acc_i(ns * kLanes, 0.0);
    double pr[kLanes], pi[kLanes], sr[kLanes], si[kLanes];
    std::size_t used = 0;

    auto flush = [&] {
        for (std::size_t l = used; l < kLanes; ++l) pr[l] = pi[l] = sr[l] = si[l] = 0.0;
        advance_lanes(ns, pr, pi, sr, si, acc_r.data(), acc_i.data());
        used = 0;
    };

    for (const auto& s : scene.scatterers) {
        const Vec3 p = origin + s.position;
        const double rt = distance(tx, p);
        const double rr = distance(rx, p);
        if (rt < kMinRange || rr < kMinRange)
            fail(ErrorKind::Numerical, "scatterer coincides with an antenna phase center");
        cplx amp = s.reflectivity * channel_gain;
        if (spreading_loss) amp /= rt * rr;
        if (amp == cplx{}) continue;
        const double tau = (rt + rr) / kSpeedOfLight + channel_delay;
        const double c0 = params.f_start * tau, c1 = step_scale * tau;
        const cplx start = amp * std::polar(1.0, -2.0 * kPi * (c0 - std::nearbyint(c0)));
        const cplx step = std::polar(1.0, -2.0 * kPi * (c1 - std::nearbyint(c1)));
        pr[used] = start.real();
        pi[used] = start.imag();
        sr[used] = step.real();
        si[used] = step.imag();
        if (++used == kLanes) flush();
    }
    if (used > 0) flush();
    for (std::size_t n = 0; n < ns; ++n) {
        double re = 0.0, im = 0.0;
        for (std::size_t l = 0; l < kLanes; ++l) {
            re += acc_r[n * kLanes + l];
            im += acc_i[n * kLanes + l];
        }
        out[n] += cplx{re, im};
    }
}
}  // namespace

RawDataCube::RawDataCube(int bursts, int channels, const ChirpParams& params, double interval)
    : n_bursts(bursts), n_channels(channels), chirp(params), burst_interval(interval)
{
    require(bursts >= 1 && channels >= 1, ErrorKind::Usage, "cube dimensions must be positive");
    data.assign(static_cast<std::size_t>(bursts) * channels * params.n_samples, cplx{});
}

void RawDataCube::validate() const
{
    require(n_bursts >= 1 && n_channels >= 1 && chirp.n_samples >= 2, ErrorKind::DataFormat,
            "cube: bad dimensions");
    require(data.size() == static_cast<std::size_t>(n_bursts) * n_channels * chirp.n_samples,
            ErrorKind::DataFormat, "cube: payload size does not match dimensions");
    if (n_bursts > 1)
        require(burst_interval >= n_channels * chirp.prt, ErrorKind::DataFormat,
                "cube: burst interval shorter than one burst");
}

std::vector<cplx> simulate_pulse(const Scene& scene, const Vec3& target_origin, const VirtualChannel& channel,
                                 const ArrayGeometry& geom, const ChannelErrorModel& errors,
                                 const ChirpParams& params, const SimulationOptions& opts)
{
    errors.validate();
    const int m = channel.tx_index;
    const int n = channel.rx_index;
    const Vec3 tx = geom.tx.at(m).position + errors.antennas[tx_antenna(m)].offset;
    const Vec3 rx = geom.rx.at(n).position + errors.antennas[rx_antenna(n)].offset;
    const cplx gain = std::polar(errors.channel_amplitude(m, n), errors.channel_phase(m, n));
    std::vector<cplx> out(params.n_samples);
    accumulate_pulse(out, scene, target_origin, tx, rx, gain, errors.channel_delay(m, n), params,
                     opts.spreading_loss);
    return out;
}

RawDataCube simulate_collection(const Scene& scene, const Trajectory& trajectory, const ArrayGeometry& geom,
                                const ChannelErrorModel& errors, const ChirpParams& params, int n_bursts,
                                double burst_interval, const SimulationOptions& opts)
{
    params.validate();
    errors.validate();
    geom.validate();
    require(n_bursts >= 1, ErrorKind::Usage, "simulate: n_bursts must be >= 1");
    require(n_bursts == 1 || burst_interval >= kNumChannels * params.prt, ErrorKind::Config,
            "simulate: burst interval shorter than one burst");

    RawDataCube cube(n_bursts, kNumChannels, params, burst_interval);
    cube.spreading_loss = opts.spreading_loss;
    cube.geometry_fingerprint = geometry_fingerprint(geom);

    for (double t : {cube.pulse_time(0, 0), cube.last_pulse_time()})
        require(trajectory.covers(t), ErrorKind::Usage,
                "simulate: trajectory coverage gap at t = " + std::to_string(t) + " s");

    const ArrayGeometry truth = perturb_geometry(geom, errors);
    const auto channels = virtual_channels(truth);
    const std::size_t n_pulses = static_cast<std::size_t>(n_bursts) * kNumChannels;
    parallel_for(n_pulses, resolve_workers(opts.workers), [&](std::size_t p) {
        const int b = static_cast<int>(p / kNumChannels);
        const auto& ch = channels[p % kNumChannels];
        const Vec3 origin = trajectory.position_at(cube.pulse_time(b, ch.sequence_slot));
        const cplx gain = std::polar(errors.channel_amplitude(ch.tx_index, ch.rx_index),
                                     errors.channel_phase(ch.tx_index, ch.rx_index));
        accumulate_pulse(cube.pulse(b, ch.sequence_slot), scene, origin, truth.tx[ch.tx_index].position,
                         truth.rx[ch.rx_index].position, gain, errors.channel_delay(ch.tx_index, ch.rx_index),
                         params, opts.spreading_loss);
    });
    return cube;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

RawDataCube add_noise(const RawDataCube& cube, double snr_db, std::uint64_t seed, int workers)
{
    require(!std::isnan(snr_db) && snr_db != -INFINITY, ErrorKind::Usage, "add_noise: snr must be finite or +inf");
    RawDataCube out = cube;
    if (snr_db == INFINITY) return out;

    double power = 0.0;
    for (const auto& v : cube.data) power += std::norm(v);
    power /= static_cast<double>(cube.data.size());
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0) / 2.0);
    out.noisy = true;
    out.seed = seed;
    if (!(sigma > 0.0)) return out;

    const std::size_t n_pulses = static_cast<std::size_t>(cube.n_bursts) * cube.n_channels;
    parallel_for(n_pulses, resolve_workers(workers), [&](std::size_t p) {
        std::mt19937_64 rng(mix_seed(seed, p));
        std::normal_distribution<double> gauss(0.0, sigma);
        auto pulse = out.pulse(static_cast<int>(p / cube.n_channels), static_cast<int>(p % cube.n_channels));
        for (auto& v : pulse) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            v += cplx(re, im);
        }
    });
    return out;
}

}  // namespace misar

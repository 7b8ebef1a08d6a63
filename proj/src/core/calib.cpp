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

#include "calib.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "error.hpp"
#include "parallel.hpp"

namespace misar {

ScanGrid ScanGrid::from_config(const Config& cfg)
{
    ScanGrid g;
    g.extent_x = cfg.get_double("calib.grid_extent_x", g.extent_x);
    g.extent_z = cfg.get_double("calib.grid_extent_z", g.extent_z);
    g.step = cfg.get_double("calib.grid_step", 0.1);
    g.plane_offset = cfg.get_double("calib.plane_offset", g.plane_offset);
    require(g.step > 0.0 && g.extent_x >= 0.0 && g.extent_z >= 0.0 && g.plane_offset > 0.0, ErrorKind::Config,
            "calib: grid step and plane offset must be positive");
    return g;
}

int ScanGrid::nx() const { return static_cast<int>(std::floor(extent_x / step + 1e-9)) + 1; }
int ScanGrid::nz() const { return static_cast<int>(std::floor(extent_z / step + 1e-9)) + 1; }

Vec3 ScanGrid::point(const ArrayGeometry& geom, std::size_t j) const
{
    const int ix = static_cast<int>(j % nx());
    const int iz = static_cast<int>(j / nx());
    const double x0 = -0.5 * (nx() - 1) * step;
    const double z0 = -0.5 * (nz() - 1) * step;
    return {x0 + ix * step, -geom.arc_radius + plane_offset, z0 + iz * step};
}

std::vector<LinkObservation> simulate_scan(const ArrayGeometry& geom, const ChannelErrorModel& truth,
                                           const ScanGrid& grid, const ChirpParams& params, const ScanOptions& opts)
{
    truth.validate();
    require(grid.step > 0.0, ErrorKind::Config, "scan grid step must be positive");
    const double lambda = params.wavelength_center();
    const double noise = std::isinf(opts.noise_db) && opts.noise_db < 0 ? 0.0 : std::pow(10.0, opts.noise_db / 20.0);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<LinkObservation> out;
    out.reserve(grid.size() * kNumAntennas);
    for (int i = 0; i < kNumAntennas; ++i) {
        const auto& e = truth.antennas[i];
        const Vec3 p = geom.antenna_position(i) + e.offset;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const Vec3 q = grid.point(geom, j);
            const double r = distance(p, q);
            require(r > 1e-9, ErrorKind::Numerical, "scan point coincides with antenna " + std::to_string(i));
            LinkObservation o;
            o.antenna = i;
            o.grid_index = static_cast<int>(j);
            o.point = q;
            o.delay = r / kSpeedOfLight + e.delay + opts.reference_delay;
            o.amplitude = e.amplitude / std::pow(r, opts.amplitude_exponent);
            double phase = 2.0 * kPi * r / lambda + e.phase;
            if (noise > 0.0) {
                o.delay += noise / params.bandwidth() * gauss(rng);
                o.amplitude *= std::max(1.0 + noise * gauss(rng), 1e-3);
                phase += noise * gauss(rng);
            }
            o.phase = wrap_phase(phase);
            out.push_back(o);
        }
    }
    return out;
}

std::vector<cplx> link_pulse(double range, const AntennaError& e, const ChirpParams& params,
                             double amplitude_exponent)
{
    const cplx amp = std::polar(e.amplitude / std::pow(range, amplitude_exponent), e.phase);
    return sample_beat_signal(range, amp, params, e.delay).samples;
}

ExtractionResult extract_observables(const std::vector<LinkPulse>& pulses, const ChirpParams& params,
                                     const ExtractOptions& opts)
{
    ExtractionResult res;
    RangeCompressor rc(params, Window::None, opts.upsample);
    const double peak_gain = params.n_samples / std::sqrt(static_cast<double>(rc.fft_size()));
    std::vector<cplx> bins(rc.fft_size());
    std::vector<double> power(bins.size());
    for (const auto& pulse : pulses) {
        rc.compress_into(pulse.samples, bins);
        std::size_t k = 0;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            power[b] = std::norm(bins[b]);
            if (power[b] > power[k]) k = b;
        }
        std::vector<double> sorted = power;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        if (!(power[k] > 0.0) || power[k] < opts.floor_ratio * median) {
            res.warnings.push_back("antenna " + std::to_string(pulse.antenna) + " point " +
                                   std::to_string(pulse.grid_index) + ": no peak above noise floor, dropped");
            continue;
        }
        // Quadratic interpolation of the magnitude around the peak bin.
        const std::size_t n = bins.size();
        const double ym = std::abs(bins[(k + n - 1) % n]);
        const double y0 = std::abs(bins[k]);
        const double yp = std::abs(bins[(k + 1) % n]);
        const double denom = ym - 2.0 * y0 + yp;
        const double frac = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
        const double peak_mag = y0 - 0.25 * (ym - yp) * frac;

        LinkObservation o;
        o.antenna = pulse.antenna;
        o.grid_index = pulse.grid_index;
        o.point = pulse.point;
        o.delay = rc.bin_spacing() * (static_cast<double>(k) + frac) / kSpeedOfLight;
        o.amplitude = peak_mag / peak_gain;
        o.phase = wrap_phase(std::arg(bins[k]));
        res.observations.push_back(o);
    }
    return res;
}

double delay_cost(const std::vector<LinkObservation>& observations, int antenna, const Vec3& position, double delay)
{
    double cost = 0.0;
    for (const auto& o : observations) {
        if (o.antenna != antenna) continue;
        const double r = distance(position, o.point) + kSpeedOfLight * (delay - o.delay);
        cost += r * r;
    }
    return cost;
}

namespace {

struct AntennaEstimate {
    AntennaError error;
    AntennaFit fit;
};

void check_identifiable(const std::vector<const LinkObservation*>& obs, int antenna)
{
    require(obs.size() >= 6, ErrorKind::Numerical,
            "antenna " + std::to_string(antenna) + ": identifiability needs >= 6 scan points, got " +
                std::to_string(obs.size()));
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto* o : obs) mean += Eigen::Vector3d(o->point.x, o->point.y, o->point.z);
    mean /= static_cast<double>(obs.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto* o : obs) {
        const Eigen::Vector3d d = Eigen::Vector3d(o->point.x, o->point.y, o->point.z) - mean;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const double largest = eig.eigenvalues()(2);
    const double second = eig.eigenvalues()(1);
    require(largest > 0.0 && second > 1e-10 * largest, ErrorKind::Numerical,
            "antenna " + std::to_string(antenna) + ": scan points are collinear, parameters not identifiable");
}

AntennaEstimate estimate_antenna(const std::vector<const LinkObservation*>& obs, int antenna, const Vec3& nominal,
                                 const ChirpParams& params, const EstimateOptions& opts)
{
    check_identifiable(obs, antenna);
    const std::size_t n = obs.size();
    const double c = kSpeedOfLight;

    // Unknowns: phase-center offset (m) and delay expressed as path c*tau (m).
    Eigen::Vector4d theta = Eigen::Vector4d::Zero();
    auto residuals = [&](const Eigen::Vector4d& th, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const Vec3 p = nominal + Vec3{th(0), th(1), th(2)};
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 d = p - obs[j]->point;
            const double range = d.norm();
            r(j) = range + th(3) - c * (obs[j]->delay - opts.reference_delay);
            if (jac) {
                (*jac)(j, 0) = d.x / range;
                (*jac)(j, 1) = d.y / range;
                (*jac)(j, 2) = d.z / range;
                (*jac)(j, 3) = 1.0;
            }
        }
    };

    Eigen::VectorXd r(n), r_trial(n);
    Eigen::MatrixXd jac(n, 4);
    residuals(theta, r, &jac);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    AntennaFit fit;
    fit.n_observations = static_cast<int>(n);
    for (int it = 0; it < opts.max_iterations; ++it) {
        fit.iterations = it + 1;
        if (cost == 0.0) {
            fit.converged = true;
            break;
        }
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d g = jac.transpose() * r;
        bool improved = false;
        double trial_cost = cost;
        Eigen::Vector4d trial;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::Matrix4d a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            trial = theta - a.ldlt().solve(g);
            residuals(trial, r_trial, nullptr);
            trial_cost = r_trial.squaredNorm();
            if (trial_cost <= cost) {
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            // No descent direction left: we sit at the numerical optimum.
            fit.converged = true;
            break;
        }
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        theta = trial;
        residuals(theta, r, &jac);
        cost = trial_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        if (rel < opts.relative_tolerance) {
            fit.converged = true;
            break;
        }
    }

    AntennaEstimate est;
    est.error.offset = {theta(0), theta(1), theta(2)};
    est.error.delay = theta(3) / c;
    const Vec3 p = nominal + est.error.offset;

    // Amplitude: log-linear fit of A * R^k; phase: circular mean of residuals.
    const double lambda_c = params.wavelength_center();
    double log_sum = 0.0;
    cplx phasor_sum{};
    for (const auto* o : obs) {
        const double range = distance(p, o->point);
        log_sum += std::log(o->amplitude * std::pow(range, opts.amplitude_exponent));
        phasor_sum += std::polar(1.0, wrap_phase(o->phase - 2.0 * kPi * range / lambda_c));
    }
    est.error.amplitude = std::exp(log_sum / static_cast<double>(n));
    est.error.phase = wrap_phase(std::arg(phasor_sum));
    double phase_sq = 0.0;
    for (const auto* o : obs) {
        const double range = distance(p, o->point);
        const double res = wrap_phase(o->phase - 2.0 * kPi * range / lambda_c - est.error.phase);
        phase_sq += res * res;
    }
    fit.final_cost = cost;
    fit.residual_rms = std::sqrt(cost / static_cast<double>(n));
    fit.phase_rms = std::sqrt(phase_sq / static_cast<double>(n));
    est.fit = fit;
    return est;
}

}  // namespace

CalibrationSolution CalibrationSolution::identity(const ArrayGeometry& geom)
{
    CalibrationSolution s;
    s.geometry_fingerprint = misar::geometry_fingerprint(geom);
    for (auto& f : s.fits) f.converged = true;
    return s;
}

CalibrationSolution estimate(const std::vector<LinkObservation>& observations, const ArrayGeometry& initial,
                             const ChirpParams& params, const EstimateOptions& opts)
{
    initial.validate();
    std::vector<std::vector<const LinkObservation*>> per_antenna(kNumAntennas);
    for (const auto& o : observations) {
        require(o.antenna >= 0 && o.antenna < kNumAntennas, ErrorKind::DataFormat,
                "observation antenna index out of range: " + std::to_string(o.antenna));
        require(o.amplitude > 0.0 && o.delay > 0.0, ErrorKind::DataFormat,
                "observation with non-positive delay or amplitude");
        per_antenna[o.antenna].push_back(&o);
    }

    std::vector<AntennaEstimate> results(kNumAntennas);
    parallel_for(kNumAntennas, resolve_workers(opts.workers), [&](std::size_t i) {
        const int a = static_cast<int>(i);
        results[i] = estimate_antenna(per_antenna[i], a, initial.antenna_position(a), params, opts);
    });

    CalibrationSolution sol;
    sol.geometry_fingerprint = geometry_fingerprint(initial);
    for (int i = 0; i < kNumAntennas; ++i) {
        sol.errors.antennas[i] = results[i].error;
        sol.fits[i] = results[i].fit;
        sol.converged = sol.converged && results[i].fit.converged;
    }
    if (opts.gauge_antenna >= 0) {
        require(opts.gauge_antenna < kNumAntennas, ErrorKind::Config, "gauge antenna out of range");
        const double ref = sol.errors.antennas[opts.gauge_antenna].delay;
        for (auto& e : sol.errors.antennas) e.delay -= ref;
    }
    return sol;
}

RawDataCube compensate(const RawDataCube& cube, const ChannelErrorModel& errors)
{
    cube.validate();
    errors.validate();
    require(cube.n_channels == kNumChannels, ErrorKind::DataFormat, "compensate: cube must have 128 channels");
    RawDataCube out = cube;
    const ChirpParams& p = cube.chirp;
    const double dt = p.sample_interval();
    for (int m = 0; m < kNumTx; ++m) {
        for (int n = 0; n < kNumRx; ++n) {
            const int slot = channel_slot(m, n);
            const double tau = errors.channel_delay(m, n);
            const cplx gain = std::polar(1.0 / errors.channel_amplitude(m, n), -errors.channel_phase(m, n));
            // Undo the delay: the dechirped tone carries exp(-j 2 pi (f0 + K t) tau).
            std::vector<cplx> fix(p.n_samples);
            for (int k = 0; k < p.n_samples; ++k) {
                const double cycles = std::remainder(p.f_start * tau, 1.0) + std::remainder(p.slope() * tau * dt * k, 1.0);
                fix[k] = gain * std::polar(1.0, 2.0 * kPi * cycles);
            }
            for (int b = 0; b < cube.n_bursts; ++b) {
                auto pulse = out.pulse(b, slot);
                for (int k = 0; k < p.n_samples; ++k) pulse[k] *= fix[k];
            }
        }
    }
    return out;
}

RawDataCube compensate(const RawDataCube& cube, const CalibrationSolution& solution)
{
    require(cube.geometry_fingerprint == solution.geometry_fingerprint, ErrorKind::DataFormat,
            "compensate: calibration solution was estimated for a different array geometry");
    return compensate(cube, solution.errors);
}

ArrayGeometry calibrated_geometry(const ArrayGeometry& nominal, const CalibrationSolution& solution)
{
    return perturb_geometry(nominal, solution.errors);
}

}  // namespace misar

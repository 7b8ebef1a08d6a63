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

#include "tracking.hpp"

#include <cmath>
#include <random>
#include <string>

#include "error.hpp"

namespace misar {

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;

bool is_spd(const Mat2& p, double tol)
{
    if (!std::isfinite(p[0][0]) || !std::isfinite(p[0][1]) || !std::isfinite(p[1][0]) || !std::isfinite(p[1][1]))
        return false;
    const double scale = std::max({std::abs(p[0][0]), std::abs(p[1][1]), 1e-300});
    if (std::abs(p[0][1] - p[1][0]) > tol * scale) return false;
    return p[0][0] > 0.0 && p[0][0] * p[1][1] - p[0][1] * p[1][0] > 0.0;
}

// dt may be negative (backward in time); process noise grows with |dt|.
void predict(AxisState& a, double dt, double q)
{
    a.pos += a.vel * dt;
    const Mat2 p = a.cov;
    const double h = std::abs(dt);
    Mat2 n;
    n[0][0] = p[0][0] + dt * (p[0][1] + p[1][0]) + dt * dt * p[1][1] + q * h * h * h / 3.0;
    n[0][1] = p[0][1] + dt * p[1][1] + q * dt * h / 2.0;
    n[1][0] = n[0][1];
    n[1][1] = p[1][1] + q * h;
    a.cov = n;
}

void update(AxisState& a, double z, double r)
{
    const double s = a.cov[0][0] + r;
    const double k0 = a.cov[0][0] / s;
    const double k1 = a.cov[1][0] / s;
    const double nu = z - a.pos;
    a.pos += k0 * nu;
    a.vel += k1 * nu;
    // Joseph form keeps the covariance symmetric positive definite.
    const Mat2 p = a.cov;
    const double i00 = 1.0 - k0;
    const double i10 = -k1;
    Mat2 n;
    n[0][0] = i00 * i00 * p[0][0] + k0 * k0 * r;
    n[0][1] = i00 * i10 * p[0][0] + i00 * p[0][1] + k0 * k1 * r;
    n[1][0] = n[0][1];
    n[1][1] = i10 * i10 * p[0][0] + i10 * (p[0][1] + p[1][0]) + p[1][1] + k1 * k1 * r;
    a.cov = n;
}

constexpr std::size_t kNoPair = static_cast<std::size_t>(-1);
constexpr int kLostAfter = 4;  // consecutive rejections before a restart

// First pair of valid measurements, at or after valid[from], whose
// two-point extrapolation gates the next one; index into `valid`.
std::size_t initial_pair(const std::vector<TrackMeasurement>& ms, const std::vector<std::size_t>& valid,
                         std::size_t from, double r, double q, double gate_sigma)
{
    for (std::size_t j = from; j + 2 < valid.size(); ++j) {
        const auto& a = ms[valid[j]];
        const auto& b = ms[valid[j + 1]];
        const auto& c = ms[valid[j + 2]];
        const double dt0 = b.t - a.t, dt1 = c.t - b.t;
        const double var = r + 2.0 * dt1 * r / dt0 + 2.0 * dt1 * dt1 * r / (dt0 * dt0) + q * dt1 * dt1 * dt1 / 3.0 + r;
        bool ok = true;
        for (int k = 0; k < 3 && ok; ++k) {
            const double pred = b.position[k] + (b.position[k] - a.position[k]) / dt0 * dt1;
            ok = std::abs(c.position[k] - pred) <= gate_sigma * std::sqrt(var);
        }
        if (ok) return j;
    }
    return kNoPair;
}

}  // namespace

bool TrackState::covariance_valid(double symmetry_tol) const
{
    for (const auto& a : axes)
        if (!is_spd(a.cov, symmetry_tol)) return false;
    return true;
}

TrackingTuning TrackingTuning::from_config(const Config& cfg)
{
    TrackingTuning t;
    t.process_noise = cfg.get_double("tracking.process_noise", t.process_noise);
    t.measurement_sigma = cfg.get_double("tracking.sigma", t.measurement_sigma);
    t.gate_sigma = cfg.get_double("tracking.gate_sigma", t.gate_sigma);
    t.smooth = cfg.get_bool("tracking.smooth", t.smooth);
    require(t.process_noise >= 0.0 && t.measurement_sigma > 0.0 && t.gate_sigma > 0.0, ErrorKind::Config,
            "tracking: noise parameters and gate must be positive");
    return t;
}

StepResult kf_step(const TrackState& state, const TrackMeasurement& m, double q, double r, double gate_sigma)
{
    require(state.covariance_valid(), ErrorKind::Numerical, "kf_step: covariance is not symmetric positive definite");
    require(m.t > state.t, ErrorKind::Usage, "kf_step: measurement time must be after the state time");
    StepResult res;
    res.state = state;
    res.state.t = m.t;
    const double dt = m.t - state.t;
    for (auto& a : res.state.axes) predict(a, dt, q);
    if (!m.valid) return res;

    for (int k = 0; k < 3; ++k) {
        const auto& a = res.state.axes[k];
        const double s = a.cov[0][0] + r;
        if (std::abs(m.position[k] - a.pos) > gate_sigma * std::sqrt(s)) return res;
    }
    for (int k = 0; k < 3; ++k) update(res.state.axes[k], m.position[k], r);
    res.accepted = true;
    return res;
}

FilterResult filter_track(const std::vector<TrackMeasurement>& ms, const TrackingTuning& tuning)
{
    for (std::size_t i = 1; i < ms.size(); ++i)
        require(ms[i].t > ms[i - 1].t, ErrorKind::DataFormat, "filter_track: measurements must be time-sorted");
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < ms.size(); ++i)
        if (ms[i].valid) valid.push_back(i);
    require(valid.size() >= 2, ErrorKind::Numerical, "filter_track: need at least 2 valid measurements");

    const double r = tuning.measurement_sigma * tuning.measurement_sigma;
    const double q = tuning.process_noise;
    const std::size_t n = ms.size();

    // Two-point initialization from measurements a and b.
    auto start = [&](std::size_t a, std::size_t b) {
        const double dt0 = ms[b].t - ms[a].t;
        TrackState st;
        st.t = ms[b].t;
        for (int k = 0; k < 3; ++k) {
            auto& ax = st.axes[k];
            ax.pos = ms[b].position[k];
            ax.vel = (ms[b].position[k] - ms[a].position[k]) / dt0;
            ax.cov = {{{r, r / dt0}, {r / dt0, 2.0 * r / (dt0 * dt0)}}};
        }
        return st;
    };

    std::size_t j0 = initial_pair(ms, valid, 0, r, q, tuning.gate_sigma);
    if (j0 == kNoPair) j0 = 0;
    const std::size_t i1 = valid[j0 + 1];

    FilterResult out;
    out.accepted.assign(n, false);
    out.accepted[valid[j0]] = out.accepted[i1] = true;

    std::vector<TrackState> filtered(n), predicted(n);
    std::vector<bool> restarted(n, false);
    filtered[i1] = predicted[i1] = start(valid[j0], i1);
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t j = 0; j < valid.size(); ++j) rank[valid[j]] = j;

    int misses = 0;
    std::size_t first_miss = 0;
    for (std::size_t i = i1 + 1; i < n; ++i) {
        TrackState pred = filtered[i - 1];
        pred.t = ms[i].t;
        for (auto& a : pred.axes) predict(a, ms[i].t - filtered[i - 1].t, q);
        predicted[i] = pred;
        restarted[i] = false;
        const StepResult step = kf_step(filtered[i - 1], ms[i], q, r, tuning.gate_sigma);
        filtered[i] = step.state;
        out.accepted[i] = step.accepted;
        if (!ms[i].valid) continue;
        if (step.accepted) {
            misses = 0;
            continue;
        }
        if (misses++ == 0) first_miss = i;
        if (misses < kLostAfter) continue;
        // Track lost: restart from the next self-consistent triple.
        const std::size_t j = initial_pair(ms, valid, rank[first_miss], r, q, tuning.gate_sigma);
        if (j == kNoPair) continue;
        const std::size_t a = valid[j], b = valid[j + 1];
        for (std::size_t k = i + 1; k < b; ++k) {
            filtered[k] = predicted[k] = filtered[k - 1];
            filtered[k].t = predicted[k].t = ms[k].t;
            for (auto& ax : filtered[k].axes) predict(ax, ms[k].t - ms[k - 1].t, q);
            predicted[k] = filtered[k];
        }
        for (std::size_t k = b + 1; k <= i; ++k) out.accepted[k] = false;
        out.accepted[a] = out.accepted[b] = true;
        filtered[b] = predicted[b] = start(a, b);
        restarted[b] = true;
        misses = 0;
        i = b;
    }
    if (tuning.smooth) {
        // Rauch-Tung-Striebel backward pass, per axis.
        for (std::size_t i = n - 1; i-- > i1;) {
            if (restarted[i + 1]) continue;
            const double dt = ms[i + 1].t - ms[i].t;
            for (int k = 0; k < 3; ++k) {
                AxisState& f = filtered[i].axes[k];
                const AxisState& s_next = filtered[i + 1].axes[k];
                const AxisState& p_next = predicted[i + 1].axes[k];
                const Mat2& pf = f.cov;
                // C = Pf F^T Pp^-1, F = [[1, dt], [0, 1]].
                const double a00 = pf[0][0] + dt * pf[0][1];
                const double a01 = pf[0][1];
                const double a10 = pf[1][0] + dt * pf[1][1];
                const double a11 = pf[1][1];
                const Mat2& pp = p_next.cov;
                const double det = pp[0][0] * pp[1][1] - pp[0][1] * pp[1][0];
                require(det > 0.0, ErrorKind::Numerical, "smoother: singular predicted covariance");
                const double inv00 = pp[1][1] / det, inv01 = -pp[0][1] / det;
                const double inv10 = -pp[1][0] / det, inv11 = pp[0][0] / det;
                const double c00 = a00 * inv00 + a01 * inv10, c01 = a00 * inv01 + a01 * inv11;
                const double c10 = a10 * inv00 + a11 * inv10, c11 = a10 * inv01 + a11 * inv11;
                const double dp = s_next.pos - p_next.pos;
                const double dv = s_next.vel - p_next.vel;
                f.pos += c00 * dp + c01 * dv;
                f.vel += c10 * dp + c11 * dv;
                Mat2 d;
                for (int u = 0; u < 2; ++u)
                    for (int v = 0; v < 2; ++v) d[u][v] = s_next.cov[u][v] - pp[u][v];
                const Mat2 c{{{c00, c01}, {c10, c11}}};
                Mat2 cd{};
                for (int u = 0; u < 2; ++u)
                    for (int v = 0; v < 2; ++v) cd[u][v] = c[u][0] * d[0][v] + c[u][1] * d[1][v];
                Mat2 upd = f.cov;
                for (int u = 0; u < 2; ++u)
                    for (int v = 0; v < 2; ++v) upd[u][v] += cd[u][0] * c[v][0] + cd[u][1] * c[v][1];
                upd[0][1] = upd[1][0] = 0.5 * (upd[0][1] + upd[1][0]);
                f.cov = upd;
            }
        }
    }

    // Measurements before the initial pair: gated filter run backwards in time.
    TrackState back = filtered[i1];
    for (std::size_t i = i1; i-- > 0;) {
        for (auto& a : back.axes) predict(a, ms[i].t - back.t, q);
        back.t = ms[i].t;
        filtered[i] = back;
        if (!ms[i].valid || i == valid[j0]) continue;
        bool inside = true;
        for (int k = 0; k < 3 && inside; ++k)
            inside = std::abs(ms[i].position[k] - back.axes[k].pos) <= tuning.gate_sigma * std::sqrt(back.axes[k].cov[0][0] + r);
        if (!inside) continue;
        for (int k = 0; k < 3; ++k) update(back.axes[k], ms[i].position[k], r);
        filtered[i] = back;
        out.accepted[i] = true;
    }

    out.rejected = 0;
    for (std::size_t i = 0; i < n; ++i) out.rejected += ms[i].valid && !out.accepted[i];
    std::vector<TrajectorySample> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = {ms[i].t, filtered[i].position(), filtered[i].velocity()};
    out.trajectory = Trajectory(std::move(samples));
    return out;
}

Trajectory resample_track(const Trajectory& trajectory, const std::vector<double>& timestamps)
{
    std::vector<TrajectorySample> out;
    out.reserve(timestamps.size());
    for (double t : timestamps) {
        require(trajectory.covers(t), ErrorKind::Usage,
                "resample_track: timestamp " + std::to_string(t) + " outside trajectory span");
        out.push_back({t, trajectory.position_at(t), trajectory.velocity_at(t)});
    }
    return Trajectory(std::move(out));
}

SimulatedTrack simulate_measurements(const Trajectory& truth, const MeasurementNoise& noise)
{
    require(noise.rate_hz > 0.0 && noise.sigma >= 0.0, ErrorKind::Config, "measurement rate and sigma must be positive");
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SimulatedTrack out;
    const double dt = 1.0 / noise.rate_hz;
    const auto count = static_cast<std::size_t>(std::floor((truth.t_last() - truth.t_first()) / dt + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = truth.t_first() + i * dt;
        TrackMeasurement m{t, truth.position_at(t), true};
        for (int k = 0; k < 3; ++k) m.position[k] += noise.sigma * gauss(rng);
        const bool outlier = uni(rng) < noise.outlier_fraction;
        if (outlier)
            for (int k = 0; k < 3; ++k)
                m.position[k] += (uni(rng) < 0.5 ? -1.0 : 1.0) * noise.outlier_sigmas * noise.sigma;
        out.measurements.push_back(m);
        out.is_outlier.push_back(outlier);
    }
    return out;
}

}  // namespace misar

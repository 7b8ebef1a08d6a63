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

#include "waveform.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <string>

#include "error.hpp"

namespace misar {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

ChirpParams ChirpParams::from_config(const Config& cfg)
{
    ChirpParams p;
    p.f_start = cfg.get_double("chirp.f_start", p.f_start);
    p.f_stop = cfg.get_double("chirp.f_stop", p.f_stop);
    p.pulse_width = cfg.get_double("chirp.pulse_width", p.pulse_width);
    p.prt = cfg.get_double("chirp.prt", p.prt);
    p.n_samples = static_cast<int>(cfg.get_int("chirp.n_samples", p.n_samples));
    p.validate();
    return p;
}

void ChirpParams::validate() const
{
    require(std::isfinite(f_start) && std::isfinite(f_stop) && f_stop > f_start, ErrorKind::Config,
            "chirp: f_stop must exceed f_start");
    require(pulse_width > 0.0 && std::isfinite(pulse_width), ErrorKind::Config, "chirp: pulse_width must be positive");
    require(prt >= pulse_width && std::isfinite(prt), ErrorKind::Config, "chirp: prt must be >= pulse_width");
    require(n_samples >= 2, ErrorKind::Config, "chirp: n_samples must be >= 2");
}

Window parse_window(const std::string& name)
{
    if (name == "none" || name == "rect") return Window::None;
    if (name == "hann") return Window::Hann;
    fail(ErrorKind::Config, "unknown window '" + name + "' (expected none|hann)");
}

double beat_frequency(double total_path, const ChirpParams& params)
{
    require(total_path >= 0.0, ErrorKind::Usage, "beat_frequency: negative path");
    return params.slope() * total_path / kSpeedOfLight;
}

void add_beat_signal(std::span<cplx> out, double total_path, cplx amplitude, const ChirpParams& params,
                     double extra_delay)
{
    if (amplitude == cplx{}) return;
    const double tau = total_path / kSpeedOfLight + extra_delay;
    const double dt = params.sample_interval();
    // Phasor recurrence, re-anchored every 32 samples to bound rounding drift.
    const double start_cycles = params.f_start * tau;
    const double step_cycles = params.slope() * tau * dt;
    const cplx step = std::polar(1.0, -2.0 * kPi * std::remainder(step_cycles, 1.0));
    const double sr = step.real(), si = step.imag();
    double pr = 0.0, pi = 0.0;
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (n % 32 == 0) {
            const double cyc = std::remainder(start_cycles, 1.0) + std::remainder(step_cycles * n, 1.0);
            const cplx ph = amplitude * std::polar(1.0, -2.0 * kPi * cyc);
            pr = ph.real();
            pi = ph.imag();
        }
        out[n] += cplx{pr, pi};
        const double nr = pr * sr - pi * si;
        pi = pr * si + pi * sr;
        pr = nr;
    }
}

BeatSignal sample_beat_signal(double total_path, cplx amplitude, const ChirpParams& params, double extra_delay)
{
    BeatSignal sig;
    sig.samples.assign(params.n_samples, cplx{});
    add_beat_signal(sig.samples, total_path, amplitude, params, extra_delay);
    const double effective_path = total_path + extra_delay * kSpeedOfLight;
    sig.aliased = effective_path < 0.0 || effective_path >= params.unambiguous_path();
    return sig;
}

int compressed_length(int n_samples, int upsample)
{
    const int n = (n_samples - 1) * upsample;
    return n >= n_samples ? n : n_samples;
}

struct RangeCompressor::Plan {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;
};

RangeCompressor::RangeCompressor(const ChirpParams& params, Window window, int upsample)
    : params_(params), upsample_(upsample)
{
    params.validate();
    require(upsample == 1 || upsample == 2 || upsample == 4 || upsample == 8, ErrorKind::Config,
            "upsample must be one of 1, 2, 4, 8");
    n_fft_ = compressed_length(params.n_samples, upsample);
    // Beat frequency resolution fs/N, expressed as total path.
    bin_spacing_ = params.sample_rate() / n_fft_ * kSpeedOfLight / params.slope();

    window_.assign(params.n_samples, 1.0);
    if (window == Window::Hann)
        for (int n = 0; n < params.n_samples; ++n)
            window_[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / (params.n_samples - 1));

    const double center = 0.5 * (params.n_samples - 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_fft_));
    ramp_.resize(n_fft_);
    for (int k = 0; k < n_fft_; ++k)
        ramp_[k] = scale * std::polar(1.0, -2.0 * kPi * std::remainder(k * center / n_fft_, 1.0));

    plan_ = std::make_unique<Plan>();
    std::lock_guard lock(planner_mutex());
    plan_->buf = fftw_alloc_complex(n_fft_);
    plan_->plan = fftw_plan_dft_1d(n_fft_, plan_->buf, plan_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_->plan) fail(ErrorKind::Internal, "FFT planning failed");
}

RangeCompressor::~RangeCompressor()
{
    if (!plan_) return;
    std::lock_guard lock(planner_mutex());
    if (plan_->plan) fftw_destroy_plan(plan_->plan);
    if (plan_->buf) fftw_free(plan_->buf);
}

void RangeCompressor::compress_into(std::span<const cplx> samples, std::span<cplx> out)
{
    require(samples.size() == static_cast<std::size_t>(params_.n_samples), ErrorKind::DataFormat,
            "range_compress: expected " + std::to_string(params_.n_samples) + " samples");
    require(out.size() == static_cast<std::size_t>(n_fft_), ErrorKind::Internal, "range_compress: bad output size");
    fftw_complex* buf = plan_->buf;
    std::memset(buf, 0, sizeof(fftw_complex) * n_fft_);
    for (std::size_t n = 0; n < samples.size(); ++n) {
        buf[n][0] = window_[n] * samples[n].real();
        buf[n][1] = window_[n] * samples[n].imag();
    }
    fftw_execute(plan_->plan);
    for (int k = 0; k < n_fft_; ++k) out[k] = cplx(buf[k][0], buf[k][1]) * ramp_[k];
}

RangeProfile RangeCompressor::compress(std::span<const cplx> samples)
{
    RangeProfile p;
    p.bins.resize(n_fft_);
    p.bin_spacing = bin_spacing_;
    p.upsample = upsample_;
    compress_into(samples, p.bins);
    return p;
}

RangeProfile range_compress(std::span<const cplx> samples, const ChirpParams& params, Window window, int upsample)
{
    RangeCompressor rc(params, window, upsample);
    return rc.compress(samples);
}

BurstSchedule burst_schedule(const ChirpParams& params, int n_channels)
{
    require(n_channels >= 1, ErrorKind::Usage, "burst_schedule: n_channels must be >= 1");
    BurstSchedule s;
    s.slot_starts.resize(n_channels);
    for (int k = 0; k < n_channels; ++k) s.slot_starts[k] = k * params.prt;
    s.duration = n_channels * params.prt;
    return s;
}

}  // namespace misar

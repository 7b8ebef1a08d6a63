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

#include <memory>
#include <span>
#include <vector>

#include "config.hpp"
#include "vec3.hpp"

namespace misar {

struct ChirpParams {
    double f_start = 22e9;
    double f_stop = 26e9;
    double pulse_width = 30e-6;
    double prt = 40e-6;
    int n_samples = 201;

    static ChirpParams from_config(const Config& cfg);
    void validate() const;

    double bandwidth() const { return f_stop - f_start; }
    double slope() const { return bandwidth() / pulse_width; }
    double f_center() const { return 0.5 * (f_start + f_stop); }
    double wavelength_center() const { return kSpeedOfLight / f_center(); }
    // Sampling instants span the pulse inclusively: t_n = n * T / (N - 1).
    double sample_interval() const { return pulse_width / (n_samples - 1); }
    double sample_rate() const { return 1.0 / sample_interval(); }
    // Largest total path whose beat tone stays below the complex sample rate.
    double unambiguous_path() const { return sample_rate() * kSpeedOfLight / slope(); }
};

enum class Window { None, Hann };

Window parse_window(const std::string& name);

double beat_frequency(double total_path, const ChirpParams& params);

struct BeatSignal {
    std::vector<cplx> samples;
    bool aliased = false;
};

/// Dechirped complex baseband tone for one propagation path:
/// s[n] = a * exp(-j 2 pi (f_start tau + slope tau t_n)), tau = path / c + extra_delay.
/// The residual video phase term is not modeled.
BeatSignal sample_beat_signal(double total_path, cplx amplitude, const ChirpParams& params,
                              double extra_delay = 0.0);

// Accumulating form of sample_beat_signal; out.size() must equal n_samples.
void add_beat_signal(std::span<cplx> out, double total_path, cplx amplitude, const ChirpParams& params,
                     double extra_delay = 0.0);

struct RangeProfile {
    std::vector<cplx> bins;
    double bin_spacing = 0.0;  // meters of total (two-way) path per bin
    int upsample = 1;
    bool one_way = false;

    double path_of_bin(double bin) const { return bin * bin_spacing; }
    std::size_t size() const { return bins.size(); }
};

// FFT length used for n samples at an upsample factor: (n - 1) * upsample,
// or n when that would truncate the pulse.
int compressed_length(int n_samples, int upsample);

/// Zero-padded FFT of one pulse, phase-referenced to the pulse center so a
/// path R peaks with phase arg(a) - 2 pi f_c R / c. Scaled by 1/sqrt(N),
/// which preserves energy for the rectangular window.
class RangeCompressor {
public:
    RangeCompressor(const ChirpParams& params, Window window, int upsample);
    ~RangeCompressor();
    RangeCompressor(const RangeCompressor&) = delete;
    RangeCompressor& operator=(const RangeCompressor&) = delete;

    RangeProfile compress(std::span<const cplx> samples);
    // Writes N bins into out without allocating.
    void compress_into(std::span<const cplx> samples, std::span<cplx> out);

    int fft_size() const { return n_fft_; }
    double bin_spacing() const { return bin_spacing_; }

private:
    struct Plan;
    ChirpParams params_;
    int upsample_;
    int n_fft_;
    double bin_spacing_;
    std::vector<double> window_;
    std::vector<cplx> ramp_;
    std::unique_ptr<Plan> plan_;
};

RangeProfile range_compress(std::span<const cplx> samples, const ChirpParams& params, Window window,
                            int upsample);

struct BurstSchedule {
    std::vector<double> slot_starts;  // seconds from burst start
    double duration = 0.0;
};

BurstSchedule burst_schedule(const ChirpParams& params, int n_channels = 128);

}  // namespace misar

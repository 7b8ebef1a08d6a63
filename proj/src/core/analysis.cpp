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

#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "error.hpp"

namespace misar {

namespace {

double to_db(double ratio) { return ratio > 0.0 ? std::max(20.0 * std::log10(ratio), kPslFloorDb) : kPslFloorDb; }

double quadratic_offset(double ym, double y0, double yp)
{
    const double denom = ym - 2.0 * y0 + yp;
    if (denom >= 0.0) return 0.0;
    return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

// Distance from the peak to the -3 dB crossing walking in direction dir, in
// oversampled units. Returns the walk length to the edge if never crossed.
double crossing(const std::vector<double>& fine, std::size_t peak, int dir, double level)
{
    std::size_t i = peak;
    for (;;) {
        if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == fine.size()))
            return static_cast<double>(dir < 0 ? peak : fine.size() - 1 - peak);
        const std::size_t j = dir < 0 ? i - 1 : i + 1;
        if (fine[j] < level) {
            const double t = (fine[i] - level) / (fine[i] - fine[j]);
            const double at = static_cast<double>(i) + dir * t;
            return std::abs(at - static_cast<double>(peak));
        }
        i = j;
    }
}

}  // namespace

CutMetrics analyze_cut(std::span<const double> mags, double spacing, int oversample)
{
    require(!mags.empty() && spacing > 0.0 && oversample >= 1, ErrorKind::Usage, "analyze_cut: bad input");
    CutMetrics m;
    const auto it = std::max_element(mags.begin(), mags.end());
    const double peak = *it;
    require(peak > 0.0, ErrorKind::Numerical, "analyze_cut: flat cut");
    m.peak_index = static_cast<std::size_t>(it - mags.begin());
    const std::size_t k = m.peak_index;
    if (k > 0 && k + 1 < mags.size()) m.peak_offset = quadratic_offset(mags[k - 1], mags[k], mags[k + 1]);

    // Linear oversampling.
    const std::size_t n = mags.size();
    std::vector<double> fine((n - 1) * oversample + 1);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const std::size_t a = i / oversample;
        const double t = static_cast<double>(i % oversample) / oversample;
        fine[i] = a + 1 < n ? mags[a] * (1.0 - t) + mags[a + 1] * t : mags[a];
    }
    const std::size_t fp = k * oversample;
    const double level = peak * std::pow(10.0, -3.0 / 20.0);
    const double w = (crossing(fine, fp, -1, level) + crossing(fine, fp, +1, level)) / oversample;
    m.width = std::max(w, 1.0) * spacing;

    // Mainlobe: the samples at or above -3 dB around the peak, then down to
    // the first local minimum on each side.
    std::size_t lo = k, hi = k;
    while (lo > 0 && mags[lo - 1] >= level) --lo;
    while (hi + 1 < n && mags[hi + 1] >= level) ++hi;
    while (lo > 0 && mags[lo - 1] <= mags[lo]) --lo;
    while (hi + 1 < n && mags[hi + 1] <= mags[hi]) ++hi;
    double side = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (i < lo || i > hi) side = std::max(side, mags[i]);
    m.psl_db = to_db(side / peak);
    return m;
}

PsfReport psf_metrics(const Image3D& image, const SearchRegion& region, int oversample)
{
    const auto& g = image.grid;
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::clamp(region.lo[a], 0, g.dims[a] - 1);
        hi[a] = region.hi[a] < 0 ? g.dims[a] - 1 : std::clamp(region.hi[a], lo[a], g.dims[a] - 1);
    }
    auto mag = [&](int x, int y, int z) { return std::abs(image.at(x, y, z)); };

    double peak = -1.0, lowest = INFINITY;
    std::array<int, 3> pk{};
    for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x) {
                const double v = mag(x, y, z);
                require(std::isfinite(v), ErrorKind::Numerical, "psf_metrics: non-finite voxel");
                lowest = std::min(lowest, v);
                if (v > peak) {
                    peak = v;
                    pk = {x, y, z};
                }
            }
    require(peak > 0.0 && peak > lowest, ErrorKind::Numerical, "psf_metrics: flat image, no peak");

    PsfReport r;
    r.peak_index = pk;
    r.peak_value = peak;
    r.peak_db = 20.0 * std::log10(peak);
    const Vec3 base = g.position(pk[0], pk[1], pk[2]);
    r.peak_position = base;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> cut;
        for (int i = lo[a]; i <= hi[a]; ++i) {
            std::array<int, 3> idx = pk;
            idx[a] = i;
            cut.push_back(mag(idx[0], idx[1], idx[2]));
        }
        const CutMetrics cm = analyze_cut(cut, g.spacing[a], oversample);
        r.widths[a] = cm.width;
        r.peak_position[a] = base[a] + cm.peak_offset * g.spacing[a];
    }

    // Mainlobe basin: the connected -3 dB region around the peak, extended
    // along non-increasing magnitude.
    const int nx = hi[0] - lo[0] + 1, ny = hi[1] - lo[1] + 1, nz = hi[2] - lo[2] + 1;
    auto local = [&](int x, int y, int z) {
        return (static_cast<std::size_t>(z - lo[2]) * ny + (y - lo[1])) * nx + (x - lo[0]);
    };
    std::vector<unsigned char> in_lobe(static_cast<std::size_t>(nx) * ny * nz, 0);
    const double level = peak * std::pow(10.0, -3.0 / 20.0);
    std::deque<std::array<int, 3>> queue{pk};
    std::vector<std::array<int, 3>> core{pk};
    in_lobe[local(pk[0], pk[1], pk[2])] = 1;
    std::size_t count = 1;
    while (!queue.empty()) {
        const auto c = queue.front();
        queue.pop_front();
        for (int a = 0; a < 3; ++a)
            for (int d : {-1, 1}) {
                auto nb = c;
                nb[a] += d;
                if (nb[a] < lo[a] || nb[a] > hi[a]) continue;
                const std::size_t li = local(nb[0], nb[1], nb[2]);
                if (in_lobe[li] || mag(nb[0], nb[1], nb[2]) < level) continue;
                in_lobe[li] = 1;
                ++count;
                queue.push_back(nb);
                core.push_back(nb);
            }
    }
    queue.assign(core.begin(), core.end());
    while (!queue.empty()) {
        const auto c = queue.front();
        queue.pop_front();
        const double vc = mag(c[0], c[1], c[2]);
        for (int a = 0; a < 3; ++a)
            for (int d : {-1, 1}) {
                auto nb = c;
                nb[a] += d;
                if (nb[a] < lo[a] || nb[a] > hi[a]) continue;
                const std::size_t li = local(nb[0], nb[1], nb[2]);
                if (in_lobe[li] || mag(nb[0], nb[1], nb[2]) > vc) continue;
                in_lobe[li] = 1;
                ++count;
                queue.push_back(nb);
            }
    }
    double side = 0.0;
    for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x)
                if (!in_lobe[local(x, y, z)]) side = std::max(side, mag(x, y, z));
    r.psl_db = to_db(side / peak);
    r.mainlobe_voxels = count;
    r.mainlobe = "connected -3 dB region of the peak extended along non-increasing magnitude (6-connected)";
    return r;
}

Comparison compare_before_after(const Image3D& uncal, const Image3D& cal, const SearchRegion& region)
{
    require(uncal.grid.same_as(cal.grid), ErrorKind::Usage, "compare_before_after: images are on different grids");
    const PsfReport before = psf_metrics(uncal, region);
    const PsfReport after = psf_metrics(cal, region);
    Comparison c;
    c.psl_before_db = before.psl_db;
    c.psl_after_db = after.psl_db;
    c.psl_improvement_db = before.psl_db - after.psl_db;
    for (int a = 0; a < 3; ++a) {
        c.width_before[a] = before.widths[a];
        c.width_after[a] = after.widths[a];
        c.width_delta[a] = after.widths[a] - before.widths[a];
    }
    c.peak_displacement = distance(before.peak_position, after.peak_position);
    return c;
}

std::string report_text(const PsfReport& r)
{
    std::string s;
    s += "psf.peak_position = " + format_double(r.peak_position.x) + " " + format_double(r.peak_position.y) + " " +
         format_double(r.peak_position.z) + "\n";
    s += "psf.peak_index = " + std::to_string(r.peak_index[0]) + " " + std::to_string(r.peak_index[1]) + " " +
         std::to_string(r.peak_index[2]) + "\n";
    s += "psf.peak_db = " + format_double(r.peak_db) + "\n";
    s += "psf.width_x = " + format_double(r.widths[0]) + "\n";
    s += "psf.width_y = " + format_double(r.widths[1]) + "\n";
    s += "psf.width_z = " + format_double(r.widths[2]) + "\n";
    s += "psf.psl_db = " + format_double(r.psl_db) + "\n";
    s += "psf.mainlobe_voxels = " + std::to_string(r.mainlobe_voxels) + "\n";
    s += "psf.mainlobe = " + r.mainlobe + "\n";
    return s;
}

std::string comparison_text(const Comparison& c)
{
    std::string s;
    s += "compare.psl_before_db = " + format_double(c.psl_before_db) + "\n";
    s += "compare.psl_after_db = " + format_double(c.psl_after_db) + "\n";
    s += "compare.psl_improvement_db = " + format_double(c.psl_improvement_db) + "\n";
    const char* axes[] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        s += std::string("compare.width_before_") + axes[a] + " = " + format_double(c.width_before[a]) + "\n";
        s += std::string("compare.width_after_") + axes[a] + " = " + format_double(c.width_after[a]) + "\n";
    }
    s += "compare.peak_displacement = " + format_double(c.peak_displacement) + "\n";
    return s;
}

}  // namespace misar

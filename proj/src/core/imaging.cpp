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

#include "imaging.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "error.hpp"
#include "fileio.hpp"
#include "hash.hpp"
#include "parallel.hpp"

namespace misar {

namespace {

// Round to nearest for |x| < 2^51 without a libm call.
inline double round_near(double x)
{
    constexpr double kMagic = 6755399441055744.0;
    return (x + kMagic) - kMagic;
}

// exp(j 2 pi cycles) with quadrant reduction and Taylor polynomials on
// [-pi/4, pi/4]; absolute error below 2e-9.
inline void unit_phasor(double cycles, double& re, double& im)
{
    static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
    static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
    const double x = 4.0 * (cycles - round_near(cycles));
    const double q = round_near(x);
    const double r = (x - q) * (0.5 * kPi);
    const double r2 = r * r;
    const double s = r * (1.0 + r2 * (-1.0 / 6 + r2 * (1.0 / 120 + r2 * (-1.0 / 5040 + r2 * (1.0 / 362880)))));
    const double c = 1.0 + r2 * (-0.5 + r2 * (1.0 / 24 + r2 * (-1.0 / 720 + r2 * (1.0 / 40320 + r2 * (-1.0 / 3628800)))));
    const int k = static_cast<int>(q) & 3;
    re = c * kCos[k] - s * kSin[k];
    im = s * kCos[k] + c * kSin[k];
}

struct PulseRef {
    int burst = 0;
    int slot = 0;
    Vec3 tx;  // antenna positions in the target frame at the pulse time
    Vec3 rx;
    double front_y = 0.0;  // array front plane in the target frame
};

struct Kernel {
    const VoxelGrid* grid;
    std::vector<double> vx, vy, vz;
    double bin_inv;
    double cycles_per_meter;
    std::size_t n_bins;

    explicit Kernel(const VoxelGrid& g, double bin_spacing, double f_center)
        : grid(&g), bin_inv(1.0 / bin_spacing), cycles_per_meter(f_center / kSpeedOfLight), n_bins(0)
    {
        vx.resize(g.size());
        vy.resize(g.size());
        vz.resize(g.size());
        for (int iz = 0; iz < g.dims[2]; ++iz)
            for (int iy = 0; iy < g.dims[1]; ++iy)
                for (int ix = 0; ix < g.dims[0]; ++ix) {
                    const std::size_t i = g.index(ix, iy, iz);
                    const Vec3 p = g.position(ix, iy, iz);
                    vx[i] = p.x;
                    vy[i] = p.y;
                    vz[i] = p.z;
                }
    }

    // acc[v - v0] += contribution of one pulse for voxels [v0, v1).
    // Voxels with y at or below front_limit are skipped.
    double front_limit = -INFINITY;

    void accumulate(const PulseRef& pr, const cplx* profile, std::size_t v0, std::size_t v1, cplx* acc) const
    {
        const double limit = static_cast<double>(n_bins - 1);
        const double txx = pr.tx.x, txy = pr.tx.y, txz = pr.tx.z;
        const double rxx = pr.rx.x, rxy = pr.rx.y, rxz = pr.rx.z;
        const double front = front_limit, inv = bin_inv, cpm = cycles_per_meter;
        const double* prof = reinterpret_cast<const double*>(profile);
        double* out = reinterpret_cast<double*>(acc) - 2 * v0;
        const double* px = vx.data();
        const double* py = vy.data();
        const double* pz = vz.data();
        for (std::size_t v = v0; v < v1; ++v) {
            if (py[v] <= front) continue;
            const double tdx = txx - px[v], tdy = txy - py[v], tdz = txz - pz[v];
            const double rdx = rxx - px[v], rdy = rxy - py[v], rdz = rxz - pz[v];
            const double path = std::sqrt(tdx * tdx + tdy * tdy + tdz * tdz) + std::sqrt(rdx * rdx + rdy * rdy + rdz * rdz);
            const double bin = path * inv;
            if (bin >= limit) continue;
            const auto k = static_cast<std::size_t>(bin);
            const double w = bin - static_cast<double>(k);
            const double* p = prof + 2 * k;
            const double sr = p[0] + w * (p[2] - p[0]);
            const double si = p[1] + w * (p[3] - p[1]);
            double ur, ui;
            unit_phasor(path * cpm, ur, ui);
            out[2 * v] += sr * ur - si * ui;
            out[2 * v + 1] += sr * ui + si * ur;
        }
    }
};

std::vector<PulseRef> pulse_refs(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                                 int first_burst, int n_bursts)
{
    const double front = array_front_plane(geom);
    std::vector<PulseRef> refs;
    refs.reserve(static_cast<std::size_t>(n_bursts) * cube.n_channels);
    const auto channels = virtual_channels(geom);
    for (int b = first_burst; b < first_burst + n_bursts; ++b) {
        for (const auto& ch : channels) {
            const double t = cube.pulse_time(b, ch.sequence_slot);
            const Vec3 o = trajectory.position_at(t);
            refs.push_back({b, ch.sequence_slot, geom.tx[ch.tx_index].position - o, geom.rx[ch.rx_index].position - o,
                            front - o.y});
        }
    }
    return refs;
}

void check_inputs(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                  const VoxelGrid& grid, const BackprojectOptions& opts, int& first, int& count)
{
    cube.validate();
    geom.validate();
    grid.validate();
    require(cube.n_channels == kNumChannels, ErrorKind::DataFormat, "backproject: cube must have 128 channels");
    first = opts.first_burst;
    count = opts.n_bursts < 0 ? cube.n_bursts - first : opts.n_bursts;
    require(first >= 0 && count >= 1 && first + count <= cube.n_bursts, ErrorKind::Usage,
            "backproject: burst selection out of range");
    for (double t : {cube.pulse_time(first, 0), cube.pulse_time(first + count - 1, cube.n_channels - 1)})
        require(trajectory.covers(t), ErrorKind::Usage,
                "backproject: trajectory coverage gap at t = " + std::to_string(t) + " s");
}

}  // namespace

VoxelGrid VoxelGrid::centered(const Vec3& center, const Vec3& spacing, std::array<int, 3> dims)
{
    VoxelGrid g;
    g.spacing = spacing;
    g.dims = dims;
    g.origin = {center.x - 0.5 * (dims[0] - 1) * spacing.x, center.y - 0.5 * (dims[1] - 1) * spacing.y,
                center.z - 0.5 * (dims[2] - 1) * spacing.z};
    return g;
}

VoxelGrid VoxelGrid::from_config(const Config& cfg)
{
    const auto d = cfg.get_doubles("image.dims", {64, 64, 32});
    require(d.size() == 3, ErrorKind::Config, "image.dims needs 3 integers");
    const std::array<int, 3> dims{static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
    const Vec3 spacing = cfg.get_vec3("image.spacing", {0.005, 0.005, 0.005});
    VoxelGrid g = VoxelGrid::centered(cfg.get_vec3("image.center", {}), spacing, dims);
    if (cfg.has("image.origin")) g.origin = cfg.get_vec3("image.origin", g.origin);
    g.validate();
    return g;
}

void VoxelGrid::validate() const
{
    require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0, ErrorKind::Config, "voxel spacing must be positive");
    require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, ErrorKind::Config, "voxel dims must be >= 1");
    require(std::isfinite(origin.norm()), ErrorKind::Config, "voxel origin must be finite");
}

BackprojectOptions BackprojectOptions::from_config(const Config& cfg)
{
    BackprojectOptions o;
    o.upsample = static_cast<int>(cfg.get_int("image.upsample", o.upsample));
    o.window = parse_window(cfg.get_string("image.window", "none"));
    o.deterministic = cfg.get_bool("image.deterministic", o.deterministic);
    o.first_burst = static_cast<int>(cfg.get_int("image.first_burst", o.first_burst));
    o.n_bursts = static_cast<int>(cfg.get_int("image.n_bursts", o.n_bursts));
    require(o.upsample == 1 || o.upsample == 2 || o.upsample == 4 || o.upsample == 8, ErrorKind::Config,
            "image.upsample must be one of 1, 2, 4, 8");
    require(o.first_burst >= 0 && (o.n_bursts == -1 || o.n_bursts >= 1), ErrorKind::Config,
            "image.first_burst must be >= 0 and image.n_bursts -1 or positive");
    return o;
}

std::string BackprojectOptions::summary() const
{
    return "upsample=" + std::to_string(upsample) + ";window=" + (window == Window::Hann ? "hann" : "none") +
           ";bursts=" + std::to_string(first_burst) + "+" + std::to_string(n_bursts);
}

Image3D backproject_parallel(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                             const VoxelGrid& grid, const BackprojectOptions& opts, int workers,
                             BackprojectStats* stats)
{
    require(workers >= 1, ErrorKind::Usage, "backproject: workers must be >= 1");
    require(opts.tile_voxels >= 1, ErrorKind::Usage, "backproject: tile size must be >= 1");
    int first = 0, count = 0;
    check_inputs(cube, geom, trajectory, grid, opts, first, count);

    const auto refs = pulse_refs(cube, geom, trajectory, first, count);
    std::vector<std::unique_ptr<RangeCompressor>> compressors;
    for (int w = 0; w < workers; ++w)
        compressors.push_back(std::make_unique<RangeCompressor>(cube.chirp, opts.window, opts.upsample));
    const std::size_t n_bins = static_cast<std::size_t>(compressors[0]->fft_size());

    Kernel kernel(grid, compressors[0]->bin_spacing(), cube.chirp.f_center());
    kernel.n_bins = n_bins;

    for (const auto& pr : refs) kernel.front_limit = std::max(kernel.front_limit, pr.front_y);

    Image3D image(grid);
    const std::size_t n_vox = grid.size();
    const std::size_t tile = static_cast<std::size_t>(opts.tile_voxels);
    const std::size_t n_tiles = (n_vox + tile - 1) / tile;

    // One burst of pulses is compressed at a time.
    const std::size_t block = static_cast<std::size_t>(cube.n_channels);
    std::vector<cplx> profiles(block * n_bins);
    std::mutex merge_mutex;
    const std::size_t groups = opts.deterministic ? 1 : static_cast<std::size_t>(workers);

    for (std::size_t p0 = 0; p0 < refs.size(); p0 += block) {
        const std::size_t p1 = std::min(refs.size(), p0 + block);
        const std::size_t np = p1 - p0;
        const std::size_t chunk = (np + workers - 1) / workers;
        parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
            for (std::size_t i = w * chunk; i < std::min(np, (w + 1) * chunk); ++i) {
                const auto& pr = refs[p0 + i];
                compressors[w]->compress_into(cube.pulse(pr.burst, pr.slot),
                                              std::span<cplx>(profiles.data() + i * n_bins, n_bins));
            }
        });

        parallel_for(n_tiles * groups, workers, [&](std::size_t task) {
            const std::size_t t = task / groups;
            const std::size_t g = task % groups;
            const std::size_t v0 = t * tile;
            const std::size_t v1 = std::min(n_vox, v0 + tile);
            if (groups == 1) {
                for (std::size_t i = 0; i < np; ++i)
                    kernel.accumulate(refs[p0 + i], profiles.data() + i * n_bins, v0, v1, image.values.data() + v0);
                return;
            }
            std::vector<cplx> partial(v1 - v0);
            for (std::size_t i = g; i < np; i += groups)
                kernel.accumulate(refs[p0 + i], profiles.data() + i * n_bins, v0, v1, partial.data());
            std::lock_guard lock(merge_mutex);
            for (std::size_t v = v0; v < v1; ++v) image.values[v] += partial[v - v0];
        });
    }

    std::size_t n_excluded = 0;
    for (std::size_t v = 0; v < n_vox; ++v)
        if (kernel.vy[v] <= kernel.front_limit) ++n_excluded;
    if (stats) {
        stats->excluded_voxels = n_excluded;
        if (n_excluded > 0)
            stats->warnings.push_back(std::to_string(n_excluded) + " voxels at or behind the array plane excluded");
    }

    const auto fp = geometry_fingerprint(geom);
    image.cube_hash = cube_digest(cube);
    image.geometry_hash = to_hex(fp.data(), fp.size());
    BackprojectOptions effective = opts;
    effective.first_burst = first;
    effective.n_bursts = count;
    image.options = effective.summary();
    return image;
}

Image3D backproject(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                    const VoxelGrid& grid, const BackprojectOptions& opts, BackprojectStats* stats)
{
    BackprojectOptions serial = opts;
    serial.deterministic = true;
    return backproject_parallel(cube, geom, trajectory, grid, serial, 1, stats);
}

std::vector<cplx> pulse_phasors(const RawDataCube& cube, const ArrayGeometry& geom, const Trajectory& trajectory,
                                const Vec3& point, const BackprojectOptions& opts)
{
    const VoxelGrid single = VoxelGrid::centered(point, {1, 1, 1}, {1, 1, 1});
    int first = 0, count = 0;
    check_inputs(cube, geom, trajectory, single, opts, first, count);
    const auto refs = pulse_refs(cube, geom, trajectory, first, count);
    RangeCompressor rc(cube.chirp, opts.window, opts.upsample);
    Kernel kernel(single, rc.bin_spacing(), cube.chirp.f_center());
    kernel.n_bins = static_cast<std::size_t>(rc.fft_size());
    std::vector<cplx> profile(kernel.n_bins);
    std::vector<cplx> out;
    out.reserve(refs.size());
    for (const auto& pr : refs) kernel.front_limit = std::max(kernel.front_limit, pr.front_y);
    for (const auto& pr : refs) {
        rc.compress_into(cube.pulse(pr.burst, pr.slot), profile);
        cplx acc{};
        kernel.accumulate(pr, profile.data(), 0, 1, &acc);
        out.push_back(acc);
    }
    return out;
}

double circular_variance(const std::vector<cplx>& phasors)
{
    cplx sum{};
    std::size_t n = 0;
    for (const auto& p : phasors) {
        const double m = std::abs(p);
        if (m == 0.0) continue;
        sum += p / m;
        ++n;
    }
    require(n > 0, ErrorKind::Numerical, "circular_variance: no non-zero phasors");
    return 1.0 - std::abs(sum) / static_cast<double>(n);
}

std::vector<Slice> export_slices(const Image3D& image, const SliceOptions& opts)
{
    require(opts.axis >= 0 && opts.axis <= 2, ErrorKind::Usage, "export_slices: axis must be x, y or z");
    require(opts.db_floor < 0.0, ErrorKind::Usage, "export_slices: dB floor must be negative");
    const auto& g = image.grid;
    const int a = opts.axis;
    const int u = a == 0 ? 1 : 0;
    const int v = a == 2 ? 1 : 2;

    double peak = 0.0;
    for (const auto& val : image.values) peak = std::max(peak, std::abs(val));

    auto to_pixel = [&](double mag) -> std::uint8_t {
        if (peak <= 0.0 || mag <= 0.0) return 0;
        const double db = 20.0 * std::log10(mag / peak);
        if (db <= opts.db_floor) return 0;
        const double level = std::round(255.0 * (db - opts.db_floor) / -opts.db_floor);
        return static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    };
    auto mag_at = [&](int ia, int iu, int iv) {
        std::array<int, 3> idx{};
        idx[a] = ia;
        idx[u] = iu;
        idx[v] = iv;
        return std::abs(image.at(idx[0], idx[1], idx[2]));
    };

    std::vector<Slice> slices;
    const int n_slices = opts.mode == SliceMode::Raw ? g.dims[a] : 1;
    for (int s = 0; s < n_slices; ++s) {
        Slice sl;
        sl.width = g.dims[u];
        sl.height = g.dims[v];
        sl.index = s;
        sl.coordinate = g.origin[a] + s * g.spacing[a];
        sl.pixels.resize(static_cast<std::size_t>(sl.width) * sl.height);
        for (int iv = 0; iv < sl.height; ++iv)
            for (int iu = 0; iu < sl.width; ++iu) {
                double m = 0.0;
                if (opts.mode == SliceMode::Raw)
                    m = mag_at(s, iu, iv);
                else
                    for (int ia = 0; ia < g.dims[a]; ++ia) m = std::max(m, mag_at(ia, iu, iv));
                sl.pixels[static_cast<std::size_t>(iv) * sl.width + iu] = to_pixel(m);
            }
        slices.push_back(std::move(sl));
    }
    return slices;
}

}  // namespace misar

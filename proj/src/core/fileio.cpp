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

#include "fileio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "hash.hpp"

namespace misar {

namespace {

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const std::string& in, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}
std::uint64_t get_u64(const std::string& in, std::size_t at)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}
double get_f64(const std::string& in, std::size_t at) { return std::bit_cast<double>(get_u64(in, at)); }
float get_f32(const std::string& in, std::size_t at) { return std::bit_cast<float>(get_u32(in, at)); }

std::vector<std::vector<std::string>> csv_rows(const std::string& text, std::size_t min_cols, std::size_t max_cols,
                                               const std::string& what)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cols.push_back(cell);
        // Header row: first cell is not numeric.
        if (rows.empty() && !cols.empty()) {
            char* end = nullptr;
            std::strtod(cols[0].c_str(), &end);
            if (end == cols[0].c_str()) continue;
        }
        require(cols.size() >= min_cols && cols.size() <= max_cols, ErrorKind::DataFormat,
                what + " line " + std::to_string(lineno) + ": expected " + std::to_string(min_cols) +
                    (min_cols == max_cols ? "" : "-" + std::to_string(max_cols)) + " columns");
        rows.push_back(std::move(cols));
    }
    return rows;
}

double cell_double(const std::string& s, const std::string& what)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end != s.c_str() && *end == '\0', ErrorKind::DataFormat, what + ": '" + s + "' is not a number");
    return v;
}

std::string fmt(double v) { return format_double(v); }

std::string join_vec(const Vec3& v) { return fmt(v.x) + " " + fmt(v.y) + " " + fmt(v.z); }

}  // namespace

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes)
{
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot write '" + path + "'");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

std::string encode_cube(const RawDataCube& cube)
{
    cube.validate();
    std::string out;
    out.reserve(kCubeHeaderBytes + cube.data.size() * 8);
    out.append(kCubeMagic, 4);
    out.push_back(static_cast<char>(kCubeVersion));
    put_u32(out, static_cast<std::uint32_t>(cube.n_bursts));
    put_u32(out, static_cast<std::uint32_t>(cube.n_channels));
    put_u32(out, static_cast<std::uint32_t>(cube.n_samples()));
    put_f64(out, cube.chirp.f_start);
    put_f64(out, cube.chirp.f_stop);
    put_f64(out, cube.chirp.pulse_width);
    put_f64(out, cube.chirp.prt);
    put_f64(out, cube.burst_interval);
    out.push_back(static_cast<char>((cube.spreading_loss ? 1 : 0) | (cube.noisy ? 2 : 0)));
    put_u64(out, cube.seed);
    out.append(reinterpret_cast<const char*>(cube.geometry_fingerprint.data()), 32);
    out.resize(kCubeHeaderBytes, '\0');
    for (const auto& v : cube.data) {
        put_f32(out, static_cast<float>(v.real()));
        put_f32(out, static_cast<float>(v.imag()));
    }
    return out;
}

RawDataCube decode_cube(const std::string& in)
{
    require(in.size() >= kCubeHeaderBytes, ErrorKind::DataFormat, "cube: truncated header");
    require(std::memcmp(in.data(), kCubeMagic, 4) == 0, ErrorKind::DataFormat, "cube: bad magic (not a MISR file)");
    const auto version = static_cast<unsigned char>(in[4]);
    require(version == kCubeVersion, ErrorKind::DataFormat,
            "cube: unsupported format version " + std::to_string(version) + " (expected 1)");
    RawDataCube cube;
    cube.n_bursts = static_cast<int>(get_u32(in, 5));
    cube.n_channels = static_cast<int>(get_u32(in, 9));
    cube.chirp.n_samples = static_cast<int>(get_u32(in, 13));
    cube.chirp.f_start = get_f64(in, 17);
    cube.chirp.f_stop = get_f64(in, 25);
    cube.chirp.pulse_width = get_f64(in, 33);
    cube.chirp.prt = get_f64(in, 41);
    cube.burst_interval = get_f64(in, 49);
    const auto flags = static_cast<unsigned char>(in[57]);
    cube.spreading_loss = flags & 1;
    cube.noisy = (flags & 2) != 0;
    cube.seed = get_u64(in, 58);
    std::memcpy(cube.geometry_fingerprint.data(), in.data() + 66, 32);
    require(cube.n_bursts >= 1 && cube.n_channels >= 1 && cube.chirp.n_samples >= 2, ErrorKind::DataFormat,
            "cube: invalid dimensions in header");
    try {
        cube.chirp.validate();
    } catch (const Error& e) {
        fail(ErrorKind::DataFormat, std::string("cube: invalid chirp header: ") + e.what());
    }
    const std::size_t count = static_cast<std::size_t>(cube.n_bursts) * cube.n_channels * cube.chirp.n_samples;
    const std::size_t expected = kCubeHeaderBytes + count * 8;
    require(in.size() >= expected, ErrorKind::DataFormat,
            "cube: truncated payload (" + std::to_string(in.size() - kCubeHeaderBytes) + " of " +
                std::to_string(count * 8) + " bytes)");
    require(in.size() == expected, ErrorKind::DataFormat, "cube: trailing bytes after payload");
    cube.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = kCubeHeaderBytes + 8 * i;
        cube.data[i] = {get_f32(in, at), get_f32(in, at + 4)};
    }
    return cube;
}

void write_cube(const std::string& path, const RawDataCube& cube) { write_file(path, encode_cube(cube)); }
RawDataCube read_cube(const std::string& path) { return decode_cube(read_file(path)); }
std::string cube_digest(const RawDataCube& cube) { return sha256_hex(encode_cube(cube)); }

std::string encode_image(const Image3D& image)
{
    image.grid.validate();
    require(image.values.size() == image.grid.size(), ErrorKind::DataFormat, "image: value count mismatch");
    std::string payload;
    payload.reserve(image.values.size() * 8);
    for (const auto& v : image.values) {
        put_f32(payload, static_cast<float>(v.real()));
        put_f32(payload, static_cast<float>(v.imag()));
    }
    const auto& g = image.grid;
    std::string out = "MISAR-IMAGE 1\n";
    out += "dims = " + std::to_string(g.dims[0]) + " " + std::to_string(g.dims[1]) + " " + std::to_string(g.dims[2]) + "\n";
    out += "origin = " + join_vec(g.origin) + "\n";
    out += "spacing = " + join_vec(g.spacing) + "\n";
    out += "cube_hash = " + image.cube_hash + "\n";
    out += "geometry_hash = " + image.geometry_hash + "\n";
    out += "options = " + image.options + "\n";
    out += "payload_sha256 = " + sha256_hex(payload) + "\n";
    out += "end_header\n";
    out += payload;
    return out;
}

Image3D decode_image(const std::string& in)
{
    const std::string first = "MISAR-IMAGE ";
    require(in.compare(0, first.size(), first) == 0, ErrorKind::DataFormat, "image: bad magic");
    const auto nl = in.find('\n');
    require(nl != std::string::npos, ErrorKind::DataFormat, "image: truncated header");
    const std::string version = in.substr(first.size(), nl - first.size());
    require(version == "1", ErrorKind::DataFormat, "image: unsupported format version " + version);
    const std::string marker = "end_header\n";
    const auto end = in.find(marker);
    require(end != std::string::npos, ErrorKind::DataFormat, "image: missing end_header");
    Config hdr;
    try {
        hdr = Config::parse(in.substr(nl + 1, end - nl - 1), "image header");
    } catch (const Error& e) {
        fail(ErrorKind::DataFormat, e.what());
    }
    VoxelGrid g;
    try {
        const auto d = hdr.get_doubles("dims", {});
        require(d.size() == 3, ErrorKind::DataFormat, "image: dims needs 3 values");
        g.dims = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
        g.origin = hdr.get_vec3("origin", {});
        g.spacing = hdr.get_vec3("spacing", {});
        g.validate();
    } catch (const Error& e) {
        fail(ErrorKind::DataFormat, std::string("image header: ") + e.what());
    }
    Image3D image(g);
    image.cube_hash = hdr.get_string("cube_hash", "");
    image.geometry_hash = hdr.get_string("geometry_hash", "");
    image.options = hdr.get_string("options", "");
    const std::size_t start = end + marker.size();
    const std::size_t expected = g.size() * 8;
    require(in.size() - start >= expected, ErrorKind::DataFormat, "image: truncated payload");
    require(in.size() - start == expected, ErrorKind::DataFormat, "image: trailing bytes after payload");
    for (std::size_t i = 0; i < g.size(); ++i)
        image.values[i] = {get_f32(in, start + 8 * i), get_f32(in, start + 8 * i + 4)};
    return image;
}

void write_image(const std::string& path, const Image3D& image) { write_file(path, encode_image(image)); }
Image3D read_image(const std::string& path) { return decode_image(read_file(path)); }

std::string trajectory_to_csv(const Trajectory& traj)
{
    std::string out = "t,x,y,z,vx,vy,vz\n";
    for (const auto& s : traj.samples())
        out += fmt(s.t) + "," + fmt(s.position.x) + "," + fmt(s.position.y) + "," + fmt(s.position.z) + "," +
               fmt(s.velocity.x) + "," + fmt(s.velocity.y) + "," + fmt(s.velocity.z) + "\n";
    return out;
}

Trajectory trajectory_from_csv(const std::string& text)
{
    std::vector<TrajectorySample> samples;
    for (const auto& r : csv_rows(text, 4, 7, "trajectory")) {
        require(r.size() == 4 || r.size() == 7, ErrorKind::DataFormat, "trajectory: expected 4 or 7 columns");
        TrajectorySample s;
        s.t = cell_double(r[0], "trajectory");
        s.position = {cell_double(r[1], "trajectory"), cell_double(r[2], "trajectory"), cell_double(r[3], "trajectory")};
        if (r.size() == 7)
            s.velocity = {cell_double(r[4], "trajectory"), cell_double(r[5], "trajectory"), cell_double(r[6], "trajectory")};
        samples.push_back(s);
    }
    require(!samples.empty(), ErrorKind::DataFormat, "trajectory: no samples");
    Trajectory traj(std::move(samples));
    // Velocities omitted in the file are taken from segment slopes.
    if (traj.samples().size() >= 2) {
        std::vector<TrajectorySample> filled = traj.samples();
        bool any_missing = false;
        for (const auto& r : csv_rows(text, 4, 7, "trajectory")) any_missing |= r.size() == 4;
        if (any_missing) {
            for (auto& s : filled) s.velocity = traj.velocity_at(s.t);
            traj = Trajectory(std::move(filled));
        }
    }
    return traj;
}

std::string measurements_to_csv(const std::vector<TrackMeasurement>& ms)
{
    std::string out = "t,x,y,z,valid\n";
    for (const auto& m : ms)
        out += fmt(m.t) + "," + fmt(m.position.x) + "," + fmt(m.position.y) + "," + fmt(m.position.z) + "," +
               (m.valid ? "1" : "0") + "\n";
    return out;
}

std::vector<TrackMeasurement> measurements_from_csv(const std::string& text)
{
    std::vector<TrackMeasurement> ms;
    for (const auto& r : csv_rows(text, 4, 5, "measurements")) {
        TrackMeasurement m;
        m.t = cell_double(r[0], "measurements");
        m.position = {cell_double(r[1], "measurements"), cell_double(r[2], "measurements"),
                      cell_double(r[3], "measurements")};
        m.valid = r.size() < 5 || cell_double(r[4], "measurements") != 0.0;
        require(std::isfinite(m.t) && std::isfinite(m.position.norm()), ErrorKind::DataFormat,
                "measurements: non-finite value");
        ms.push_back(m);
    }
    return ms;
}

std::string observations_to_csv(const std::vector<LinkObservation>& obs)
{
    std::string out = "i,j,x_j,y_j,z_j,T,A,phi\n";
    for (const auto& o : obs)
        out += std::to_string(o.antenna) + "," + std::to_string(o.grid_index) + "," + fmt(o.point.x) + "," +
               fmt(o.point.y) + "," + fmt(o.point.z) + "," + fmt(o.delay) + "," + fmt(o.amplitude) + "," +
               fmt(o.phase) + "\n";
    return out;
}

std::vector<LinkObservation> observations_from_csv(const std::string& text)
{
    std::vector<LinkObservation> out;
    for (const auto& r : csv_rows(text, 8, 8, "observations")) {
        LinkObservation o;
        o.antenna = static_cast<int>(cell_double(r[0], "observations"));
        o.grid_index = static_cast<int>(cell_double(r[1], "observations"));
        o.point = {cell_double(r[2], "observations"), cell_double(r[3], "observations"), cell_double(r[4], "observations")};
        o.delay = cell_double(r[5], "observations");
        o.amplitude = cell_double(r[6], "observations");
        o.phase = cell_double(r[7], "observations");
        out.push_back(o);
    }
    return out;
}

std::string scene_to_csv(const Scene& scene)
{
    std::string out = "x,y,z,re,im\n";
    for (const auto& s : scene.scatterers)
        out += fmt(s.position.x) + "," + fmt(s.position.y) + "," + fmt(s.position.z) + "," + fmt(s.reflectivity.real()) +
               "," + fmt(s.reflectivity.imag()) + "\n";
    return out;
}

Scene scene_from_csv(const std::string& text)
{
    Scene scene;
    for (const auto& r : csv_rows(text, 4, 5, "scene")) {
        Scatterer s;
        s.position = {cell_double(r[0], "scene"), cell_double(r[1], "scene"), cell_double(r[2], "scene")};
        s.reflectivity = {cell_double(r[3], "scene"), r.size() == 5 ? cell_double(r[4], "scene") : 0.0};
        require(std::isfinite(s.position.norm()) && std::isfinite(std::abs(s.reflectivity)), ErrorKind::DataFormat,
                "scene: non-finite scatterer");
        scene.scatterers.push_back(s);
    }
    return scene;
}

std::string error_model_to_text(const ChannelErrorModel& model, const std::string& prefix)
{
    std::string out;
    for (std::size_t i = 0; i < model.antennas.size(); ++i) {
        const auto& e = model.antennas[i];
        const std::string k = prefix + ".antenna." + std::to_string(i) + ".";
        out += k + "amplitude = " + fmt(e.amplitude) + "\n";
        out += k + "phase = " + fmt(e.phase) + "\n";
        out += k + "delay = " + fmt(e.delay) + "\n";
        out += k + "offset = " + join_vec(e.offset) + "\n";
    }
    return out;
}

ChannelErrorModel error_model_from_config(const Config& cfg, const std::string& prefix)
{
    ChannelErrorModel model;
    for (int i = 0; i < kNumAntennas; ++i) {
        auto& e = model.antennas[i];
        const std::string k = prefix + ".antenna." + std::to_string(i) + ".";
        e.amplitude = cfg.get_double(k + "amplitude", 1.0);
        e.phase = cfg.get_double(k + "phase", 0.0);
        e.delay = cfg.get_double(k + "delay", 0.0);
        e.offset = cfg.get_vec3(k + "offset", {});
    }
    require(!cfg.has(prefix + ".antenna." + std::to_string(kNumAntennas) + ".amplitude"), ErrorKind::DataFormat,
            "error model has more than 24 antennas");
    model.validate();
    return model;
}

std::string solution_to_text(const CalibrationSolution& sol)
{
    std::string out;
    out += "calib.geometry_fingerprint = " + to_hex(sol.geometry_fingerprint.data(), 32) + "\n";
    out += std::string("calib.converged = ") + (sol.converged ? "true" : "false") + "\n";
    out += error_model_to_text(sol.errors, "calib");
    for (std::size_t i = 0; i < sol.fits.size(); ++i) {
        const auto& f = sol.fits[i];
        const std::string k = "calib.antenna." + std::to_string(i) + ".";
        out += k + "iterations = " + std::to_string(f.iterations) + "\n";
        out += k + "final_cost = " + fmt(f.final_cost) + "\n";
        out += k + "residual_rms = " + fmt(f.residual_rms) + "\n";
        out += k + "phase_rms = " + fmt(f.phase_rms) + "\n";
        out += k + "observations = " + std::to_string(f.n_observations) + "\n";
        out += k + std::string("converged = ") + (f.converged ? "true" : "false") + "\n";
    }
    return out;
}

CalibrationSolution solution_from_text(const std::string& text)
{
    const Config cfg = Config::parse(text, "calibration solution");
    CalibrationSolution sol;
    const std::string hex = cfg.get_string("calib.geometry_fingerprint", "");
    require(hex.size() == 64, ErrorKind::DataFormat, "calibration solution: missing geometry fingerprint");
    for (int i = 0; i < 32; ++i)
        sol.geometry_fingerprint[i] = static_cast<unsigned char>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
    sol.converged = cfg.get_bool("calib.converged", true);
    sol.errors = error_model_from_config(cfg, "calib");
    for (int i = 0; i < kNumAntennas; ++i) {
        auto& f = sol.fits[i];
        const std::string k = "calib.antenna." + std::to_string(i) + ".";
        f.iterations = static_cast<int>(cfg.get_int(k + "iterations", 0));
        f.final_cost = cfg.get_double(k + "final_cost", 0.0);
        f.residual_rms = cfg.get_double(k + "residual_rms", 0.0);
        f.phase_rms = cfg.get_double(k + "phase_rms", 0.0);
        f.n_observations = static_cast<int>(cfg.get_int(k + "observations", 0));
        f.converged = cfg.get_bool(k + "converged", true);
    }
    return sol;
}

std::string encode_pgm(const Slice& slice)
{
    std::string out = "P5\n" + std::to_string(slice.width) + " " + std::to_string(slice.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(slice.pixels.data()), slice.pixels.size());
    return out;
}

std::string slice_sidecar(const std::vector<Slice>& slices, const Image3D& image, const SliceOptions& opts)
{
    const char* axes[] = {"x", "y", "z"};
    std::string out;
    out += std::string("slices.axis = ") + axes[opts.axis] + "\n";
    out += std::string("slices.mode = ") + (opts.mode == SliceMode::Raw ? "raw" : "max") + "\n";
    out += "slices.db_floor = " + fmt(opts.db_floor) + "\n";
    out += "slices.count = " + std::to_string(slices.size()) + "\n";
    out += "slices.image_origin = " + join_vec(image.grid.origin) + "\n";
    out += "slices.image_spacing = " + join_vec(image.grid.spacing) + "\n";
    for (const auto& s : slices)
        out += "slices." + std::to_string(s.index) + ".coordinate = " + fmt(s.coordinate) + "\n";
    return out;
}

void write_slices(const std::string& dir, const std::vector<Slice>& slices, const Image3D& image,
                  const SliceOptions& opts)
{
    std::filesystem::create_directories(dir);
    for (const auto& s : slices) {
        char name[32];
        std::snprintf(name, sizeof name, "slice_%03d.pgm", s.index);
        write_file((std::filesystem::path(dir) / name).string(), encode_pgm(s));
    }
    write_file((std::filesystem::path(dir) / "slices.txt").string(), slice_sidecar(slices, image, opts));
}

}  // namespace misar

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

#include "arraygeom.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "hash.hpp"

namespace misar {

namespace {

Vec3 place(double s, const GeometryConfig& c)
{
    if (c.layout == LayoutMode::Planar) return {0.0, -c.arc_radius, s};
    // Linear coordinate is arc length on a circle about the scene center.
    const double theta = s / c.arc_radius;
    return {0.0, -c.arc_radius * std::cos(theta), c.arc_radius * std::sin(theta)};
}

const char* layout_name(LayoutMode m) { return m == LayoutMode::Arc ? "arc" : "planar"; }

}  // namespace

GeometryConfig GeometryConfig::from_config(const Config& cfg)
{
    GeometryConfig g;
    g.arc_radius = cfg.get_double("geometry.arc_radius", g.arc_radius);
    g.virtual_span = cfg.get_double("geometry.virtual_span", g.virtual_span);
    g.n_tx = static_cast<int>(cfg.get_int("geometry.n_tx", g.n_tx));
    g.n_rx = static_cast<int>(cfg.get_int("geometry.n_rx", g.n_rx));
    const std::string layout = cfg.get_string("geometry.layout", "arc");
    if (layout == "arc")
        g.layout = LayoutMode::Arc;
    else if (layout == "planar")
        g.layout = LayoutMode::Planar;
    else
        fail(ErrorKind::Config, "geometry.layout must be 'arc' or 'planar', got '" + layout + "'");
    return g;
}

ArrayGeometry build_default_geometry(const GeometryConfig& c)
{
    require(c.n_tx == kNumTx && c.n_rx == kNumRx, ErrorKind::Config,
            "array must have 8 Tx and 16 Rx elements");
    require(c.arc_radius > 0.0 && std::isfinite(c.arc_radius), ErrorKind::Config,
            "geometry.arc_radius must be positive");
    require(c.virtual_span > 0.0 && std::isfinite(c.virtual_span), ErrorKind::Config,
            "geometry.virtual_span must be positive");

    // Virtual spacing d: Rx at 2d pitch, Tx at 32d pitch, so the midpoints
    // d * (16 m + n - 63.5) tile 128 uniform positions.
    const double d = c.virtual_span / kNumChannels;
    ArrayGeometry g;
    g.arc_radius = c.arc_radius;
    g.virtual_span = c.virtual_span;
    g.layout = c.layout;
    for (int m = 0; m < kNumTx; ++m)
        g.tx.push_back({m, AntennaRole::Tx, place((m - 3.5) * 32.0 * d, c)});
    for (int n = 0; n < kNumRx; ++n)
        g.rx.push_back({n, AntennaRole::Rx, place((n - 7.5) * 2.0 * d, c)});
    return g;
}

void ArrayGeometry::validate() const
{
    require(tx.size() == static_cast<std::size_t>(kNumTx) && rx.size() == static_cast<std::size_t>(kNumRx),
            ErrorKind::Config, "array must have 8 Tx and 16 Rx elements");
    for (const auto* list : {&tx, &rx})
        for (const auto& e : *list)
            require(std::isfinite(e.position.norm()), ErrorKind::Config, "non-finite element position");
}

std::vector<VirtualChannel> virtual_channels(const ArrayGeometry& geom)
{
    std::vector<VirtualChannel> out;
    out.reserve(kNumChannels);
    for (int m = 0; m < kNumTx; ++m)
        for (int n = 0; n < kNumRx; ++n)
            out.push_back({m, n, channel_slot(m, n), (geom.tx[m].position + geom.rx[n].position) * 0.5});
    return out;
}

ArrayGeometry perturb_geometry(const ArrayGeometry& geom, const ChannelErrorModel& errors)
{
    require(errors.antennas.size() == static_cast<std::size_t>(kNumAntennas), ErrorKind::Config,
            "error model size does not match the 24-element array");
    ArrayGeometry out = geom;
    for (int m = 0; m < kNumTx; ++m) out.tx[m].position += errors.antennas[tx_antenna(m)].offset;
    for (int n = 0; n < kNumRx; ++n) out.rx[n].position += errors.antennas[rx_antenna(n)].offset;
    return out;
}

double max_arc_deviation(const ArrayGeometry& geom)
{
    double worst = 0.0;
    for (int i = 0; i < kNumAntennas; ++i)
        worst = std::max(worst, std::abs(geom.antenna_position(i).norm() - geom.arc_radius));
    return worst;
}

bool satisfies_arc_constraint(const ArrayGeometry& geom, double tol)
{
    return max_arc_deviation(geom) <= tol;
}

double array_front_plane(const ArrayGeometry& geom)
{
    double front = -INFINITY;
    for (int i = 0; i < kNumAntennas; ++i) front = std::max(front, geom.antenna_position(i).y);
    return front;
}

std::string geometry_to_text(const ArrayGeometry& geom)
{
    auto vec = [](const Vec3& p) {
        return format_double(p.x) + " " + format_double(p.y) + " " + format_double(p.z);
    };
    std::string out;
    out += "geometry.arc_radius = " + format_double(geom.arc_radius) + "\n";
    out += "geometry.virtual_span = " + format_double(geom.virtual_span) + "\n";
    out += std::string("geometry.layout = ") + layout_name(geom.layout) + "\n";
    for (const auto& e : geom.tx) out += "geometry.tx." + std::to_string(e.index) + " = " + vec(e.position) + "\n";
    for (const auto& e : geom.rx) out += "geometry.rx." + std::to_string(e.index) + " = " + vec(e.position) + "\n";
    return out;
}

ArrayGeometry geometry_from_config(const Config& cfg)
{
    ArrayGeometry g = build_default_geometry(GeometryConfig::from_config(cfg));
    // Explicit element positions override the constructed layout.
    for (auto& e : g.tx) e.position = cfg.get_vec3("geometry.tx." + std::to_string(e.index), e.position);
    for (auto& e : g.rx) e.position = cfg.get_vec3("geometry.rx." + std::to_string(e.index), e.position);
    g.validate();
    return g;
}

std::array<unsigned char, 32> geometry_fingerprint(const ArrayGeometry& geom)
{
    return sha256_bytes(geometry_to_text(geom));
}

}  // namespace misar

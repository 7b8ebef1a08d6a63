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

#include "config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace misar {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& key)
{
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf") return INFINITY;
    if (t == "-inf") return -INFINITY;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        fail(ErrorKind::Config, "config key '" + key + "': '" + text + "' is not a number");
    return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin)
{
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Config, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            fail(ErrorKind::Config, origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

std::optional<std::string> Config::raw(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    return raw(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const
{
    auto v = raw(key);
    return v ? parse_number(*v, key) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const
{
    auto v = raw(key);
    if (!v) return fallback;
    const std::string t = trim(*v);
    char* end = nullptr;
    errno = 0;
    const long long n = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        fail(ErrorKind::Config, "config key '" + key + "': '" + *v + "' is not an integer");
    return n;
}

bool Config::get_bool(const std::string& key, bool fallback) const
{
    auto v = raw(key);
    if (!v) return fallback;
    const std::string t = trim(*v);
    if (t == "true" || t == "1" || t == "on" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "off" || t == "no") return false;
    fail(ErrorKind::Config, "config key '" + key + "': '" + *v + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key, std::vector<double> fallback) const
{
    auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::string text = *v;
    for (char& c : text)
        if (c == ',') c = ' ';
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) out.push_back(parse_number(tok, key));
    return out;
}

Vec3 Config::get_vec3(const std::string& key, const Vec3& fallback) const
{
    if (!has(key)) return fallback;
    auto v = get_doubles(key, {});
    if (v.size() != 3) fail(ErrorKind::Config, "config key '" + key + "': expected 3 numbers");
    return {v[0], v[1], v[2]};
}

void Config::merge(const Config& other)
{
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string Config::to_text() const
{
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

std::string format_double(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace misar

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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vec3.hpp"

namespace misar {

/// Flat `section.key = value` configuration. Lines starting with `#` are
/// comments; later assignments override earlier ones.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "<string>");
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> raw(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

    // Merge `other` on top of this config.
    void merge(const Config& other);

    // Canonical text form: sorted keys, one `key = value` per line.
    std::string to_text() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_ = "<string>";
};

// Full-precision decimal text for a double that parses back bit-exactly.
std::string format_double(double v);

}  // namespace misar

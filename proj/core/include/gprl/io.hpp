// Copyright 2026 The gprl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include "gprl/ad/array.hpp"

namespace gprl::io {

inline constexpr std::uint32_t kFormatVersion = 1;

/// Self-describing binary container of named arrays, strings and integers.
///
/// Layout (little endian): 8-byte magic "GPRLBIN1", u32 version, kind
/// string, u32 entry count, then entries sorted by name. Each entry is a
/// name string, a u8 tag and a payload: tag 1 = f64 array (u32 rank, u64
/// dims, values), tag 2 = string, tag 3 = i64. Strings are u32 length +
/// bytes.
class Container {
public:
    explicit Container(std::string kind = "") : kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

    void put(const std::string& name, ad::Array value) { entries_[name] = std::move(value); }
    void put(const std::string& name, std::string value) { entries_[name] = std::move(value); }
    void put(const std::string& name, const char* value) { entries_[name] = std::string(value); }
    void put(const std::string& name, std::int64_t value) { entries_[name] = value; }
    void put_number(const std::string& name, double value) { entries_[name] = ad::Array::scalar(value); }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const ad::Array& array(const std::string& name) const;
    const std::string& text(const std::string& name) const;
    std::int64_t integer(const std::string& name) const;
    double number(const std::string& name) const { return array(name).item(); }

    void save(const std::filesystem::path& path) const;
    /// Refuses files whose version differs from kFormatVersion or whose kind
    /// differs from `expected_kind` (when non-empty).
    static Container load(const std::filesystem::path& path, const std::string& expected_kind = "");

private:
    using Entry = std::variant<ad::Array, std::string, std::int64_t>;
    const Entry& find(const std::string& name) const;

    std::string kind_;
    std::map<std::string, Entry> entries_;
};

}  // namespace gprl::io

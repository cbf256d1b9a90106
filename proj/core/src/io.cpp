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

#include "gprl/io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "gprl/errors.hpp"

namespace gprl::io {
namespace {

constexpr char kMagic[8] = {'G', 'P', 'R', 'L', 'B', 'I', 'N', '1'};
enum : std::uint8_t { kTagArray = 1, kTagString = 2, kTagInt = 3 };

class Writer {
public:
    template <class T>
    void pod(const T& v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const char*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(std::vector<char> buf, std::string path) : buf_(std::move(buf)), path_(std::move(path)) {}

    template <class T>
    T pod() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    void raw(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, buf_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw IoError(path_ + ": truncated container");
    }

    std::vector<char> buf_;
    std::size_t pos_ = 0;
    std::string path_;
};

}  // namespace

const Container::Entry& Container::find(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw IoError("container '" + kind_ + "': missing entry '" + name + "'");
    return it->second;
}

const ad::Array& Container::array(const std::string& name) const {
    const auto* v = std::get_if<ad::Array>(&find(name));
    if (!v) throw IoError("container entry '" + name + "' is not an array");
    return *v;
}

const std::string& Container::text(const std::string& name) const {
    const auto* v = std::get_if<std::string>(&find(name));
    if (!v) throw IoError("container entry '" + name + "' is not a string");
    return *v;
}

std::int64_t Container::integer(const std::string& name) const {
    const auto* v = std::get_if<std::int64_t>(&find(name));
    if (!v) throw IoError("container entry '" + name + "' is not an integer");
    return *v;
}

void Container::save(const std::filesystem::path& path) const {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.pod(kFormatVersion);
    w.str(kind_);
    w.pod(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, entry] : entries_) {
        w.str(name);
        if (const auto* a = std::get_if<ad::Array>(&entry)) {
            w.pod(kTagArray);
            w.pod(static_cast<std::uint32_t>(a->rank()));
            for (auto d : a->shape()) w.pod(static_cast<std::uint64_t>(d));
            w.raw(a->data(), a->bytes());
        } else if (const auto* s = std::get_if<std::string>(&entry)) {
            w.pod(kTagString);
            w.str(*s);
        } else {
            w.pod(kTagInt);
            w.pod(std::get<std::int64_t>(entry));
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Container Container::load(const std::filesystem::path& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(buf), path.string());
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw IoError(path.string() + ": not a gprl container");
    const auto version = r.pod<std::uint32_t>();
    if (version != kFormatVersion) {
        throw IoError(path.string() + ": unsupported container version " + std::to_string(version) + " (expected " +
                      std::to_string(kFormatVersion) + ")");
    }
    Container c(r.str());
    if (!expected_kind.empty() && c.kind_ != expected_kind) {
        throw IoError(path.string() + ": expected a '" + expected_kind + "' container, found '" + c.kind_ + "'");
    }
    const auto count = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str();
        const auto tag = r.pod<std::uint8_t>();
        if (tag == kTagArray) {
            const auto rank = r.pod<std::uint32_t>();
            ad::Shape shape(rank);
            for (auto& d : shape) d = static_cast<std::size_t>(r.pod<std::uint64_t>());
            ad::Array a(shape);
            r.raw(a.data(), a.bytes());
            c.entries_[name] = std::move(a);
        } else if (tag == kTagString) {
            c.entries_[name] = r.str();
        } else if (tag == kTagInt) {
            c.entries_[name] = r.pod<std::int64_t>();
        } else {
            throw IoError(path.string() + ": unknown entry tag " + std::to_string(tag));
        }
    }
    if (!r.done()) throw IoError(path.string() + ": trailing bytes after last entry");
    return c;
}

}  // namespace gprl::io

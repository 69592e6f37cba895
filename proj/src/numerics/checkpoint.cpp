/*
Copyright 2026 The Karte Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "../error.hpp"

namespace karte {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void bytes(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    std::string bytes() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(buf_.begin() + static_cast<long>(pos_), buf_.begin() + static_cast<long>(pos_ + n));
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size())
            fail(ErrorCode::Format, "checkpoint truncated at byte " + std::to_string(pos_));
    }
    std::uint64_t get_le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const std::vector<std::uint8_t>& buf_;
    std::size_t pos_ = 0;
};

} // namespace

const Parameter* Checkpoint::find(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

std::vector<std::uint8_t> serialize_checkpoint(const std::vector<const Parameter*>& params, bool with_moments,
                                               const std::map<std::string, std::string>& metadata) {
    Writer w;
    for (char c : std::string("KCPT")) w.u8(static_cast<std::uint8_t>(c));
    w.u16(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
        w.bytes(p->name);
        w.u32(static_cast<std::uint32_t>(p->value.rank()));
        for (auto d : p->shape()) w.u32(static_cast<std::uint32_t>(d));
        w.u8(kDtypeF32);
    }
    for (const auto* p : params)
        for (double v : p->value.data()) w.f32(v);
    w.u8(with_moments ? 1 : 0);
    if (with_moments) {
        for (const auto* p : params) {
            w.u64(p->step_count);
            for (double v : p->first_moment.data()) w.f32(v);
            for (double v : p->second_moment.data()) w.f32(v);
        }
    }
    w.u32(static_cast<std::uint32_t>(metadata.size()));
    for (const auto& [k, v] : metadata) {
        w.bytes(k);
        w.bytes(v);
    }
    return w.take();
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 6 || std::memcmp(bytes.data(), "KCPT", 4) != 0)
        fail(ErrorCode::Format, "checkpoint: bad magic (expected KCPT)");
    Reader r(bytes);
    for (int i = 0; i < 4; ++i) r.u8();
    const auto version = r.u16();
    if (version != kCheckpointVersion)
        fail(ErrorCode::Format, "checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ckpt;
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.bytes();
        const auto rank = r.u32();
        if (rank == 0 || rank > 8) fail(ErrorCode::Format, "checkpoint: bad rank for " + name);
        Shape shape(rank);
        for (auto& d : shape) {
            d = r.u32();
            if (d == 0) fail(ErrorCode::Format, "checkpoint: zero dimension for " + name);
        }
        if (r.u8() != kDtypeF32) fail(ErrorCode::Format, "checkpoint: unsupported dtype for " + name);
        ckpt.params.emplace_back(std::move(name), shape);
    }
    for (auto& p : ckpt.params)
        for (double& v : p.value.data()) v = r.f32();
    const auto has_moments = r.u8();
    if (has_moments > 1) fail(ErrorCode::Format, "checkpoint: bad moments flag");
    ckpt.has_moments = has_moments == 1;
    if (ckpt.has_moments) {
        for (auto& p : ckpt.params) {
            p.step_count = r.u64();
            for (double& v : p.first_moment.data()) v = r.f32();
            for (double& v : p.second_moment.data()) v = r.f32();
        }
    }
    const auto meta_count = r.u32();
    for (std::uint32_t i = 0; i < meta_count; ++i) {
        std::string key = r.bytes();
        ckpt.metadata[key] = r.bytes();
    }
    if (r.remaining() != 0) fail(ErrorCode::Format, "checkpoint: trailing bytes");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<const Parameter*>& params,
                     bool with_moments, const std::map<std::string, std::string>& metadata) {
    const auto bytes = serialize_checkpoint(params, with_moments, metadata);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open checkpoint for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open checkpoint: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes);
}

void restore_parameters(const Checkpoint& ckpt, const ParameterList& targets, const std::string& prefix) {
    for (auto* t : targets) {
        if (t->name.rfind(prefix, 0) != 0) continue;
        const Parameter* src = ckpt.find(t->name);
        if (!src) fail(ErrorCode::Format, "checkpoint: missing parameter " + t->name);
        if (src->shape() != t->shape())
            fail(ErrorCode::Shape, "checkpoint: parameter " + t->name + " has shape " + shape_string(src->shape()) +
                                       ", model expects " + shape_string(t->shape()));
        t->value = src->value;
        if (ckpt.has_moments) {
            t->first_moment = src->first_moment;
            t->second_moment = src->second_moment;
            t->step_count = src->step_count;
        } else {
            t->reset_moments();
        }
    }
}

void round_to_storage_precision(const ParameterList& params) {
    for (auto* p : params)
        for (double& v : p->value.data()) v = static_cast<double>(static_cast<float>(v));
}

} // namespace karte

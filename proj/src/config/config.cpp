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

#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "../error.hpp"

namespace karte {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
    fail(ErrorCode::InvalidArgument, "config: " + key + "=" + value + ": " + what);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "expected a non-negative integer");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "expected a non-negative integer");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "expected a number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "expected true or false");
}

std::string real_text(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general); // shortest round-trip form
    return std::string(buf, end);
}

struct Field {
    std::function<void(Config&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

#define KARTE_SIZE(name) \
    {#name, {[](Config& c, const std::string& v) { c.name = parse_size(#name, v); }, \
             [](const Config& c) { return std::to_string(c.name); }}}
#define KARTE_REAL(name) \
    {#name, {[](Config& c, const std::string& v) { c.name = parse_real(#name, v); }, \
             [](const Config& c) { return real_text(c.name); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        KARTE_SIZE(image_size),
        KARTE_SIZE(resize_size),
        {"encoder_channels",
         {[](Config& c, const std::string& v) {
              std::vector<std::size_t> out;
              std::stringstream ss(v);
              std::string part;
              while (std::getline(ss, part, ',')) out.push_back(parse_size("encoder_channels", trim(part)));
              if (out.empty()) bad_value("encoder_channels", v, "expected a comma-separated list");
              c.encoder_channels = out;
          },
          [](const Config& c) {
              std::string s;
              for (std::size_t i = 0; i < c.encoder_channels.size(); ++i)
                  s += (i ? "," : "") + std::to_string(c.encoder_channels[i]);
              return s;
          }}},
        KARTE_SIZE(hidden),
        KARTE_SIZE(attention),
        KARTE_REAL(dropout),
        KARTE_REAL(forget_bias),
        KARTE_SIZE(batch_size),
        KARTE_REAL(lr_encoder),
        KARTE_REAL(lr_decoder),
        KARTE_REAL(lambda),
        KARTE_SIZE(plateau_patience),
        KARTE_REAL(plateau_factor),
        KARTE_SIZE(early_stop_patience),
        KARTE_SIZE(max_epochs),
        {"sampling", {[](Config& c, const std::string& v) { c.sampling = parse_sampling_mode(v); },
                      [](const Config& c) { return std::string(sampling_mode_name(c.sampling)); }}},
        KARTE_SIZE(per_class),
        KARTE_SIZE(threshold),
        KARTE_REAL(clip_norm),
        {"freeze_encoder", {[](Config& c, const std::string& v) { c.freeze_encoder = parse_bool("freeze_encoder", v); },
                            [](const Config& c) { return std::string(c.freeze_encoder ? "true" : "false"); }}},
        KARTE_REAL(target_bleu),
        {"exclusions", {[](Config& c, const std::string& v) { c.exclusions = v; },
                        [](const Config& c) { return c.exclusions; }}},
        KARTE_SIZE(pretrain_epochs),
        KARTE_REAL(pretrain_lr),
        KARTE_SIZE(pretrain_batch),
        KARTE_SIZE(beam),
        KARTE_SIZE(max_len),
        {"normal", {[](Config& c, const std::string& v) { c.normal = v; },
                    [](const Config& c) { return c.normal; }}},
        {"seed", {[](Config& c, const std::string& v) { c.seed = parse_u64("seed", v); },
                  [](const Config& c) { return std::to_string(c.seed); }}},
    };
    return table;
}

#undef KARTE_SIZE
#undef KARTE_REAL

} // namespace

void Config::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorCode::InvalidArgument, "config: " + msg); };
    if (image_size == 0 || resize_size < image_size) bad("resize_size must be >= image_size > 0");
    if (encoder_channels.empty()) bad("encoder_channels is empty");
    if (hidden == 0) bad("hidden must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0,1)");
    if (batch_size == 0) bad("batch_size must be positive");
    if (!(lr_encoder > 0 && lr_decoder > 0 && pretrain_lr > 0)) bad("learning rates must be positive");
    if (!(lambda >= 0)) bad("lambda must be non-negative");
    if (plateau_patience == 0) bad("plateau_patience must be positive");
    if (!(plateau_factor > 0 && plateau_factor < 1)) bad("plateau_factor must lie in (0,1)");
    if (max_epochs == 0) bad("max_epochs must be positive");
    if (per_class == 0) bad("per_class must be positive");
    if (threshold == 0) bad("threshold must be positive");
    if (!(clip_norm >= 0)) bad("clip_norm must be non-negative");
    if (pretrain_batch == 0) bad("pretrain_batch must be positive");
    if (beam == 0) bad("beam must be positive");
    if (normal.empty()) bad("normal must not be empty");
}

Config paper_scale_config() {
    Config c;
    c.image_size = 224;
    c.resize_size = 256;
    c.encoder_channels = {64, 128, 256, 512, 2048};
    c.hidden = 256;
    return c;
}

void apply_setting(Config& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(cfg, value);
            return;
        }
    }
    fail(ErrorCode::InvalidArgument, "config: unknown key '" + key + "'");
}

void apply_config_text(Config& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::Format, "config line " + std::to_string(lineno) + ": expected key=value");
        try {
            apply_setting(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const Error& e) {
            fail(e.code(), "config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void load_config_file(Config& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

std::string dump_config(const Config& cfg) {
    std::string out;
    for (const auto& [name, field] : fields()) out += name + "=" + field.get(cfg) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [name, field] : fields()) keys.push_back(name);
    return keys;
}

} // namespace karte

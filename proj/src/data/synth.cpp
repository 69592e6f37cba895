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

#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "../error.hpp"

namespace karte {

namespace {

constexpr const char* kShapeWords[3] = {"結節影", "索状影", "輪状影"};

std::string clause(const SynthObject& o, std::size_t size) {
    const double half = static_cast<double>(size) / 2.0;
    std::string s = o.cx < half ? "左" : "右";
    s += o.cy < half ? "上" : "下";
    s += "肺野";
    s += kShapeWords[static_cast<int>(o.shape)];
    return s;
}

void draw_object(std::vector<double>& img, std::size_t size, const SynthObject& o, double intensity) {
    const double n = static_cast<double>(size);
    const double radius = 0.12 * n;
    const double bar_half_len = 0.15 * n, bar_half_thick = 0.035 * n;
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - o.cx;
            const double dy = static_cast<double>(y) + 0.5 - o.cy;
            const double r = std::sqrt(dx * dx + dy * dy);
            bool inside = false;
            switch (o.shape) {
                case SynthShape::Disc: inside = r <= radius; break;
                case SynthShape::Bar: inside = std::abs(dx) <= bar_half_len && std::abs(dy) <= bar_half_thick; break;
                case SynthShape::Ring: inside = r <= radius * 1.05 && r >= radius * 0.6; break;
            }
            if (inside) img[y * size + x] = intensity;
        }
}

SynthObject place(SynthShape shape, bool left, bool top, std::size_t size, Rng& rng) {
    const double n = static_cast<double>(size);
    const double jitter = 0.05 * n;
    return {shape, (left ? 0.25 : 0.75) * n + rng.uniform(-jitter, jitter),
            (top ? 0.25 : 0.75) * n + rng.uniform(-jitter, jitter)};
}

} // namespace

SynthSample synth_sample(const SynthConfig& cfg, Rng& rng) {
    const std::size_t size = cfg.image_size;
    if (size < 16) fail(ErrorCode::InvalidArgument, "synthetic images must be at least 16 pixels");
    SynthSample s;

    if (rng.uniform() < cfg.normal_fraction) {
        s.finding = kDefaultNormalFinding;
        s.class_label = 0;
    } else {
        const double kind = rng.uniform();
        if (kind < 0.7) {
            const auto shape = static_cast<SynthShape>(rng.below(3));
            const bool left = rng.bernoulli(0.5), top = rng.bernoulli(0.5);
            s.objects.push_back(place(shape, left, top, size, rng));
            s.finding = clause(s.objects[0], size);
            s.class_label = 1 + 2 * static_cast<int>(shape) + (left ? 0 : 1);
        } else if (kind < 0.9) {
            const auto shape = static_cast<SynthShape>(rng.below(3));
            s.objects.push_back(place(shape, true, rng.bernoulli(0.5), size, rng));
            s.objects.push_back(place(shape, false, rng.bernoulli(0.5), size, rng));
            s.finding = std::string("両肺") + kShapeWords[static_cast<int>(shape)];
            s.class_label = 7 + static_cast<int>(shape);
        } else {
            const auto a = static_cast<SynthShape>(rng.below(3));
            const auto b = static_cast<SynthShape>((static_cast<int>(a) + 1 + static_cast<int>(rng.below(2))) % 3);
            s.objects.push_back(place(a, true, rng.bernoulli(0.5), size, rng));
            s.objects.push_back(place(b, false, rng.bernoulli(0.5), size, rng));
            s.finding = clause(s.objects[0], size) + "、" + clause(s.objects[1], size);
            s.class_label = 10;
        }
    }

    std::vector<double> img(size * size);
    const double n = static_cast<double>(size);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            // soft vignette so the background is not perfectly flat
            const double dx = (static_cast<double>(x) + 0.5) / n - 0.5, dy = (static_cast<double>(y) + 0.5) / n - 0.5;
            img[y * size + x] = 80.0 - 40.0 * (dx * dx + dy * dy);
        }
    for (const auto& o : s.objects) draw_object(img, size, o, 200.0);
    s.image.width = s.image.height = size;
    s.image.pixels.resize(size * size);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = img[i] + cfg.noise_sigma * rng.normal();
        s.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return s;
}

SynthResult generate_synthetic_corpus(const SynthConfig& cfg, Rng& rng, const std::filesystem::path& out_dir) {
    if (cfg.count == 0) fail(ErrorCode::InvalidArgument, "synth-data: n must be at least 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory " + out_dir.string() + ": " + ec.message());

    SynthResult result;
    result.manifest = out_dir / "manifest.tsv";
    std::map<std::string, std::size_t> finding_counts;
    std::vector<std::size_t> label_counts(kSynthClassCount, 0);
    std::size_t normals = 0;
    for (std::size_t i = 0; i < cfg.count; ++i) {
        auto s = synth_sample(cfg, rng);
        char name[32];
        std::snprintf(name, sizeof name, "images/%05zu.png", i);
        write_png(out_dir / name, s.image);
        Sample sample{name, out_dir / name, s.finding, s.class_label, s.finding == kDefaultNormalFinding};
        normals += sample.is_normal ? 1 : 0;
        ++finding_counts[s.finding];
        ++label_counts[static_cast<std::size_t>(s.class_label)];
        result.samples.push_back(std::move(sample));
    }
    write_manifest(result.manifest, result.samples);

    std::ostringstream report;
    report << "samples\t" << cfg.count << '\n'
           << "image_size\t" << cfg.image_size << '\n'
           << "normal\t" << normals << '\n'
           << "normal_fraction\t" << static_cast<double>(normals) / static_cast<double>(cfg.count) << '\n'
           << "distinct_findings\t" << finding_counts.size() << '\n';
    for (std::size_t l = 0; l < kSynthClassCount; ++l) report << "class_" << l << '\t' << label_counts[l] << '\n';
    for (const auto& [f, c] : finding_counts) report << "finding\t" << f << '\t' << c << '\n';
    result.report = report.str();
    std::ofstream rep(out_dir / "report.txt", std::ios::trunc);
    if (!rep) fail(ErrorCode::Io, "cannot write " + (out_dir / "report.txt").string());
    rep << result.report;
    return result;
}

} // namespace karte

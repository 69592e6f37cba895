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

#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "../error.hpp"

namespace karte {

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Draw `count` indices from `pool`: without replacement while the pool
// lasts; beyond that every element appears once and the rest are drawn with
// replacement.
std::vector<std::size_t> draw(const std::vector<std::size_t>& pool, std::size_t count, Rng& rng) {
    std::vector<std::size_t> out;
    if (pool.empty() || count == 0) return out;
    std::vector<std::size_t> shuffled = pool;
    if (count <= pool.size()) {
        // partial Fisher-Yates
        for (std::size_t i = 0; i < count; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(shuffled.size() - i));
            std::swap(shuffled[i], shuffled[j]);
        }
        out.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(count));
        return out;
    }
    out = pool;
    while (out.size() < count) out.push_back(pool[rng.below(pool.size())]);
    return out;
}

struct ClassIndex {
    std::vector<std::string> abnormal_names;                 // first-occurrence order
    std::vector<std::vector<std::size_t>> abnormal_members;  // parallel to names
    std::vector<std::size_t> normals;
};

ClassIndex index_classes(const std::vector<Sample>& train) {
    ClassIndex idx;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].is_normal) {
            idx.normals.push_back(i);
            continue;
        }
        auto [it, inserted] = pos.emplace(train[i].finding, idx.abnormal_names.size());
        if (inserted) {
            idx.abnormal_names.push_back(train[i].finding);
            idx.abnormal_members.emplace_back();
        }
        idx.abnormal_members[it->second].push_back(i);
    }
    if (idx.abnormal_names.empty()) fail(ErrorCode::InvalidArgument, "epoch plan: no abnormal finding classes in train set");
    if (idx.normals.empty()) fail(ErrorCode::InvalidArgument, "epoch plan: no normal samples in train set");
    return idx;
}

} // namespace

// ---- manifest ------------------------------------------------------------

std::vector<Sample> load_manifest(const std::filesystem::path& path, const std::string& normal_finding,
                                  bool check_images) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open manifest: " + path.string());
    const auto base = path.parent_path();
    std::vector<Sample> samples;
    std::vector<std::string> missing;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        const auto fields = split_fields(line, '\t');
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty())
            fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) +
                                        ": expected image_path<TAB>finding[<TAB>class_label]");
        int label = -1;
        if (fields.size() == 3 && !fields[2].empty()) {
            try {
                std::size_t used = 0;
                label = std::stoi(fields[2], &used);
                if (used != fields[2].size() || label < 0) throw std::invalid_argument("label");
            } catch (const std::exception&) {
                fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": bad class label '" +
                                            fields[2] + "'");
            }
        }
        std::filesystem::path resolved = fields[0];
        if (resolved.is_relative()) resolved = base / resolved;
        if (check_images && !std::filesystem::exists(resolved)) missing.push_back(resolved.string());
        bool any = false;
        for (const auto& f : split_fields(fields[1], '|')) {
            if (f.empty()) continue;
            any = true;
            samples.push_back({fields[0], resolved, f, label, f == normal_finding});
        }
        if (!any) fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": empty finding");
    }
    if (!missing.empty()) {
        std::string msg = "manifest references missing images:";
        for (const auto& m : missing) msg += " " + m;
        fail(ErrorCode::Io, msg);
    }
    return samples;
}

void write_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write manifest: " + path.string());
    const auto dir = std::filesystem::absolute(path).parent_path().lexically_normal();
    for (const auto& s : samples) {
        std::string image = s.image_path;
        // relative paths are re-based on the directory of the new manifest
        if (!s.resolved_path.empty() && std::filesystem::path(image).is_relative())
            image = std::filesystem::absolute(s.resolved_path).lexically_normal().lexically_relative(dir).generic_string();
        out << image << '\t' << s.finding;
        if (s.class_label >= 0) out << '\t' << s.class_label;
        out << '\n';
    }
}

// ---- exclusion / threshold -----------------------------------------------

std::vector<ExclusionRule> default_exclusion_rules() {
    // time-series comparison and free-text noise entries
    return {{"前回と変化なし", false}, {"手入力", true}};
}

std::vector<ExclusionRule> load_exclusion_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open exclusion rules: " + path.string());
    std::vector<ExclusionRule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        const std::string kind = line.substr(0, tab);
        if (tab == std::string::npos || (kind != "exact" && kind != "prefix") || tab + 1 >= line.size())
            fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": expected exact|prefix<TAB>text");
        rules.push_back({line.substr(tab + 1), kind == "prefix"});
    }
    return rules;
}

ExclusionResult apply_exclusions(const std::vector<Sample>& samples, const std::vector<ExclusionRule>& rules) {
    ExclusionResult r{{}, std::vector<std::size_t>(rules.size(), 0)};
    for (const auto& s : samples) {
        bool drop = false;
        for (std::size_t i = 0; i < rules.size() && !drop; ++i) {
            const auto& rule = rules[i];
            drop = rule.prefix ? s.finding.rfind(rule.text, 0) == 0 : s.finding == rule.text;
            if (drop) ++r.removed_per_rule[i];
        }
        if (!drop) r.kept.push_back(s);
    }
    return r;
}

std::vector<std::pair<std::string, std::size_t>> finding_histogram(const std::vector<Sample>& samples) {
    std::vector<std::pair<std::string, std::size_t>> hist;
    std::map<std::string, std::size_t> pos;
    for (const auto& s : samples) {
        auto [it, inserted] = pos.emplace(s.finding, hist.size());
        if (inserted) hist.emplace_back(s.finding, 0);
        ++hist[it->second].second;
    }
    return hist;
}

std::vector<Sample> threshold_filter(const std::vector<Sample>& samples, std::size_t threshold) {
    if (threshold == 0) fail(ErrorCode::InvalidArgument, "threshold must be at least 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& s : samples) ++counts[s.finding];
    std::vector<Sample> kept;
    for (const auto& s : samples)
        if (counts[s.finding] >= threshold) kept.push_back(s);
    if (kept.empty())
        fail(ErrorCode::InvalidArgument, "threshold " + std::to_string(threshold) + " removes every sample");
    return kept;
}

// ---- split ---------------------------------------------------------------

DatasetSplit split_dataset(const std::vector<Sample>& samples, std::array<double, 3> ratios, Rng& rng) {
    if (samples.size() < 3) fail(ErrorCode::InvalidArgument, "split_dataset: need at least 3 samples");
    for (double r : ratios)
        if (r < 0.0) fail(ErrorCode::InvalidArgument, "split_dataset: negative ratio");
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
        fail(ErrorCode::InvalidArgument, "split_dataset: ratios must sum to 1");

    DatasetSplit split;
    for (const auto& [finding, count] : finding_histogram(samples)) {
        // group members by image so duplicate pairs stay together
        std::vector<std::string> images;
        std::map<std::string, std::vector<std::size_t>> by_image;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].finding != finding) continue;
            auto& slot = by_image[samples[i].image_path];
            if (slot.empty()) images.push_back(samples[i].image_path);
            slot.push_back(i);
        }
        rng.shuffle(std::span<std::string>(images));
        std::size_t n_val = 0, n_test = 0;
        if (count >= 3) {
            const auto n = static_cast<double>(images.size());
            n_val = static_cast<std::size_t>(std::llround(n * ratios[1]));
            n_test = static_cast<std::size_t>(std::llround(n * ratios[2]));
            while (n_val + n_test >= images.size() && n_val + n_test > 0) {
                if (n_test >= n_val) --n_test;
                else --n_val;
            }
        }
        for (std::size_t k = 0; k < images.size(); ++k) {
            auto& dest = k < n_val ? split.validation : (k < n_val + n_test ? split.test : split.train);
            for (auto i : by_image[images[k]]) dest.push_back(samples[i]);
        }
    }
    return split;
}

// ---- epoch plans ---------------------------------------------------------

const char* sampling_mode_name(SamplingMode mode) {
    switch (mode) {
        case SamplingMode::Natural: return "natural";
        case SamplingMode::Oversample: return "over";
        case SamplingMode::Undersample: return "under";
    }
    return "natural";
}

SamplingMode parse_sampling_mode(const std::string& name) {
    if (name == "natural") return SamplingMode::Natural;
    if (name == "over" || name == "oversample") return SamplingMode::Oversample;
    if (name == "under" || name == "undersample") return SamplingMode::Undersample;
    fail(ErrorCode::InvalidArgument, "unknown sampling mode '" + name + "' (expected over|under|natural)");
}

EpochPlan plan_epoch_natural(const std::vector<Sample>& train, Rng& rng) {
    EpochPlan plan;
    plan.mode = SamplingMode::Natural;
    plan.order.resize(train.size());
    std::iota(plan.order.begin(), plan.order.end(), 0);
    rng.shuffle(std::span<std::size_t>(plan.order));
    std::set<std::string> classes;
    for (const auto& s : train) {
        if (s.is_normal) ++plan.normal_count;
        else {
            ++plan.abnormal_count;
            classes.insert(s.finding);
        }
    }
    plan.abnormal_classes = classes.size();
    return plan;
}

EpochPlan plan_epoch_oversample(const std::vector<Sample>& train, std::size_t per_class, Rng& rng) {
    if (per_class == 0) fail(ErrorCode::InvalidArgument, "oversample: per_class must be positive");
    const auto idx = index_classes(train);
    EpochPlan plan;
    plan.mode = SamplingMode::Oversample;
    plan.abnormal_classes = idx.abnormal_names.size();
    for (const auto& members : idx.abnormal_members) {
        auto picked = draw(members, per_class, rng);
        plan.order.insert(plan.order.end(), picked.begin(), picked.end());
    }
    plan.abnormal_count = plan.order.size();
    auto normals = draw(idx.normals, plan.abnormal_count, rng);
    plan.normal_count = normals.size();
    plan.order.insert(plan.order.end(), normals.begin(), normals.end());
    rng.shuffle(std::span<std::size_t>(plan.order));
    return plan;
}

EpochPlan plan_epoch_undersample(const std::vector<Sample>& train, Rng& rng) {
    const auto idx = index_classes(train);
    EpochPlan plan;
    plan.mode = SamplingMode::Undersample;
    plan.abnormal_classes = idx.abnormal_names.size();
    for (const auto& members : idx.abnormal_members) plan.order.insert(plan.order.end(), members.begin(), members.end());
    plan.abnormal_count = plan.order.size();
    const double mean = static_cast<double>(plan.abnormal_count) / static_cast<double>(plan.abnormal_classes);
    auto normals = draw(idx.normals, static_cast<std::size_t>(std::llround(mean)), rng);
    plan.normal_count = normals.size();
    plan.order.insert(plan.order.end(), normals.begin(), normals.end());
    rng.shuffle(std::span<std::size_t>(plan.order));
    return plan;
}

EpochPlan plan_epoch(const std::vector<Sample>& train, SamplingMode mode, std::size_t per_class, Rng& rng) {
    switch (mode) {
        case SamplingMode::Oversample: return plan_epoch_oversample(train, per_class, rng);
        case SamplingMode::Undersample: return plan_epoch_undersample(train, rng);
        case SamplingMode::Natural: break;
    }
    return plan_epoch_natural(train, rng);
}

// ---- pre-processing ------------------------------------------------------

Tensor preprocess_image(const GrayImage& image, PreprocessMode mode, const PreprocessConfig& cfg, Rng& rng,
                        CropWindow* window) {
    if (cfg.crop == 0 || cfg.resize < cfg.crop)
        fail(ErrorCode::InvalidArgument, "preprocess: need 0 < crop <= resize");
    if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height)
        fail(ErrorCode::Format, "preprocess: empty or inconsistent image");
    std::vector<double> gray(image.pixels.size());
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = image.pixels[i] / 255.0;

    const std::size_t s = cfg.crop;
    std::vector<double> cropped;
    CropWindow win;
    if (mode == PreprocessMode::Train) {
        const auto resized = resize_bilinear(gray, image.width, image.height, cfg.resize, cfg.resize);
        win.x = static_cast<std::size_t>(rng.below(cfg.resize - s + 1));
        win.y = static_cast<std::size_t>(rng.below(cfg.resize - s + 1));
        cropped.resize(s * s);
        for (std::size_t y = 0; y < s; ++y)
            std::copy_n(resized.begin() + static_cast<long>((y + win.y) * cfg.resize + win.x), s,
                        cropped.begin() + static_cast<long>(y * s));
    } else {
        cropped = resize_bilinear(gray, image.width, image.height, s, s);
    }
    if (window) *window = win;

    Tensor out({3, s, s});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < s * s; ++i) out[c * s * s + i] = (cropped[i] - cfg.mean[c]) / cfg.stddev[c];
    return out;
}

Tensor preprocess_image(const std::filesystem::path& path, PreprocessMode mode, const PreprocessConfig& cfg, Rng& rng) {
    return preprocess_image(read_gray_image(path), mode, cfg, rng);
}

const GrayImage& ImageCache::get(const std::filesystem::path& path) {
    const auto key = path.string();
    auto it = images_.find(key);
    if (it == images_.end()) it = images_.emplace(key, read_gray_image(path)).first;
    return it->second;
}

} // namespace karte

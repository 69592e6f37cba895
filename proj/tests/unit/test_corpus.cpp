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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "data/corpus.hpp"
#include "data/synth.hpp"
#include "error.hpp"

namespace fs = std::filesystem;
using namespace karte;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("karte_unit_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

Sample make_sample(std::string image, std::string finding) {
    Sample s;
    s.image_path = std::move(image);
    s.finding = std::move(finding);
    s.is_normal = s.finding == kDefaultNormalFinding;
    return s;
}

// `counts[c]` abnormal samples of class c plus `normals` normal ones.
std::vector<Sample> class_corpus(const std::vector<std::size_t>& counts, std::size_t normals) {
    std::vector<Sample> out;
    std::size_t img = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (std::size_t i = 0; i < counts[c]; ++i)
            out.push_back(make_sample("i" + std::to_string(img++), "所見" + std::to_string(c)));
    for (std::size_t i = 0; i < normals; ++i) out.push_back(make_sample("i" + std::to_string(img++), kDefaultNormalFinding));
    return out;
}

} // namespace

TEST(Manifest, ParsesAlternativesCommentsAndLabels) {
    const auto dir = scratch("manifest");
    write_text(dir / "m.tsv", "# header\n\na.png\t異常なし\t0\nb.png\t右上肺野結節影|右上肺結節影\t2\n");
    auto s = load_manifest(dir / "m.tsv", kDefaultNormalFinding, false);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_TRUE(s[0].is_normal);
    EXPECT_EQ(s[0].class_label, 0);
    EXPECT_EQ(s[1].finding, "右上肺野結節影");
    EXPECT_EQ(s[2].finding, "右上肺結節影");
    EXPECT_EQ(s[2].image_path, "b.png");
    EXPECT_EQ(s[2].class_label, 2);
    EXPECT_EQ(s[1].resolved_path, dir / "b.png");
}

TEST(Manifest, MissingImageAndBadLinesRejected) {
    const auto dir = scratch("manifest_bad");
    write_text(dir / "m.tsv", "nope.png\t異常なし\n");
    EXPECT_THROW(load_manifest(dir / "m.tsv", kDefaultNormalFinding, true), Error);
    write_text(dir / "m2.tsv", "only-one-column\n");
    EXPECT_THROW(load_manifest(dir / "m2.tsv", kDefaultNormalFinding, false), Error);
    EXPECT_THROW(load_manifest(dir / "absent.tsv", kDefaultNormalFinding, false), Error);
}

TEST(Manifest, WriteRebasesRelativePaths) {
    const auto dir = scratch("rebase");
    fs::create_directories(dir / "data" / "images");
    fs::create_directories(dir / "run");
    write_text(dir / "data" / "m.tsv", "images/a.png\t異常なし\n");
    auto s = load_manifest(dir / "data" / "m.tsv", kDefaultNormalFinding, false);
    write_manifest(dir / "run" / "train.tsv", s);
    auto back = load_manifest(dir / "run" / "train.tsv", kDefaultNormalFinding, false);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].image_path, "../data/images/a.png");
    EXPECT_EQ(fs::weakly_canonical(back[0].resolved_path), fs::weakly_canonical(dir / "data" / "images" / "a.png"));
}

TEST(Filters, ExclusionsAndThreshold) {
    std::vector<Sample> s{make_sample("a", "前回と変化なし"), make_sample("b", "手入力メモ"), make_sample("c", "異常なし"),
                          make_sample("d", "前回と変化なし要確認")};
    auto r = apply_exclusions(s, default_exclusion_rules());
    ASSERT_EQ(r.kept.size(), 2u);
    EXPECT_EQ(r.removed_per_rule, (std::vector<std::size_t>{1, 1}));

    auto corpus = class_corpus({5, 4, 30}, 10);
    auto kept = threshold_filter(corpus, 5);
    EXPECT_EQ(kept.size(), 45u);
    EXPECT_EQ(threshold_filter(corpus, 30).size(), 30u);
}

TEST(Split, StratifiedDisjointAndComplete) {
    auto corpus = class_corpus({20, 10, 2}, 100);
    Rng r(8);
    auto split = split_dataset(corpus, {0.8, 0.1, 0.1}, r);
    EXPECT_EQ(split.train.size() + split.validation.size() + split.test.size(), corpus.size());
    std::set<std::string> seen;
    for (const auto* part : {&split.train, &split.validation, &split.test})
        for (const auto& s : *part) EXPECT_TRUE(seen.insert(s.image_path).second);
    auto count = [](const std::vector<Sample>& v, const std::string& f) {
        return std::count_if(v.begin(), v.end(), [&](const Sample& s) { return s.finding == f; });
    };
    EXPECT_EQ(count(split.validation, kDefaultNormalFinding), 10);
    EXPECT_EQ(count(split.test, "所見0"), 2);
    EXPECT_EQ(count(split.train, "所見2"), 2); // too small to split
}

TEST(Sampler, OversampleContractOver100Seeds) {
    auto corpus = class_corpus({3, 40, 150, 7}, 500);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng r(seed);
        auto plan = plan_epoch_oversample(corpus, 100, r);
        std::map<std::string, std::size_t> per;
        std::size_t normals = 0;
        for (auto i : plan.order) {
            ASSERT_LT(i, corpus.size());
            if (corpus[i].is_normal) ++normals;
            else ++per[corpus[i].finding];
        }
        ASSERT_EQ(per.size(), 4u);
        for (const auto& [f, n] : per) ASSERT_EQ(n, 100u) << f;
        ASSERT_EQ(normals, 400u);
        ASSERT_EQ(plan.normal_count, plan.abnormal_count);
        // a class with >= per_class members is drawn without repetition
        std::set<std::size_t> big;
        for (auto i : plan.order)
            if (corpus[i].finding == "所見2") big.insert(i);
        ASSERT_EQ(big.size(), 100u);
    }
}

TEST(Sampler, UndersampleContractOver100Seeds) {
    // 19 abnormal samples in 4 classes: mean 4.75 rounds to 5 normals.
    auto corpus = class_corpus({3, 5, 9, 2}, 80);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng r(seed);
        auto plan = plan_epoch_undersample(corpus, r);
        std::size_t normals = 0, abnormal = 0;
        std::set<std::size_t> unique_normals;
        for (auto i : plan.order) {
            if (corpus[i].is_normal) {
                ++normals;
                unique_normals.insert(i);
            } else {
                ++abnormal;
            }
        }
        ASSERT_EQ(normals, 5u);
        ASSERT_EQ(unique_normals.size(), 5u);
        ASSERT_EQ(abnormal, 19u);
    }
}

TEST(Sampler, PlansDependOnSeed) {
    auto corpus = class_corpus({3, 5}, 50);
    Rng a(1), b(1), c(2);
    EXPECT_EQ(plan_epoch_natural(corpus, a).order, plan_epoch_natural(corpus, b).order);
    Rng a2(1);
    EXPECT_NE(plan_epoch_natural(corpus, a2).order, plan_epoch_natural(corpus, c).order);
}

TEST(Sampler, NoAbnormalClassIsAnError) {
    auto corpus = class_corpus({}, 5);
    Rng r(1);
    EXPECT_THROW(plan_epoch_undersample(corpus, r), Error);
    EXPECT_THROW(plan_epoch_oversample(corpus, 10, r), Error);
}

TEST(Preprocess, NormalisationValues) {
    GrayImage img{4, 4, std::vector<std::uint8_t>(16, 128)};
    Rng r(0);
    PreprocessConfig cfg;
    cfg.resize = 4;
    cfg.crop = 4;
    const Tensor x = preprocess_image(img, PreprocessMode::Eval, cfg, r);
    ASSERT_EQ(x.shape(), (Shape{3, 4, 4}));
    // (128/255 - mean_c) / std_c
    EXPECT_NEAR(x[0], 0.0740, 1e-4);
    EXPECT_NEAR(x[16], 0.2052, 1e-4);
    EXPECT_NEAR(x[32], 0.4265, 1e-4);
}

TEST(Preprocess, TrainCropStaysInside) {
    GrayImage img{10, 10, std::vector<std::uint8_t>(100)};
    for (std::size_t i = 0; i < 100; ++i) img.pixels[i] = static_cast<std::uint8_t>(i);
    PreprocessConfig cfg;
    cfg.resize = 12;
    cfg.crop = 8;
    Rng r(3);
    std::set<std::pair<std::size_t, std::size_t>> windows;
    for (int i = 0; i < 200; ++i) {
        CropWindow w;
        const Tensor x = preprocess_image(img, PreprocessMode::Train, cfg, r, &w);
        ASSERT_LE(w.x, 4u);
        ASSERT_LE(w.y, 4u);
        ASSERT_EQ(x.shape(), (Shape{3, 8, 8}));
        windows.insert({w.x, w.y});
    }
    EXPECT_EQ(windows.size(), 25u);
}

TEST(Synth, GrammarMatchesObjects) {
    SynthConfig cfg;
    Rng r(17);
    std::set<int> labels;
    for (int i = 0; i < 500; ++i) {
        auto s = synth_sample(cfg, r);
        labels.insert(s.class_label);
        ASSERT_EQ(s.image.width, 64u);
        if (s.objects.empty()) {
            ASSERT_EQ(s.finding, kDefaultNormalFinding);
            ASSERT_EQ(s.class_label, 0);
        } else if (s.objects.size() == 1) {
            const bool left = s.objects[0].cx < 32.0;
            ASSERT_EQ(s.finding.rfind(left ? "左" : "右", 0), 0u) << s.finding;
        }
        ASSERT_GE(s.class_label, 0);
        ASSERT_LT(s.class_label, static_cast<int>(kSynthClassCount));
    }
    EXPECT_EQ(labels.size(), kSynthClassCount);
}

TEST(Synth, CorpusIsDeterministic) {
    SynthConfig cfg;
    cfg.count = 12;
    Rng a(9), b(9);
    auto d1 = scratch("synth1"), d2 = scratch("synth2");
    auto r1 = generate_synthetic_corpus(cfg, a, d1);
    auto r2 = generate_synthetic_corpus(cfg, b, d2);
    ASSERT_EQ(r1.samples.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(r1.samples[i].finding, r2.samples[i].finding);
        EXPECT_EQ(read_gray_image(r1.samples[i].resolved_path).pixels,
                  read_gray_image(r2.samples[i].resolved_path).pixels);
    }
    auto back = load_manifest(r1.manifest, kDefaultNormalFinding, true);
    EXPECT_EQ(back.size(), 12u);
}

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

#include "config/config.hpp"
#include "error.hpp"
#include "model/caption_model.hpp"

using namespace karte;

TEST(Config, DefaultsAreTheTrainingRecipe) {
    Config c;
    EXPECT_EQ(c.batch_size, 16u);
    EXPECT_EQ(c.dropout, 0.5);
    EXPECT_EQ(c.lr_encoder, 1e-4);
    EXPECT_EQ(c.lr_decoder, 4e-4);
    EXPECT_EQ(c.lambda, 1.0);
    EXPECT_EQ(c.plateau_patience, 10u);
    EXPECT_EQ(c.plateau_factor, 0.8);
    EXPECT_EQ(c.early_stop_patience, 20u);
    EXPECT_EQ(c.max_epochs, 200u);
    EXPECT_EQ(c.per_class, 100u);
    EXPECT_EQ(c.sampling, SamplingMode::Oversample);
    const auto p = preprocess_config(c);
    EXPECT_EQ(p.mean, (std::array<double, 3>{0.485, 0.456, 0.406}));
    EXPECT_EQ(p.stddev, (std::array<double, 3>{0.229, 0.224, 0.225}));
    c.validate();
}

TEST(Config, FullScaleGeometry) {
    const Config c = paper_scale_config();
    EXPECT_EQ(c.image_size, 224u);
    EXPECT_EQ(c.resize_size, 256u);
    EXPECT_EQ(c.hidden, 256u);
    const auto e = encoder_config(c);
    EXPECT_EQ(e.grid_size(), 14u);
    EXPECT_EQ(e.annotation_channels(), 2048u);
}

TEST(Config, UnknownKeyAndBadValuesRejected) {
    Config c;
    try {
        apply_setting(c, "learning_rate", "0.1");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
        EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
    }
    EXPECT_THROW(apply_setting(c, "batch_size", "many"), Error);
    EXPECT_THROW(apply_setting(c, "sampling", "sideways"), Error);
    EXPECT_THROW(apply_setting(c, "encoder_channels", ""), Error);
    try {
        apply_config_text(c, "# comment\nhidden = 32\n\nbogus=1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}

TEST(Config, DumpRoundTrips) {
    Config c;
    apply_config_text(c, "hidden=32\nlr_decoder=0.002\nsampling=under\nencoder_channels=4,8,16\nnormal=異常なし\n"
                         "freeze_encoder=true\nseed=18446744073709551615\n");
    const std::string text = dump_config(c);
    Config d;
    apply_config_text(d, text);
    EXPECT_EQ(dump_config(d), text);
    EXPECT_EQ(d.hidden, 32u);
    EXPECT_EQ(d.lr_decoder, 0.002);
    EXPECT_EQ(d.encoder_channels, (std::vector<std::size_t>{4, 8, 16}));
    EXPECT_TRUE(d.freeze_encoder);
    EXPECT_EQ(d.seed, 18446744073709551615ull);
    EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(Config, ValidateCatchesNonsense) {
    Config c;
    c.plateau_factor = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c = Config{};
    c.resize_size = 32;
    EXPECT_THROW(c.validate(), Error);
}

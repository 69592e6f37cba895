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

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "../model/attention.hpp"
#include "../model/decoder.hpp"
#include "../model/encoder.hpp"
#include "../numerics/layers.hpp"
#include "../train/loss.hpp"
#include "../train/trainer.hpp"
#include "pipeline.hpp"

namespace karte {

double GradcheckSuite::max_rel_error() const {
    double worst = 0.0;
    for (const auto& [name, r] : checks) worst = std::max(worst, r.max_rel_error());
    return worst;
}

std::string GradcheckSuite::to_text() const {
    std::ostringstream os;
    char buf[160];
    for (const auto& [name, r] : checks) {
        std::snprintf(buf, sizeof buf, "[%s] max_rel_err=%.3e %s\n", name.c_str(), r.max_rel_error(),
                      r.passed(tolerance) ? "ok" : "FAIL");
        os << buf;
        std::istringstream lines(r.to_text(tolerance));
        for (std::string line; std::getline(lines, line);) os << "    " << line << "\n";
    }
    std::snprintf(buf, sizeof buf, "overall max_rel_err=%.3e tolerance=%.1e %s\n", max_rel_error(), tolerance,
                  passed() ? "PASS" : "FAIL");
    os << buf;
    return os.str();
}

namespace {

Parameter random_param(const std::string& name, Shape shape, Rng& rng, double scale = 1.0) {
    Parameter p(name, std::move(shape));
    for (auto& v : p.value.data()) v = rng.uniform(-scale, scale);
    return p;
}

// Values bounded away from zero so ReLU kinks sit far outside eps.
Parameter offset_param(const std::string& name, Shape shape, Rng& rng) {
    Parameter p(name, std::move(shape));
    for (auto& v : p.value.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
    return p;
}

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// sum_i r_i y_i and its gradient r.
double project_out(const Tensor& y, const std::vector<double>& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
}

void add_into(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

GradCheckReport check_dense(Rng& rng, const GradCheckOptions& opts) {
    Parameter x = random_param("x", {3, 4}, rng), w = random_param("W", {4, 5}, rng), b = random_param("b", {5}, rng);
    auto r = random_vector(15, rng);
    auto loss = [&](bool g) {
        Tensor y = dense(x.value, w, b);
        if (g) {
            Tensor dx = dense_backward(x.value, w, b, Tensor({3, 5}, r));
            add_into(x.grad, dx);
        }
        return project_out(y, r);
    };
    return finite_diff_check(loss, {&x, &w, &b}, opts);
}

GradCheckReport check_conv(Rng& rng, const GradCheckOptions& opts, Conv2dSpec spec, std::size_t size) {
    Parameter x = random_param("x", {2, 2, size, size}, rng);
    Parameter k = random_param("K", {3, 2, 3, 3}, rng), b = random_param("b", {3}, rng);
    Tensor probe = conv2d(x.value, k, b, spec);
    auto r = random_vector(probe.size(), rng);
    auto loss = [&](bool g) {
        Tensor y = conv2d(x.value, k, b, spec);
        if (g) add_into(x.grad, conv2d_backward(x.value, k, b, spec, Tensor(y.shape(), r)));
        return project_out(y, r);
    };
    return finite_diff_check(loss, {&x, &k, &b}, opts);
}

GradCheckReport check_maxpool(Rng& rng, const GradCheckOptions& opts) {
    Parameter x("x", {1, 2, 4, 4});
    // distinct values, well separated: a permutation scaled by 0.1
    std::vector<double> vals(32);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.1 * static_cast<double>(i);
    rng.shuffle(std::span<double>(vals));
    std::copy(vals.begin(), vals.end(), x.value.ptr());
    auto r = random_vector(8, rng);
    auto loss = [&](bool g) {
        PoolResult p = maxpool2d(x.value, 2, 2);
        if (g) add_into(x.grad, maxpool2d_backward(p, Tensor(p.output.shape(), r)));
        return project_out(p.output, r);
    };
    return finite_diff_check(loss, {&x}, opts);
}

GradCheckReport check_relu(Rng& rng, const GradCheckOptions& opts) {
    Parameter x = offset_param("x", {4, 5}, rng);
    auto r = random_vector(20, rng);
    auto loss = [&](bool g) {
        Tensor y = relu(x.value);
        if (g) add_into(x.grad, relu_backward(x.value, Tensor({4, 5}, r)));
        return project_out(y, r);
    };
    return finite_diff_check(loss, {&x}, opts);
}

GradCheckReport check_softmax(Rng& rng, const GradCheckOptions& opts) {
    Parameter x = random_param("x", {3, 5}, rng, 2.0);
    auto r = random_vector(15, rng);
    auto loss = [&](bool g) {
        Tensor y = softmax(x.value, -1);
        if (g) add_into(x.grad, softmax_backward(y, Tensor({3, 5}, r), -1));
        return project_out(y, r);
    };
    return finite_diff_check(loss, {&x}, opts);
}

GradCheckReport check_dropout(Rng& rng, const GradCheckOptions& opts) {
    Parameter x = random_param("x", {4, 6}, rng);
    auto r = random_vector(24, rng);
    const std::uint64_t mask_seed = rng.next_u64();
    auto loss = [&](bool g) {
        Rng mask(mask_seed); // same mask on every evaluation
        DropoutResult d = dropout(x.value, 0.5, mask, true);
        if (g) add_into(x.grad, dropout_backward(d, Tensor({4, 6}, r)));
        return project_out(d.output, r);
    };
    return finite_diff_check(loss, {&x}, opts);
}

GradCheckReport check_lstm(Rng& rng, const GradCheckOptions& opts) {
    LstmParams p("lstm", 3, 4);
    for (std::size_t g = 0; g < 4; ++g) {
        p.weight[g].value = random_param("", {7, 4}, rng, 0.8).value;
        p.bias[g].value = random_param("", {4}, rng, 0.5).value;
    }
    Parameter x = random_param("x", {2, 3}, rng), h = random_param("h_prev", {2, 4}, rng),
              c = random_param("c_prev", {2, 4}, rng);
    auto rh = random_vector(8, rng), rc = random_vector(8, rng);
    auto loss = [&](bool g) {
        LstmCache cache = lstm_cell(x.value, h.value, c.value, p);
        if (g) {
            LstmGrads gr = lstm_cell_backward(cache, p, Tensor({2, 4}, rh), Tensor({2, 4}, rc));
            add_into(x.grad, gr.dx);
            add_into(h.grad, gr.dh_prev);
            add_into(c.grad, gr.dc_prev);
        }
        return project_out(cache.h, rh) + project_out(cache.c, rc);
    };
    ParameterList params{&x, &h, &c};
    p.collect(params);
    return finite_diff_check(loss, params, opts);
}

void randomize(const ParameterList& params, Rng& rng, double scale) {
    for (auto* p : params)
        for (auto& v : p->value.data()) v = rng.uniform(-scale, scale);
}

GradCheckReport check_attention(Rng& rng, const GradCheckOptions& opts) {
    const std::size_t l = 6, d = 4, h = 5, a = 3;
    AttentionParams att(d, h, a);
    ParameterList params;
    att.collect(params);
    randomize(params, rng, 0.8);
    Parameter grid_p = random_param("grid", {l, d}, rng), hp = random_param("h_prev", {1, h}, rng);
    auto rz = random_vector(d, rng), rw = random_vector(l, rng);
    auto loss = [&](bool g) {
        AnnotationGrid grid{grid_p.value, 2, 3};
        ProjectedGrid proj = project(grid, att);
        AttentionStep s = attend(grid, proj, hp.value, att);
        double out = project_out(s.context, rz);
        for (std::size_t i = 0; i < l; ++i) out += rw[i] * s.weights[i];
        if (g) {
            Tensor d_proj({l, a});
            Tensor dh = attend_backward(grid, hp.value, s, att, Tensor({1, d}, rz), rw, grid_p.grad, d_proj);
            project_backward(grid, att, d_proj, grid_p.grad);
            add_into(hp.grad, dh);
        }
        return out;
    };
    params.push_back(&grid_p);
    params.push_back(&hp);
    return finite_diff_check(loss, params, opts);
}

GradCheckReport check_decoder(Rng& rng, const GradCheckOptions& opts) {
    // K = 6 (two characters), D = 4, H = 8; three teacher-forced steps.
    DecoderConfig cfg{6, 4, 8, 0, 0.5, 1.0};
    Decoder dec(cfg);
    ParameterList params = dec.parameters();
    randomize(params, rng, 0.5);
    Parameter grid_p = random_param("grid", {4, 4}, rng);
    TokenSequence target{{kStartId, 4, 5, kEndId}, true};
    const std::uint64_t mask_seed = rng.next_u64();
    auto rl = random_vector(3 * 6, rng);
    auto loss = [&](bool g) {
        AnnotationGrid grid{grid_p.value, 2, 2};
        Rng mask(mask_seed);
        auto u = dec.teacher_forced_unroll(grid, target, mask, true);
        double out = 0.0;
        std::vector<std::vector<double>> dl(3);
        for (std::size_t t = 0; t < 3; ++t) {
            dl[t].assign(rl.begin() + static_cast<std::ptrdiff_t>(6 * t), rl.begin() + static_cast<std::ptrdiff_t>(6 * t + 6));
            for (std::size_t k = 0; k < 6; ++k) out += dl[t][k] * u.logits[t][k];
        }
        if (g) add_into(grid_p.grad, dec.backward(grid, u, dl, {}));
        return out;
    };
    params.push_back(&grid_p);
    return finite_diff_check(loss, params, opts);
}

EncoderConfig tiny_encoder_config() {
    EncoderConfig e;
    e.channels = {2, 3};
    e.image_size = 8;
    e.pretrain_classes = 4;
    return e;
}

GradCheckReport check_encoder(Rng& rng, const GradCheckOptions& opts) {
    Encoder enc(tiny_encoder_config());
    enc.init(rng);
    ParameterList params = enc.conv_parameters();
    for (auto* p : params) // non-zero biases
        if (p->shape().size() == 1) randomize({p}, rng, 0.1);
    Tensor images = random_param("", {2, 3, 8, 8}, rng).value;
    auto grids = enc.forward(images);
    std::vector<std::vector<double>> r;
    for (const auto& gr : grids) r.push_back(random_vector(gr.features.size(), rng));
    auto loss = [&](bool g) {
        Encoder::Cache cache;
        auto out = enc.forward(images, g ? &cache : nullptr);
        double s = 0.0;
        std::vector<Tensor> dg;
        for (std::size_t b = 0; b < out.size(); ++b) {
            s += project_out(out[b].features, r[b]);
            dg.emplace_back(out[b].features.shape(), r[b]);
        }
        if (g) enc.backward(cache, dg);
        return s;
    };
    return finite_diff_check(loss, params, opts);
}

GradCheckReport check_pretrain_head(Rng& rng, const GradCheckOptions& opts) {
    Encoder enc(tiny_encoder_config());
    enc.init(rng);
    ParameterList params = enc.conv_parameters();
    for (auto* p : enc.head_parameters()) params.push_back(p);
    Tensor images = random_param("", {3, 3, 8, 8}, rng).value;
    std::vector<int> labels{0, 3, 1};
    auto loss = [&](bool g) { return pretrain_loss(enc, images, labels, g); };
    return finite_diff_check(loss, params, opts);
}

GradCheckReport check_full(Rng& rng, const GradCheckOptions& opts) {
    Config cfg;
    cfg.image_size = 8;
    cfg.resize_size = 8;
    cfg.encoder_channels = {2, 3};
    cfg.hidden = 5;
    cfg.attention = 4;
    Vocabulary vocab = Vocabulary::build({"ab", "ba"});
    Rng init = rng.derive(7);
    CaptionModel model = CaptionModel::create(cfg, vocab, 6, init);
    ParameterList params = model.parameters();
    for (auto* p : params)
        if (p->shape().size() == 1) randomize({p}, rng, 0.1);
    Tensor images = random_param("", {2, 3, 8, 8}, rng).value;
    std::vector<TokenSequence> targets{encode("ab", vocab, true), encode("bab", vocab, true)};
    const std::uint64_t mask_seed = rng.next_u64();
    auto loss = [&](bool g) {
        Rng mask(mask_seed);
        if (g) return batch_loss(model, images, targets, 1.0, mask, true, true).total;
        // forward only, same dropout draws
        auto grids = model.encoder.forward(images);
        double total = 0.0;
        for (std::size_t b = 0; b < targets.size(); ++b) {
            auto u = model.decoder.teacher_forced_unroll(grids[b], targets[b], mask, true);
            total += caption_loss(u.logits, u.targets, u.weights, 1.0).total;
        }
        return total / static_cast<double>(targets.size());
    };
    return finite_diff_check(loss, params, opts);
}

} // namespace

GradcheckSuite run_gradcheck(std::uint64_t seed, double tolerance, double eps) {
    GradcheckSuite suite;
    suite.tolerance = tolerance;
    Rng base(seed);
    std::uint64_t stream = 0;
    GradCheckOptions opts;
    opts.eps = eps;
    opts.tolerance = tolerance;
    opts.fallback_eps = {eps / 10, eps * 10, eps / 100};
    auto run = [&](const std::string& name, auto&& fn) {
        Rng rng = base.derive(++stream);
        suite.checks.emplace_back(name, fn(rng, opts));
    };
    run("dense", check_dense);
    run("conv2d stride1 pad1", [](Rng& r, const GradCheckOptions& o) { return check_conv(r, o, {1, 1}, 5); });
    run("conv2d stride2 pad1", [](Rng& r, const GradCheckOptions& o) { return check_conv(r, o, {2, 1}, 7); });
    run("maxpool2d", check_maxpool);
    run("relu", check_relu);
    run("softmax", check_softmax);
    run("dropout", check_dropout);
    run("lstm_cell", check_lstm);
    run("attention", check_attention);
    run("decoder unroll", check_decoder);
    run("encoder", check_encoder);
    run("pretrain head", check_pretrain_head);
    run("encoder+attention+decoder+loss", check_full);
    return suite;
}

} // namespace karte

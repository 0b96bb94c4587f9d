#include "tdmi/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "tdmi/ablation.hpp"
#include "tdmi/config.hpp"
#include "tdmi/gradcheck.hpp"
#include "tdmi/mi.hpp"
#include "tdmi/model.hpp"
#include "tdmi/optim.hpp"
#include "tdmi/verify.hpp"

namespace tdmi {

namespace {

struct CheckFailure : Error {
    using Error::Error;
};

void expect(bool cond, const std::string& msg) {
    if (!cond) throw CheckFailure(msg);
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(scale * rng.gaussian());
    return t;
}

// Small double-precision model configuration used by the gradient battery.
ModelConfig tiny_model_config(Variant v) {
    ModelConfig mc;
    mc.image_size = 32;
    mc.joints = 3;
    mc.delta = 1;
    mc.channels = {6, 8, 12, 16};
    mc.cm = 8;
    mc.variant = v;
    mc.critic_hidden = 16;
    mc.critic_embed = 8;
    return mc;
}

ClipConfig tiny_clip_config() {
    ClipConfig cc;
    cc.joints = 3;
    cc.delta = 1;
    cc.image_size = 32;
    cc.n_distractors = 2;
    cc.occlusion_prob = 0.0;
    cc.blur_prob = 0.0;
    cc.v_max = 2.0;
    return cc;
}

// ---- checks ----

void check_grad_primitives() {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    double worst = 0;
    auto note = [&worst](double err) { worst = std::max(worst, err); };
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 1013);
        auto x = random_tensor<double>(rng, {2, 3, 5, 4});
        auto flat = random_tensor<double>(rng, {4, 6});

        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::sigmoid(t, v); }, flat, opt));
        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::leaky_relu(t, v, 0.1); }, flat,
            opt));
        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::softplus(t, v); }, flat, opt));
        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::exp(t, v); }, flat, opt));
        auto other = random_tensor<double>(rng, {4, 6});
        note(grad_check<double>(
            [other](Tape<double>& t, const Tensor<double>& v) { return ops::mul(t, v, other); }, flat,
            opt));
        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::rowwise_logsumexp(t, v); },
            flat, opt));
        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::global_avg_pool(t, v); }, x,
            opt));
        note(grad_check<double>(
            [](Tape<double>& t, const Tensor<double>& v) { return ops::resize_bilinear(t, v, 7, 6); },
            x, opt));

        auto w = random_tensor<double>(rng, {3, 3, 3, 3});
        auto b = random_tensor<double>(rng, {3});
        auto img = random_tensor<double>(rng, {1, 3, 6, 6});
        ops::Conv2dSpec spec{.stride = 1, .pad = 1};
        note(grad_check<double>(
            [w, b, spec](Tape<double>& t, const Tensor<double>& v) {
                return ops::conv2d(t, v, w, b, spec);
            },
            img, opt));
        note(grad_check<double>(
            [img, b, spec](Tape<double>& t, const Tensor<double>& v) {
                return ops::conv2d(t, img, v, b, spec);
            },
            w, opt));

        auto off = random_tensor<double>(rng, {1, 18, 6, 6}, 0.7);
        Tensor<double> mask(Shape{1, 9, 6, 6});
        for (auto& v : mask.values()) v = rng.uniform(0.1, 0.9);
        note(grad_check<double>(
            [img, mask, w, b](Tape<double>& t, const Tensor<double>& v) {
                return ops::deform_conv2d(t, img, v, mask, w, b, 1);
            },
            off, opt));
        note(grad_check<double>(
            [off, mask, w, b](Tape<double>& t, const Tensor<double>& v) {
                return ops::deform_conv2d(t, v, off, mask, w, b, 1);
            },
            img, opt));
        note(grad_check<double>(
            [img, off, mask, b](Tape<double>& t, const Tensor<double>& v) {
                return ops::deform_conv2d(t, img, off, mask, v, b, 1);
            },
            w, opt));

        Tensor<double> coords(Shape{1, 2, 4, 4});
        for (auto& v : coords.values()) v = rng.uniform(-0.5, 5.5);
        note(grad_check<double>(
            [coords](Tape<double>& t, const Tensor<double>& v) {
                return ops::bilinear_sample(t, v, coords);
            },
            img, opt));
        note(grad_check<double>(
            [img](Tape<double>& t, const Tensor<double>& v) { return ops::bilinear_sample(t, img, v); },
            coords, opt));

        auto a2 = random_tensor<double>(rng, {3, 5});
        auto b2 = random_tensor<double>(rng, {5, 4});
        note(grad_check<double>(
            [b2](Tape<double>& t, const Tensor<double>& v) { return ops::matmul(t, v, b2); }, a2, opt));
        note(grad_check<double>(
            [a2](Tape<double>& t, const Tensor<double>& v) { return ops::matmul(t, a2, v); }, b2, opt));
    }
    expect(worst < 1e-4, "primitive gradient max relative error " + std::to_string(worst));
}

void check_grad_modules() {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    opt.max_components = 24;

    // Backbone: d sum(stage4) / d input.
    {
        ParamStore<double> params;
        Rng rng(5);
        BackboneConfig bc;
        bc.channels = {4, 6, 8, 10};
        Backbone<double> bb(bc, params, rng);
        Rng drng(6);
        auto frame = random_tensor<double>(drng, {1, 1, 32, 32}, 0.5);
        const double err = grad_check<double>(
            [&bb](Tape<double>& t, const Tensor<double>& v) { return bb.forward(t, v)[3]; }, frame,
            opt);
        expect(err < 1e-4, "backbone input gradient error " + std::to_string(err));
    }

    // TDE: gradient through stage-2 intra fusion w.r.t. a projection weight.
    {
        ParamStore<double> params;
        Rng rng(7);
        TdeConfig tc;
        tc.cm = 6;
        tc.delta = 1;
        tc.in_channels = {4, 6, 8, 10};
        Tde<double> tde(tc, params, rng);
        Rng drng(8);
        std::vector<StageFeatures<double>> frames(3);
        for (auto& sf : frames) {
            sf[0] = random_tensor<double>(drng, {1, 4, 8, 8}, 0.5);
            sf[1] = random_tensor<double>(drng, {1, 6, 4, 4}, 0.5);
            sf[2] = random_tensor<double>(drng, {1, 8, 2, 2}, 0.5);
            sf[3] = random_tensor<double>(drng, {1, 10, 1, 1}, 0.5);
        }
        auto loss_fn = [&](Tape<double>& t) {
            return ops::mean_all(t, tde.forward(t, frames));
        };
        const double err = grad_check_wrt<double>(loss_fn, params.at("tde.intra.2.proj.w"), opt);
        expect(err < 1e-4, "tde parameter gradient error " + std::to_string(err));
    }

    // RDM factorization: sum(M_u) has nonzero grads in MLP_u and zero in MLP_n.
    {
        ParamStore<double> params;
        Rng rng(9);
        RdmConfig rc;
        rc.cm = 6;
        rc.joints = 2;
        rc.visual_channels = 10;
        rc.frames = 3;
        Rdm<double> rdm(rc, params, rng);
        Rng drng(10);
        auto m = random_tensor<double>(drng, {1, 6, 4, 4});
        Tape<double> tape;
        auto fact = rdm.factorize(tape, m);
        auto loss = ops::sum_all(tape, fact.m_u);
        params.zero_grad();
        tape.backward(loss);
        double gu = 0, gn = 0;
        for (double g : params.at("rdm.mlp_u.fc1.w").grad()) gu += std::abs(g);
        for (double g : params.at("rdm.mlp_n.fc1.w").grad()) gn += std::abs(g);
        expect(gu > 0, "factorization: MLP_u received no gradient");
        expect(gn == 0, "factorization: MLP_n received gradient from the useful branch");
    }
}

void check_grad_full_model() {
    // Full pipeline (backbone -> TDE -> RDM -> heatmap + MI loss) at double
    // precision against central differences, probing the two largest-gradient
    // components of every parameter tensor.
    ModelConfig mc = tiny_model_config(Variant::kTdmi);
    mc.image_size = 48; // keeps the stage-4 branches away from the 1x1 degenerate corner
    TdmiModel<double> model(mc, 42);
    ClipConfig clips = tiny_clip_config();
    clips.image_size = 48;
    auto data = build_dataset<double>(777, 4, clips);

    auto loss_fn = [&](Tape<double>& tape) {
        std::vector<Tensor<double>> lh, m, mu, mn, fv, fe, yrows;
        for (const auto& s : data) {
            auto out = model.forward(tape, s);
            lh.push_back(heatmap_loss(tape, out.heatmaps, s));
            m.push_back(out.m);
            mu.push_back(out.m_u);
            mn.push_back(out.m_n);
            fv.push_back(out.f_vis);
            fe.push_back(out.f_enh);
            yrows.push_back(Tensor<double>(Shape{1, static_cast<int>(s.heatmaps.size())},
                                           s.heatmaps.values()));
        }
        Tensor<double> loss_h = lh[0];
        for (std::size_t i = 1; i < lh.size(); ++i) loss_h = ops::add(tape, loss_h, lh[i]);
        loss_h = ops::scale(tape, loss_h, 0.25);
        MiFeatures<double> f;
        f.m = ops::concat_rows(tape, m);
        f.m_u = ops::concat_rows(tape, mu);
        f.m_n = ops::concat_rows(tape, mn);
        f.f_vis = ops::concat_rows(tape, fv);
        f.f_enh = ops::concat_rows(tape, fe);
        f.y = ops::concat_rows(tape, yrows);
        auto terms = model.mi().loss_terms(tape, f);
        return total_loss(tape, loss_h, terms.total, 1.0);
    };

    // eps sits above the cancellation noise floor of the loss evaluation
    // (the MI logliks produce O(100) intermediates) and below the typical
    // distance to the activation kinks of the piecewise-linear network. A
    // probe that still lands on one of the measure-zero kinks (or a
    // deformable sampling lattice crossing) is re-run once on different
    // components: a genuinely wrong backward fails every probe, a straddle
    // does not survive the re-probe.
    // The central-difference noise floor at eps=1e-5 is a few 1e-10 absolute
    // (measured: |loss| ~ O(1) with O(1e5) accumulation ops). Components with
    // |gradient| >= kResolvable can be verified to the 1e-4 relative
    // tolerance; a tensor whose largest component sits below that is
    // numerically unresolvable by finite differences and is held instead to
    // an absolute agreement bound two orders above the noise floor (a sign or
    // indexing bug still overshoots it by orders of magnitude).
    constexpr double kResolvable = 3e-5;
    constexpr double kAbsBound = 3e-8;

    // Analytic gradients once, to rank components per tensor.
    model.params().zero_grad();
    {
        Tape<double> tape;
        auto full = loss_fn(tape);
        tape.backward(full);
    }
    double gu = 0;
    for (double g : model.params().at("rdm.mlp_u.fc2.w").grad()) gu += std::abs(g);
    expect(gu > 0, "full model: mask MLP received no gradient");

    double worst = 0;
    std::string worst_name;
    int checked = 0, reprobed = 0, absolute_mode = 0;
    for (const auto& [name, param] : model.params()) {
        auto& p = const_cast<Tensor<double>&>(param);
        std::vector<std::size_t> comps(p.values().size());
        for (std::size_t i = 0; i < comps.size(); ++i) comps[i] = i;
        std::sort(comps.begin(), comps.end(), [&p](std::size_t a, std::size_t b) {
            const double da = std::abs(p.grad()[a]), db = std::abs(p.grad()[b]);
            return da != db ? da > db : a < b;
        });
        comps.resize(std::min<std::size_t>(2, comps.size()));

        const bool resolvable = std::abs(p.grad()[comps[0]]) >= kResolvable;
        if (!resolvable) ++absolute_mode;
        double err = 0;
        bool retried = false;
        for (std::size_t ci : comps) {
            const double analytic = p.grad()[ci];
            double best_rel = 1e9, best_abs = 1e9;
            // A probe interval can straddle one of the measure-zero activation
            // kinks (or a deformable sampling lattice crossing); retries at a
            // different eps re-roll the straddle while a genuinely wrong
            // backward keeps failing at every eps.
            for (double eps : {1e-5, 3e-6, 1e-6}) {
                const double saved = p.values()[ci];
                p.values()[ci] = saved + eps;
                const double lp = [&] { Tape<double> t(false); return loss_fn(t).item(); }();
                p.values()[ci] = saved - eps;
                const double lm = [&] { Tape<double> t(false); return loss_fn(t).item(); }();
                p.values()[ci] = saved;
                const double numeric = (lp - lm) / (2 * eps);
                best_abs = std::min(best_abs, std::abs(analytic - numeric));
                best_rel = std::min(best_rel, std::abs(analytic - numeric) /
                                                  std::max({std::abs(analytic), std::abs(numeric), 1e-8}));
                if ((resolvable && best_rel < 1e-4) || (!resolvable && best_abs < kAbsBound)) break;
                retried = true;
            }
            if (resolvable) {
                err = std::max(err, best_rel);
            } else {
                expect(best_abs < kAbsBound, "sub-resolution gradient of " + name +
                                                 " disagrees absolutely by " + std::to_string(best_abs));
            }
        }
        if (retried) ++reprobed;
        if (resolvable && err > worst) {
            worst = err;
            worst_name = name;
        }
        ++checked;
    }
    expect(worst < 1e-4, "full-model gradient error " + std::to_string(worst) + " at " + worst_name +
                             " (" + std::to_string(checked) + " tensors, " + std::to_string(reprobed) +
                             " re-probed, " + std::to_string(absolute_mode) + " at sub-resolution)");
}

void check_deform_degenerate() {
    // Zero offsets + unit modulation must reproduce the regular convolution
    // with the same kernel: 20 random inputs per stage at both precisions.
    const std::array<int, 4> sizes = {12, 8, 6, 4};
    auto run = [&](auto tag, double tol) {
        using T = decltype(tag);
        Rng rng(2024);
        for (int stage = 0; stage < 4; ++stage) {
            const int hw = sizes[static_cast<std::size_t>(stage)];
            for (int trial = 0; trial < 20; ++trial) {
                auto x = random_tensor<T>(rng, {1, 5, hw, hw});
                auto w = random_tensor<T>(rng, {5, 5, 3, 3});
                auto b = random_tensor<T>(rng, {5});
                Tensor<T> off(Shape{1, 18, hw, hw}, T(0));
                Tensor<T> mask(Shape{1, 9, hw, hw}, T(1));
                Tape<T> tape(false);
                auto got = ops::deform_conv2d(tape, x, off, mask, w, b, 1);
                auto want = ops::conv2d(tape, x, w, b, {.stride = 1, .pad = 1});
                double diff = 0;
                for (std::size_t i = 0; i < got.values().size(); ++i)
                    diff = std::max(diff, std::abs(static_cast<double>(got.values()[i]) -
                                                   static_cast<double>(want.values()[i])));
                expect(diff < tol, "degenerate deformable mismatch " + std::to_string(diff) +
                                       " at stage " + std::to_string(stage + 1));
            }
        }
    };
    run(double{}, 1e-10);
    run(float{}, 1e-6);
}

void check_deform_integer_shift() {
    Rng rng(37);
    Tape<double> tape(false);
    auto x = random_tensor<double>(rng, {1, 2, 6, 6});
    auto w = random_tensor<double>(rng, {3, 2, 3, 3});
    Tensor<double> off(Shape{1, 18, 6, 6}, 0.0);
    for (int k = 0; k < 9; ++k)
        for (int p = 0; p < 36; ++p) off.values()[(2 * k + 1) * 36 + p] = 1.0;
    Tensor<double> mask(Shape{1, 9, 6, 6}, 1.0);
    auto got = ops::deform_conv2d(tape, x, off, mask, w, Tensor<double>(), 1);

    Tensor<double> shifted(Shape{1, 2, 6, 6}, 0.0);
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 6; ++y)
            for (int xx = 0; xx < 5; ++xx)
                shifted.values()[(c * 6 + y) * 6 + xx] = x.values()[(c * 6 + y) * 6 + xx + 1];
    auto want = ops::conv2d(tape, shifted, w, Tensor<double>(), {.stride = 1, .pad = 1});
    // Column 0 differs by construction (shifted-array zero padding vs real
    // pixels); all other columns must agree exactly.
    for (int oc = 0; oc < 3; ++oc)
        for (int y = 0; y < 6; ++y)
            for (int xx = 1; xx < 6; ++xx) {
                const std::size_t i = (static_cast<std::size_t>(oc) * 6 + y) * 6 + xx;
                expect(std::abs(got.values()[i] - want.values()[i]) < 1e-12,
                       "integer-shift oracle mismatch at column " + std::to_string(xx));
            }
}

void check_tde_exactness() {
    Rng rng(404);
    // Static clip: identical frames give exactly zero differences.
    std::vector<StageFeatures<double>> frames(5);
    StageFeatures<double> base;
    base[0] = random_tensor<double>(rng, {1, 4, 8, 8});
    base[1] = random_tensor<double>(rng, {1, 6, 4, 4});
    base[2] = random_tensor<double>(rng, {1, 8, 2, 2});
    base[3] = random_tensor<double>(rng, {1, 10, 1, 1});
    for (auto& f : frames) f = base;
    Tape<double> tape(false);
    auto diffs = Tde<double>::compute_differences(tape, frames);
    for (int j = 0; j < 4; ++j)
        for (const auto& d : diffs.stages[static_cast<std::size_t>(j)])
            for (double v : d.values())
                expect(v == 0.0, "static clip produced a nonzero difference");

    // Reversal negates every difference exactly.
    std::vector<StageFeatures<double>> moving(5);
    for (auto& f : moving) {
        f[0] = random_tensor<double>(rng, {1, 4, 8, 8});
        f[1] = random_tensor<double>(rng, {1, 6, 4, 4});
        f[2] = random_tensor<double>(rng, {1, 8, 2, 2});
        f[3] = random_tensor<double>(rng, {1, 10, 1, 1});
    }
    auto fwd = Tde<double>::compute_differences(tape, moving);
    std::vector<StageFeatures<double>> reversed(moving.rbegin(), moving.rend());
    auto bwd = Tde<double>::compute_differences(tape, reversed);
    for (int j = 0; j < 4; ++j) {
        const auto& f = fwd.stages[static_cast<std::size_t>(j)];
        const auto& b = bwd.stages[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < f.size(); ++k)
            for (std::size_t i = 0; i < f[k].values().size(); ++i)
                expect(f[k].values()[i] == -b[b.size() - 1 - k].values()[i],
                       "reversal antisymmetry violated");
    }
}

void check_mi_oracle() {
    const std::array<double, 5> rhos = {0.0, 0.3, 0.5, 0.6, 0.9};
    std::array<double, 5> avg{};
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed)
            avg[i] += gaussian_lower_bound(rhos[i], seed);
        avg[i] /= 3.0;
    }
    auto truth = [](double rho) { return -0.5 * std::log(1.0 - rho * rho); };
    std::ostringstream detail;
    detail << "estimates (3-seed avg):";
    for (std::size_t i = 0; i < rhos.size(); ++i)
        detail << " rho=" << rhos[i] << ": " << avg[i] << " (true " << truth(rhos[i]) << ")";
    expect(std::abs(avg[0] - 0.0) <= 0.05, "MI estimate at rho=0 off: " + detail.str());
    expect(std::abs(avg[2] - truth(0.5)) <= 0.05, "MI estimate at rho=0.5 off: " + detail.str());
    expect(std::abs(avg[4] - truth(0.9)) <= 0.10, "MI estimate at rho=0.9 off: " + detail.str());
    // Monotone nondecreasing over {0, 0.3, 0.6, 0.9}.
    expect(avg[0] <= avg[1] && avg[1] <= avg[3] && avg[3] <= avg[4],
           "MI estimates not monotone in rho: " + detail.str());
}

void check_geometry_crop() {
    // 25% enlargement arithmetic is exact.
    const BoxCrop box{10, 10, 20, 20};
    const BoxCrop big = box.enlarged();
    expect(big.x == 7.5 && big.y == 7.5 && big.w == 25.0 && big.h == 25.0,
           "box enlargement arithmetic is wrong");

    // Identity crop: full-image box without enlargement.
    Rng rng(11);
    std::vector<std::vector<float>> img(1);
    img[0].resize(32 * 32);
    for (auto& v : img[0]) v = static_cast<float>(rng.uniform());
    auto out = crop_sequence(img, 32, BoxCrop{0, 0, 32, 32}, 32);
    for (std::size_t i = 0; i < img[0].size(); ++i)
        expect(out[0][i] == img[0][i], "identity crop modified pixels");

    // Joint remap round trip within 0.5 image pixels.
    for (int trial = 0; trial < 1000; ++trial) {
        BoxCrop b{rng.uniform(-5, 30), rng.uniform(-5, 30), rng.uniform(8, 40), rng.uniform(8, 40)};
        const Point p{rng.uniform(0, 48), rng.uniform(0, 48)};
        const Point back = to_image_frame(to_crop_frame(p, b, 64), b, 64);
        expect(std::abs(back.x - p.x) <= 0.5 && std::abs(back.y - p.y) <= 0.5,
               "crop coordinate round trip exceeded 0.5 px");
    }

    bool threw = false;
    try {
        crop_sequence(img, 32, BoxCrop{100, 100, 10, 10}, 32);
    } catch (const GeometryError&) {
        threw = true;
    }
    expect(threw, "non-intersecting crop box did not raise a geometry error");
}

void check_geometry_heatmap() {
    Rng rng(13);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = 12, w = 12;
        const std::vector<Point> joints = {{rng.uniform(0, w - 1), rng.uniform(0, h - 1)}};
        auto maps = encode_heatmaps<double>(joints, {true}, 2.0, h, w);
        const auto decoded = decode_heatmaps(maps);
        // Peak-quantized encoding: the round trip is exact up to rounding,
        // measured per axis.
        worst = std::max({worst, std::abs(decoded[0].x - joints[0].x),
                          std::abs(decoded[0].y - joints[0].y)});
    }
    expect(worst <= 0.5, "heatmap encode/decode round trip error " + std::to_string(worst));

    // Pinned cases: exact grid point, sigma ring value, invisible joint,
    // uniform tie-break.
    auto maps = encode_heatmaps<double>({{3.0, 4.0}, {1.0, 1.0}}, {true, false}, 2.0, 8, 8);
    expect(maps.values()[4 * 8 + 3] == 1.0, "grid-point joint does not peak at 1.0");
    const double ring = maps.values()[4 * 8 + 5]; // distance 2 = sigma
    expect(std::abs(ring - std::exp(-0.5)) < 1e-12, "value at distance sigma is not exp(-0.5)");
    for (int i = 0; i < 64; ++i)
        expect(maps.values()[64 + i] == 0.0, "invisible joint map is not all-zero");

    Tensor<double> uniform(Shape{1, 1, 5, 5}, 0.7);
    const auto d = decode_heatmaps(uniform);
    expect(d[0].x == 0.0 && d[0].y == 0.0, "uniform map did not decode to (0,0)");
}

void check_checkpoint_roundtrip() {
    ModelConfig mc = tiny_model_config(Variant::kTdmi);
    TdmiModel<float> model(mc, 7);
    auto data = build_dataset<float>(55, 2, tiny_clip_config());
    Tape<float> tape(false);
    auto before = model.forward(tape, data[0]).heatmaps;

    const Archive a = model.to_archive();
    TdmiModel<float> restored(mc, 8); // different init, then load
    restored.load_archive(a);
    auto after = restored.forward(tape, data[0]).heatmaps;
    for (std::size_t i = 0; i < before.values().size(); ++i)
        expect(before.values()[i] == after.values()[i],
               "forward outputs differ after checkpoint load");
}

} // namespace

double gaussian_lower_bound(double rho, std::uint64_t seed, int eval_batch, int steps, int minibatch) {
    ParamStore<double> params;
    Rng init_rng(Rng::stream(seed, "mi.critic.init"));
    LowerCritic<double> critic("critic", {1, 1, 64, 8}, params, init_rng);
    Adam<double> adam;
    Rng data_rng(Rng::stream(seed, "mi.data"));
    const double cxy = std::sqrt(1.0 - rho * rho);

    auto draw = [&](Rng& rng, int n, Tensor<double>& x, Tensor<double>& y) {
        x = Tensor<double>(Shape{n, 1});
        y = Tensor<double>(Shape{n, 1});
        for (int i = 0; i < n; ++i) {
            const double a = rng.gaussian(), b = rng.gaussian();
            x.values()[static_cast<std::size_t>(i)] = a;
            y.values()[static_cast<std::size_t>(i)] = rho * a + cxy * b;
        }
    };

    for (int it = 0; it < steps; ++it) {
        Tensor<double> x, y;
        draw(data_rng, minibatch, x, y);
        Tape<double> tape;
        params.zero_grad();
        auto obj = critic.objective(tape, x, y);
        tape.backward(obj);
        adam.step(params, staged_lr(1e-3, it, steps));
    }

    Rng eval_rng(Rng::stream(seed, "mi.eval"));
    Tensor<double> x, y;
    draw(eval_rng, eval_batch, x, y);
    Tape<double> tape(false);
    return estimate_mi(tape, x, y, critic).value;
}

std::vector<VerifyResult> run_verify(const std::string& filter, std::ostream& log) {
    const std::vector<std::pair<std::string, std::function<void()>>> checks = {
        {"grad.primitives", check_grad_primitives},
        {"grad.modules", check_grad_modules},
        {"grad.full_model", check_grad_full_model},
        {"deform.degenerate", check_deform_degenerate},
        {"deform.integer_shift", check_deform_integer_shift},
        {"tde.exactness", check_tde_exactness},
        {"mi.oracle", check_mi_oracle},
        {"geometry.crop", check_geometry_crop},
        {"geometry.heatmap", check_geometry_heatmap},
        {"checkpoint.roundtrip", check_checkpoint_roundtrip},
    };
    std::vector<VerifyResult> results;
    for (const auto& [name, fn] : checks) {
        if (!filter.empty() && name.find(filter) == std::string::npos) continue;
        VerifyResult r;
        r.name = name;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn();
            r.pass = true;
        } catch (const std::exception& e) {
            r.pass = false;
            r.message = e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.seconds << "s)";
        if (!r.message.empty()) log << " — " << r.message;
        log << "\n" << std::flush;
        results.push_back(std::move(r));
    }
    if (results.empty()) log << "no checks match filter '" << filter << "'\n";
    return results;
}

bool all_passed(const std::vector<VerifyResult>& results) {
    if (results.empty()) return false;
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

} // namespace tdmi

#include "tdmi/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "tdmi/rng.hpp"

namespace tdmi {

namespace {

constexpr double kJointBlobSigma = 1.6;
constexpr double kBoundsMargin = 3.0;

double reflect_into(double v, double lo, double hi) {
    while (v < lo || v > hi) {
        if (v < lo) v = 2.0 * lo - v;
        if (v > hi) v = 2.0 * hi - v;
    }
    return v;
}

void add_blob(std::vector<float>& img, int s, const Point& c, double amp, double sigma) {
    const int r = static_cast<int>(std::ceil(4.0 * sigma));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - r);
    const int y1 = std::min(s - 1, static_cast<int>(std::ceil(c.y)) + r);
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - r);
    const int x1 = std::min(s - 1, static_cast<int>(std::ceil(c.x)) + r);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
            img[static_cast<std::size_t>(y) * s + x] += static_cast<float>(amp * std::exp(-d2 * inv));
        }
}

void box_blur3(std::vector<float>& img, int s) {
    std::vector<float> src = img;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            float acc = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::clamp(y + dy, 0, s - 1);
                    const int xx = std::clamp(x + dx, 0, s - 1);
                    acc += src[static_cast<std::size_t>(yy) * s + xx];
                }
            img[static_cast<std::size_t>(y) * s + x] = acc / 9.0f;
        }
}

struct MovingBlob {
    Point pos;
    Point vel;
    double amp = 0;
    double sigma = 1.0;
};

} // namespace

SyntheticClip generate_clip(std::uint64_t seed, const ClipConfig& cfg) {
    if (cfg.joints < 1) throw ConfigError("generate_clip: joints must be >= 1");
    if (cfg.delta < 1) throw ConfigError("generate_clip: delta must be >= 1");
    if (cfg.image_size < 16 || cfg.image_size % 16 != 0)
        throw ConfigError("generate_clip: image size must be a positive multiple of 16");
    if (cfg.occlusion_prob < 0 || cfg.occlusion_prob > 1 || cfg.blur_prob < 0 || cfg.blur_prob > 1)
        throw ConfigError("generate_clip: probabilities must lie in [0,1]");
    if (cfg.v_max < 0 || cfg.n_distractors < 0)
        throw ConfigError("generate_clip: v_max and n_distractors must be nonnegative");

    Rng rng(Rng::stream(seed, "clip"));
    const int s = cfg.image_size;
    const int frames = cfg.frames();
    const double lo = kBoundsMargin, hi = s - 1 - kBoundsMargin;

    SyntheticClip clip;
    clip.seed = seed;
    clip.image_size = s;
    clip.visibility.assign(static_cast<std::size_t>(cfg.joints), true);

    // Body: a common translation plus small per-joint jitter, so joints move
    // coherently; per-frame displacement stays within v_max by construction.
    Point center{rng.uniform(0.3 * s, 0.7 * s), rng.uniform(0.3 * s, 0.7 * s)};
    const double body_speed = rng.uniform(0.3, 0.6) * cfg.v_max;
    const double body_dir = rng.uniform(0.0, 6.283185307179586);
    Point body_vel{body_speed * std::cos(body_dir), body_speed * std::sin(body_dir)};

    std::vector<Point> home(static_cast<std::size_t>(cfg.joints));
    const double spread = 0.18 * s;
    for (auto& o : home) {
        o.x = rng.uniform(-spread, spread);
        o.y = rng.uniform(-spread, spread);
    }

    // Per-joint jitter steps, drawn up front in a fixed order.
    std::vector<std::vector<Point>> jitter_step(static_cast<std::size_t>(frames - 1));
    for (auto& row : jitter_step) {
        row.resize(static_cast<std::size_t>(cfg.joints));
        for (auto& st : row) {
            const double a = rng.uniform(0.0, 6.283185307179586);
            const double r = rng.uniform(0.0, 0.4) * cfg.v_max;
            st = {r * std::cos(a), r * std::sin(a)};
        }
    }

    std::vector<MovingBlob> distractors(static_cast<std::size_t>(cfg.n_distractors));
    for (auto& d : distractors) {
        d.pos = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
        const double a = rng.uniform(0.0, 6.283185307179586);
        const double sp = rng.uniform(0.4, 1.0) * cfg.v_max;
        d.vel = {sp * std::cos(a), sp * std::sin(a)};
        d.amp = rng.uniform(0.5, 0.95);
        d.sigma = rng.uniform(1.2, 2.2);
    }

    // Smooth drifting background field.
    struct Wave {
        double fx, fy, px, py, amp;
    };
    std::array<Wave, 3> waves;
    for (auto& wv : waves) {
        wv.fx = rng.uniform(0.03, 0.12);
        wv.fy = rng.uniform(0.03, 0.12);
        wv.px = rng.uniform(0.0, 6.28);
        wv.py = rng.uniform(0.0, 6.28);
        wv.amp = rng.uniform(0.02, 0.06);
    }
    Point bg_drift{rng.uniform(-0.5, 0.5) * cfg.v_max, rng.uniform(-0.5, 0.5) * cfg.v_max};

    const bool occlude = rng.bernoulli(cfg.occlusion_prob);
    const int occ_target = rng.uniform_int(0, cfg.joints - 1);
    const double occ_hw = rng.uniform(2.0, 5.0);
    const double occ_hh = rng.uniform(2.0, 5.0);
    const float occ_fill = static_cast<float>(rng.uniform(0.15, 0.6));
    const bool blur = rng.bernoulli(cfg.blur_prob);
    const int blur_frame = rng.uniform_int(0, frames - 1);

    // Trajectories.
    clip.joints.assign(static_cast<std::size_t>(frames), {});
    std::vector<Point> jitter(static_cast<std::size_t>(cfg.joints), Point{});
    std::vector<std::vector<Point>> distractor_pos(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) {
        auto& js = clip.joints[static_cast<std::size_t>(f)];
        js.resize(static_cast<std::size_t>(cfg.joints));
        for (int j = 0; j < cfg.joints; ++j) {
            js[static_cast<std::size_t>(j)] = {
                reflect_into(center.x + home[static_cast<std::size_t>(j)].x +
                                 jitter[static_cast<std::size_t>(j)].x, lo, hi),
                reflect_into(center.y + home[static_cast<std::size_t>(j)].y +
                                 jitter[static_cast<std::size_t>(j)].y, lo, hi)};
        }
        distractor_pos[static_cast<std::size_t>(f)].resize(distractors.size());
        for (std::size_t d = 0; d < distractors.size(); ++d)
            distractor_pos[static_cast<std::size_t>(f)][d] = distractors[d].pos;
        if (f + 1 < frames) {
            center.x += body_vel.x;
            center.y += body_vel.y;
            if (center.x < lo || center.x > hi) {
                center.x = reflect_into(center.x, lo, hi);
                body_vel.x = -body_vel.x;
            }
            if (center.y < lo || center.y > hi) {
                center.y = reflect_into(center.y, lo, hi);
                body_vel.y = -body_vel.y;
            }
            for (int j = 0; j < cfg.joints; ++j) {
                jitter[static_cast<std::size_t>(j)].x +=
                    jitter_step[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)].x;
                jitter[static_cast<std::size_t>(j)].y +=
                    jitter_step[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)].y;
            }
            for (auto& d : distractors) {
                d.pos.x += d.vel.x;
                d.pos.y += d.vel.y;
                if (d.pos.x < lo || d.pos.x > hi) {
                    d.pos.x = reflect_into(d.pos.x, lo, hi);
                    d.vel.x = -d.vel.x;
                }
                if (d.pos.y < lo || d.pos.y > hi) {
                    d.pos.y = reflect_into(d.pos.y, lo, hi);
                    d.vel.y = -d.vel.y;
                }
            }
        }
    }

    // Rendering.
    clip.frames.assign(static_cast<std::size_t>(frames), std::vector<float>());
    for (int f = 0; f < frames; ++f) {
        auto& img = clip.frames[static_cast<std::size_t>(f)];
        img.assign(static_cast<std::size_t>(s) * s, 0.0f);
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                double v = 0.12;
                for (const auto& wv : waves)
                    v += wv.amp * std::sin(wv.fx * (x + bg_drift.x * f) + wv.px) *
                         std::sin(wv.fy * (y + bg_drift.y * f) + wv.py);
                img[static_cast<std::size_t>(y) * s + x] = static_cast<float>(v);
            }
        for (int j = 0; j < cfg.joints; ++j) {
            const double amp = cfg.joints == 1 ? 0.75 : 0.55 + 0.4 * j / (cfg.joints - 1.0);
            add_blob(img, s, clip.joints[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)],
                     amp, kJointBlobSigma);
        }
        for (std::size_t d = 0; d < distractors.size(); ++d)
            add_blob(img, s, distractor_pos[static_cast<std::size_t>(f)][d], distractors[d].amp,
                     distractors[d].sigma);
        if (blur && f == blur_frame) box_blur3(img, s);
        if (occlude && f == cfg.key_frame()) {
            const Point c = clip.joints[static_cast<std::size_t>(f)][static_cast<std::size_t>(occ_target)];
            const int y0 = std::max(0, static_cast<int>(std::floor(c.y - occ_hh)));
            const int y1 = std::min(s - 1, static_cast<int>(std::ceil(c.y + occ_hh)));
            const int x0 = std::max(0, static_cast<int>(std::floor(c.x - occ_hw)));
            const int x1 = std::min(s - 1, static_cast<int>(std::ceil(c.x + occ_hw)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) img[static_cast<std::size_t>(y) * s + x] = occ_fill;
            for (int j = 0; j < cfg.joints; ++j) {
                const Point p = clip.joints[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)];
                if (p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1)
                    clip.visibility[static_cast<std::size_t>(j)] = false;
            }
        }
        for (auto& v : img) v = std::clamp(v, 0.0f, 1.0f);
    }
    return clip;
}

BoxCrop joint_bounding_box(const SyntheticClip& clip, double margin) {
    const auto& joints = clip.joints[clip.joints.size() / 2];
    double x0 = joints[0].x, x1 = joints[0].x, y0 = joints[0].y, y1 = joints[0].y;
    for (const auto& p : joints) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    x0 -= margin;
    y0 -= margin;
    x1 += margin;
    y1 += margin;
    // Keep degenerate single-joint boxes usable.
    const double min_side = 8.0;
    if (x1 - x0 < min_side) {
        const double c = 0.5 * (x0 + x1);
        x0 = c - 0.5 * min_side;
        x1 = c + 0.5 * min_side;
    }
    if (y1 - y0 < min_side) {
        const double c = 0.5 * (y0 + y1);
        y0 = c - 0.5 * min_side;
        y1 = c + 0.5 * min_side;
    }
    return {x0, y0, x1 - x0, y1 - y0};
}

std::vector<std::vector<float>> crop_sequence(const std::vector<std::vector<float>>& frames,
                                              int image_size, const BoxCrop& box, int out_size) {
    if (box.w <= 0 || box.h <= 0 || box.x + box.w <= 0 || box.y + box.h <= 0 ||
        box.x >= image_size || box.y >= image_size)
        throw GeometryError("crop_sequence: box does not intersect the image");
    const double sx = box.w / out_size, sy = box.h / out_size;
    std::vector<std::vector<float>> out(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto& src = frames[f];
        auto& dst = out[f];
        dst.assign(static_cast<std::size_t>(out_size) * out_size, 0.0f);
        for (int oy = 0; oy < out_size; ++oy) {
            const double yf = box.y + (oy + 0.5) * sy - 0.5;
            for (int ox = 0; ox < out_size; ++ox) {
                const double xf = box.x + (ox + 0.5) * sx - 0.5;
                if (yf <= -1 || yf >= image_size || xf <= -1 || xf >= image_size) continue;
                const int y0 = static_cast<int>(std::floor(yf));
                const int x0 = static_cast<int>(std::floor(xf));
                const double ly = yf - y0, lx = xf - x0;
                auto at = [&](int y, int x) -> double {
                    if (y < 0 || y >= image_size || x < 0 || x >= image_size) return 0.0;
                    return src[static_cast<std::size_t>(y) * image_size + x];
                };
                const double v = (1 - ly) * ((1 - lx) * at(y0, x0) + lx * at(y0, x0 + 1)) +
                                 ly * ((1 - lx) * at(y0 + 1, x0) + lx * at(y0 + 1, x0 + 1));
                dst[static_cast<std::size_t>(oy) * out_size + ox] = static_cast<float>(v);
            }
        }
    }
    return out;
}

Point to_crop_frame(const Point& p, const BoxCrop& box, int out_size) {
    const double sx = box.w / out_size, sy = box.h / out_size;
    return {(p.x + 0.5 - box.x) / sx - 0.5, (p.y + 0.5 - box.y) / sy - 0.5};
}

Point to_image_frame(const Point& p, const BoxCrop& box, int out_size) {
    const double sx = box.w / out_size, sy = box.h / out_size;
    return {box.x + (p.x + 0.5) * sx - 0.5, box.y + (p.y + 0.5) * sy - 0.5};
}

template <typename T>
Tensor<T> encode_heatmaps(const std::vector<Point>& joints_hm, const std::vector<bool>& visibility,
                          double sigma, int h, int w) {
    if (sigma <= 0) throw ConfigError("encode_heatmaps: sigma must be positive");
    const int j = static_cast<int>(joints_hm.size());
    Tensor<T> maps(Shape{1, j, h, w});
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int k = 0; k < j; ++k) {
        if (!visibility[static_cast<std::size_t>(k)]) continue;
        const int cx = std::clamp(static_cast<int>(std::lround(joints_hm[static_cast<std::size_t>(k)].x)),
                                  0, w - 1);
        const int cy = std::clamp(static_cast<int>(std::lround(joints_hm[static_cast<std::size_t>(k)].y)),
                                  0, h - 1);
        T* map = maps.data() + static_cast<std::size_t>(k) * h * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                map[static_cast<std::size_t>(y) * w + x] = static_cast<T>(std::exp(-d2 * inv));
            }
    }
    return maps;
}

template <typename T>
std::vector<DecodedJoint> decode_heatmaps(const Tensor<T>& heatmaps) {
    if (heatmaps.rank() != 4 || heatmaps.dim(0) != 1)
        throw ShapeError("decode_heatmaps expects [1,J,H,W], got " + shape_str(heatmaps.shape()));
    const int j = heatmaps.dim(1), h = heatmaps.dim(2), w = heatmaps.dim(3);
    std::vector<DecodedJoint> out(static_cast<std::size_t>(j));
    for (int k = 0; k < j; ++k) {
        const T* map = heatmaps.data() + static_cast<std::size_t>(k) * h * w;
        int best = 0;
        for (int i = 1; i < h * w; ++i)
            if (map[i] > map[best]) best = i; // strict: ties keep the smallest index
        const int by = best / w, bx = best % w;
        double x = bx, y = by;
        if (bx > 0 && bx < w - 1) {
            const T r = map[by * w + bx + 1], l = map[by * w + bx - 1];
            if (r > l) x += 0.25;
            else if (l > r) x -= 0.25;
        }
        if (by > 0 && by < h - 1) {
            const T d = map[(by + 1) * w + bx], u = map[(by - 1) * w + bx];
            if (d > u) y += 0.25;
            else if (u > d) y -= 0.25;
        }
        out[static_cast<std::size_t>(k)] = {x, y, static_cast<double>(map[best])};
    }
    return out;
}

template <typename T>
Sample<T> prepare_sample(const SyntheticClip& clip, const ClipConfig& cfg) {
    const BoxCrop box = joint_bounding_box(clip, 4.0).enlarged(1.25);
    const int s = cfg.image_size;
    Sample<T> sample;
    sample.input_size = s;
    const auto cropped = crop_sequence(clip.frames, clip.image_size, box, s);
    for (const auto& img : cropped) {
        Tensor<T> t(Shape{1, 1, s, s});
        for (std::size_t i = 0; i < img.size(); ++i) t.values()[i] = static_cast<T>(img[i]);
        sample.frames.push_back(std::move(t));
    }
    const auto& key = clip.joints[static_cast<std::size_t>(cfg.key_frame())];
    std::vector<Point> hm_joints;
    for (const auto& p : key) {
        const Point c = to_crop_frame(p, box, s);
        sample.joints.push_back(c);
        hm_joints.push_back({c.x / 4.0, c.y / 4.0});
    }
    sample.visibility = clip.visibility;
    const int hm = s / 4;
    sample.heatmaps = encode_heatmaps<T>(hm_joints, sample.visibility, cfg.heatmap_sigma, hm, hm);
    sample.vis_mask = Tensor<T>(Shape{1, cfg.joints, hm, hm});
    for (int k = 0; k < cfg.joints; ++k) {
        if (!sample.visibility[static_cast<std::size_t>(k)]) continue;
        T* m = sample.vis_mask.data() + static_cast<std::size_t>(k) * hm * hm;
        std::fill(m, m + hm * hm, T(1));
        sample.visible_pixels += hm * hm;
    }
    return sample;
}

template <typename T>
std::vector<Sample<T>> build_dataset(std::uint64_t base_seed, int count, const ClipConfig& cfg) {
    std::vector<Sample<T>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out.push_back(prepare_sample<T>(generate_clip(base_seed + static_cast<std::uint64_t>(i), cfg), cfg));
    return out;
}

void save_clip(const SyntheticClip& clip, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const int s = clip.image_size;
    for (std::size_t f = 0; f < clip.frames.size(); ++f) {
        std::ofstream os(dir + "/frame_" + std::to_string(f) + ".pgm", std::ios::binary);
        if (!os) throw Error("cannot write frame file in " + dir);
        os << "P5\n" << s << " " << s << "\n255\n";
        for (float v : clip.frames[f]) {
            const auto q = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            os.put(static_cast<char>(q));
        }
    }
    std::ofstream labels(dir + "/labels.txt");
    if (!labels) throw Error("cannot write labels file in " + dir);
    labels << std::fixed;
    labels.precision(4);
    for (std::size_t f = 0; f < clip.joints.size(); ++f)
        for (std::size_t j = 0; j < clip.joints[f].size(); ++j)
            labels << f << " " << j << " " << clip.joints[f][j].x << " " << clip.joints[f][j].y << " "
                   << (clip.visibility[j] ? 1 : 0) << "\n";
}

std::string dataset_manifest(const std::vector<std::uint64_t>& seeds, const std::string& config_hash) {
    std::string m = "config_hash " + config_hash + "\n";
    for (std::size_t i = 0; i < seeds.size(); ++i)
        m += "clip_" + std::to_string(i) + " seed " + std::to_string(seeds[i]) + "\n";
    return m;
}

#define TDMI_INSTANTIATE_SYNTH(T)                                                                   \
    template Tensor<T> encode_heatmaps(const std::vector<Point>&, const std::vector<bool>&, double, \
                                       int, int);                                                   \
    template std::vector<DecodedJoint> decode_heatmaps(const Tensor<T>&);                           \
    template Sample<T> prepare_sample(const SyntheticClip&, const ClipConfig&);                     \
    template std::vector<Sample<T>> build_dataset(std::uint64_t, int, const ClipConfig&);

TDMI_INSTANTIATE_SYNTH(float)
TDMI_INSTANTIATE_SYNTH(double)

} // namespace tdmi

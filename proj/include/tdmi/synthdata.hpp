#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tdmi/tensor.hpp"

namespace tdmi {

// Generator configuration. Frames are square grayscale images in [0,1].
struct ClipConfig {
    int joints = 5;
    int delta = 2;
    int image_size = 64; // must be divisible by 16
    int n_distractors = 3;
    double occlusion_prob = 0.0;
    double blur_prob = 0.0;
    double v_max = 2.0;     // max per-frame joint displacement (pixels)
    double heatmap_sigma = 2.0;

    int frames() const { return 2 * delta + 1; }
    int key_frame() const { return delta; }
};

struct Point {
    double x = 0, y = 0;
};

// A rendered clip: 2*delta+1 frames, per-frame joint locations, and the
// key-frame visibility flags (occluded joints are excluded from loss and
// metrics).
struct SyntheticClip {
    std::uint64_t seed = 0;
    int image_size = 0;
    std::vector<std::vector<float>> frames;   // [frames][S*S]
    std::vector<std::vector<Point>> joints;   // [frames][J]
    std::vector<bool> visibility;             // [J], key frame
};

SyntheticClip generate_clip(std::uint64_t seed, const ClipConfig& cfg);

// Axis-aligned box with the 25% center-preserving enlargement of the crop
// protocol.
struct BoxCrop {
    double x = 0, y = 0, w = 0, h = 0;

    BoxCrop enlarged(double factor = 1.25) const {
        return {x - 0.5 * (factor - 1.0) * w, y - 0.5 * (factor - 1.0) * h, factor * w, factor * h};
    }
};

// Key-frame joint bounding box, padded by the blob radius.
BoxCrop joint_bounding_box(const SyntheticClip& clip, double margin);

// Applies the same box to every frame: source pixels outside the image are
// zero, output is resampled to out_size x out_size.
std::vector<std::vector<float>> crop_sequence(const std::vector<std::vector<float>>& frames,
                                              int image_size, const BoxCrop& box, int out_size);

Point to_crop_frame(const Point& p, const BoxCrop& box, int out_size);
Point to_image_frame(const Point& p, const BoxCrop& box, int out_size);

// Ground-truth heatmaps: per visible joint an unnormalized Gaussian bump of
// peak 1.0 at the quantized joint location (heatmap resolution); invisible
// joints give all-zero maps.
template <typename T>
Tensor<T> encode_heatmaps(const std::vector<Point>& joints_hm, const std::vector<bool>& visibility,
                          double sigma, int h, int w);

struct DecodedJoint {
    double x = 0, y = 0;
    double confidence = 0;
};

// Argmax decoding with per-axis quarter-pixel refinement toward the larger
// neighbor; ties (and border columns/rows) leave the coordinate unrefined,
// and argmax ties resolve to the smallest row-major index.
template <typename T>
std::vector<DecodedJoint> decode_heatmaps(const Tensor<T>& heatmaps);

// A training/eval sample: cropped frames as tensors, joints in crop
// coordinates, ground-truth heatmaps at crop/4 resolution.
template <typename T>
struct Sample {
    std::vector<Tensor<T>> frames; // [1,1,S,S] each
    std::vector<Point> joints;     // key frame, crop coordinates
    std::vector<bool> visibility;
    Tensor<T> heatmaps;            // [1,J,S/4,S/4]
    Tensor<T> vis_mask;            // [1,J,S/4,S/4]: 1 on visible joints' maps
    int visible_pixels = 0;        // number of mask entries equal to 1
    int input_size = 0;
};

// Full preparation pipeline: box from the key-frame joints, 25% enlargement,
// crop of every frame, coordinate remap, heatmap encoding.
template <typename T>
Sample<T> prepare_sample(const SyntheticClip& clip, const ClipConfig& cfg);

template <typename T>
std::vector<Sample<T>> build_dataset(std::uint64_t base_seed, int count, const ClipConfig& cfg);

// Serialization for the `generate` subcommand: frames as binary PGM files
// plus a line-oriented label file per clip, and a dataset manifest listing
// seeds and the config hash.
void save_clip(const SyntheticClip& clip, const std::string& dir);
std::string dataset_manifest(const std::vector<std::uint64_t>& seeds, const std::string& config_hash);

} // namespace tdmi

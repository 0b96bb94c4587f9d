#pragma once

#include <vector>

#include "tdmi/tensor.hpp"

// Differentiable primitives. Every function computes the forward value,
// records a backward closure on the tape, and returns the output tensor.
// All tensors are dense row-major; feature maps are [N,C,H,W].
namespace tdmi::ops {

// ---- elementwise ----
template <typename T> Tensor<T> add(Tape<T>&, const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(Tape<T>&, const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(Tape<T>&, const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> neg(Tape<T>&, const Tensor<T>& x);
template <typename T> Tensor<T> scale(Tape<T>&, const Tensor<T>& x, T c);
template <typename T> Tensor<T> add_scalar(Tape<T>&, const Tensor<T>& x, T c);
template <typename T> Tensor<T> sigmoid(Tape<T>&, const Tensor<T>& x);
template <typename T> Tensor<T> leaky_relu(Tape<T>&, const Tensor<T>& x, T negative_slope);
template <typename T> Tensor<T> exp(Tape<T>&, const Tensor<T>& x);
template <typename T> Tensor<T> log(Tape<T>&, const Tensor<T>& x);
template <typename T> Tensor<T> softplus(Tape<T>&, const Tensor<T>& x);

// ---- reductions ----
template <typename T> Tensor<T> sum_all(Tape<T>&, const Tensor<T>& x);       // -> [1]
template <typename T> Tensor<T> mean_all(Tape<T>&, const Tensor<T>& x);      // -> [1]
template <typename T> Tensor<T> sum_rows(Tape<T>&, const Tensor<T>& x);      // [M,N] -> [M]
template <typename T> Tensor<T> global_avg_pool(Tape<T>&, const Tensor<T>& x); // [N,C,H,W] -> [N,C]

// ---- shape ----
template <typename T> Tensor<T> reshape(Tape<T>&, const Tensor<T>& x, Shape new_shape);
template <typename T> Tensor<T> concat_channels(Tape<T>&, const std::vector<Tensor<T>>& xs);
template <typename T> Tensor<T> slice_channels(Tape<T>&, const Tensor<T>& x, int c0, int c1);
template <typename T> Tensor<T> concat_rows(Tape<T>&, const std::vector<Tensor<T>>& xs);
template <typename T> Tensor<T> slice_rows(Tape<T>&, const Tensor<T>& x, int r0, int r1);

// Per-channel rescaling: out[n,c,:,:] = x[n,c,:,:] * s[n,c].
template <typename T> Tensor<T> channel_scale(Tape<T>&, const Tensor<T>& x, const Tensor<T>& s);

// ---- linear algebra ----
template <typename T> Tensor<T> matmul(Tape<T>&, const Tensor<T>& a, const Tensor<T>& b);    // [M,K]x[K,N]
template <typename T> Tensor<T> matmul_bt(Tape<T>&, const Tensor<T>& a, const Tensor<T>& b); // [M,K]x[N,K]^T
template <typename T> Tensor<T> add_rowvec(Tape<T>&, const Tensor<T>& x, const Tensor<T>& v);
template <typename T> Tensor<T> diag_mean(Tape<T>&, const Tensor<T>& s);            // [B,B] -> [1]
template <typename T> Tensor<T> rowwise_logsumexp(Tape<T>&, const Tensor<T>& s);    // [B,N] -> [B]

// ---- spatial ----
struct Conv2dSpec {
    int stride = 1;
    int pad = 0;
};

// Cross-correlation; output spatial dims = (H + 2*pad - kh)/stride + 1.
// Bias is optional (pass a default-constructed tensor to skip).
template <typename T>
Tensor<T> conv2d(Tape<T>&, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const Conv2dSpec& spec);

// Modulated deformable convolution (stride 1). Offsets hold per-tap (dy,dx)
// displacements as channels [2*kh*kw, Ho, Wo] (channel 2k = dy of tap k);
// mask holds per-tap scalars [kh*kw, Ho, Wo]. Out-of-bounds bilinear samples
// contribute zero.
template <typename T>
Tensor<T> deform_conv2d(Tape<T>&, const Tensor<T>& x, const Tensor<T>& offsets,
                        const Tensor<T>& mask, const Tensor<T>& w, const Tensor<T>& b, int pad);

// Samples x at fractional (y,x) locations given per output pixel:
// coords is [N,2,Ho,Wo] with channel 0 = y, channel 1 = x. Differentiable
// w.r.t. both x and coords; out-of-bounds samples contribute zero.
template <typename T>
Tensor<T> bilinear_sample(Tape<T>&, const Tensor<T>& x, const Tensor<T>& coords);

// Bilinear resize with border replication. Sampling locations are fixed by
// the shapes, so only d(out)/d(x) is propagated.
template <typename T>
Tensor<T> resize_bilinear(Tape<T>&, const Tensor<T>& x, int out_h, int out_w);

} // namespace tdmi::ops

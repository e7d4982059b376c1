#pragma once

#include <cstdint>
#include <vector>

#include "sahm/autograd.hpp"

// Differentiable operations on Graph nodes. Feature maps are C x H x W,
// matrices are rows x cols. Every op validates shapes and throws
// std::invalid_argument with the offending shapes.
namespace sahm::ops {

// Multiply-add accounting for the overhead report. Conv, deformable conv,
// matmul and attention add 2 * MACs while a counter is installed on the
// calling thread.
class FlopScope {
public:
    FlopScope();
    ~FlopScope();
    FlopScope(const FlopScope&) = delete;
    FlopScope& operator=(const FlopScope&) = delete;
    std::uint64_t flops() const { return flops_; }

private:
    std::uint64_t flops_ = 0;
    FlopScope* previous_ = nullptr;
    friend void count_flops(std::uint64_t);
};
void count_flops(std::uint64_t n);

// elementwise
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var scale_by(Var a, Var s); // s holds a single element
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a, double eps); // log(a + eps)
Var one_minus(Var a);
Var reciprocal(Var a);
Var leaky_relu(Var a, double slope);

// broadcasting
Var add_channel_bias(Var x, Var bias);         // x: C x ..., bias: C
Var broadcast_spatial(Var v, int h, int w);     // v: C or C x 1 -> C x h x w

// linear algebra
Var matmul(Var a, Var b);
Var transpose(Var a);

// shape
Var reshape(Var a, Shape shape);
Var concat(const std::vector<Var>& xs); // along axis 0
Var slice_rows(Var a, int begin, int end); // axis 0
Var gather_columns(Var a, const std::vector<int>& columns);
/// Inverse of gather_columns into a zero matrix `total` columns wide.
Var scatter_columns(Var a, const std::vector<int>& columns, int total);

/// C x H x W -> (C*p*p) x (H/p * W/p). Column j is the p x p patch at
/// row-major grid position j; rows run over (c, dy, dx).
Var patches_to_columns(Var x, int p);
Var columns_to_patches(Var m, int c, int h, int w, int p);

// reductions
Var sum(Var a);
Var mean(Var a);

// row-wise
Var softmax_rows(Var a);
Var normalize_rows(Var a, double eps); // a_r / (||a_r|| + eps)

// spatial
struct ConvSpec {
    int stride = 1;
    int pad_h = 0;
    int pad_w = 0;
    int dilation = 1;

    static ConvSpec same(int kernel, int dilation = 1)
    {
        int p = dilation * (kernel - 1) / 2;
        return {1, p, p, dilation};
    }
};

/// x: C x H x W, weight: O x C x kh x kw, bias: O or an invalid Var.
Var conv2d(Var x, Var weight, Var bias, ConvSpec spec);

/// 3x3 deformable convolution, stride 1, padding 1. offsets: 18 x H x W,
/// channel 2k holds the x displacement of tap k = 3 * ky + kx and channel
/// 2k + 1 its y displacement. Samples outside the map read zero.
Var deform_conv2d(Var x, Var offsets, Var weight, Var bias);

/// Half-pixel-centre bilinear resize with edge clamping.
Var resize_bilinear(Var x, int out_h, int out_w);

/// Non-overlapping k x k mean pooling.
Var avg_pool(Var x, int k);

/// Per-pixel normalization across channels with channel-wise gain and bias.
Var layer_norm_channels(Var x, Var gain, Var bias, double eps = 1e-5);

/// Single-head scaled dot-product attention inside non-overlapping
/// window x window tiles. q, k, v: C x H x W.
Var local_attention(Var q, Var k, Var v, int window);

// losses
Var bce_with_logits_sum(Var logits, const Tensor& target);
Var l1_mean(Var a, const Tensor& target);

// plain-tensor helpers
Tensor sigmoid(const Tensor& t);
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);
Tensor avg_pool(const Tensor& x, int k);

} // namespace sahm::ops

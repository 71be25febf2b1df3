#pragma once

#include "contrailseg/tape.hpp"

namespace contrailseg {

// Differentiable primitives. All take node ids on one tape and return the id
// of the recorded result. Tensors are NCHW unless stated otherwise.

// weight is [Cout, Cin/groups, kh, kw], bias is [Cout]. groups == Cin with
// Cout == Cin gives a depthwise convolution.
int conv2d(Tape& tp, int input, int weight, int bias, int stride, int padding, int groups = 1);

// x * sigmoid(beta * x) with a learnable scalar beta (1-element tensor).
int swish(Tape& tp, int x, int beta);

int sigmoid(Tape& tp, int x);
int relu(Tape& tp, int x);

// [N,C,H,W] -> [N,C,1,1]
int global_avg_pool(Tape& tp, int x);

// Bilinear upsample by an integer factor, sampling at aligned pixel centers;
// constant fields stay constant.
int upsample_bilinear(Tape& tp, int x, int factor);

int add(Tape& tp, int a, int b);
int mul(Tape& tp, int a, int b);

// x: [N,C,H,W], gate: [N,C,1,1]; scales every channel plane by its gate.
int mul_channel(Tape& tp, int x, int gate);

// Concatenate along the channel axis.
int concat_channels(Tape& tp, int a, int b);

int sum_all(Tape& tp, int x);
int mean_all(Tape& tp, int x);

// ca*a + cb*b + c0 on scalar nodes.
int affine2(Tape& tp, int a, int b, float ca, float cb, float c0);

float sigmoid_value(float x);

}  // namespace contrailseg

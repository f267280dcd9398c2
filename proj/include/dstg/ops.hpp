#pragma once

#include <vector>

#include "dstg/tensor.hpp"

namespace dstg::ops {

// Elementwise; operands must share a shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// 2-D matrix product: [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& a);        // subgradient at 0 is 0
Tensor sigmoid(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);  // 2-D only
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int start, int len);

// x: [C,...] plus one bias value per leading-axis channel.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

// Polynomial graph filtering of every (channel, timestep) frame:
//   out[c,t,:] = sum_k theta[c,t,k] * L^k x[c,t,:]
// applied by iterated mat-vec (L^k never materialized).
// x: [C,T,N], theta: [C,T,K], L: [N,N] symmetric.
Tensor spatial_gconv(const Tensor& x, const Tensor& theta, const Tensor& laplacian);

// 1-D convolution along the time axis with zero padding of (Q-1)/2 on both
// sides; Q must be odd so the time extent is preserved.
// z: [C_in,T,N], kernel: [C_in,C_out,Q] -> [C_out,T,N].
Tensor temporal_conv(const Tensor& z, const Tensor& kernel);

// 2-D convolution with zero same-padding (asymmetric when a kernel extent is
// even), preserving HxW. x: [C_in,H,W], kernel: [C_in,C_out,KH,KW] -> [C_out,H,W].
Tensor conv2d_same(const Tensor& x, const Tensor& kernel);

// L = I - D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij; rows with zero degree
// yield L_ii = 1 and zero off-diagonals. Differentiable in A.
Tensor normalized_laplacian(const Tensor& affinity);

// (A + A^T) / 2 for square A.
Tensor symmetrize(const Tensor& a);

}  // namespace dstg::ops

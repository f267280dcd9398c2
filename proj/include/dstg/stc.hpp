#pragma once

#include "dstg/init.hpp"
#include "dstg/tensor.hpp"

namespace dstg {

// One spatio-temporal graph convolution layer: every (channel, timestep)
// frame is filtered on the graph with its own polynomial coefficients, then a
// 1-D convolution fuses information across time. The time extent is
// preserved (odd Q, symmetric zero padding).
struct StcLayerParams {
    Tensor spatial_theta;    // C_in x T x K
    Tensor temporal_kernel;  // C_in x C_out x Q, Q odd
    Tensor bias;             // C_out; undefined when biases are disabled

    static StcLayerParams init(int c_in, int c_out, int t, int k, int q, Rng& rng, bool use_bias = true);
};

// Z[c,p,:] = x[c,p,:] filtered by theta[c,p,:] on the graph; shape unchanged.
Tensor spatial_stage(const Tensor& x, const StcLayerParams& params, const Tensor& laplacian);

// C_in x T x N -> C_out x T x N along the time axis.
Tensor temporal_stage(const Tensor& z, const StcLayerParams& params);

// temporal_stage(spatial_stage(x)) plus the per-channel bias when enabled.
Tensor stc_forward(const Tensor& x, const StcLayerParams& params, const Tensor& laplacian);

}  // namespace dstg

#include "dstg/stc.hpp"

#include "dstg/ops.hpp"

namespace dstg {

StcLayerParams StcLayerParams::init(int c_in, int c_out, int t, int k, int q, Rng& rng, bool use_bias) {
    if (q % 2 == 0) throw ValidationError("stc layer: temporal window Q must be odd, got " + std::to_string(q));
    if (k < 1) throw ValidationError("stc layer: polynomial order K must be >= 1");
    StcLayerParams p;
    p.spatial_theta = uniform_param({c_in, t, k}, k, 1, rng);
    p.temporal_kernel = uniform_param({c_in, c_out, q}, c_in * q, c_out * q, rng);
    if (use_bias) p.bias = zero_param({c_out});
    return p;
}

Tensor spatial_stage(const Tensor& x, const StcLayerParams& params, const Tensor& laplacian) {
    return ops::spatial_gconv(x, params.spatial_theta, laplacian);
}

Tensor temporal_stage(const Tensor& z, const StcLayerParams& params) {
    return ops::temporal_conv(z, params.temporal_kernel);
}

Tensor stc_forward(const Tensor& x, const StcLayerParams& params, const Tensor& laplacian) {
    Tensor out = temporal_stage(spatial_stage(x, params, laplacian), params);
    if (params.bias.defined()) out = ops::add_channel_bias(out, params.bias);
    return out;
}

}  // namespace dstg

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dstg/stc.hpp"
#include "dstg/tensor.hpp"

namespace dstg {

// Architecture hyperparameters. The defaults follow the reference
// configuration: three STC layers at 8/16/32 channels, polynomial order 5,
// temporal window 5, and three [1,N]/[N,1] convolution pairs at 16 channels
// in the graph stream.
struct ModelConfig {
    int n_nodes = 0;
    int c0 = 1;
    int t_p = 0;
    int t_f = 0;
    int k_order = 5;
    int q_window = 5;
    std::vector<int> stc_channels = {8, 16, 32};
    int mg_pairs = 3;
    int mg_channels = 16;
    int aux_hidden = 32;
    int aux_channels = 1;  // C_a of the reshaped embedding
    int tod_slots = 96;
    bool has_weather = true;

    // Ablation switches.
    bool use_aux = true;
    bool use_dynamic_graph = true;
    bool use_two_step = true;
    bool use_bias = true;

    // Per-element mean normalization of the loss terms; false keeps raw
    // squared/absolute norms.
    bool loss_mean_norm = true;

    void validate() const;
    // Canonical string of every shape-relevant field; stored in checkpoints
    // and compared on load.
    std::string fingerprint() const;
};

// One-hot auxiliary inputs at the window anchor. Weather is optional: when
// absent the field is all zeros.
struct AuxiliaryCodes {
    std::vector<double> time_of_day;
    std::vector<double> day_of_week;  // length 7
    std::vector<double> weather;      // length 2 (good/bad)
    bool weather_present = false;

    void validate() const;
    static AuxiliaryCodes make(int tod_slots, int tod, int dow, int weather_code = -1);
};

// Two fully connected layers turning the concatenated one-hots into a
// C_a x T x N feature block for channel-wise concatenation.
struct AuxEmbedNet {
    Tensor w1, b1, w2, b2;
    int in_dim = 0, t_out = 0, n = 0, c_a = 1;

    static AuxEmbedNet init(int in_dim, int hidden, int c_a, int t_out, int n, Rng& rng);
    Tensor forward(const AuxiliaryCodes& codes) const;
};

// M_S1 / M_S2: stacked STC layers with ReLU between and after, then a
// per-node linear head over the (channel x time) fibers, ReLU'd.
struct FlowStreamNet {
    std::vector<StcLayerParams> layers;
    Tensor head_w, head_b;
    AuxEmbedNet aux;  // in_dim == 0 when auxiliary embedding is disabled
    int c_in = 0, t_in = 0, out_frames = 0, c0 = 0, n = 0;

    static FlowStreamNet init(const ModelConfig& cfg, int c_in_flow, int t_in, int out_frames, Rng& rng);
    // x: c_in_flow x t_in x N. codes may be null when aux is disabled.
    Tensor forward(const Tensor& x, const AuxiliaryCodes* codes, const Tensor& laplacian) const;
};

// M_G: pairs of [1,N] and [N,1] convolutions over the T_P x N x N affinity
// history, a 1x1 head, then symmetrization and a sigmoid so the output is
// always a legal affinity matrix.
struct GraphStreamNet {
    std::vector<Tensor> kernels;
    std::vector<Tensor> biases;
    Tensor head_kernel, head_bias;
    int n = 0;

    static GraphStreamNet init(const ModelConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& affinity_history) const;  // T_P x N x N -> N x N
};

struct PredictionBundle {
    Tensor close_future;        // C0 x (T_F-1) x N; undefined when T_F == 1 or one-step
    Tensor target;              // C0 x N
    Tensor predicted_affinity;  // N x N; undefined for static-graph configs
};

struct LossParts {
    Tensor two_step;
    Tensor dynamic;  // undefined for static-graph configs
    Tensor total;
    PredictionBundle bundle;
};

// Loss terms. For the degenerate horizon (no close-future predictions) pass
// undefined yhat/y and the first term vanishes by construction.
Tensor two_step_loss(const Tensor& yhat, const Tensor& y, const Tensor& fhat_target, const Tensor& f_target,
                     bool mean_norm = true);
Tensor dynamic_graph_loss(const Tensor& ahat, const Tensor& abar, bool mean_norm = true);
Tensor total_loss(const Tensor& two_step, const Tensor& dynamic);

class Model {
public:
    Model(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    // Static-graph configs must be given their Laplacian before predicting.
    void set_static_laplacian(Tensor laplacian);
    const Tensor& static_laplacian() const { return static_laplacian_; }

    // Graph stream alone (used for pretraining); requires use_dynamic_graph.
    Tensor predict_affinity(const Tensor& affinity_history);

    PredictionBundle predict(const Tensor& x, const Tensor& affinity_history, const AuxiliaryCodes& codes);

    // Full per-window loss; y/abar may be undefined in degenerate configs.
    LossParts loss(const Tensor& x, const Tensor& affinity_history, const AuxiliaryCodes& codes, const Tensor& y,
                   const Tensor& f_target, const Tensor& abar);

    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    std::vector<Tensor> parameters() const;
    std::vector<Tensor> graph_parameters() const;  // Theta_G
    std::vector<Tensor> flow_parameters() const;   // Theta_S1 + Theta_S2 (+ aux)

    GraphStreamNet& graph_stream() { return mg_; }
    FlowStreamNet& stream1() { return ms1_; }
    FlowStreamNet& stream2() { return ms2_; }

private:
    ModelConfig cfg_;
    GraphStreamNet mg_;
    FlowStreamNet ms1_, ms2_;
    bool has_ms1_ = false;
    Tensor static_laplacian_;
};

}  // namespace dstg

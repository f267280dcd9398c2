#include "dstg/model.hpp"

#include <cmath>
#include <sstream>

#include "dstg/ops.hpp"

namespace dstg {

void ModelConfig::validate() const {
    if (n_nodes < 2) throw ValidationError("model config: need at least 2 nodes");
    if (c0 < 1) throw ValidationError("model config: c0 must be >= 1");
    if (t_p < 1 || t_f < 1) throw ValidationError("model config: T_P and T_F must be >= 1");
    if (k_order < 1) throw ValidationError("model config: K must be >= 1");
    if (q_window < 1 || q_window % 2 == 0) throw ValidationError("model config: Q must be odd and >= 1");
    if (stc_channels.empty()) throw ValidationError("model config: stc_channels must be nonempty");
    if (mg_pairs < 1 || mg_channels < 1) throw ValidationError("model config: graph stream needs >= 1 pair/channel");
    if (tod_slots < 1) throw ValidationError("model config: tod_slots must be >= 1");
}

std::string ModelConfig::fingerprint() const {
    std::ostringstream os;
    os << "v1;N=" << n_nodes << ";C0=" << c0 << ";TP=" << t_p << ";TF=" << t_f << ";K=" << k_order
       << ";Q=" << q_window << ";ch=";
    for (size_t i = 0; i < stc_channels.size(); ++i) os << (i ? "," : "") << stc_channels[i];
    os << ";mg=" << mg_pairs << "x" << mg_channels << ";aux=" << (use_aux ? 1 : 0) << ";auxh=" << aux_hidden
       << ";ca=" << aux_channels << ";tod=" << tod_slots << ";wx=" << (has_weather ? 1 : 0)
       << ";dg=" << (use_dynamic_graph ? 1 : 0) << ";ts=" << (use_two_step ? 1 : 0) << ";bias=" << (use_bias ? 1 : 0);
    return os.str();
}

namespace {

void check_one_hot(const std::vector<double>& v, const char* field, bool may_be_zero) {
    double s = 0.0;
    for (double x : v) s += x;
    if (may_be_zero && std::fabs(s) <= 1e-12) return;
    if (std::fabs(s - 1.0) > 1e-12)
        throw ValidationError(std::string("auxiliary codes: ") + field + " one-hot sums to " + std::to_string(s));
}

}  // namespace

void AuxiliaryCodes::validate() const {
    if (day_of_week.size() != 7) throw ValidationError("auxiliary codes: day_of_week must have length 7");
    check_one_hot(time_of_day, "time_of_day", false);
    check_one_hot(day_of_week, "day_of_week", false);
    if (!weather.empty()) check_one_hot(weather, "weather", !weather_present);
    else if (weather_present)
        throw ValidationError("auxiliary codes: weather marked present but empty");
}

AuxiliaryCodes AuxiliaryCodes::make(int tod_slots, int tod, int dow, int weather_code) {
    if (tod < 0 || tod >= tod_slots) throw ValidationError("auxiliary codes: time-of-day slot out of range");
    if (dow < 0 || dow >= 7) throw ValidationError("auxiliary codes: day-of-week out of range");
    AuxiliaryCodes c;
    c.time_of_day.assign(static_cast<size_t>(tod_slots), 0.0);
    c.time_of_day[static_cast<size_t>(tod)] = 1.0;
    c.day_of_week.assign(7, 0.0);
    c.day_of_week[static_cast<size_t>(dow)] = 1.0;
    c.weather.assign(2, 0.0);
    if (weather_code >= 0) {
        if (weather_code > 1) throw ValidationError("auxiliary codes: weather code out of range");
        c.weather[static_cast<size_t>(weather_code)] = 1.0;
        c.weather_present = true;
    }
    return c;
}

AuxEmbedNet AuxEmbedNet::init(int in_dim, int hidden, int c_a, int t_out, int n, Rng& rng) {
    AuxEmbedNet net;
    net.in_dim = in_dim;
    net.t_out = t_out;
    net.n = n;
    net.c_a = c_a;
    const int out_dim = c_a * t_out * n;
    net.w1 = uniform_param({hidden, in_dim}, in_dim, hidden, rng);
    net.b1 = zero_param({hidden});
    net.w2 = uniform_param({out_dim, hidden}, hidden, out_dim, rng);
    net.b2 = zero_param({out_dim});
    return net;
}

Tensor AuxEmbedNet::forward(const AuxiliaryCodes& codes) const {
    codes.validate();
    std::vector<double> in;
    in.reserve(codes.time_of_day.size() + codes.day_of_week.size() + codes.weather.size());
    in.insert(in.end(), codes.time_of_day.begin(), codes.time_of_day.end());
    in.insert(in.end(), codes.day_of_week.begin(), codes.day_of_week.end());
    in.insert(in.end(), codes.weather.begin(), codes.weather.end());
    if (static_cast<int>(in.size()) != in_dim)
        throw ShapeError("aux embed: code vector length " + std::to_string(in.size()) + " does not match network input " +
                         std::to_string(in_dim));
    Tensor x = Tensor::from_values({in_dim, 1}, std::move(in));
    Tensor h = ops::relu(ops::add_channel_bias(ops::matmul(w1, x), b1));
    Tensor out = ops::add_channel_bias(ops::matmul(w2, h), b2);
    return ops::reshape(out, {c_a, t_out, n});
}

FlowStreamNet FlowStreamNet::init(const ModelConfig& cfg, int c_in_flow, int t_in, int out_frames, Rng& rng) {
    FlowStreamNet net;
    net.t_in = t_in;
    net.out_frames = out_frames;
    net.c0 = cfg.c0;
    net.n = cfg.n_nodes;
    net.c_in = c_in_flow + (cfg.use_aux ? cfg.aux_channels : 0);
    if (cfg.use_aux) {
        const int code_dim = cfg.tod_slots + 7 + (cfg.has_weather ? 2 : 0);
        net.aux = AuxEmbedNet::init(code_dim, cfg.aux_hidden, cfg.aux_channels, t_in, cfg.n_nodes, rng);
    }
    int c_prev = net.c_in;
    for (int c_out : cfg.stc_channels) {
        net.layers.push_back(StcLayerParams::init(c_prev, c_out, t_in, cfg.k_order, cfg.q_window, rng, cfg.use_bias));
        c_prev = c_out;
    }
    const int fiber = c_prev * t_in;
    const int head_out = cfg.c0 * out_frames;
    net.head_w = uniform_param({head_out, fiber}, fiber, head_out, rng);
    net.head_b = zero_param({head_out});
    return net;
}

Tensor FlowStreamNet::forward(const Tensor& x, const AuxiliaryCodes* codes, const Tensor& laplacian) const {
    if (x.rank() != 3 || x.dim(1) != t_in || x.dim(2) != n)
        throw ShapeError("flow stream: input " + shape_to_string(x.shape()) + " does not match expected [*," +
                         std::to_string(t_in) + "," + std::to_string(n) + "]");
    Tensor h = x;
    if (aux.in_dim > 0) {
        if (!codes) throw ValidationError("flow stream: auxiliary codes required by this configuration");
        h = ops::concat({h, aux.forward(*codes)}, 0);
    }
    if (h.dim(0) != c_in)
        throw ShapeError("flow stream: channel count " + std::to_string(h.dim(0)) + " does not match network input " +
                         std::to_string(c_in));
    for (const StcLayerParams& layer : layers) h = ops::relu(stc_forward(h, layer, laplacian));
    const int c_last = h.dim(0);
    Tensor fibers = ops::reshape(h, {c_last * t_in, n});
    Tensor out = ops::relu(ops::add_channel_bias(ops::matmul(head_w, fibers), head_b));
    return ops::reshape(out, {c0, out_frames, n});
}

GraphStreamNet GraphStreamNet::init(const ModelConfig& cfg, Rng& rng) {
    GraphStreamNet net;
    net.n = cfg.n_nodes;
    const int n = cfg.n_nodes;
    int c_prev = cfg.t_p;
    for (int pair = 0; pair < cfg.mg_pairs; ++pair) {
        net.kernels.push_back(
            uniform_param({c_prev, cfg.mg_channels, 1, n}, c_prev * n, cfg.mg_channels * n, rng));
        net.biases.push_back(zero_param({cfg.mg_channels}));
        net.kernels.push_back(
            uniform_param({cfg.mg_channels, cfg.mg_channels, n, 1}, cfg.mg_channels * n, cfg.mg_channels * n, rng));
        net.biases.push_back(zero_param({cfg.mg_channels}));
        c_prev = cfg.mg_channels;
    }
    net.head_kernel = uniform_param({cfg.mg_channels, 1, 1, 1}, cfg.mg_channels, 1, rng);
    net.head_bias = zero_param({1});
    return net;
}

Tensor GraphStreamNet::forward(const Tensor& affinity_history) const {
    if (affinity_history.rank() != 3 || affinity_history.dim(1) != n || affinity_history.dim(2) != n)
        throw ShapeError("graph stream: expected [T_P," + std::to_string(n) + "," + std::to_string(n) + "], got " +
                         shape_to_string(affinity_history.shape()));
    Tensor h = affinity_history;
    for (size_t i = 0; i < kernels.size(); ++i)
        h = ops::relu(ops::add_channel_bias(ops::conv2d_same(h, kernels[i]), biases[i]));
    h = ops::add_channel_bias(ops::conv2d_same(h, head_kernel), head_bias);
    return ops::sigmoid(ops::symmetrize(ops::reshape(h, {n, n})));
}

Tensor two_step_loss(const Tensor& yhat, const Tensor& y, const Tensor& fhat_target, const Tensor& f_target,
                     bool mean_norm) {
    if (fhat_target.shape() != f_target.shape())
        throw ShapeError("two_step_loss: target shapes differ, " + shape_to_string(fhat_target.shape()) + " vs " +
                         shape_to_string(f_target.shape()));
    auto sq_norm = [mean_norm](const Tensor& d) {
        return mean_norm ? ops::mean(ops::square(d)) : ops::sum(ops::square(d));
    };
    Tensor target_term = sq_norm(ops::sub(fhat_target, f_target));
    if (!yhat.defined() && !y.defined()) return target_term;
    if (!yhat.defined() || !y.defined())
        throw ShapeError("two_step_loss: close-future prediction and ground truth must both be present or absent");
    if (yhat.shape() != y.shape())
        throw ShapeError("two_step_loss: close-future shapes differ, " + shape_to_string(yhat.shape()) + " vs " +
                         shape_to_string(y.shape()));
    return ops::add(sq_norm(ops::sub(yhat, y)), target_term);
}

Tensor dynamic_graph_loss(const Tensor& ahat, const Tensor& abar, bool mean_norm) {
    if (ahat.shape() != abar.shape())
        throw ShapeError("dynamic_graph_loss: shapes differ, " + shape_to_string(ahat.shape()) + " vs " +
                         shape_to_string(abar.shape()));
    Tensor d = ops::abs(ops::sub(ahat, abar));
    return mean_norm ? ops::mean(d) : ops::sum(d);
}

Tensor total_loss(const Tensor& two_step, const Tensor& dynamic) {
    return ops::add(two_step, dynamic);
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    if (cfg_.use_dynamic_graph) mg_ = GraphStreamNet::init(cfg_, rng);
    has_ms1_ = cfg_.use_two_step && cfg_.t_f > 1;
    if (has_ms1_) ms1_ = FlowStreamNet::init(cfg_, cfg_.c0, cfg_.t_p, cfg_.t_f - 1, rng);
    const int t_in2 = has_ms1_ ? cfg_.t_p + cfg_.t_f - 1 : cfg_.t_p;
    ms2_ = FlowStreamNet::init(cfg_, cfg_.c0, t_in2, 1, rng);
}

void Model::set_static_laplacian(Tensor laplacian) {
    if (laplacian.rank() != 2 || laplacian.dim(0) != cfg_.n_nodes || laplacian.dim(1) != cfg_.n_nodes)
        throw ShapeError("static laplacian: expected [" + std::to_string(cfg_.n_nodes) + "," +
                         std::to_string(cfg_.n_nodes) + "], got " + shape_to_string(laplacian.shape()));
    static_laplacian_ = std::move(laplacian);
}

Tensor Model::predict_affinity(const Tensor& affinity_history) {
    if (!cfg_.use_dynamic_graph) throw ValidationError("predict_affinity: dynamic graph disabled in this config");
    return mg_.forward(affinity_history);
}

PredictionBundle Model::predict(const Tensor& x, const Tensor& affinity_history, const AuxiliaryCodes& codes) {
    if (x.rank() != 3 || x.dim(0) != cfg_.c0 || x.dim(1) != cfg_.t_p || x.dim(2) != cfg_.n_nodes)
        throw ShapeError("predict: flow history " + shape_to_string(x.shape()) + " does not match config [" +
                         std::to_string(cfg_.c0) + "," + std::to_string(cfg_.t_p) + "," +
                         std::to_string(cfg_.n_nodes) + "]");
    PredictionBundle bundle;
    Tensor lap;
    if (cfg_.use_dynamic_graph) {
        bundle.predicted_affinity = mg_.forward(affinity_history);
        lap = ops::normalized_laplacian(bundle.predicted_affinity);
    } else {
        if (!static_laplacian_.defined())
            throw ValidationError("predict: static-graph config requires set_static_laplacian before use");
        lap = static_laplacian_;
    }
    const AuxiliaryCodes* cp = cfg_.use_aux ? &codes : nullptr;
    Tensor step2_in = x;
    if (has_ms1_) {
        bundle.close_future = ms1_.forward(x, cp, lap);
        step2_in = ops::concat({x, bundle.close_future}, 1);
    }
    bundle.target = ops::reshape(ms2_.forward(step2_in, cp, lap), {cfg_.c0, cfg_.n_nodes});
    return bundle;
}

LossParts Model::loss(const Tensor& x, const Tensor& affinity_history, const AuxiliaryCodes& codes, const Tensor& y,
                      const Tensor& f_target, const Tensor& abar) {
    LossParts parts;
    parts.bundle = predict(x, affinity_history, codes);
    Tensor yhat = has_ms1_ ? parts.bundle.close_future : Tensor();
    Tensor ytruth = has_ms1_ ? y : Tensor();
    parts.two_step = two_step_loss(yhat, ytruth, parts.bundle.target, f_target, cfg_.loss_mean_norm);
    if (cfg_.use_dynamic_graph) {
        if (!abar.defined()) throw ValidationError("loss: dynamic-graph config needs the average-affinity target");
        parts.dynamic = dynamic_graph_loss(parts.bundle.predicted_affinity, abar, cfg_.loss_mean_norm);
        parts.total = total_loss(parts.two_step, parts.dynamic);
    } else {
        parts.total = parts.two_step;
    }
    return parts;
}

namespace {

void add_flow_params(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                     const FlowStreamNet& net) {
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const std::string base = prefix + ".stc" + std::to_string(i);
        out.emplace_back(base + ".spatial_theta", net.layers[i].spatial_theta);
        out.emplace_back(base + ".temporal_kernel", net.layers[i].temporal_kernel);
        if (net.layers[i].bias.defined()) out.emplace_back(base + ".bias", net.layers[i].bias);
    }
    out.emplace_back(prefix + ".head.weight", net.head_w);
    out.emplace_back(prefix + ".head.bias", net.head_b);
    if (net.aux.in_dim > 0) {
        out.emplace_back(prefix + ".aux.fc1.weight", net.aux.w1);
        out.emplace_back(prefix + ".aux.fc1.bias", net.aux.b1);
        out.emplace_back(prefix + ".aux.fc2.weight", net.aux.w2);
        out.emplace_back(prefix + ".aux.fc2.bias", net.aux.b2);
    }
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    if (cfg_.use_dynamic_graph) {
        for (size_t i = 0; i < mg_.kernels.size(); ++i) {
            out.emplace_back("graph.conv" + std::to_string(i) + ".kernel", mg_.kernels[i]);
            out.emplace_back("graph.conv" + std::to_string(i) + ".bias", mg_.biases[i]);
        }
        out.emplace_back("graph.head.kernel", mg_.head_kernel);
        out.emplace_back("graph.head.bias", mg_.head_bias);
    }
    if (has_ms1_) add_flow_params(out, "flow1", ms1_);
    add_flow_params(out, "flow2", ms2_);
    return out;
}

std::vector<Tensor> Model::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

std::vector<Tensor> Model::graph_parameters() const {
    std::vector<Tensor> out;
    if (!cfg_.use_dynamic_graph) return out;
    for (const Tensor& t : mg_.kernels) out.push_back(t);
    for (const Tensor& t : mg_.biases) out.push_back(t);
    out.push_back(mg_.head_kernel);
    out.push_back(mg_.head_bias);
    return out;
}

std::vector<Tensor> Model::flow_parameters() const {
    std::vector<std::pair<std::string, Tensor>> named;
    if (has_ms1_) add_flow_params(named, "flow1", ms1_);
    add_flow_params(named, "flow2", ms2_);
    std::vector<Tensor> out;
    for (auto& [name, t] : named) out.push_back(t);
    return out;
}

}  // namespace dstg

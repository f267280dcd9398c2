#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dstg/graph.hpp"
#include "dstg/model.hpp"
#include "dstg/tensor.hpp"

namespace dstg {

// Dataset description supplied by the run config. sigma <= 0 selects the
// default: the median finite off-diagonal travel time of the training split.
struct DataSchema {
    int n_nodes = 0;
    int c0 = 1;
    int slot_minutes = 15;
    double train_frac = 0.7;
    double val_frac = 0.1;
    double sigma = 0.0;
    bool zero_affinity_diagonal = false;

    void validate() const;
    int tod_slots() const { return 1440 / slot_minutes; }
};

struct TrafficSeries {
    int n_nodes = 0, c0 = 1, slot_minutes = 0;
    std::vector<std::int64_t> timestamps;  // strictly increasing, uniform
    std::vector<double> volumes;           // [step][channel][node]

    int steps() const { return static_cast<int>(timestamps.size()); }
    double at(int step, int c, int n) const {
        return volumes[(static_cast<size_t>(step) * c0 + c) * n_nodes + n];
    }
    double& at(int step, int c, int n) { return volumes[(static_cast<size_t>(step) * c0 + c) * n_nodes + n]; }
};

struct TravelTimeSeries {
    int n_nodes = 0, slot_minutes = 0;
    std::vector<std::int64_t> timestamps;
    std::vector<double> seconds;  // [step][from][to]

    int steps() const { return static_cast<int>(timestamps.size()); }
    double at(int step, int i, int j) const {
        return seconds[(static_cast<size_t>(step) * n_nodes + i) * n_nodes + j];
    }
};

struct LoadReport {
    std::int64_t volume_cells_total = 0, volume_cells_missing = 0;
    std::int64_t traveltime_cells_total = 0, traveltime_cells_missing = 0;
    std::vector<std::int64_t> volume_missing_per_cell;      // [channel][node]
    std::vector<std::int64_t> traveltime_missing_per_cell;  // [from][to]
    int inserted_steps = 0;
    int unreachable_pairs = 0;

    double volume_missing_fraction() const {
        return volume_cells_total ? static_cast<double>(volume_cells_missing) / volume_cells_total : 0.0;
    }
    double traveltime_missing_fraction() const {
        return traveltime_cells_total ? static_cast<double>(traveltime_cells_missing) / traveltime_cells_total : 0.0;
    }
};

// Reads the delimited volume and travel-time files (header row, RFC 3339
// timestamps), sorts by timestamp, validates spacing, and fills missing
// cells by last observation carried forward. Gaps of up to 3 slots are
// reconstructed; larger gaps are hard errors. Pairs never observed in the
// travel-time file become unreachable: 10x the largest finite observed time.
std::pair<TrafficSeries, TravelTimeSeries> load_series(const std::string& volume_file,
                                                       const std::string& traveltime_file, const DataSchema& schema,
                                                       LoadReport* report = nullptr);

// Per-(channel, node) min-max statistics from the training split.
struct NormStats {
    int c0 = 0, n_nodes = 0;
    std::vector<double> minimum;   // [channel][node]
    std::vector<double> range;     // 0 for constant cells
    std::vector<std::uint8_t> zero_range;

    double normalize_value(int c, int n, double v) const;
    double denormalize_value(int c, int n, double v) const;
    Tensor min_tensor() const { return Tensor::from_values({c0, n_nodes}, minimum); }
    Tensor range_tensor() const { return Tensor::from_values({c0, n_nodes}, range); }
    static NormStats from_tensors(const Tensor& minimum, const Tensor& range);
};

struct SplitBounds {
    int train_end = 0;  // steps [0, train_end)
    int val_end = 0;    // steps [train_end, val_end); test = [val_end, steps)
};
SplitBounds split_by_time(int steps, double train_frac, double val_frac);

NormStats compute_norm_stats(const TrafficSeries& series, int train_end);
TrafficSeries normalize(const TrafficSeries& series, const NormStats& stats);

// Per-step affinity matrices from the travel-time series.
std::vector<Tensor> affinity_series(const TravelTimeSeries& times, double sigma, bool zero_diagonal = false);
double median_offdiag_travel_time(const TravelTimeSeries& times, int train_end);

// One supervised sample anchored at absolute step t.
struct TrainingWindow {
    int anchor = 0;
    Tensor x;         // C0 x T_P x N normalized past flows
    Tensor s;         // T_P x N x N past affinities
    Tensor y;         // C0 x (T_F-1) x N close-future targets; undefined when T_F == 1
    Tensor f_target;  // C0 x N frame at t + T_F
    Tensor abar;      // N x N mean affinity over [t-T_P+1, t+T_F]
    AuxiliaryCodes codes;
};

std::vector<TrainingWindow> make_windows(const TrafficSeries& normalized, const std::vector<Tensor>& affinities,
                                         int t_p, int t_f, int stride, int tod_slots, int first_anchor = -1,
                                         int last_anchor = -1);

// Synthetic regime-switching traffic. Flows diffuse over the active regime's
// hidden graph with a daily sinusoidal injection (weekends damped) and
// seeded noise; travel times are the regime's hidden matrix plus noise.
struct SynthConfig {
    int n_nodes = 16;
    int steps = 2000;
    int regime_period = 250;  // >= steps means the regime never switches
    std::uint64_t seed = 1;
    int c0 = 1;
    int slot_minutes = 15;
    std::string start_time = "2024-01-01T00:00:00Z";  // a Monday
    double diffusion_alpha = 0.45;
    double leak = 0.1;
    double load_amplitude = 3.0;
    double load_floor = 1.2;  // baseline multiple of the amplitude
    double weekend_factor = 0.6;
    double flow_noise = 0.0;        // std dev of additive flow noise
    double travel_time_noise = 0.0; // std dev (seconds) on observed travel times
    double near_seconds = 150.0;
    double far_seconds = 2400.0;
    double sigma = 300.0;  // intended affinity scale; echoed into the schema

    void validate() const;
};

struct SynthData {
    TrafficSeries flows;
    TravelTimeSeries times;
    std::vector<int> regime_labels;                 // per step
    std::vector<std::vector<double>> regime_times;  // hidden noise-free N x N per regime
    std::vector<double> injection;                  // per (channel, node) profile u
    std::vector<double> loads;                      // [step][channel] injection scale s_c(k)
    double diffusion_alpha = 0.0, leak = 0.0;
    double sigma = 0.0;
};

SynthData synth_generate(const SynthConfig& cfg);

// File emission in the loader's formats (volumes, travel times, regimes).
void write_synth_files(const SynthData& data, const std::string& volume_file, const std::string& traveltime_file,
                       const std::string& regime_file);

}  // namespace dstg

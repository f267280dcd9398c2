#include "dstg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "dstg/timeutil.hpp"

namespace dstg {

namespace {
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
}

void DataSchema::validate() const {
    if (n_nodes < 2) throw ValidationError("schema: need at least 2 nodes");
    if (c0 < 1) throw ValidationError("schema: c0 must be >= 1");
    if (slot_minutes < 1 || 1440 % slot_minutes != 0)
        throw ValidationError("schema: slot_length must divide a day, got " + std::to_string(slot_minutes));
    if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac >= 1.0)
        throw ValidationError("schema: split fractions must satisfy 0 < train, 0 <= val, train+val < 1");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        size_t a = field.find_first_not_of(" \t\r");
        size_t b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    return out;
}

struct RawRow {
    std::int64_t ts;
    int a, b;  // (node, channel) or (from, to)
    double value;
};

std::vector<RawRow> read_rows(const std::string& path, size_t expect_cols, const char* what) {
    std::ifstream in(path);
    if (!in) throw ValidationError(std::string(what) + " file: cannot open " + path);
    std::vector<RawRow> rows;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields.empty() || fields[0] != "timestamp")
                throw ValidationError(std::string(what) + " file: line 1 must be a header starting with 'timestamp'");
            header_seen = true;
            continue;
        }
        if (fields.size() != expect_cols)
            throw ValidationError(std::string(what) + " file line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(expect_cols) + " columns, got " + std::to_string(fields.size()));
        RawRow r{};
        try {
            r.ts = parse_rfc3339(fields[0]);
            r.a = std::stoi(fields[1]);
            r.b = std::stoi(fields[2]);
            size_t consumed = 0;
            r.value = std::stod(fields[3], &consumed);
            if (consumed != fields[3].size()) throw std::invalid_argument("trailing characters");
        } catch (const ValidationError&) {
            throw ValidationError(std::string(what) + " file line " + std::to_string(lineno) + ": bad timestamp '" +
                                  fields[0] + "'");
        } catch (const std::exception&) {
            throw ValidationError(std::string(what) + " file line " + std::to_string(lineno) + ": unparsable row");
        }
        if (!std::isfinite(r.value))
            throw ValidationError(std::string(what) + " file line " + std::to_string(lineno) + ": non-finite value");
        rows.push_back(r);
    }
    if (!header_seen) throw ValidationError(std::string(what) + " file: " + path + " is empty");
    return rows;
}

// Collects the union of observed timestamps, checks grid alignment and gap
// size, and returns the gap-filled timestamp axis.
std::vector<std::int64_t> build_time_axis(std::vector<std::int64_t> observed, int slot_minutes, const char* what,
                                          int* inserted) {
    std::sort(observed.begin(), observed.end());
    observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
    if (observed.empty()) throw ValidationError(std::string(what) + " file: no data rows");
    const std::int64_t slot = static_cast<std::int64_t>(slot_minutes) * 60;
    std::vector<std::int64_t> axis;
    axis.push_back(observed[0]);
    for (size_t i = 1; i < observed.size(); ++i) {
        const std::int64_t diff = observed[i] - observed[i - 1];
        if (diff % slot != 0)
            throw ValidationError(std::string(what) + ": timestamp " + format_rfc3339(observed[i]) +
                                  " is not on the slot grid");
        const std::int64_t gap = diff / slot;
        if (gap > 3)
            throw ValidationError(std::string(what) + ": timestamp gap of " + std::to_string(gap) + " slots between " +
                                  format_rfc3339(observed[i - 1]) + " and " + format_rfc3339(observed[i]) +
                                  " exceeds 3");
        for (std::int64_t g = 1; g < gap; ++g) {
            axis.push_back(observed[i - 1] + g * slot);
            if (inserted) ++*inserted;
        }
        axis.push_back(observed[i]);
    }
    return axis;
}

}  // namespace

std::pair<TrafficSeries, TravelTimeSeries> load_series(const std::string& volume_file,
                                                       const std::string& traveltime_file, const DataSchema& schema,
                                                       LoadReport* report) {
    schema.validate();
    const int n = schema.n_nodes, c0 = schema.c0;
    LoadReport local;
    LoadReport& rep = report ? *report : local;

    auto vol_rows = read_rows(volume_file, 4, "volume");
    auto tt_rows = read_rows(traveltime_file, 4, "travel-time");

    std::vector<std::int64_t> observed;
    for (const auto& r : vol_rows) observed.push_back(r.ts);
    for (const auto& r : tt_rows) observed.push_back(r.ts);
    auto axis = build_time_axis(std::move(observed), schema.slot_minutes, "series", &rep.inserted_steps);
    const int steps = static_cast<int>(axis.size());
    std::map<std::int64_t, int> step_of;
    for (int i = 0; i < steps; ++i) step_of[axis[static_cast<size_t>(i)]] = i;

    TrafficSeries flows;
    flows.n_nodes = n;
    flows.c0 = c0;
    flows.slot_minutes = schema.slot_minutes;
    flows.timestamps = axis;
    flows.volumes.assign(static_cast<size_t>(steps) * c0 * n, kMissing);

    for (const auto& r : vol_rows) {
        if (r.a < 0 || r.a >= n)
            throw ValidationError("volume file: node_id " + std::to_string(r.a) + " outside schema N=" +
                                  std::to_string(n));
        if (r.b < 0 || r.b >= c0)
            throw ValidationError("volume file: channel " + std::to_string(r.b) + " outside schema C0=" +
                                  std::to_string(c0));
        if (r.value < 0.0)
            throw ValidationError("volume file: negative volume " + std::to_string(r.value) + " at " +
                                  format_rfc3339(r.ts) + " node " + std::to_string(r.a));
        double& cell = flows.at(step_of[r.ts], r.b, r.a);
        if (!std::isnan(cell))
            throw ValidationError("volume file: duplicate cell at " + format_rfc3339(r.ts) + " node " +
                                  std::to_string(r.a) + " channel " + std::to_string(r.b));
        cell = r.value;
    }

    TravelTimeSeries times;
    times.n_nodes = n;
    times.slot_minutes = schema.slot_minutes;
    times.timestamps = axis;
    times.seconds.assign(static_cast<size_t>(steps) * n * n, kMissing);
    for (int s = 0; s < steps; ++s)
        for (int i = 0; i < n; ++i) times.seconds[(static_cast<size_t>(s) * n + i) * n + i] = 0.0;

    double max_finite_tt = 0.0;
    for (const auto& r : tt_rows) {
        if (r.a < 0 || r.a >= n || r.b < 0 || r.b >= n)
            throw ValidationError("travel-time file: node pair (" + std::to_string(r.a) + "," + std::to_string(r.b) +
                                  ") outside schema N=" + std::to_string(n));
        if (r.value < 0.0) throw ValidationError("travel-time file: negative travel time at " + format_rfc3339(r.ts));
        if (r.a == r.b) {
            if (r.value != 0.0)
                throw ValidationError("travel-time file: nonzero diagonal entry at " + format_rfc3339(r.ts));
            continue;
        }
        double& cell = times.seconds[(static_cast<size_t>(step_of[r.ts]) * n + r.a) * n + r.b];
        if (!std::isnan(cell))
            throw ValidationError("travel-time file: duplicate pair at " + format_rfc3339(r.ts) + " (" +
                                  std::to_string(r.a) + "," + std::to_string(r.b) + ")");
        cell = r.value;
        max_finite_tt = std::max(max_finite_tt, r.value);
    }

    // LOCF fill. Leading gaps take the cell's first observation; cells never
    // observed are an error for volumes and an unreachable sentinel for
    // travel times.
    rep.volume_missing_per_cell.assign(static_cast<size_t>(c0) * n, 0);
    rep.volume_cells_total = static_cast<std::int64_t>(steps) * c0 * n;
    for (int c = 0; c < c0; ++c) {
        for (int node = 0; node < n; ++node) {
            int first_obs = -1;
            for (int s = 0; s < steps && first_obs < 0; ++s)
                if (!std::isnan(flows.at(s, c, node))) first_obs = s;
            if (first_obs < 0)
                throw ValidationError("volume file: node " + std::to_string(node) + " channel " + std::to_string(c) +
                                      " has no observations");
            for (int s = 0; s < steps; ++s) {
                if (std::isnan(flows.at(s, c, node))) {
                    ++rep.volume_cells_missing;
                    ++rep.volume_missing_per_cell[static_cast<size_t>(c) * n + node];
                    flows.at(s, c, node) = s < first_obs ? flows.at(first_obs, c, node) : flows.at(s - 1, c, node);
                }
            }
        }
    }

    rep.traveltime_missing_per_cell.assign(static_cast<size_t>(n) * n, 0);
    rep.traveltime_cells_total = static_cast<std::int64_t>(steps) * n * (n - 1);
    const double sentinel = max_finite_tt > 0.0 ? 10.0 * max_finite_tt : 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            int first_obs = -1;
            for (int s = 0; s < steps && first_obs < 0; ++s)
                if (!std::isnan(times.at(s, i, j))) first_obs = s;
            if (first_obs < 0) {
                ++rep.unreachable_pairs;
                for (int s = 0; s < steps; ++s) times.seconds[(static_cast<size_t>(s) * n + i) * n + j] = sentinel;
                continue;
            }
            for (int s = 0; s < steps; ++s) {
                double& cell = times.seconds[(static_cast<size_t>(s) * n + i) * n + j];
                if (std::isnan(cell)) {
                    ++rep.traveltime_cells_missing;
                    ++rep.traveltime_missing_per_cell[static_cast<size_t>(i) * n + j];
                    cell = s < first_obs ? times.at(first_obs, i, j) : times.at(s - 1, i, j);
                }
            }
        }
    }
    return {std::move(flows), std::move(times)};
}

double NormStats::normalize_value(int c, int n, double v) const {
    const size_t idx = static_cast<size_t>(c) * n_nodes + n;
    return zero_range[idx] ? 0.0 : (v - minimum[idx]) / range[idx];
}

double NormStats::denormalize_value(int c, int n, double v) const {
    const size_t idx = static_cast<size_t>(c) * n_nodes + n;
    return zero_range[idx] ? minimum[idx] : v * range[idx] + minimum[idx];
}

NormStats NormStats::from_tensors(const Tensor& minimum, const Tensor& range) {
    if (minimum.rank() != 2 || minimum.shape() != range.shape())
        throw ValidationError("norm stats: min/range tensors must be matching rank-2");
    NormStats st;
    st.c0 = minimum.dim(0);
    st.n_nodes = minimum.dim(1);
    st.minimum = minimum.values();
    st.range = range.values();
    st.zero_range.resize(st.minimum.size());
    for (size_t i = 0; i < st.range.size(); ++i) st.zero_range[i] = st.range[i] == 0.0 ? 1 : 0;
    return st;
}

SplitBounds split_by_time(int steps, double train_frac, double val_frac) {
    SplitBounds b;
    b.train_end = static_cast<int>(steps * train_frac);
    b.val_end = static_cast<int>(steps * (train_frac + val_frac));
    if (b.train_end < 1 || b.val_end <= b.train_end || b.val_end >= steps)
        throw ValidationError("split: series too short for the requested fractions");
    return b;
}

NormStats compute_norm_stats(const TrafficSeries& series, int train_end) {
    if (train_end < 1 || train_end > series.steps())
        throw ValidationError("norm stats: training split [0," + std::to_string(train_end) + ") out of range");
    NormStats st;
    st.c0 = series.c0;
    st.n_nodes = series.n_nodes;
    const size_t cells = static_cast<size_t>(series.c0) * series.n_nodes;
    st.minimum.assign(cells, std::numeric_limits<double>::infinity());
    std::vector<double> maximum(cells, -std::numeric_limits<double>::infinity());
    for (int s = 0; s < train_end; ++s)
        for (int c = 0; c < series.c0; ++c)
            for (int n = 0; n < series.n_nodes; ++n) {
                const double v = series.at(s, c, n);
                const size_t idx = static_cast<size_t>(c) * series.n_nodes + n;
                st.minimum[idx] = std::min(st.minimum[idx], v);
                maximum[idx] = std::max(maximum[idx], v);
            }
    st.range.resize(cells);
    st.zero_range.resize(cells);
    for (size_t i = 0; i < cells; ++i) {
        st.range[i] = maximum[i] - st.minimum[i];
        st.zero_range[i] = st.range[i] == 0.0 ? 1 : 0;
    }
    return st;
}

TrafficSeries normalize(const TrafficSeries& series, const NormStats& stats) {
    TrafficSeries out = series;
    for (int s = 0; s < series.steps(); ++s)
        for (int c = 0; c < series.c0; ++c)
            for (int n = 0; n < series.n_nodes; ++n) out.at(s, c, n) = stats.normalize_value(c, n, series.at(s, c, n));
    return out;
}

std::vector<Tensor> affinity_series(const TravelTimeSeries& times, double sigma, bool zero_diagonal) {
    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(times.steps()));
    const int n = times.n_nodes;
    for (int s = 0; s < times.steps(); ++s) {
        std::vector<double> step(times.seconds.begin() + static_cast<std::ptrdiff_t>(s) * n * n,
                                 times.seconds.begin() + static_cast<std::ptrdiff_t>(s + 1) * n * n);
        TravelTimeMatrix t = TravelTimeMatrix::from_values(n, std::move(step));
        out.push_back(affinity_from_travel_time(t, sigma, zero_diagonal).to_tensor());
    }
    return out;
}

double median_offdiag_travel_time(const TravelTimeSeries& times, int train_end) {
    std::vector<double> vals;
    const int n = times.n_nodes;
    vals.reserve(static_cast<size_t>(train_end) * n * (n - 1));
    for (int s = 0; s < train_end; ++s)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && std::isfinite(times.at(s, i, j))) vals.push_back(times.at(s, i, j));
    if (vals.empty()) throw ValidationError("sigma default: no finite off-diagonal travel times in training split");
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2), vals.end());
    return vals[vals.size() / 2];
}

std::vector<TrainingWindow> make_windows(const TrafficSeries& normalized, const std::vector<Tensor>& affinities,
                                         int t_p, int t_f, int stride, int tod_slots, int first_anchor,
                                         int last_anchor) {
    const int steps = normalized.steps();
    if (static_cast<int>(affinities.size()) != steps)
        throw ValidationError("windows: affinity series length does not match flow series");
    if (stride < 1) throw ValidationError("windows: stride must be >= 1");
    if (steps < t_p + t_f) throw ValidationError("windows: series of " + std::to_string(steps) +
                                                 " steps is shorter than T_P + T_F");
    const int n = normalized.n_nodes, c0 = normalized.c0;
    const int lo = first_anchor < 0 ? t_p - 1 : std::max(first_anchor, t_p - 1);
    const int hi = last_anchor < 0 ? steps - 1 - t_f : std::min(last_anchor, steps - 1 - t_f);
    const std::int64_t slot_sec = static_cast<std::int64_t>(normalized.slot_minutes) * 60;

    std::vector<TrainingWindow> out;
    for (int t = lo; t <= hi; t += stride) {
        TrainingWindow w;
        w.anchor = t;
        w.x = Tensor({c0, t_p, n});
        for (int c = 0; c < c0; ++c)
            for (int p = 0; p < t_p; ++p)
                for (int i = 0; i < n; ++i)
                    w.x.data()[(static_cast<std::int64_t>(c) * t_p + p) * n + i] = normalized.at(t - t_p + 1 + p, c, i);
        w.s = Tensor({t_p, n, n});
        for (int p = 0; p < t_p; ++p) {
            const Tensor& a = affinities[static_cast<size_t>(t - t_p + 1 + p)];
            std::copy(a.values().begin(), a.values().end(), w.s.data() + static_cast<std::int64_t>(p) * n * n);
        }
        if (t_f > 1) {
            w.y = Tensor({c0, t_f - 1, n});
            for (int c = 0; c < c0; ++c)
                for (int j = 0; j < t_f - 1; ++j)
                    for (int i = 0; i < n; ++i)
                        w.y.data()[(static_cast<std::int64_t>(c) * (t_f - 1) + j) * n + i] = normalized.at(t + 1 + j, c, i);
        }
        w.f_target = Tensor({c0, n});
        for (int c = 0; c < c0; ++c)
            for (int i = 0; i < n; ++i) w.f_target.data()[static_cast<std::int64_t>(c) * n + i] = normalized.at(t + t_f, c, i);
        w.abar = Tensor({n, n});
        for (int p = -t_p + 1; p <= t_f; ++p) {
            const Tensor& a = affinities[static_cast<size_t>(t + p)];
            for (std::int64_t i = 0; i < w.abar.size(); ++i) w.abar.data()[i] += a.data()[i];
        }
        const double inv = 1.0 / static_cast<double>(t_p + t_f);
        for (std::int64_t i = 0; i < w.abar.size(); ++i) w.abar.data()[i] *= inv;

        const std::int64_t ts = normalized.timestamps[static_cast<size_t>(t)];
        const int tod = static_cast<int>(seconds_of_day(ts) / slot_sec);
        w.codes = AuxiliaryCodes::make(tod_slots, tod, day_of_week(ts));
        out.push_back(std::move(w));
    }
    if (out.empty()) throw ValidationError("windows: no valid anchors in the requested range");
    return out;
}

void SynthConfig::validate() const {
    if (n_nodes < 4) throw ValidationError("synth: need at least 4 nodes, got " + std::to_string(n_nodes));
    if (steps < 200) throw ValidationError("synth: need at least 200 steps, got " + std::to_string(steps));
    if (regime_period < 1) throw ValidationError("synth: regime_period must be >= 1");
    if (c0 < 1) throw ValidationError("synth: c0 must be >= 1");
    if (slot_minutes < 1 || 1440 % slot_minutes != 0) throw ValidationError("synth: slot_length must divide a day");
    if (diffusion_alpha < 0.0 || diffusion_alpha > 1.0) throw ValidationError("synth: alpha must be in [0,1]");
    if (leak <= 0.0 || leak > 1.0) throw ValidationError("synth: leak must be in (0,1]");
    if (near_seconds <= 0.0 || far_seconds <= near_seconds) throw ValidationError("synth: need 0 < near < far seconds");
    if (sigma <= 0.0) throw ValidationError("synth: sigma must be positive");
    if (load_amplitude < 0.0 || load_floor <= 1.0) throw ValidationError("synth: load amplitude/floor out of range");
}

namespace {

// Disjoint circulant edge sets for the two hidden regimes.
std::pair<std::vector<int>, std::vector<int>> regime_offsets(int n) {
    if (n >= 9) return {{1, 2}, {3, 4}};
    return {{1}, {2}};
}

}  // namespace

SynthData synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_nodes, steps = cfg.steps, c0 = cfg.c0;
    Rng rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.8, 1.2);

    SynthData out;
    out.diffusion_alpha = cfg.diffusion_alpha;
    out.leak = cfg.leak;
    out.sigma = cfg.sigma;

    auto [off1, off2] = regime_offsets(n);
    for (const auto& offs : {off1, off2}) {
        std::vector<double> t(static_cast<size_t>(n) * n, cfg.far_seconds);
        for (int i = 0; i < n; ++i) {
            t[static_cast<size_t>(i) * n + i] = 0.0;
            for (int o : offs) {
                t[static_cast<size_t>(i) * n + (i + o) % n] = cfg.near_seconds;
                t[static_cast<size_t>((i + o) % n) * n + i] = cfg.near_seconds;
            }
        }
        out.regime_times.push_back(std::move(t));
    }

    out.regime_labels.resize(static_cast<size_t>(steps));
    for (int k = 0; k < steps; ++k) out.regime_labels[static_cast<size_t>(k)] = (k / cfg.regime_period) % 2;

    // Row-normalized diffusion operator per regime, built from the hidden
    // affinity (self-loops kept).
    std::vector<std::vector<double>> walk(2, std::vector<double>(static_cast<size_t>(n) * n));
    for (int r = 0; r < 2; ++r) {
        for (int i = 0; i < n; ++i) {
            double deg = 0.0;
            for (int j = 0; j < n; ++j) {
                const double a = std::exp(-out.regime_times[static_cast<size_t>(r)][static_cast<size_t>(i) * n + j] / cfg.sigma);
                walk[static_cast<size_t>(r)][static_cast<size_t>(i) * n + j] = a;
                deg += a;
            }
            for (int j = 0; j < n; ++j) walk[static_cast<size_t>(r)][static_cast<size_t>(i) * n + j] /= deg;
        }
    }

    out.injection.resize(static_cast<size_t>(c0) * n);
    for (double& v : out.injection) v = unif(rng);

    const std::int64_t start = parse_rfc3339(cfg.start_time);
    const std::int64_t slot_sec = static_cast<std::int64_t>(cfg.slot_minutes) * 60;

    out.loads.resize(static_cast<size_t>(steps) * c0);
    for (int k = 0; k < steps; ++k) {
        const std::int64_t ts = start + k * slot_sec;
        const double frac = static_cast<double>(seconds_of_day(ts)) / 86400.0;
        const bool weekend = day_of_week(ts) >= 5;
        for (int c = 0; c < c0; ++c) {
            const double phase = 0.5 * 3.14159265358979323846 * c;
            double s = cfg.load_amplitude * (cfg.load_floor + std::sin(2.0 * 3.14159265358979323846 * frac + phase));
            if (weekend) s *= cfg.weekend_factor;
            out.loads[static_cast<size_t>(k) * c0 + c] = s;
        }
    }

    TrafficSeries flows;
    flows.n_nodes = n;
    flows.c0 = c0;
    flows.slot_minutes = cfg.slot_minutes;
    flows.timestamps.resize(static_cast<size_t>(steps));
    for (int k = 0; k < steps; ++k) flows.timestamps[static_cast<size_t>(k)] = start + k * slot_sec;
    flows.volumes.assign(static_cast<size_t>(steps) * c0 * n, 0.0);

    std::vector<double> x(static_cast<size_t>(c0) * n), next(static_cast<size_t>(n));
    for (int c = 0; c < c0; ++c)
        for (int i = 0; i < n; ++i)
            x[static_cast<size_t>(c) * n + i] =
                out.loads[static_cast<size_t>(c)] * out.injection[static_cast<size_t>(c) * n + i] / cfg.leak;

    for (int k = 0; k < steps; ++k) {
        for (int c = 0; c < c0; ++c)
            for (int i = 0; i < n; ++i) flows.at(k, c, i) = x[static_cast<size_t>(c) * n + i];
        if (k + 1 == steps) break;
        const std::vector<double>& rw = walk[static_cast<size_t>(out.regime_labels[static_cast<size_t>(k)])];
        for (int c = 0; c < c0; ++c) {
            double* xc = x.data() + static_cast<size_t>(c) * n;
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += rw[static_cast<size_t>(i) * n + j] * xc[j];
                next[static_cast<size_t>(i)] = (1.0 - cfg.leak) * ((1.0 - cfg.diffusion_alpha) * xc[i] + cfg.diffusion_alpha * acc);
            }
            const double s = out.loads[static_cast<size_t>(k) * c0 + c];
            for (int i = 0; i < n; ++i) {
                double v = next[static_cast<size_t>(i)] + s * out.injection[static_cast<size_t>(c) * n + i];
                if (cfg.flow_noise > 0.0) v += cfg.flow_noise * gauss(rng);
                xc[i] = std::max(0.0, v);
            }
        }
    }
    out.flows = std::move(flows);

    TravelTimeSeries times;
    times.n_nodes = n;
    times.slot_minutes = cfg.slot_minutes;
    times.timestamps = out.flows.timestamps;
    times.seconds.assign(static_cast<size_t>(steps) * n * n, 0.0);
    for (int k = 0; k < steps; ++k) {
        const std::vector<double>& base = out.regime_times[static_cast<size_t>(out.regime_labels[static_cast<size_t>(k)])];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double v = base[static_cast<size_t>(i) * n + j];
                if (cfg.travel_time_noise > 0.0) v = std::max(1.0, v + cfg.travel_time_noise * gauss(rng));
                times.seconds[(static_cast<size_t>(k) * n + i) * n + j] = v;
            }
    }
    out.times = std::move(times);
    return out;
}

void write_synth_files(const SynthData& data, const std::string& volume_file, const std::string& traveltime_file,
                       const std::string& regime_file) {
    const int n = data.flows.n_nodes, c0 = data.flows.c0;
    {
        std::ofstream out(volume_file);
        if (!out) throw ValidationError("generate: cannot write " + volume_file);
        out << "timestamp,node_id,channel,value\n";
        char buf[64];
        for (int k = 0; k < data.flows.steps(); ++k) {
            const std::string ts = format_rfc3339(data.flows.timestamps[static_cast<size_t>(k)]);
            for (int c = 0; c < c0; ++c)
                for (int i = 0; i < n; ++i) {
                    std::snprintf(buf, sizeof buf, "%.17g", data.flows.at(k, c, i));
                    out << ts << ',' << i << ',' << c << ',' << buf << '\n';
                }
        }
    }
    {
        std::ofstream out(traveltime_file);
        if (!out) throw ValidationError("generate: cannot write " + traveltime_file);
        out << "timestamp,from_node,to_node,seconds\n";
        char buf[64];
        for (int k = 0; k < data.times.steps(); ++k) {
            const std::string ts = format_rfc3339(data.times.timestamps[static_cast<size_t>(k)]);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (i == j) continue;
                    std::snprintf(buf, sizeof buf, "%.17g", data.times.at(k, i, j));
                    out << ts << ',' << i << ',' << j << ',' << buf << '\n';
                }
        }
    }
    {
        std::ofstream out(regime_file);
        if (!out) throw ValidationError("generate: cannot write " + regime_file);
        out << "timestamp,regime\n";
        for (size_t k = 0; k < data.regime_labels.size(); ++k)
            out << format_rfc3339(data.flows.timestamps[k]) << ',' << data.regime_labels[k] << '\n';
    }
}

}  // namespace dstg

#include "trafcast/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trafcast {

bool heuristic_flux(const std::vector<double>& flux, const std::vector<double>& flux_smooth,
                    int t) {
    if (t < 60 || t >= static_cast<int>(flux.size())) return false;
    if (!is_daytime(t)) return false;
    if (!(flux[t - 1] < 2.0 && flux[t] < 2.0 && flux_smooth[t] < 2.0)) return false;
    double hour_mean = 0.0;
    for (int s = t - 60; s <= t - 1; ++s) hour_mean += flux[s];
    hour_mean /= 60.0;
    return hour_mean - flux_smooth[t] > 2.0;
}

bool heuristic_speed(const std::vector<double>& velocity,
                     const std::vector<double>& velocity_smooth, int t) {
    if (t < 15 || t >= static_cast<int>(velocity.size())) return false;
    if (!is_daytime(t)) return false;
    const double vt = velocity[t];
    const double vp = velocity[t - 1];
    if (is_missing(vt) || is_missing(vp)) return false;
    if (!(vt < vp && vt > 0.0 && vt < 65.0)) return false;
    double max_drop = -1e300;
    for (int s = t - 15; s <= t - 1; ++s) {
        if (is_missing(velocity_smooth[s])) continue;
        max_drop = std::max(max_drop, velocity_smooth[s] - vt);
    }
    return max_drop >= 40.0;
}

LabeledDay build_labels(const DaySequence& day, const BoolSeries& flag3t,
                        const SmoothingKernel& kernel) {
    const auto& flux = day.col("flux");
    const auto& velocity = day.col("velocity");
    if (flux.size() != kMinutesPerDay)
        throw std::invalid_argument("build_labels needs a full 1440-step day");
    if (flag3t.size() != kMinutesPerDay)
        throw std::invalid_argument("flag3t series must have 1440 entries");

    const auto flux_smooth = smooth(flux, kernel);
    const auto velocity_smooth = smooth(velocity, kernel);

    LabeledDay out;
    out.sequence = day;
    out.b3t = flag3t;
    out.bf.assign(kMinutesPerDay, 0);
    out.bv.assign(kMinutesPerDay, 0);
    out.target.assign(kMinutesPerDay, 0);
    for (int t = 0; t < kMinutesPerDay; ++t) {
        out.bf[t] = heuristic_flux(flux, flux_smooth, t) ? 1 : 0;
        out.bv[t] = heuristic_speed(velocity, velocity_smooth, t) ? 1 : 0;
        out.target[t] = (out.b3t[t] || out.bf[t] || out.bv[t]) ? 1 : 0;
        out.positives += out.target[t];
    }
    return out;
}

std::vector<LabeledDay> select_training_days(const std::vector<LabeledDay>& days,
                                             int min_positive_minutes) {
    std::vector<LabeledDay> kept;
    for (const auto& d : days) {
        int positives = 0;
        for (auto b : d.b3t) positives += b;
        if (positives >= min_positive_minutes) kept.push_back(d);
    }
    return kept;
}

double positive_rate(const std::vector<BoolSeries>& targets) {
    long long pos = 0, total = 0;
    for (const auto& t : targets) {
        total += static_cast<long long>(t.size());
        for (auto b : t) pos += b;
    }
    if (pos == 0 || pos == total)
        throw std::runtime_error("degenerate dataset: weighted loss undefined");
    return static_cast<double>(pos) / static_cast<double>(total);
}

double positive_rate(const std::vector<LabeledDay>& days) {
    std::vector<BoolSeries> targets;
    targets.reserve(days.size());
    for (const auto& d : days) targets.push_back(d.target);
    return positive_rate(targets);
}

BoolSeries build_prealarm_targets(const BoolSeries& source, const PreAlarmConfig& config) {
    if (config.shift < 0 || config.min_run < 1)
        throw std::invalid_argument("invalid pre-alarm config");
    const int n = static_cast<int>(source.size());
    BoolSeries filtered = source;
    int run_start = -1;
    for (int t = 0; t <= n; ++t) {
        const bool on = t < n && source[t];
        if (on && run_start < 0) run_start = t;
        if (!on && run_start >= 0) {
            if (t - run_start < config.min_run)
                std::fill(filtered.begin() + run_start, filtered.begin() + t, 0);
            run_start = -1;
        }
    }
    BoolSeries shifted(source.size(), 0);
    for (int t = 0; t + config.shift < n; ++t) shifted[t] = filtered[t + config.shift];
    return shifted;
}

VolumeTarget build_volume_targets(const DaySequence& group_day, int horizon) {
    const auto& light = group_day.col("flux_light");
    const auto& heavy = group_day.col("flux_heavy");
    if (light.size() != kMinutesPerDay)
        throw std::invalid_argument("build_volume_targets needs a full day");
    if (horizon < 1 || horizon >= kMinutesPerDay)
        throw std::invalid_argument("invalid horizon");

    VolumeTarget vt;
    vt.horizon = horizon;
    const int last = kMinutesPerDay - horizon - 1;  // last t with a full window
    vt.light.resize(last + 1);
    vt.heavy.resize(last + 1);
    for (int t = 0; t <= last; ++t) {
        double sl = 0.0, sh = 0.0;
        for (int s = t + 1; s <= t + horizon; ++s) {
            sl += light[s];
            sh += heavy[s];
        }
        vt.light[t] = sl / horizon;
        vt.heavy[t] = sh / horizon;
    }
    return vt;
}

void write_labeled_day_csv(const std::string& path, const LabeledDay& day) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    const auto& flux = day.sequence.col("flux");
    const auto& velocity = day.sequence.col("velocity");
    out << "minute,flux,velocity,b3t,bf,bv,y\n";
    for (int t = 0; t < kMinutesPerDay; ++t) {
        out << t << ',' << flux[t] << ',';
        if (!is_missing(velocity[t])) out << velocity[t];
        out << ',' << int(day.b3t[t]) << ',' << int(day.bf[t]) << ',' << int(day.bv[t]) << ','
            << int(day.target[t]) << '\n';
    }
}

LabeledDay read_labeled_day_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("minute,flux,velocity", 0) != 0)
        throw std::runtime_error("unexpected labeled-day header in " + path);

    LabeledDay day;
    day.sequence.feature_names = {"flux", "velocity"};
    day.sequence.features = {std::vector<double>(kMinutesPerDay, 0.0),
                             std::vector<double>(kMinutesPerDay, missing_value())};
    day.b3t.assign(kMinutesPerDay, 0);
    day.bf.assign(kMinutesPerDay, 0);
    day.bv.assign(kMinutesPerDay, 0);
    day.target.assign(kMinutesPerDay, 0);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() < 7) throw std::runtime_error("bad labeled-day row in " + path);
        const int t = std::stoi(fields[0]);
        day.sequence.features[0][t] = std::stod(fields[1]);
        day.sequence.features[1][t] = fields[2].empty() ? missing_value() : std::stod(fields[2]);
        day.b3t[t] = static_cast<std::uint8_t>(std::stoi(fields[3]));
        day.bf[t] = static_cast<std::uint8_t>(std::stoi(fields[4]));
        day.bv[t] = static_cast<std::uint8_t>(std::stoi(fields[5]));
        day.target[t] = static_cast<std::uint8_t>(std::stoi(fields[6]));
        day.positives += day.target[t];
    }
    return day;
}

}  // namespace trafcast

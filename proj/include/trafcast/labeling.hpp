#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trafcast/sensor_data.hpp"
#include "trafcast/signal.hpp"

namespace trafcast {

using BoolSeries = std::vector<std::uint8_t>;

struct LabeledDay {
    DaySequence sequence;  // features [flux, velocity]
    BoolSeries target;     // y = b3t | bf | bv
    BoolSeries b3t;
    BoolSeries bf;  // MLN flux heuristic
    BoolSeries bv;  // NDR velocity heuristic
    int positives = 0;
};

enum class PreAlarmSource { GroundTruth, ClassifierOutput };

struct PreAlarmConfig {
    int shift = 4;     // minutes the alarm anticipates the source
    int min_run = 3;   // positive runs shorter than this are dropped as isolated
    PreAlarmSource target_source = PreAlarmSource::ClassifierOutput;
};

struct VolumeTarget {
    int horizon = 30;  // minutes
    // Mean future (light, heavy) flux, veh/min; defined for t <= 1439 - horizon.
    std::vector<double> light;
    std::vector<double> heavy;
};

inline bool is_daytime(int t) { return t >= 300 && t <= 1200; }

// MLN: low current flux after a high previous-hour average. Requires a full
// preceding hour (false for t < 60) and the daytime window.
bool heuristic_flux(const std::vector<double>& flux, const std::vector<double>& flux_smooth,
                    int t);

// NDR: decreasing low velocity after high regularized velocity within the
// last 15 minutes. Missing velocity never triggers it.
bool heuristic_speed(const std::vector<double>& velocity,
                     const std::vector<double>& velocity_smooth, int t);

LabeledDay build_labels(const DaySequence& day, const BoolSeries& flag3t,
                        const SmoothingKernel& kernel);

// Keep days whose b3t (or ground-truth mask for synthetic corpora) has at
// least min_positive_minutes positives.
std::vector<LabeledDay> select_training_days(const std::vector<LabeledDay>& days,
                                             int min_positive_minutes = 15);

// Positive-minute fraction over a dataset. Throws when the dataset is
// degenerate (all positive or all negative).
double positive_rate(const std::vector<LabeledDay>& days);
double positive_rate(const std::vector<BoolSeries>& targets);

// Remove positive runs shorter than min_run, then shift the series backward
// by config.shift minutes (last shift minutes padded 0).
BoolSeries build_prealarm_targets(const BoolSeries& source, const PreAlarmConfig& config);

// y_t = (mean light flux over (t, t+T], mean heavy flux over (t, t+T]).
VolumeTarget build_volume_targets(const DaySequence& group_day, int horizon = 30);

// One CSV per day: minute,flux,velocity,b3t,bf,bv,y
void write_labeled_day_csv(const std::string& path, const LabeledDay& day);
LabeledDay read_labeled_day_csv(const std::string& path);

}  // namespace trafcast

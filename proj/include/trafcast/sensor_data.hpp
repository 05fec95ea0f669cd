#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "trafcast/types.hpp"

namespace trafcast {

// One per-minute observation from one sensor/lane/class.
struct SensorRecord {
    std::string day_id;     // calendar date, opaque
    int minute = 0;         // 0..1439
    std::string sensor_id;
    std::string group_id;
    int lane = 1;
    VehicleClass vclass = VehicleClass::Light;
    int count = 0;               // vehicles per minute
    double mean_speed = 0.0;     // km/h; missing_value() when absent
    int flag3t = -1;             // -1 absent, else 0/1
};

// Exactly 1440 steps of named features for one day and one key.
struct DaySequence {
    std::string day_id;
    std::string key;  // sensor or group identifier + aggregation mode
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> features;  // one 1440-long column per name

    const std::vector<double>& col(const std::string& name) const;
};

enum class EventArchetype { VelocityLed, Simultaneous, FluxLed, PartialFlux };

struct CongestionEvent {
    int start = 0;      // minute
    int duration = 0;   // minutes covered: [start, start+duration)
    double severity = 1.0;
    EventArchetype archetype = EventArchetype::Simultaneous;
};

// Gaussian bump added to the base daily flux profile.
struct ProfileBump {
    double peak_minute = 480.0;
    double width = 90.0;       // minutes
    double amplitude = 10.0;   // veh/min at the peak
};

struct SyntheticScenario {
    std::string day_id = "2021-01-01";
    std::string sensor_id = "S1";
    std::string group_id = "G1";
    int lanes = 1;
    double base_flux = 2.0;              // veh/min floor of the daily profile
    std::vector<ProfileBump> bumps = {{510.0, 120.0, 12.0}, {1050.0, 120.0, 12.0}};
    double v_free = 110.0;               // km/h
    double v_noise = 4.0;                // km/h std-dev
    double v_crawl = 12.0;               // km/h inside a severity-1 event
    double heavy_fraction = 0.15;
    std::vector<CongestionEvent> events;
    std::uint64_t seed = 0;
    bool emit_flag3t = true;             // transmit the ground-truth mask as b3T

    double profile(int minute) const;    // noiseless daily flux, veh/min
};

struct SyntheticDay {
    std::vector<SensorRecord> records;
    std::vector<std::uint8_t> mask;  // ground-truth congestion, length 1440
};

// Canonical CSV: day,minute,sensor_id,group_id,lane,class,count,speed,flag3t
std::vector<SensorRecord> ingest_csv(const std::string& path);
void write_records_csv(const std::string& path, const std::vector<SensorRecord>& records);

// Lane-and-class aggregation for one sensor-day: features [flux, velocity].
// Velocity is the count-weighted mean of class mean speeds; minutes with no
// vehicles get flux 0 and a missing velocity. Missing minutes are zero-filled.
DaySequence aggregate_lane(const std::vector<SensorRecord>& records,
                           const std::string& sensor_id, const std::string& day_id);

// Group aggregation: per-class flux summed over all lanes and sensors of the
// group; features [flux_light, flux_heavy].
DaySequence aggregate_group(const std::vector<SensorRecord>& records,
                            const std::string& group_id, const std::string& day_id);

// Deterministic synthetic day. Throws on overlapping events.
SyntheticDay generate_synthetic_day(const SyntheticScenario& scenario);

struct HfLfSplit {
    std::set<std::string> hf;
    std::set<std::string> lf;
};

// Sensor is HF iff its mean daily volume >= threshold (veh/day).
HfLfSplit split_hf_lf(const std::map<std::string, double>& mean_daily_volume,
                      double threshold = 6000.0);

}  // namespace trafcast

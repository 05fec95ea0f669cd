#include "trafcast/sensor_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace trafcast {

namespace {

const char* kHeader = "day,minute,sensor_id,group_id,lane,class,count,speed,flag3t";

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

[[noreturn]] void parse_fail(size_t line_no, const std::string& what) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

const std::vector<double>& DaySequence::col(const std::string& name) const {
    for (size_t i = 0; i < feature_names.size(); ++i)
        if (feature_names[i] == name) return features[i];
    throw std::out_of_range("no feature named " + name);
}

std::vector<SensorRecord> ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw std::runtime_error("unexpected header in " + path + " (want '" + kHeader + "')");

    std::vector<SensorRecord> records;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_line(line);
        if (f.size() != 9) parse_fail(line_no, "expected 9 fields, got " + std::to_string(f.size()));

        SensorRecord r;
        r.day_id = f[0];
        try {
            r.minute = std::stoi(f[1]);
            r.lane = std::stoi(f[4]);
            r.count = std::stoi(f[6]);
        } catch (const std::exception&) {
            parse_fail(line_no, "non-numeric field");
        }
        if (r.minute < 0 || r.minute > 1439) parse_fail(line_no, "minute outside 0..1439");
        if (r.lane < 1) parse_fail(line_no, "lane must be >= 1");
        if (r.count < 0) parse_fail(line_no, "negative count at line " + std::to_string(line_no));
        r.sensor_id = f[2];
        r.group_id = f[3];
        if (f[5] == "L")
            r.vclass = VehicleClass::Light;
        else if (f[5] == "H")
            r.vclass = VehicleClass::Heavy;
        else
            parse_fail(line_no, "class must be L or H");

        if (f[7].empty()) {
            r.mean_speed = missing_value();
        } else {
            if (r.count == 0) parse_fail(line_no, "speed present with count=0");
            try {
                r.mean_speed = std::stod(f[7]);
            } catch (const std::exception&) {
                parse_fail(line_no, "bad speed");
            }
            if (r.mean_speed < 0.0) parse_fail(line_no, "negative speed");
        }
        if (f[8].empty())
            r.flag3t = -1;
        else if (f[8] == "0")
            r.flag3t = 0;
        else if (f[8] == "1")
            r.flag3t = 1;
        else
            parse_fail(line_no, "flag3t must be 0, 1 or empty");

        records.push_back(std::move(r));
    }
    return records;
}

void write_records_csv(const std::string& path, const std::vector<SensorRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << std::setprecision(17);
    out << kHeader << '\n';
    for (const auto& r : records) {
        out << r.day_id << ',' << r.minute << ',' << r.sensor_id << ',' << r.group_id << ','
            << r.lane << ',' << (r.vclass == VehicleClass::Light ? 'L' : 'H') << ',' << r.count
            << ',';
        if (!is_missing(r.mean_speed)) out << r.mean_speed;
        out << ',';
        if (r.flag3t >= 0) out << r.flag3t;
        out << '\n';
    }
}

DaySequence aggregate_lane(const std::vector<SensorRecord>& records,
                           const std::string& sensor_id, const std::string& day_id) {
    std::vector<double> flux(kMinutesPerDay, 0.0);
    std::vector<double> speed_mass(kMinutesPerDay, 0.0);
    for (const auto& r : records) {
        if (r.sensor_id != sensor_id || r.day_id != day_id) continue;
        flux[r.minute] += r.count;
        if (r.count > 0 && !is_missing(r.mean_speed)) speed_mass[r.minute] += r.count * r.mean_speed;
    }
    std::vector<double> velocity(kMinutesPerDay, missing_value());
    for (int t = 0; t < kMinutesPerDay; ++t)
        if (flux[t] > 0.0) velocity[t] = speed_mass[t] / flux[t];

    DaySequence seq;
    seq.day_id = day_id;
    seq.key = sensor_id + "/lane-aggregate";
    seq.feature_names = {"flux", "velocity"};
    seq.features = {std::move(flux), std::move(velocity)};
    return seq;
}

DaySequence aggregate_group(const std::vector<SensorRecord>& records,
                            const std::string& group_id, const std::string& day_id) {
    std::vector<double> light(kMinutesPerDay, 0.0);
    std::vector<double> heavy(kMinutesPerDay, 0.0);
    for (const auto& r : records) {
        if (r.group_id != group_id || r.day_id != day_id) continue;
        (r.vclass == VehicleClass::Light ? light : heavy)[r.minute] += r.count;
    }
    DaySequence seq;
    seq.day_id = day_id;
    seq.key = group_id + "/group-aggregate";
    seq.feature_names = {"flux_light", "flux_heavy"};
    seq.features = {std::move(light), std::move(heavy)};
    return seq;
}

double SyntheticScenario::profile(int minute) const {
    double f = base_flux;
    for (const auto& b : bumps) {
        const double u = (minute - b.peak_minute) / b.width;
        f += b.amplitude * std::exp(-0.5 * u * u);
    }
    return f;
}

SyntheticDay generate_synthetic_day(const SyntheticScenario& scenario) {
    for (const auto& e : scenario.events) {
        if (e.severity < 0.0 || e.severity > 1.0)
            throw std::invalid_argument("event severity outside [0,1]");
        if (e.start < 0 || e.duration < 1 || e.start + e.duration > kMinutesPerDay)
            throw std::invalid_argument("event outside [0,1439]");
    }
    std::vector<std::uint8_t> mask(kMinutesPerDay, 0);
    for (const auto& e : scenario.events)
        for (int t = e.start; t < e.start + e.duration; ++t) {
            if (mask[t]) throw std::invalid_argument("overlapping congestion events");
            mask[t] = 1;
        }

    std::mt19937_64 rng(scenario.seed);
    std::normal_distribution<double> vel_noise(0.0, scenario.v_noise);

    SyntheticDay day;
    day.mask = mask;

    // Onset lag between the velocity and flux drops, by archetype.
    auto drop_factors = [&](int t, double& flux_factor, double& vel_factor) {
        flux_factor = 1.0;
        vel_factor = 1.0;
        for (const auto& e : scenario.events) {
            if (t < e.start || t >= e.start + e.duration) continue;
            const int lag = 2;
            int flux_from = e.start;
            int vel_from = e.start;
            double flux_sev = e.severity;
            switch (e.archetype) {
                case EventArchetype::VelocityLed: flux_from = e.start + lag; break;
                case EventArchetype::FluxLed: vel_from = e.start + lag; break;
                case EventArchetype::Simultaneous: break;
                case EventArchetype::PartialFlux: flux_sev = 0.5 * e.severity; break;
            }
            if (t >= flux_from) flux_factor = 1.0 - flux_sev;
            if (t >= vel_from) vel_factor = 1.0 - e.severity;
        }
    };

    for (int t = 0; t < kMinutesPerDay; ++t) {
        double flux_factor, vel_factor;
        drop_factors(t, flux_factor, vel_factor);
        const double v_mean =
            scenario.v_crawl + (scenario.v_free - scenario.v_crawl) * vel_factor;

        for (int lane = 1; lane <= scenario.lanes; ++lane) {
            const double lane_mean = scenario.profile(t) * flux_factor / scenario.lanes;
            const double heavy_mean = lane_mean * scenario.heavy_fraction;
            const double light_mean = lane_mean - heavy_mean;
            for (VehicleClass vc : {VehicleClass::Light, VehicleClass::Heavy}) {
                const double mean = vc == VehicleClass::Light ? light_mean : heavy_mean;
                std::poisson_distribution<int> count_dist(std::max(0.0, mean));
                SensorRecord r;
                r.day_id = scenario.day_id;
                r.minute = t;
                r.sensor_id = scenario.sensor_id;
                r.group_id = scenario.group_id;
                r.lane = lane;
                r.vclass = vc;
                r.count = mean > 0.0 ? count_dist(rng) : 0;
                const double class_v = vc == VehicleClass::Light ? v_mean : 0.8 * v_mean;
                const double v = std::max(1.0, class_v + vel_noise(rng));
                r.mean_speed = r.count > 0 ? v : missing_value();
                r.flag3t = scenario.emit_flag3t ? mask[t] : -1;
                day.records.push_back(std::move(r));
            }
        }
    }
    return day;
}

HfLfSplit split_hf_lf(const std::map<std::string, double>& mean_daily_volume, double threshold) {
    HfLfSplit split;
    for (const auto& [sensor, volume] : mean_daily_volume)
        (volume >= threshold ? split.hf : split.lf).insert(sensor);
    return split;
}

}  // namespace trafcast

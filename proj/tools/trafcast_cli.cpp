// Command-line front end: data synthesis, labeling, training, detection,
// prediction and the simulation experiments. All outputs are plot-ready
// CSV/JSON; exit codes are 0 (success), 1 (validation), 2 (runtime failure).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "trafcast/labeling.hpp"
#include "trafcast/neural.hpp"
#include "trafcast/pipeline.hpp"
#include "trafcast/sensor_data.hpp"

namespace fs = std::filesystem;
using namespace trafcast;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open: " + path);
    return f;
}

// ---------------------------------------------------------------- synth ----

EventArchetype parse_archetype(const std::string& name) {
    if (name == "velocity-led") return EventArchetype::VelocityLed;
    if (name == "simultaneous") return EventArchetype::Simultaneous;
    if (name == "flux-led") return EventArchetype::FluxLed;
    if (name == "partial-flux") return EventArchetype::PartialFlux;
    throw std::invalid_argument("unknown archetype: " + name);
}

// Non-overlapping daytime events, deterministic in (seed, day index).
std::vector<CongestionEvent> place_events(int n_events, EventArchetype archetype,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dur_dist(30, 60);
    std::uniform_real_distribution<double> sev_dist(0.7, 1.0);
    std::vector<CongestionEvent> events;
    for (int e = 0; e < n_events; ++e) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            CongestionEvent ev;
            ev.duration = dur_dist(rng);
            std::uniform_int_distribution<int> start_dist(320, 1150 - ev.duration);
            ev.start = start_dist(rng);
            ev.severity = sev_dist(rng);
            ev.archetype = archetype;
            const bool clear = std::all_of(events.begin(), events.end(), [&](const auto& o) {
                return ev.start + ev.duration + 20 <= o.start || o.start + o.duration + 20 <= ev.start;
            });
            if (clear) {
                events.push_back(ev);
                break;
            }
        }
    }
    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    return events;
}

int cmd_synth(const std::string& out_dir, int days, int n_events, const std::string& archetype,
              std::uint64_t seed, const std::string& scenario_path) {
    SyntheticScenario base;
    if (!scenario_path.empty()) {
        nlohmann::json j;
        open_in(scenario_path) >> j;
        base.sensor_id = j.value("sensor_id", base.sensor_id);
        base.group_id = j.value("group_id", base.group_id);
        base.lanes = j.value("lanes", base.lanes);
        base.base_flux = j.value("base_flux", base.base_flux);
        base.v_free = j.value("v_free", base.v_free);
        base.v_noise = j.value("v_noise", base.v_noise);
        base.v_crawl = j.value("v_crawl", base.v_crawl);
        base.heavy_fraction = j.value("heavy_fraction", base.heavy_fraction);
        base.emit_flag3t = j.value("emit_flag3t", base.emit_flag3t);
        if (j.contains("bumps")) {
            base.bumps.clear();
            for (const auto& b : j["bumps"])
                base.bumps.push_back({b.at("peak_minute"), b.at("width"), b.at("amplitude")});
        }
    }
    fs::create_directories(out_dir);
    const EventArchetype arch = parse_archetype(archetype);
    for (int d = 0; d < days; ++d) {
        SyntheticScenario sc = base;
        char buf[16];
        std::snprintf(buf, sizeof buf, "day_%03d", d);
        sc.day_id = buf;
        sc.seed = seed + static_cast<std::uint64_t>(d);
        sc.events = place_events(n_events, arch, sc.seed * 2654435761ULL + 17);
        const SyntheticDay day = generate_synthetic_day(sc);
        write_records_csv(out_dir + "/" + sc.day_id + ".csv", day.records);
        auto mask = open_out(out_dir + "/" + sc.day_id + ".mask.csv");
        mask << "minute,congested\n";
        for (int t = 0; t < kMinutesPerDay; ++t) mask << t << ',' << int(day.mask[t]) << '\n';
    }
    std::cout << "wrote " << days << " day(s) to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------- label ----

std::vector<std::string> day_files(const std::string& dir, const std::string& suffix) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0 &&
            name.find(".mask.") == std::string::npos)
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

BoolSeries flag3t_series(const std::vector<SensorRecord>& records, const std::string& sensor_id,
                         const std::string& day_id) {
    BoolSeries b(kMinutesPerDay, 0);
    for (const auto& r : records)
        if (r.sensor_id == sensor_id && r.day_id == day_id && r.flag3t == 1) b[r.minute] = 1;
    return b;
}

int cmd_label(const std::string& data_dir, const std::string& out_dir, int half_width,
              int passes) {
    fs::create_directories(out_dir);
    const SmoothingKernel kernel(half_width, passes);
    std::vector<LabeledDay> all;
    for (const auto& file : day_files(data_dir, ".csv")) {
        const auto records = ingest_csv(file);
        std::map<std::pair<std::string, std::string>, bool> keys;
        for (const auto& r : records) keys[{r.sensor_id, r.day_id}] = true;
        for (const auto& [key, _] : keys) {
            const DaySequence seq = aggregate_lane(records, key.first, key.second);
            LabeledDay day = build_labels(seq, flag3t_series(records, key.first, key.second), kernel);
            write_labeled_day_csv(out_dir + "/" + key.second + "_" + key.first + ".labeled.csv",
                                  day);
            all.push_back(std::move(day));
        }
    }
    if (all.empty()) throw std::invalid_argument("no day files in " + data_dir);
    std::cout << "labeled " << all.size() << " sensor-day(s), p_r = " << positive_rate(all)
              << "\n";
    return 0;
}

// ------------------------------------------------------------- training ----

std::vector<LabeledDay> load_labeled(const std::string& dir) {
    std::vector<LabeledDay> days;
    for (const auto& file : day_files(dir, ".labeled.csv"))
        days.push_back(read_labeled_day_csv(file));
    if (days.empty()) throw std::invalid_argument("no labeled days in " + dir);
    return days;
}

Matrix day_inputs(const DaySequence& seq) {
    Matrix m(kMinutesPerDay, static_cast<int>(seq.features.size()));
    for (int t = 0; t < m.rows; ++t)
        for (int f = 0; f < m.cols; ++f) m(t, f) = seq.features[f][t];
    return m;
}

Sample classify_sample(const LabeledDay& day, const BoolSeries& targets) {
    Sample s;
    s.inputs = day_inputs(day.sequence);
    s.class_targets.assign(targets.begin(), targets.end());
    return s;
}

void write_trace_csv(const std::string& path, const std::vector<EpochStats>& trace,
                     bool classify) {
    auto out = open_out(path);
    out << "epoch,lr,loss," << (classify ? "accuracy" : "rmse") << "\n";
    for (const auto& e : trace)
        out << e.epoch << ',' << e.lr << ',' << e.loss << ',' << e.metric << '\n';
}

struct TrainArgs {
    std::string data_dir, out_path;
    int n_hid = 16;
    int eras = 10, epochs_per_era = 10;
    double base_lr = 1e-2;
    std::uint64_t seed = 1;
    int holdout = 0;
    std::string sweep;  // comma-separated n_hid list
};

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
    cmd->add_option("--data", a.data_dir, "input data directory")->required();
    cmd->add_option("--out", a.out_path, "model file to write")->required();
    cmd->add_option("--n-hid", a.n_hid, "hidden units");
    cmd->add_option("--eras", a.eras, "learning eras (lr halves per era)");
    cmd->add_option("--epochs-per-era", a.epochs_per_era, "epochs per era");
    cmd->add_option("--lr", a.base_lr, "base learning rate");
    cmd->add_option("--seed", a.seed, "init/shuffle seed");
    cmd->add_option("--holdout", a.holdout, "trailing days held out for evaluation");
    cmd->add_option("--sweep", a.sweep, "comma-separated n_hid values to sweep");
}

TrainConfig make_config(const TrainArgs& a, HeadMode mode, int n_in, int n_out) {
    TrainConfig cfg;
    cfg.n_in = n_in;
    cfg.n_hid = a.n_hid;
    cfg.n_out = n_out;
    cfg.mode = mode;
    cfg.schedule.eras = a.eras;
    cfg.schedule.epochs_per_era = a.epochs_per_era;
    cfg.schedule.base_lr = a.base_lr;
    cfg.schedule.shuffle_seed = a.seed;
    cfg.init_seed = a.seed;
    return cfg;
}

void split_holdout(std::vector<Sample>& samples, int holdout, std::vector<Sample>& held) {
    if (holdout <= 0) return;
    if (holdout >= static_cast<int>(samples.size()))
        throw std::invalid_argument("holdout exceeds the dataset");
    held.assign(samples.end() - holdout, samples.end());
    samples.resize(samples.size() - holdout);
}

double classifier_holdout_report(const Network& net, const std::vector<Sample>& held,
                                 double p_r) {
    if (held.empty()) return -1.0;
    std::vector<int> preds, targets;
    for (const auto& s : held) {
        const auto out = classify_with_confidence(net, s.inputs);
        for (size_t t = 0; t < out.size(); ++t) {
            preds.push_back(out[t].first);
            targets.push_back(s.class_targets[t]);
        }
    }
    const AccuracyMetrics m = accuracy_metrics(preds, targets, p_r);
    std::cout << "holdout accuracy " << m.accuracy << ", weighted " << m.weighted_accuracy
              << "\n";
    return m.accuracy;
}

int train_classifier(const TrainArgs& args, bool prealarm, const PreAlarmConfig& pa) {
    std::vector<LabeledDay> days = load_labeled(args.data_dir);
    std::vector<Sample> samples;
    for (const auto& d : days)
        samples.push_back(
            classify_sample(d, prealarm ? build_prealarm_targets(d.target, pa) : d.target));
    std::vector<Sample> held;
    split_holdout(samples, args.holdout, held);

    std::vector<BoolSeries> target_series;
    for (const auto& s : samples)
        target_series.emplace_back(s.class_targets.begin(), s.class_targets.end());
    const double p_r = positive_rate(target_series);

    TrainConfig cfg = make_config(args, HeadMode::Classify, 2, 2);
    cfg.p_r = p_r;

    if (!args.sweep.empty()) {
        auto out = open_out(args.out_path + ".sweep.csv");
        out << "n_hid,loss,holdout_accuracy\n";
        for (const std::string& tok : split(args.sweep, ',')) {
            cfg.n_hid = std::stoi(tok);
            std::vector<EpochStats> trace;
            const Network net = train(samples, cfg, &trace);
            out << cfg.n_hid << ',' << trace.back().loss << ','
                << classifier_holdout_report(net, held, p_r) << '\n';
        }
        return 0;
    }

    std::vector<EpochStats> trace;
    Network net = train(samples, cfg, &trace);
    net.metadata["model_kind"] = prealarm ? "fp" : "fc";
    net.metadata["p_r"] = std::to_string(p_r);
    if (prealarm) net.metadata["shift"] = std::to_string(pa.shift);
    save_network(args.out_path, net);
    write_trace_csv(args.out_path + ".trace.csv", trace, true);
    std::cout << "final loss " << (trace.empty() ? 0.0 : trace.back().loss) << ", p_r " << p_r
              << "\n";
    classifier_holdout_report(net, held, p_r);
    return 0;
}

int cmd_train_p(const TrainArgs& args, int horizon) {
    std::vector<Sample> samples;
    for (const auto& file : day_files(args.data_dir, ".csv")) {
        const auto records = ingest_csv(file);
        std::map<std::pair<std::string, std::string>, bool> keys;
        for (const auto& r : records) keys[{r.group_id, r.day_id}] = true;
        for (const auto& [key, _] : keys) {
            const DaySequence seq = aggregate_group(records, key.first, key.second);
            const VolumeTarget vt = build_volume_targets(seq, horizon);
            Sample s;
            s.inputs = day_inputs(seq);
            s.pred_targets = Matrix(kMinutesPerDay, 2);
            s.valid.assign(kMinutesPerDay, 0);
            for (int t = 0; t < kMinutesPerDay - horizon; ++t) {
                s.pred_targets(t, 0) = vt.light[t];
                s.pred_targets(t, 1) = vt.heavy[t];
                s.valid[t] = 1;
            }
            samples.push_back(std::move(s));
        }
    }
    if (samples.empty()) throw std::invalid_argument("no day files in " + args.data_dir);
    std::vector<Sample> held;
    split_holdout(samples, args.holdout, held);

    const TrainConfig cfg = make_config(args, HeadMode::Predict, 2, 2);
    std::vector<EpochStats> trace;
    Network net = train(samples, cfg, &trace);
    net.metadata["model_kind"] = "p";
    net.metadata["horizon"] = std::to_string(horizon);
    save_network(args.out_path, net);
    write_trace_csv(args.out_path + ".trace.csv", trace, false);
    std::cout << "final loss " << (trace.empty() ? 0.0 : trace.back().loss) << "\n";

    if (!held.empty()) {
        double sq = 0.0;
        long long n = 0;
        for (const auto& s : held) {
            const Matrix out = predict(net, s.inputs);
            for (int t = 0; t < out.rows; ++t) {
                if (!s.valid[t]) continue;
                for (int c = 0; c < 2; ++c) {
                    const double d = out(t, c) - s.pred_targets(t, c);
                    sq += d * d;
                    ++n;
                }
            }
        }
        std::cout << "holdout rmse " << std::sqrt(sq / n) << "\n";
    }
    return 0;
}

// ------------------------------------------------------------ inference ----

int cmd_detect(const std::string& model_path, const std::string& day_path,
               const std::string& sensor, const std::string& out_path) {
    const Network net = load_network(model_path);
    const auto records = ingest_csv(day_path);
    if (records.empty()) throw std::invalid_argument("empty day file");
    const std::string day_id = records.front().day_id;
    const std::string sensor_id = sensor.empty() ? records.front().sensor_id : sensor;
    const DaySequence seq = aggregate_lane(records, sensor_id, day_id);
    const auto out = classify_with_confidence(net, day_inputs(seq));
    auto f = open_out(out_path);
    f << "minute,label,confidence\n";
    for (size_t t = 0; t < out.size(); ++t)
        f << t << ',' << out[t].first << ',' << out[t].second << '\n';
    return 0;
}

int cmd_predict_volume(const std::string& model_path, const std::string& day_path,
                       const std::string& group, const std::string& out_path) {
    const Network net = load_network(model_path);
    const auto records = ingest_csv(day_path);
    if (records.empty()) throw std::invalid_argument("empty day file");
    const std::string day_id = records.front().day_id;
    const std::string group_id = group.empty() ? records.front().group_id : group;
    const DaySequence seq = aggregate_group(records, group_id, day_id);
    const Matrix out = predict(net, day_inputs(seq));
    auto f = open_out(out_path);
    f << "minute,pred_light,pred_heavy\n";
    for (int t = 0; t < out.rows; ++t) f << t << ',' << out(t, 0) << ',' << out(t, 1) << '\n';
    return 0;
}

// ----------------------------------------------------------- simulation ----

struct DiagramSpec {
    int classes = 1;
    SingleClassFD single;
    TwoClassFD two;
};

DiagramSpec parse_diagram(const nlohmann::json& j) {
    DiagramSpec d;
    if (j.contains("rho_max_light")) {
        d.classes = 2;
        d.two.rho_max_light = j.at("rho_max_light");
        d.two.rho_max_heavy = j.at("rho_max_heavy");
        d.two.v_max_light = j.at("v_max_light");
        d.two.v_max_heavy = j.at("v_max_heavy");
        d.two.eta = j.value("eta", d.two.eta);
        d.two.rho_transition = j.value("rho_transition", 0.4 * d.two.rho_max_light);
    } else {
        d.single = SingleClassFD(j.at("rho_max"), j.at("v_max"));
    }
    return d;
}

SensorSeries read_sensor_series(const std::string& path, double position, int classes) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty series file: " + path);
    SensorSeries s;
    s.position = position;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        const size_t need = classes == 1 ? 3 : 5;
        if (cells.size() < need) throw std::invalid_argument("short row in " + path);
        times.push_back(std::stod(cells[0]));
        for (int c = 0; c < classes; ++c) {
            s.flux[c].values.push_back(std::stod(cells[1 + c]));
            s.regime[c].values.push_back(std::stoi(cells[1 + classes + c]) ? Regime::Congested
                                                                           : Regime::Free);
        }
    }
    if (times.size() < 2) throw std::invalid_argument("series needs at least 2 samples: " + path);
    for (int c = 0; c < classes; ++c) {
        s.flux[c].t0 = s.regime[c].t0 = times.front();
        s.flux[c].dt = s.regime[c].dt = times[1] - times[0];
    }
    return s;
}

void write_state_csv(const std::string& path, const RoadState& state, const Grid& grid) {
    auto out = open_out(path);
    out << "x,rho_light,rho_heavy\n";
    for (int j = 0; j < grid.n_cells; ++j) {
        out << grid.center(j) << ',' << state.rho[0][j] << ','
            << (state.n_classes() > 1 ? state.rho[1][j] : 0.0) << '\n';
    }
}

RoadState read_state_csv(const std::string& path, int classes, Grid& grid_out) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, light, heavy;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        xs.push_back(std::stod(cells[0]));
        light.push_back(std::stod(cells[1]));
        heavy.push_back(cells.size() > 2 ? std::stod(cells[2]) : 0.0);
    }
    if (xs.size() < 2) throw std::invalid_argument("state file needs at least 2 cells");
    const double dx = xs[1] - xs[0];
    grid_out = Grid(xs.front() - 0.5 * dx, xs.back() + 0.5 * dx, static_cast<int>(xs.size()));
    return classes == 1 ? RoadState::single(light) : RoadState::two_class(light, heavy);
}

int cmd_nowcast(const std::string& layout_path, const std::string& out_dir, double t0,
                double dt_past, double dx, const std::string& approach, double output_every) {
    nlohmann::json j;
    open_in(layout_path) >> j;
    const DiagramSpec diagram = parse_diagram(j.at("diagram"));
    const fs::path base = fs::path(layout_path).parent_path();

    SegmentLayout layout;
    for (const auto& s : j.at("sensors"))
        layout.sensors.push_back(read_sensor_series((base / s.at("series").get<std::string>()).string(),
                                                    s.at("position"), diagram.classes));

    NowcastConfig cfg;
    cfg.t0 = t0;
    cfg.dt_past = dt_past;
    cfg.dx = dx;
    cfg.output_every = output_every;
    if (approach == "density")
        cfg.approach = BoundaryApproach::DensityBased;
    else if (approach == "flux")
        cfg.approach = BoundaryApproach::FluxBased;
    else
        throw std::invalid_argument("approach must be density or flux");

    fs::create_directories(out_dir);
    const NowcastResult result = diagram.classes == 1
                                     ? nowcast(layout, cfg, diagram.single)
                                     : nowcast_two_class(layout, cfg, diagram.two);
    write_state_csv(out_dir + "/state.csv", result.state, result.grid);
    if (output_every > 0.0)
        write_trajectory_csv(out_dir + "/trajectory.csv", result.trajectory, result.grid,
                             diagram.classes == 1 ? &diagram.single : nullptr,
                             diagram.classes == 2 ? &diagram.two : nullptr);
    std::cout << "min density seen " << result.state.min_density_seen << "\n";
    return 0;
}

int cmd_forecast(const std::string& state_path, const std::string& diagram_path,
                 const std::string& out_path, double horizon, const std::string& inflow,
                 const std::string& flux_arg, const std::string& model_path,
                 const std::string& day_path, int t0, double output_every) {
    nlohmann::json dj;
    open_in(diagram_path) >> dj;
    const DiagramSpec diagram = parse_diagram(dj.contains("diagram") ? dj.at("diagram") : dj);

    Grid grid;
    const RoadState initial = read_state_csv(state_path, diagram.classes, grid);

    ForecastConfig cfg;
    cfg.horizon = horizon;
    cfg.output_every = output_every > 0.0 ? output_every : 1.0;

    std::array<double, 2> q = {0.0, 0.0};
    if (inflow == "null") {
        cfg.inflow = InflowSource::NullInflow;
    } else if (inflow == "constant") {
        cfg.inflow = InflowSource::PredictedConstant;
        const auto parts = split(flux_arg, ',');
        if (parts.empty()) throw std::invalid_argument("--flux required for constant inflow");
        q[0] = std::stod(parts[0]);
        if (parts.size() > 1) q[1] = std::stod(parts[1]);
    } else if (inflow == "predicted") {
        cfg.inflow = InflowSource::PredictedConstant;
        if (model_path.empty() || day_path.empty())
            throw std::invalid_argument("--model and --day required for predicted inflow");
        const Network net = load_network(model_path);
        const auto records = ingest_csv(day_path);
        const DaySequence seq =
            aggregate_group(records, records.front().group_id, records.front().day_id);
        Matrix inputs(kMinutesPerDay, 2);
        for (int t = 0; t < kMinutesPerDay; ++t) {
            inputs(t, 0) = seq.features[0][t];
            inputs(t, 1) = seq.features[1][t];
        }
        q = predicted_inflow(net, inputs, t0, horizon);
    } else {
        throw std::invalid_argument("inflow must be null, constant or predicted");
    }

    const Trajectory traj = diagram.classes == 1
                                ? forecast(initial, grid, cfg, diagram.single, q[0])
                                : forecast_two_class(initial, grid, cfg, diagram.two, q);
    write_trajectory_csv(out_path, traj, grid, diagram.classes == 1 ? &diagram.single : nullptr,
                         diagram.classes == 2 ? &diagram.two : nullptr);
    return 0;
}

// Per-time densities from a trajectory CSV written by write_trajectory_csv.
struct TrajectoryTable {
    std::vector<double> times;
    std::vector<std::vector<double>> light, heavy;  // [time][cell]
    double dx = 0.0;
};

TrajectoryTable read_trajectory_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);
    TrajectoryTable tab;
    std::vector<double> xs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        const double t = std::stod(cells[0]);
        if (tab.times.empty() || t != tab.times.back()) {
            tab.times.push_back(t);
            tab.light.emplace_back();
            tab.heavy.emplace_back();
        }
        if (tab.times.size() == 1) xs.push_back(std::stod(cells[1]));
        tab.light.back().push_back(std::stod(cells[2]));
        tab.heavy.back().push_back(cells[3].empty() ? 0.0 : std::stod(cells[3]));
    }
    if (xs.size() < 2) throw std::invalid_argument("trajectory needs at least 2 cells: " + path);
    tab.dx = xs[1] - xs[0];
    return tab;
}

int cmd_eval(const std::string& forecast_path, const std::string& reference_path,
             const std::string& out_path) {
    const TrajectoryTable f = read_trajectory_csv(forecast_path);
    const TrajectoryTable r = read_trajectory_csv(reference_path);
    const size_t n = std::min(f.times.size(), r.times.size());
    const bool two = std::any_of(r.heavy.begin(), r.heavy.end(), [](const auto& v) {
        return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
    });
    auto out = open_out(out_path);
    out << "t,e_light" << (two ? ",e_heavy" : "") << "\n";
    for (size_t i = 0; i < n; ++i) {
        out << f.times[i] << ',' << relative_l1_error(f.light[i], r.light[i], r.dx);
        if (two) out << ',' << relative_l1_error(f.heavy[i], r.heavy[i], r.dx);
        out << '\n';
    }
    return 0;
}

int cmd_demo_academic(int resolution, const std::string& out_dir) {
    const AcademicReport rep = experiment_academic(resolution);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const SingleClassFD fd(1.0, 1.0);
        write_trajectory_csv(out_dir + "/reference.csv", rep.reference, rep.grid, &fd, nullptr);
        write_trajectory_csv(out_dir + "/density_based.csv", rep.density_based, rep.grid, &fd,
                             nullptr);
        write_trajectory_csv(out_dir + "/flux_based.csv", rep.flux_based, rep.grid, &fd, nullptr);
        write_academic_report_json(out_dir + "/report.json", rep);
    }
    auto flag = [](bool b) { return b ? "pass" : "FAIL"; };
    std::cout << "queue reaches upstream sensor:      " << flag(rep.queue_reached_sensor)
              << " (t = " << rep.queue_arrival_time << ")\n"
              << "density-based stays in [0,1]:       " << flag(rep.density_within_bounds) << "\n"
              << "congested region upstream of 0.45:  " << flag(rep.congested_upstream) << "\n"
              << "free flow downstream of 0.45:       " << flag(rep.free_flow_downstream) << "\n"
              << "flux-based goes negative near 0.8:  " << flag(rep.negative_density_near_outflow)
              << " (min = " << rep.min_density_flux_based << ")\n";
    return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"traffic nowcast/forecast pipeline"};
    app.require_subcommand(1);
    app.set_config("--config");

    // synth
    std::string out_dir = "data", archetype = "velocity-led", scenario_path;
    int days = 30, n_events = 2;
    std::uint64_t seed = 7;
    auto* synth = app.add_subcommand("synth", "generate synthetic sensor days");
    synth->add_option("--out", out_dir, "output directory");
    synth->add_option("--days", days, "number of days");
    synth->add_option("--events", n_events, "congestion events per day");
    synth->add_option("--archetype", archetype,
                      "velocity-led|simultaneous|flux-led|partial-flux");
    synth->add_option("--seed", seed, "base seed");
    synth->add_option("--scenario", scenario_path, "scenario JSON overriding the defaults");

    // label
    std::string label_data, label_out = "labeled";
    int half_width = 10, passes = 1;
    auto* label = app.add_subcommand("label", "label raw days with the heuristics");
    label->add_option("--data", label_data, "raw day directory")->required();
    label->add_option("--out", label_out, "labeled output directory");
    label->add_option("--half-width", half_width, "smoothing kernel half width");
    label->add_option("--passes", passes, "smoothing passes");

    // training
    TrainArgs fc_args, fp_args, p_args;
    auto* train_fc = app.add_subcommand("train-fc", "train the congestion classifier");
    add_train_flags(train_fc, fc_args);
    auto* train_fp = app.add_subcommand("train-fp", "train the pre-alarm classifier");
    add_train_flags(train_fp, fp_args);
    PreAlarmConfig pa;
    train_fp->add_option("--shift", pa.shift, "anticipation in minutes");
    train_fp->add_option("--min-run", pa.min_run, "minimum positive run kept");
    auto* train_p = app.add_subcommand("train-p", "train the volume predictor");
    add_train_flags(train_p, p_args);
    int horizon_min = 30;
    train_p->add_option("--horizon", horizon_min, "prediction horizon, minutes");

    // inference
    std::string model_path, day_path, sensor_id, group_id, infer_out = "out.csv";
    auto* detect = app.add_subcommand("detect", "per-minute congestion labels");
    detect->add_option("--model", model_path)->required();
    detect->add_option("--day", day_path)->required();
    detect->add_option("--sensor", sensor_id);
    detect->add_option("--out", infer_out);
    auto* predict_volume = app.add_subcommand("predict-volume", "per-minute volume forecast");
    predict_volume->add_option("--model", model_path)->required();
    predict_volume->add_option("--day", day_path)->required();
    predict_volume->add_option("--group", group_id);
    predict_volume->add_option("--out", infer_out);

    // nowcast
    std::string layout_path, nowcast_out = "nowcast";
    double t0 = 0.0, dt_past = 120.0, dx = 0.1, output_every = 0.0;
    std::string approach = "density";
    auto* nc = app.add_subcommand("nowcast", "density estimate at t0 from sensor history");
    nc->add_option("--layout", layout_path, "layout JSON")->required();
    nc->add_option("--out", nowcast_out, "output directory");
    nc->add_option("--t0", t0, "nowcast instant, minutes");
    nc->add_option("--dt-past", dt_past, "warm-up window, minutes");
    nc->add_option("--dx", dx, "cell size, km");
    nc->add_option("--approach", approach, "density|flux");
    nc->add_option("--output-every", output_every, "trajectory sampling period");

    // forecast
    std::string state_path, diagram_path, forecast_out = "forecast.csv";
    std::string inflow = "null", flux_arg;
    double fut = 30.0;
    int t0_min = 0;
    auto* fcst = app.add_subcommand("forecast", "evolve a nowcast state forward");
    fcst->add_option("--state", state_path, "state CSV from nowcast")->required();
    fcst->add_option("--diagram", diagram_path, "diagram JSON")->required();
    fcst->add_option("--out", forecast_out);
    fcst->add_option("--horizon", fut, "forecast horizon, minutes");
    fcst->add_option("--inflow", inflow, "null|constant|predicted");
    fcst->add_option("--flux", flux_arg, "constant inflow flux (light[,heavy])");
    fcst->add_option("--model", model_path, "predictor model (predicted inflow)");
    fcst->add_option("--day", day_path, "day CSV feeding the predictor");
    fcst->add_option("--t0", t0_min, "prediction minute within the day");
    fcst->add_option("--output-every", output_every, "trajectory sampling period");

    // eval
    std::string eval_forecast, eval_reference, eval_out = "error_curve.csv";
    auto* eval = app.add_subcommand("eval", "relative L1 error between trajectories");
    eval->add_option("--forecast", eval_forecast)->required();
    eval->add_option("--reference", eval_reference)->required();
    eval->add_option("--out", eval_out);

    // demo-academic
    int resolution = 200;
    std::string demo_out;
    auto* demo = app.add_subcommand("demo-academic", "run the normalized benchmark");
    demo->add_option("--resolution", resolution, "cells on [0,1]");
    demo->add_option("--out", demo_out, "directory for trajectories and the JSON report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_synth(out_dir, days, n_events, archetype, seed, scenario_path);
        if (label->parsed()) return cmd_label(label_data, label_out, half_width, passes);
        if (train_fc->parsed()) return train_classifier(fc_args, false, pa);
        if (train_fp->parsed()) return train_classifier(fp_args, true, pa);
        if (train_p->parsed()) return cmd_train_p(p_args, horizon_min);
        if (detect->parsed()) return cmd_detect(model_path, day_path, sensor_id, infer_out);
        if (predict_volume->parsed())
            return cmd_predict_volume(model_path, day_path, group_id, infer_out);
        if (nc->parsed())
            return cmd_nowcast(layout_path, nowcast_out, t0, dt_past, dx, approach, output_every);
        if (fcst->parsed())
            return cmd_forecast(state_path, diagram_path, forecast_out, fut, inflow, flux_arg,
                                model_path, day_path, t0_min, output_every);
        if (eval->parsed()) return cmd_eval(eval_forecast, eval_reference, eval_out);
        if (demo->parsed()) return cmd_demo_academic(resolution, demo_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

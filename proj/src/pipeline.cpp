#include "trafcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace trafcast {

void SegmentLayout::validate() const {
    if (sensors.size() < 2) throw std::invalid_argument("layout needs at least 2 sensors");
    for (size_t i = 1; i < sensors.size(); ++i)
        if (!(sensors[i].position > sensors[i - 1].position))
            throw std::invalid_argument("sensor positions must be strictly increasing");
}

namespace {

std::vector<int> segment_cell_counts(const SegmentLayout& layout, double dx) {
    std::vector<int> counts;
    for (int k = 0; k < layout.n_segments(); ++k) {
        const double len = layout.sensors[k + 1].position - layout.sensors[k].position;
        const int n = std::max(2, static_cast<int>(std::lround(len / dx)));
        if (std::abs(n * dx - len) > 1e-9 * std::max(1.0, len))
            throw std::invalid_argument("cell size does not divide segment " +
                                        std::to_string(k) + " evenly");
        counts.push_back(n);
    }
    return counts;
}

void check_history(const SegmentLayout& layout, double t_start, int n_classes) {
    for (const auto& s : layout.sensors)
        for (int c = 0; c < n_classes; ++c)
            if (s.flux[c].t0 > t_start + 1e-9)
                throw std::runtime_error(
                    "sensor at x=" + std::to_string(s.position) + " covers history from minute " +
                    std::to_string(s.flux[c].t0) + "; warm-up starts at minute " +
                    std::to_string(t_start));
}

BoundaryStrategy segment_boundary(const NowcastConfig& config, const SensorSeries& s, int cls,
                                  bool is_left) {
    if (config.approach == BoundaryApproach::DensityBased)
        return BoundaryStrategy::density_from_sensor(s.flux[cls], s.regime[cls]);
    return BoundaryStrategy::flux_injection(s.flux[cls], is_left ? true : config.project_outflow);
}

// Runs each segment from an empty road and concatenates the per-segment
// results onto one grid. run_segment(k, grid) performs the actual simulation.
NowcastResult assemble_nowcast(const SegmentLayout& layout, const NowcastConfig& config,
                               int n_classes,
                               const std::function<Trajectory(int, const Grid&)>& run_segment) {
    layout.validate();
    if (config.dt_past <= 0.0) throw std::invalid_argument("dt_past must be positive");
    if (config.dx <= 0.0) throw std::invalid_argument("dx must be positive");
    check_history(layout, config.t0 - config.dt_past, n_classes);

    const std::vector<int> counts = segment_cell_counts(layout, config.dx);
    const int total = std::accumulate(counts.begin(), counts.end(), 0);

    NowcastResult result;
    result.grid = Grid(layout.sensors.front().position, layout.sensors.back().position, total);

    std::vector<Trajectory> runs;
    for (int k = 0; k < layout.n_segments(); ++k) {
        const Grid seg_grid(layout.sensors[k].position, layout.sensors[k + 1].position, counts[k]);
        runs.push_back(run_segment(k, seg_grid));
        result.segment_min_density.push_back(runs.back().states.back().min_density_seen);
    }

    size_t n_times = runs.front().times.size();
    for (const auto& r : runs) n_times = std::min(n_times, r.times.size());

    auto concat_at = [&](size_t i) {
        RoadState s;
        s.rho.assign(n_classes, {});
        s.time = runs.front().times[i];
        for (const auto& r : runs) {
            const RoadState& seg = r.states[i];
            s.min_density_seen = std::min(s.min_density_seen, seg.min_density_seen);
            for (int c = 0; c < n_classes; ++c)
                s.rho[c].insert(s.rho[c].end(), seg.rho[c].begin(), seg.rho[c].end());
        }
        return s;
    };

    if (config.output_every > 0.0)
        for (size_t i = 0; i < n_times; ++i) {
            result.trajectory.times.push_back(runs.front().times[i]);
            result.trajectory.states.push_back(concat_at(i));
        }
    result.state = concat_at(n_times - 1);
    return result;
}

RunOptions nowcast_run_options(const NowcastConfig& config) {
    RunOptions opts;
    opts.horizon = config.dt_past;
    opts.cfl_safety = config.cfl_safety;
    opts.output_every = config.output_every;
    return opts;
}

}  // namespace

NowcastResult nowcast(const SegmentLayout& layout, const NowcastConfig& config,
                      const SingleClassFD& fd) {
    const double t_start = config.t0 - config.dt_past;
    const RunOptions opts = nowcast_run_options(config);
    return assemble_nowcast(layout, config, 1, [&](int k, const Grid& grid) {
        const BoundaryStrategy left = segment_boundary(config, layout.sensors[k], 0, true);
        const BoundaryStrategy right = segment_boundary(config, layout.sensors[k + 1], 0, false);
        RoadState empty = RoadState::single(std::vector<double>(grid.n_cells, 0.0), t_start);
        return run(std::move(empty), fd, grid, left, right, {}, opts);
    });
}

NowcastResult nowcast_two_class(const SegmentLayout& layout, const NowcastConfig& config,
                                const TwoClassFD& fd) {
    const double t_start = config.t0 - config.dt_past;
    const RunOptions opts = nowcast_run_options(config);
    return assemble_nowcast(layout, config, 2, [&](int k, const Grid& grid) {
        std::array<BoundaryStrategy, 2> left = {
            segment_boundary(config, layout.sensors[k], 0, true),
            segment_boundary(config, layout.sensors[k], 1, true)};
        std::array<BoundaryStrategy, 2> right = {
            segment_boundary(config, layout.sensors[k + 1], 0, false),
            segment_boundary(config, layout.sensors[k + 1], 1, false)};
        const std::vector<double> zero(grid.n_cells, 0.0);
        RoadState empty = RoadState::two_class(zero, zero, t_start);
        return run_two_class(std::move(empty), fd, grid, left, right, {}, opts);
    });
}

namespace {

void check_forecast_initial(const RoadState& initial, const Grid& grid) {
    for (const auto& cls : initial.rho) {
        if (static_cast<int>(cls.size()) != grid.n_cells)
            throw std::invalid_argument("initial state does not match the grid");
        for (double r : cls)
            if (r < -1e-12) throw std::invalid_argument("initial state has negative densities");
    }
}

Trajectory initial_only(const RoadState& initial) {
    Trajectory t;
    t.times.push_back(initial.time);
    t.states.push_back(initial);
    return t;
}

RunOptions forecast_run_options(const ForecastConfig& config) {
    RunOptions opts;
    opts.horizon = config.horizon;
    opts.cfl_safety = config.cfl_safety;
    opts.output_every = config.output_every;
    return opts;
}

BoundaryStrategy forecast_inflow(const ForecastConfig& config, double flux) {
    const double q = config.inflow == InflowSource::NullInflow ? 0.0 : flux;
    return BoundaryStrategy::flux_injection(SampledSeries::constant(q), true);
}

BoundaryStrategy forecast_outflow(const ForecastConfig& config) {
    if (config.rho_out == 0.0) return BoundaryStrategy::free_outflow();
    return BoundaryStrategy::dirichlet(SampledSeries::constant(config.rho_out));
}

}  // namespace

Trajectory forecast(const RoadState& initial, const Grid& grid, const ForecastConfig& config,
                    const SingleClassFD& fd, double inflow_flux) {
    check_forecast_initial(initial, grid);
    if (config.horizon <= 0.0) return initial_only(initial);
    return run(initial, fd, grid, forecast_inflow(config, inflow_flux),
               forecast_outflow(config), {}, forecast_run_options(config));
}

Trajectory forecast_two_class(const RoadState& initial, const Grid& grid,
                              const ForecastConfig& config, const TwoClassFD& fd,
                              const std::array<double, 2>& inflow_flux) {
    check_forecast_initial(initial, grid);
    if (config.horizon <= 0.0) return initial_only(initial);
    const std::array<BoundaryStrategy, 2> left = {forecast_inflow(config, inflow_flux[0]),
                                                  forecast_inflow(config, inflow_flux[1])};
    const std::array<BoundaryStrategy, 2> right = {forecast_outflow(config),
                                                   forecast_outflow(config)};
    return run_two_class(initial, fd, grid, left, right, {}, forecast_run_options(config));
}

std::array<double, 2> predicted_inflow(const Network& predictor, const Matrix& day_inputs,
                                       int t0, double horizon) {
    const auto it = predictor.metadata.find("horizon");
    if (it == predictor.metadata.end() || std::stod(it->second) != horizon)
        throw std::invalid_argument("predictor horizon does not match the forecast horizon");
    if (t0 < 0 || t0 >= day_inputs.rows) throw std::invalid_argument("t0 outside the day");

    Matrix history(t0 + 1, day_inputs.cols);
    std::copy(day_inputs.a.begin(), day_inputs.a.begin() + history.a.size(), history.a.begin());
    const Matrix out = predict(predictor, history);
    std::array<double, 2> q = {std::max(0.0, out(t0, 0)), 0.0};
    if (out.cols > 1) q[1] = std::max(0.0, out(t0, 1));
    return q;
}

double relative_l1_error(const std::vector<double>& forecast_rho,
                         const std::vector<double>& reference_rho, double dx) {
    if (forecast_rho.size() != reference_rho.size())
        throw std::invalid_argument("density arrays differ in length");
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < forecast_rho.size(); ++j) {
        num += std::abs(forecast_rho[j] - reference_rho[j]) * dx;
        den += std::abs(reference_rho[j]) * dx;
    }
    if (den == 0.0) throw std::invalid_argument("reference density is identically zero");
    return num / den;
}

namespace {

// Reads a virtual sensor off the reference trajectory: the cell just upstream
// of the position (the cell itself at the road ends).
int sensor_cell(const Grid& grid, double position) {
    const int i = static_cast<int>(std::lround((position - grid.x_min) / grid.dx()));
    return std::clamp(i - 1 + (i == 0 ? 1 : 0), 0, grid.n_cells - 1);
}

SensorSeries sample_sensor(const Trajectory& traj, const Grid& grid, const SingleClassFD& fd,
                           double position, double sample_dt) {
    SensorSeries s;
    s.position = position;
    const int j = sensor_cell(grid, position);
    s.flux[0].t0 = traj.times.front();
    s.flux[0].dt = sample_dt;
    s.regime[0].t0 = traj.times.front();
    s.regime[0].dt = sample_dt;
    for (const RoadState& st : traj.states) {
        const double rho = std::clamp(st.rho[0][j], 0.0, fd.rho_max());
        s.flux[0].values.push_back(fd.flux(rho));
        s.regime[0].values.push_back(rho > fd.sigma() ? Regime::Congested : Regime::Free);
    }
    return s;
}

}  // namespace

AcademicReport experiment_academic(int resolution) {
    const SingleClassFD fd(1.0, 1.0);
    const double sensor_up = 0.45, sensor_down = 0.8;
    const double horizon = 1.2;
    const double sample_dt = 0.005;

    AcademicReport rep;
    rep.grid = Grid(0.0, 1.0, resolution);

    // Reference: dense platoon on x < 0.52, a capacity bottleneck at x = 0.6,
    // inflow held at the platoon density.
    std::vector<double> rho0(resolution, 0.0);
    for (int j = 0; j < resolution; ++j)
        if (rep.grid.center(j) < 0.52) rho0[j] = 0.45;

    RunOptions ref_opts;
    ref_opts.horizon = horizon;
    ref_opts.output_every = sample_dt;
    const Bottleneck bottleneck{0.6, 0.3};
    rep.reference = run(RoadState::single(rho0, 0.0), fd, rep.grid,
                        BoundaryStrategy::dirichlet(SampledSeries::constant(0.45)),
                        BoundaryStrategy::free_outflow(), {bottleneck}, ref_opts);

    const int j_up = sensor_cell(rep.grid, sensor_up);
    for (size_t i = 0; i < rep.reference.states.size(); ++i)
        if (rep.reference.states[i].rho[0][j_up] > fd.sigma()) {
            rep.queue_reached_sensor = true;
            rep.queue_arrival_time = rep.reference.times[i];
            break;
        }

    // The reconstructions only see the two sensors (plus the road ends) and
    // know nothing about the bottleneck.
    SegmentLayout layout;
    for (double p : {0.0, sensor_up, sensor_down, 1.0})
        layout.sensors.push_back(sample_sensor(rep.reference, rep.grid, fd, p, sample_dt));

    NowcastConfig nc;
    nc.t0 = horizon;
    nc.dt_past = horizon;
    nc.dx = 1.0 / resolution;
    nc.output_every = 4 * sample_dt;

    nc.approach = BoundaryApproach::DensityBased;
    NowcastResult density_run = nowcast(layout, nc, fd);
    rep.density_based = std::move(density_run.trajectory);

    nc.approach = BoundaryApproach::FluxBased;
    NowcastResult flux_run = nowcast(layout, nc, fd);
    rep.flux_based = std::move(flux_run.trajectory);

    rep.density_within_bounds = density_run.state.min_density_seen >= -1e-9;
    for (const RoadState& st : rep.density_based.states)
        for (double r : st.rho[0])
            if (r < -1e-9 || r > 1.0 + 1e-9) rep.density_within_bounds = false;

    rep.congested_upstream = false;
    rep.free_flow_downstream = true;
    const RoadState& final_db = rep.density_based.states.back();
    for (int j = 0; j < rep.grid.n_cells; ++j) {
        const double x = rep.grid.center(j);
        const double r = final_db.rho[0][j];
        if (x > sensor_up - 0.1 && x < sensor_up && r >= 0.9) rep.congested_upstream = true;
        if (x > sensor_up && x < sensor_down && r > fd.sigma() + 0.02)
            rep.free_flow_downstream = false;
    }

    // Negative densities show up at the downstream end of the middle segment,
    // where the raw sensor flux is extracted regardless of what is available.
    rep.negative_density_near_outflow = flux_run.segment_min_density[1] < -1e-9;
    rep.min_density_flux_based =
        *std::min_element(flux_run.segment_min_density.begin(),
                          flux_run.segment_min_density.end());
    return rep;
}

void write_academic_report_json(const std::string& path, const AcademicReport& report) {
    nlohmann::json j;
    j["signatures"]["queue_reached_sensor"] = report.queue_reached_sensor;
    j["signatures"]["density_within_bounds"] = report.density_within_bounds;
    j["signatures"]["congested_upstream"] = report.congested_upstream;
    j["signatures"]["free_flow_downstream"] = report.free_flow_downstream;
    j["signatures"]["negative_density_near_outflow"] = report.negative_density_near_outflow;
    j["queue_arrival_time"] = report.queue_arrival_time;
    j["min_density_flux_based"] = report.min_density_flux_based;
    j["all_passed"] = report.all_passed();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(1) << '\n';
}

ForecastErrorCurves experiment_forecast_error(const SegmentLayout& layout,
                                              const NowcastConfig& nowcast_config,
                                              const TwoClassFD& fd, double horizon,
                                              const std::array<double, 2>& predicted_flux) {
    NowcastResult base = nowcast_two_class(layout, nowcast_config, fd);

    ForecastConfig fc;
    fc.horizon = horizon;
    fc.output_every = 1.0;

    fc.inflow = InflowSource::PredictedConstant;
    const Trajectory predicted = forecast_two_class(base.state, base.grid, fc, fd, predicted_flux);
    fc.inflow = InflowSource::NullInflow;
    const Trajectory drained = forecast_two_class(base.state, base.grid, fc, fd, {0.0, 0.0});

    ForecastErrorCurves curves;
    const size_t n = std::min(predicted.times.size(), drained.times.size());
    NowcastConfig ref_config = nowcast_config;
    for (size_t i = 0; i < n; ++i) {
        const double t = predicted.times[i];
        ref_config.t0 = t;
        ref_config.output_every = 0.0;
        const NowcastResult ref = nowcast_two_class(layout, ref_config, fd);
        curves.minutes.push_back(t - nowcast_config.t0);
        for (int c = 0; c < 2; ++c) {
            curves.predicted[c].push_back(
                relative_l1_error(predicted.states[i].rho[c], ref.state.rho[c], base.grid.dx()));
            curves.null_inflow[c].push_back(
                relative_l1_error(drained.states[i].rho[c], ref.state.rho[c], base.grid.dx()));
        }
    }
    return curves;
}

void write_error_curves_csv(const std::string& path, const ForecastErrorCurves& curves) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "minute,e_light_predicted,e_heavy_predicted,e_light_null,e_heavy_null\n";
    for (size_t i = 0; i < curves.minutes.size(); ++i)
        out << curves.minutes[i] << ',' << curves.predicted[0][i] << ',' << curves.predicted[1][i]
            << ',' << curves.null_inflow[0][i] << ',' << curves.null_inflow[1][i] << '\n';
}

}  // namespace trafcast

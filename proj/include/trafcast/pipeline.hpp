#pragma once

#include <array>
#include <string>
#include <vector>

#include "trafcast/fundamental_diagram.hpp"
#include "trafcast/godunov.hpp"
#include "trafcast/neural.hpp"

namespace trafcast {

// Minute-resolution measurements attached to one sensor position. Single-class
// setups use index 0 of the per-class arrays only.
struct SensorSeries {
    double position = 0.0;  // km
    std::array<SampledSeries, 2> flux;
    std::array<RegimeSeries, 2> regime;
};

// Sensors s^1 < ... < s^{N+1} bounding N road segments (s^k, s^{k+1}).
struct SegmentLayout {
    std::vector<SensorSeries> sensors;

    int n_segments() const { return static_cast<int>(sensors.size()) - 1; }
    void validate() const;  // throws std::invalid_argument
};

enum class BoundaryApproach { FluxBased, DensityBased };

struct NowcastConfig {
    double t0 = 0.0;        // nowcast instant (minutes)
    double dt_past = 120.0; // warm-up window; the road is empty at t0 - dt_past
    BoundaryApproach approach = BoundaryApproach::DensityBased;
    double dx = 0.1;        // target cell size; must divide every segment length
    double cfl_safety = 0.9;
    // FluxBased only: clamp the outflow flux into the admissible set. Off by
    // default -- the raw sensor flux at the downstream sensor is exactly what
    // produces the negative-density pathology the approach is known for.
    bool project_outflow = false;
    double output_every = 0.0;  // record concatenated states every so often
};

struct NowcastResult {
    Grid grid;            // uniform grid over [s^1, s^{N+1}]
    RoadState state;      // concatenated per-segment states at t0
    Trajectory trajectory;  // recorded only when output_every > 0
    std::vector<double> segment_min_density;  // per segment, over all steps
};

NowcastResult nowcast(const SegmentLayout& layout, const NowcastConfig& config,
                      const SingleClassFD& fd);
NowcastResult nowcast_two_class(const SegmentLayout& layout, const NowcastConfig& config,
                                const TwoClassFD& fd);

enum class InflowSource { PredictedConstant, LastValue, NullInflow };

struct ForecastConfig {
    double horizon = 30.0;  // minutes
    InflowSource inflow = InflowSource::PredictedConstant;
    double rho_out = 0.0;   // outflow ghost density; 0 = maximal outflow
    double cfl_safety = 0.9;
    double output_every = 0.0;
};

// Whole-road run from the nowcast state: constant per-class inflow flux
// (veh/min), injected with projection; free outflow. With horizon 0 the
// trajectory holds just the initial state. Throws std::invalid_argument on an
// initial state with negative densities.
Trajectory forecast(const RoadState& initial, const Grid& grid, const ForecastConfig& config,
                    const SingleClassFD& fd, double inflow_flux);
Trajectory forecast_two_class(const RoadState& initial, const Grid& grid,
                              const ForecastConfig& config, const TwoClassFD& fd,
                              const std::array<double, 2>& inflow_flux);

// Runs the volume predictor on the day's history up to minute t0 and returns
// the per-class mean inflow (veh/min) over the next horizon minutes. Throws
// std::invalid_argument when the model's recorded horizon differs.
std::array<double, 2> predicted_inflow(const Network& predictor, const Matrix& day_inputs,
                                       int t0, double horizon);

// E = ||rho_f - rho_n||_L1 / ||rho_n||_L1, dx-weighted sums on a shared grid.
// Throws std::invalid_argument on a size mismatch or an identically zero
// reference.
double relative_l1_error(const std::vector<double>& forecast_rho,
                         const std::vector<double>& reference_rho, double dx);

// Normalized single-road benchmark: reference run with a bottleneck, then
// density-based and flux-based reconstructions from two interior sensors that
// do not know about the bottleneck.
struct AcademicReport {
    bool queue_reached_sensor = false;    // reference: rho > sigma at x = 0.45
    bool density_within_bounds = false;   // density-based states stay in [0, 1]
    bool congested_upstream = false;      // rho >= 0.9 just upstream of 0.45
    bool free_flow_downstream = false;    // no congestion on (0.45, 0.8) at the end
    bool negative_density_near_outflow = false;  // flux-based, segment ending at 0.8
    double queue_arrival_time = -1.0;
    double min_density_flux_based = 0.0;

    Grid grid;
    Trajectory reference;
    Trajectory density_based;
    Trajectory flux_based;

    bool all_passed() const {
        return queue_reached_sensor && density_within_bounds && congested_upstream &&
               free_flow_downstream && negative_density_near_outflow;
    }
};

AcademicReport experiment_academic(int resolution = 200);

void write_academic_report_json(const std::string& path, const AcademicReport& report);

// Forecast-vs-nowcast error curves on a synthetic two-class road: the
// reference is the nowcast recomputed at every evaluation minute.
struct ForecastErrorCurves {
    std::vector<double> minutes;                      // 0 .. horizon
    std::array<std::vector<double>, 2> predicted;     // E_L, E_H with predicted inflow
    std::array<std::vector<double>, 2> null_inflow;   // E_L, E_H with zero inflow
};

ForecastErrorCurves experiment_forecast_error(const SegmentLayout& layout,
                                              const NowcastConfig& nowcast_config,
                                              const TwoClassFD& fd, double horizon,
                                              const std::array<double, 2>& predicted_flux);

void write_error_curves_csv(const std::string& path, const ForecastErrorCurves& curves);

}  // namespace trafcast

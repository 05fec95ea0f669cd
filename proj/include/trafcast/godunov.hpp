#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "trafcast/fundamental_diagram.hpp"
#include "trafcast/types.hpp"

namespace trafcast {

// Uniform 1-D finite-volume grid on [x_min, x_max].
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_cells = 0;

    Grid() = default;
    Grid(double xmin, double xmax, int n);

    double dx() const { return (x_max - x_min) / n_cells; }
    double center(int j) const { return x_min + (j + 0.5) * dx(); }
    double interface_pos(int i) const { return x_min + i * dx(); }  // i = 0..n_cells
};

// Piecewise-constant time series: value on [t0 + k*dt, t0 + (k+1)*dt) is
// values[k]; held at the last sample beyond the covered range.
struct SampledSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> values;

    SampledSeries() = default;
    SampledSeries(double start, double step, std::vector<double> v)
        : t0(start), dt(step), values(std::move(v)) {}
    static SampledSeries constant(double v) { return SampledSeries(0.0, 1.0, {v}); }

    double at(double t) const;
};

struct RegimeSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<Regime> values;

    static RegimeSeries constant(Regime r) { return RegimeSeries{0.0, 1.0, {r}}; }
    Regime at(double t) const;
};

struct BoundaryStrategy {
    enum class Kind {
        DirichletDensity,   // ghost density from a prescribed series
        FluxInjection,      // sensor flux replaces the boundary interface flux
        DensityFromSensor,  // sensor flux inverted to a ghost density via the diagram
        FreeOutflow,        // ghost density 0
        Closed              // zero flux
    };

    Kind kind = Kind::Closed;
    SampledSeries flux;
    SampledSeries density;
    RegimeSeries regime;
    bool project = true;  // FluxInjection only: clamp into the admissible set

    static BoundaryStrategy closed();
    static BoundaryStrategy free_outflow();
    static BoundaryStrategy dirichlet(SampledSeries density);
    static BoundaryStrategy flux_injection(SampledSeries flux, bool project);
    static BoundaryStrategy density_from_sensor(SampledSeries flux, RegimeSeries regime);
};

// Interface capacity restriction min(F, alpha * f_max) inside the window.
struct Bottleneck {
    double position = 0.0;
    double capacity_factor = 1.0;  // alpha in [0,1]
    double t_start = -std::numeric_limits<double>::infinity();
    double t_end = std::numeric_limits<double>::infinity();

    bool active(double t) const { return t >= t_start && t <= t_end; }
};

// Cell-averaged densities per vehicle class. The flux-based boundary strategy
// may legitimately push densities below zero (sensor data incompatible with
// the admissible set); min_density_seen records it instead of masking it.
struct RoadState {
    std::vector<std::vector<double>> rho;  // [class][cell]
    double time = 0.0;
    double min_density_seen = 0.0;

    static RoadState single(std::vector<double> density, double t = 0.0);
    static RoadState two_class(std::vector<double> light, std::vector<double> heavy,
                               double t = 0.0);

    int n_classes() const { return static_cast<int>(rho.size()); }
    double mass(int cls, double dx) const;
    bool within_bounds(double rho_max_by_class_0, double rho_max_by_class_1 = 0.0) const;
};

// Four-case Godunov interface flux for a concave diagram.
// Throws std::out_of_range when a density is outside [0, rho_max].
double godunov_flux(const SingleClassFD& fd, double rho_minus, double rho_plus);

// CFL-limited time step: dt = safety * dx / max|f'|, with max|f'| = v_max.
double cfl_dt(const SingleClassFD& fd, double dx, double safety);
double cfl_dt(const TwoClassFD& fd, double dx, double safety);

// One conservative update. Throws std::runtime_error on CFL violation.
void step(RoadState& state, const SingleClassFD& fd, const Grid& grid,
          const BoundaryStrategy& left, const BoundaryStrategy& right,
          const std::vector<Bottleneck>& bottlenecks, double dt);

// Two-class update: each class advanced with a Godunov-type flux on its own
// sectional diagram, the other class frozen at the interface average of the
// pre-step state (Jacobi-style update).
void step_two_class(RoadState& state, const TwoClassFD& fd, const Grid& grid,
                    const std::array<BoundaryStrategy, 2>& left,
                    const std::array<BoundaryStrategy, 2>& right,
                    const std::vector<Bottleneck>& bottlenecks, double dt);

struct Trajectory {
    std::vector<double> times;
    std::vector<RoadState> states;
};

struct RunOptions {
    double horizon = 0.0;       // simulated duration
    double dt = 0.0;            // fixed step; 0 means auto-CFL
    double cfl_safety = 0.9;
    double output_every = 0.0;  // 0 means record final state only
};

Trajectory run(RoadState initial, const SingleClassFD& fd, const Grid& grid,
               const BoundaryStrategy& left, const BoundaryStrategy& right,
               const std::vector<Bottleneck>& bottlenecks, const RunOptions& opts);

Trajectory run_two_class(RoadState initial, const TwoClassFD& fd, const Grid& grid,
                         const std::array<BoundaryStrategy, 2>& left,
                         const std::array<BoundaryStrategy, 2>& right,
                         const std::vector<Bottleneck>& bottlenecks, const RunOptions& opts);

// Trajectory export, columns t,x,rho_light,rho_heavy,v_light,v_heavy.
// Velocity is f/rho, or the free-flow speed when rho < 1e-9. Single-class
// trajectories leave the heavy columns empty.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const Grid& grid,
                          const SingleClassFD* fd1, const TwoClassFD* fd2);

}  // namespace trafcast

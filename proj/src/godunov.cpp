#include "trafcast/godunov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace trafcast {

Grid::Grid(double xmin, double xmax, int n) : x_min(xmin), x_max(xmax), n_cells(n) {
    if (n < 2) throw std::invalid_argument("grid needs at least 2 cells");
    if (xmax <= xmin) throw std::invalid_argument("grid needs x_max > x_min");
}

double SampledSeries::at(double t) const {
    if (values.empty()) throw std::runtime_error("empty series");
    const double k = std::floor((t - t0) / dt);
    const long i = std::clamp(static_cast<long>(k), 0L, static_cast<long>(values.size()) - 1);
    return values[static_cast<size_t>(i)];
}

Regime RegimeSeries::at(double t) const {
    if (values.empty()) throw std::runtime_error("empty regime series");
    const double k = std::floor((t - t0) / dt);
    const long i = std::clamp(static_cast<long>(k), 0L, static_cast<long>(values.size()) - 1);
    return values[static_cast<size_t>(i)];
}

BoundaryStrategy BoundaryStrategy::closed() {
    BoundaryStrategy b;
    b.kind = Kind::Closed;
    return b;
}
BoundaryStrategy BoundaryStrategy::free_outflow() {
    BoundaryStrategy b;
    b.kind = Kind::FreeOutflow;
    return b;
}
BoundaryStrategy BoundaryStrategy::dirichlet(SampledSeries density) {
    BoundaryStrategy b;
    b.kind = Kind::DirichletDensity;
    b.density = std::move(density);
    return b;
}
BoundaryStrategy BoundaryStrategy::flux_injection(SampledSeries flux, bool project) {
    BoundaryStrategy b;
    b.kind = Kind::FluxInjection;
    b.flux = std::move(flux);
    b.project = project;
    return b;
}
BoundaryStrategy BoundaryStrategy::density_from_sensor(SampledSeries flux, RegimeSeries regime) {
    BoundaryStrategy b;
    b.kind = Kind::DensityFromSensor;
    b.flux = std::move(flux);
    b.regime = std::move(regime);
    return b;
}

RoadState RoadState::single(std::vector<double> density, double t) {
    RoadState s;
    s.rho.push_back(std::move(density));
    s.time = t;
    return s;
}

RoadState RoadState::two_class(std::vector<double> light, std::vector<double> heavy, double t) {
    if (light.size() != heavy.size())
        throw std::invalid_argument("class density arrays must have equal length");
    RoadState s;
    s.rho.push_back(std::move(light));
    s.rho.push_back(std::move(heavy));
    s.time = t;
    return s;
}

double RoadState::mass(int cls, double dx) const {
    double m = 0.0;
    for (double r : rho[cls]) m += r;
    return m * dx;
}

bool RoadState::within_bounds(double max0, double max1) const {
    const double eps = 1e-12;
    for (int c = 0; c < n_classes(); ++c) {
        const double hi = (c == 0 ? max0 : max1) + eps;
        for (double r : rho[c])
            if (r < -eps || r > hi) return false;
    }
    return true;
}

double godunov_flux(const SingleClassFD& fd, double rho_minus, double rho_plus) {
    if (rho_minus < 0.0 || rho_minus > fd.rho_max() || rho_plus < 0.0 || rho_plus > fd.rho_max())
        throw std::out_of_range("density outside [0, rho_max]");
    if (rho_minus <= rho_plus) return std::min(fd.flux(rho_minus), fd.flux(rho_plus));
    const double sigma = fd.sigma();
    if (rho_minus < sigma) return fd.flux(rho_minus);
    if (rho_plus <= sigma) return fd.f_max();  // transonic: rho- >= sigma >= rho+
    return fd.flux(rho_plus);
}

double cfl_dt(const SingleClassFD& fd, double dx, double safety) {
    if (dx <= 0.0) throw std::invalid_argument("dx must be positive");
    return safety * dx / fd.v_max();
}

double cfl_dt(const TwoClassFD& fd, double dx, double safety) {
    if (dx <= 0.0) throw std::invalid_argument("dx must be positive");
    return safety * dx / std::max(fd.v_max_light, fd.v_max_heavy);
}

namespace {

double clamp_density(double rho, double rho_max) { return std::clamp(rho, 0.0, rho_max); }

// Nearest interior interface to a bottleneck position; -1 when outside.
int bottleneck_interface(const Grid& grid, double pos) {
    const int i = static_cast<int>(std::lround((pos - grid.x_min) / grid.dx()));
    return (i >= 1 && i <= grid.n_cells - 1) ? i : -1;
}

void check_cfl(double dt, double dt_max) {
    if (dt > dt_max * (1.0 + 1e-12))
        throw std::runtime_error("CFL violation: dt exceeds stability limit");
}

void apply_update(std::vector<double>& rho, const std::vector<double>& flux, double lambda,
                  double& min_seen) {
    const int n = static_cast<int>(rho.size());
    for (int j = 0; j < n; ++j) {
        rho[j] -= lambda * (flux[j + 1] - flux[j]);
        min_seen = std::min(min_seen, rho[j]);
    }
}

}  // namespace

void step(RoadState& state, const SingleClassFD& fd, const Grid& grid,
          const BoundaryStrategy& left, const BoundaryStrategy& right,
          const std::vector<Bottleneck>& bottlenecks, double dt) {
    check_cfl(dt, cfl_dt(fd, grid.dx(), 1.0));
    if (state.n_classes() != 1 || static_cast<int>(state.rho[0].size()) != grid.n_cells)
        throw std::invalid_argument("state does not match grid");

    auto& rho = state.rho[0];
    const int n = grid.n_cells;
    const double t = state.time;
    const double rmax = fd.rho_max();
    std::vector<double> flux(n + 1, 0.0);

    for (int i = 1; i < n; ++i)
        flux[i] = godunov_flux(fd, clamp_density(rho[i - 1], rmax), clamp_density(rho[i], rmax));

    const double first = clamp_density(rho[0], rmax);
    const double last = clamp_density(rho[n - 1], rmax);

    switch (left.kind) {
        case BoundaryStrategy::Kind::Closed:
            flux[0] = 0.0;
            break;
        case BoundaryStrategy::Kind::FreeOutflow:
            flux[0] = godunov_flux(fd, 0.0, first);
            break;
        case BoundaryStrategy::Kind::DirichletDensity:
            flux[0] = godunov_flux(fd, clamp_density(left.density.at(t), rmax), first);
            break;
        case BoundaryStrategy::Kind::DensityFromSensor: {
            const double fs = std::clamp(left.flux.at(t), 0.0, fd.f_max());
            flux[0] = godunov_flux(fd, fd.invert(fs, left.regime.at(t)), first);
            break;
        }
        case BoundaryStrategy::Kind::FluxInjection: {
            double fs = left.flux.at(t);
            if (left.project) fs = std::clamp(fs, 0.0, fd.supply(first));
            flux[0] = fs;
            break;
        }
    }

    switch (right.kind) {
        case BoundaryStrategy::Kind::Closed:
            flux[n] = 0.0;
            break;
        case BoundaryStrategy::Kind::FreeOutflow:
            flux[n] = godunov_flux(fd, last, 0.0);
            break;
        case BoundaryStrategy::Kind::DirichletDensity:
            flux[n] = godunov_flux(fd, last, clamp_density(right.density.at(t), rmax));
            break;
        case BoundaryStrategy::Kind::DensityFromSensor: {
            const double fs = std::clamp(right.flux.at(t), 0.0, fd.f_max());
            flux[n] = godunov_flux(fd, last, fd.invert(fs, right.regime.at(t)));
            break;
        }
        case BoundaryStrategy::Kind::FluxInjection: {
            double fs = right.flux.at(t);
            if (right.project) fs = fd.admissible_flux_projection(fs, last);
            flux[n] = fs;
            break;
        }
    }

    for (const auto& bn : bottlenecks) {
        if (!bn.active(t)) continue;
        const int i = bottleneck_interface(grid, bn.position);
        if (i >= 0) flux[i] = std::min(flux[i], bn.capacity_factor * fd.f_max());
    }

    apply_update(rho, flux, dt / grid.dx(), state.min_density_seen);
    state.time += dt;
}

namespace {

// Four-case Godunov flux on a two-class section (no range check: own density
// may transiently exceed the effective maximum).
double section_godunov_flux(const FdSection& sec, double rho_minus, double rho_plus) {
    if (rho_minus <= rho_plus) return std::min(sec.flux(rho_minus), sec.flux(rho_plus));
    const double sigma = sec.sigma();
    if (rho_minus < sigma) return sec.flux(rho_minus);
    if (rho_plus <= sigma) return sec.capacity();
    return sec.flux(rho_plus);
}

struct ClassGhosts {
    // A ghost density per class; NaN when the strategy works on fluxes.
    std::array<double, 2> rho{};
    std::array<bool, 2> has_ghost{};
};

// Resolve boundary ghost densities for both classes on one side. The coupled
// inversion is single-pass: light first (other class frozen at the boundary
// cell's heavy density), then heavy at the updated light ghost.
ClassGhosts resolve_ghosts(const std::array<BoundaryStrategy, 2>& strategies,
                           const TwoClassFD& fd, double t, double cell_light,
                           double cell_heavy) {
    ClassGhosts g;
    const std::array<VehicleClass, 2> classes{VehicleClass::Light, VehicleClass::Heavy};
    std::array<double, 2> cells{cell_light, cell_heavy};
    for (int c = 0; c < 2; ++c) {
        const auto& bs = strategies[c];
        const double other = (c == 0) ? cells[1] : (g.has_ghost[0] ? g.rho[0] : cells[0]);
        switch (bs.kind) {
            case BoundaryStrategy::Kind::FreeOutflow:
                g.rho[c] = 0.0;
                g.has_ghost[c] = true;
                break;
            case BoundaryStrategy::Kind::DirichletDensity:
                g.rho[c] = clamp_density(bs.density.at(t), fd.rho_max(classes[c]));
                g.has_ghost[c] = true;
                break;
            case BoundaryStrategy::Kind::DensityFromSensor: {
                const FdSection sec(fd, classes[c], std::max(0.0, other));
                const double fs = std::clamp(bs.flux.at(t), 0.0, sec.capacity());
                g.rho[c] = sec.invert(fs, bs.regime.at(t));
                g.has_ghost[c] = true;
                break;
            }
            case BoundaryStrategy::Kind::Closed:
            case BoundaryStrategy::Kind::FluxInjection:
                // Zero-gradient stand-in when the other class needs a frozen value.
                g.rho[c] = cells[static_cast<size_t>(c)];
                g.has_ghost[c] = false;
                break;
        }
    }
    return g;
}

}  // namespace

void step_two_class(RoadState& state, const TwoClassFD& fd, const Grid& grid,
                    const std::array<BoundaryStrategy, 2>& left,
                    const std::array<BoundaryStrategy, 2>& right,
                    const std::vector<Bottleneck>& bottlenecks, double dt) {
    check_cfl(dt, cfl_dt(fd, grid.dx(), 1.0));
    if (state.n_classes() != 2 || static_cast<int>(state.rho[0].size()) != grid.n_cells)
        throw std::invalid_argument("state does not match grid");

    const int n = grid.n_cells;
    const double t = state.time;
    const std::array<VehicleClass, 2> classes{VehicleClass::Light, VehicleClass::Heavy};

    const auto& light = state.rho[0];
    const auto& heavy = state.rho[1];
    const ClassGhosts gl = resolve_ghosts(left, fd, t, light.front(), heavy.front());
    const ClassGhosts gr = resolve_ghosts(right, fd, t, light.back(), heavy.back());

    std::array<std::vector<double>, 2> flux{std::vector<double>(n + 1, 0.0),
                                            std::vector<double>(n + 1, 0.0)};

    for (int c = 0; c < 2; ++c) {
        const auto& own = state.rho[c];
        const auto& other = state.rho[1 - c];
        const double own_max = fd.rho_max(classes[c]);
        auto& fc = flux[c];

        for (int i = 1; i < n; ++i) {
            const double frozen = std::max(0.0, 0.5 * (other[i - 1] + other[i]));
            const FdSection sec(fd, classes[c], frozen);
            fc[i] = section_godunov_flux(sec, clamp_density(own[i - 1], own_max),
                                         clamp_density(own[i], own_max));
        }

        // Left boundary.
        {
            const auto& bs = left[c];
            const double cell = clamp_density(own.front(), own_max);
            const double frozen =
                std::max(0.0, 0.5 * (gl.rho[1 - c] + other.front()));
            const FdSection sec(fd, classes[c], frozen);
            if (bs.kind == BoundaryStrategy::Kind::Closed) {
                fc[0] = 0.0;
            } else if (bs.kind == BoundaryStrategy::Kind::FluxInjection) {
                double fs = bs.flux.at(t);
                if (bs.project) fs = std::clamp(fs, 0.0, sec.supply(cell));
                fc[0] = fs;
            } else {
                fc[0] = section_godunov_flux(sec, gl.rho[c], cell);
            }
        }

        // Right boundary.
        {
            const auto& bs = right[c];
            const double cell = clamp_density(own.back(), own_max);
            const double frozen =
                std::max(0.0, 0.5 * (gr.rho[1 - c] + other.back()));
            const FdSection sec(fd, classes[c], frozen);
            if (bs.kind == BoundaryStrategy::Kind::Closed) {
                fc[n] = 0.0;
            } else if (bs.kind == BoundaryStrategy::Kind::FluxInjection) {
                double fs = bs.flux.at(t);
                if (bs.project) fs = std::clamp(fs, 0.0, sec.demand(cell));
                fc[n] = fs;
            } else {
                fc[n] = section_godunov_flux(sec, cell, gr.rho[c]);
            }
        }

        for (const auto& bn : bottlenecks) {
            if (!bn.active(t)) continue;
            const int i = bottleneck_interface(grid, bn.position);
            if (i < 0) continue;
            const double frozen = std::max(0.0, 0.5 * (other[i - 1] + other[i]));
            const FdSection sec(fd, classes[c], frozen);
            fc[i] = std::min(fc[i], bn.capacity_factor * sec.capacity());
        }
    }

    const double lambda = dt / grid.dx();
    apply_update(state.rho[0], flux[0], lambda, state.min_density_seen);
    apply_update(state.rho[1], flux[1], lambda, state.min_density_seen);
    state.time += dt;
}

namespace {

template <typename StepFn>
Trajectory run_impl(RoadState state, double dt_fixed, double dt_auto, const RunOptions& opts,
                    StepFn&& do_step) {
    Trajectory traj;
    const double t_end = state.time + opts.horizon;
    traj.times.push_back(state.time);
    traj.states.push_back(state);
    double next_output =
        opts.output_every > 0.0 ? state.time + opts.output_every : t_end;

    while (state.time < t_end - 1e-12) {
        double dt = dt_fixed > 0.0 ? dt_fixed : dt_auto;
        dt = std::min(dt, t_end - state.time);
        dt = std::min(dt, next_output - state.time + 1e-15);
        do_step(state, dt);
        if (state.time >= next_output - 1e-12) {
            traj.times.push_back(state.time);
            traj.states.push_back(state);
            next_output = opts.output_every > 0.0 ? next_output + opts.output_every : t_end;
        }
    }
    if (traj.times.back() < state.time) {
        traj.times.push_back(state.time);
        traj.states.push_back(state);
    }
    return traj;
}

}  // namespace

Trajectory run(RoadState initial, const SingleClassFD& fd, const Grid& grid,
               const BoundaryStrategy& left, const BoundaryStrategy& right,
               const std::vector<Bottleneck>& bottlenecks, const RunOptions& opts) {
    const double dt_auto = cfl_dt(fd, grid.dx(), opts.cfl_safety);
    return run_impl(std::move(initial), opts.dt, dt_auto, opts,
                    [&](RoadState& s, double dt) { step(s, fd, grid, left, right, bottlenecks, dt); });
}

Trajectory run_two_class(RoadState initial, const TwoClassFD& fd, const Grid& grid,
                         const std::array<BoundaryStrategy, 2>& left,
                         const std::array<BoundaryStrategy, 2>& right,
                         const std::vector<Bottleneck>& bottlenecks, const RunOptions& opts) {
    const double dt_auto = cfl_dt(fd, grid.dx(), opts.cfl_safety);
    return run_impl(std::move(initial), opts.dt, dt_auto, opts, [&](RoadState& s, double dt) {
        step_two_class(s, fd, grid, left, right, bottlenecks, dt);
    });
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const Grid& grid,
                          const SingleClassFD* fd1, const TwoClassFD* fd2) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,x,rho_light,rho_heavy,v_light,v_heavy\n";
    const double tiny = 1e-9;
    for (size_t k = 0; k < traj.states.size(); ++k) {
        const RoadState& s = traj.states[k];
        for (int j = 0; j < grid.n_cells; ++j) {
            out << traj.times[k] << ',' << grid.center(j) << ',';
            if (s.n_classes() == 1) {
                const double r = s.rho[0][j];
                double v = fd1 ? fd1->v_max() : 0.0;
                if (fd1 && r >= tiny && r <= fd1->rho_max()) v = fd1->flux(r) / r;
                out << r << ",," << v << ",\n";
            } else {
                const double rl = s.rho[0][j];
                const double rh = s.rho[1][j];
                double vl = fd2 ? fd2->v_max_light : 0.0;
                double vh = fd2 ? fd2->v_max_heavy : 0.0;
                if (fd2 && rl >= tiny) vl = fd2->flux_light(std::max(0.0, rl), std::max(0.0, rh)) / rl;
                if (fd2 && rh >= tiny) vh = fd2->flux_heavy(std::max(0.0, rl), std::max(0.0, rh)) / rh;
                out << rl << ',' << rh << ',' << vl << ',' << vh << '\n';
            }
        }
    }
}

}  // namespace trafcast

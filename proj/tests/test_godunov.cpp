#include "doctest.h"
#include "trafcast/godunov.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace trafcast;

namespace {

const std::vector<Bottleneck> kNoBn;

RoadState uniform_state(int n, double rho) {
    return RoadState::single(std::vector<double>(n, rho));
}

}  // namespace

TEST_CASE("interface flux examples") {
    SingleClassFD fd(1.0, 1.0);
    // Consistency: F(rho, rho) = f(rho).
    for (int k = 0; k <= 20; ++k) {
        const double rho = k / 20.0;
        CHECK(godunov_flux(fd, rho, rho) == doctest::Approx(fd.flux(rho)));
    }
    CHECK(godunov_flux(fd, 0.45, 0.0) == doctest::Approx(0.2475));
    // Transonic rarefaction spans sigma: capacity flux.
    CHECK(godunov_flux(fd, 0.8, 0.2) == doctest::Approx(0.25));
    // Shock with both states free: minimum of the two fluxes.
    CHECK(godunov_flux(fd, 0.2, 0.4) == doctest::Approx(std::min(fd.flux(0.2), fd.flux(0.4))));
    // Congested pair: the wave moves upstream, the downstream state decides.
    CHECK(godunov_flux(fd, 0.9, 0.7) == doctest::Approx(fd.flux(0.7)));
    // Congested shock: supply of the denser downstream state decides.
    CHECK(godunov_flux(fd, 0.7, 0.9) == doctest::Approx(fd.flux(0.9)));
    CHECK_THROWS_AS(godunov_flux(fd, -0.1, 0.5), std::out_of_range);
    CHECK_THROWS_AS(godunov_flux(fd, 0.5, 1.2), std::out_of_range);
}

TEST_CASE("interface flux equals min(demand, supply) and is monotone") {
    SingleClassFD fd(1.0, 1.0);
    const int n = 50;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const double a = static_cast<double>(i) / n;
            const double b = static_cast<double>(j) / n;
            const double f = godunov_flux(fd, a, b);
            CHECK(f == doctest::Approx(std::min(fd.demand(a), fd.supply(b))).epsilon(1e-12));
            // Nondecreasing in the left state, nonincreasing in the right.
            if (i < n) CHECK(godunov_flux(fd, a + 1.0 / n, b) >= f - 1e-12);
            if (j < n) CHECK(godunov_flux(fd, a, b + 1.0 / n) <= f + 1e-12);
        }
    }
}

TEST_CASE("cfl step size") {
    SingleClassFD fd(1.0, 1.0);
    CHECK(cfl_dt(fd, 0.01, 0.9) == doctest::Approx(0.009));
    CHECK(cfl_dt(fd, 0.005, 0.9) == doctest::Approx(0.0045));
    CHECK(cfl_dt(fd, 0.01, 1.0) == doctest::Approx(0.01));
    SingleClassFD fast(1.0, 2.0);
    CHECK(cfl_dt(fast, 0.01, 1.0) == doctest::Approx(0.005));
    CHECK_THROWS_AS(cfl_dt(fd, 0.0, 0.9), std::invalid_argument);

    TwoClassFD tfd;
    tfd.v_max_light = 2.0;
    tfd.v_max_heavy = 1.0;
    CHECK(cfl_dt(tfd, 0.01, 1.0) == doctest::Approx(0.005));
}

TEST_CASE("CFL violation throws") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 50);
    auto state = uniform_state(50, 0.3);
    CHECK_THROWS_AS(step(state, fd, grid, BoundaryStrategy::closed(),
                         BoundaryStrategy::closed(), kNoBn, 0.03),
                    std::runtime_error);
}

TEST_CASE("closed road conserves mass exactly") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 80);
    std::vector<double> rho(80);
    for (int j = 0; j < 80; ++j) rho[j] = 0.3 + 0.4 * std::exp(-50.0 * std::pow(grid.center(j) - 0.4, 2));
    auto state = RoadState::single(rho);
    const double m0 = state.mass(0, grid.dx());
    RunOptions opts;
    opts.horizon = 0.7;
    auto traj = run(state, fd, grid, BoundaryStrategy::closed(), BoundaryStrategy::closed(),
                    kNoBn, opts);
    CHECK(traj.states.back().mass(0, grid.dx()) == doctest::Approx(m0).epsilon(1e-12));
    CHECK(traj.states.back().min_density_seen >= -1e-14);
    CHECK(traj.states.back().time == doctest::Approx(0.7));
}

TEST_CASE("interface-aligned stationary shock is exact") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 100);
    std::vector<double> rho(100);
    for (int j = 0; j < 100; ++j) rho[j] = grid.center(j) < 0.5 ? 0.2 : 0.8;
    auto state = RoadState::single(rho);
    RunOptions opts;
    opts.horizon = 0.3;
    auto traj = run(state, fd, grid, BoundaryStrategy::dirichlet(SampledSeries::constant(0.2)),
                    BoundaryStrategy::dirichlet(SampledSeries::constant(0.8)), kNoBn, opts);
    const auto& final_rho = traj.states.back().rho[0];
    for (int j = 0; j < 100; ++j) {
        const double expect = grid.center(j) < 0.5 ? 0.2 : 0.8;
        CHECK(final_rho[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("steady uniform state under matching Dirichlet data") {
    SingleClassFD fd(120.0, 1.5);
    Grid grid(0.0, 10.0, 40);
    auto state = uniform_state(40, 30.0);
    RunOptions opts;
    opts.horizon = 20.0;
    auto traj = run(state, fd, grid, BoundaryStrategy::dirichlet(SampledSeries::constant(30.0)),
                    BoundaryStrategy::free_outflow(), kNoBn, opts);
    for (double r : traj.states.back().rho[0]) CHECK(r == doctest::Approx(30.0).epsilon(1e-10));
}

TEST_CASE("free outflow drains the road") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 50);
    auto state = uniform_state(50, 0.4);
    RunOptions opts;
    opts.horizon = 6.0;
    auto traj = run(state, fd, grid, BoundaryStrategy::closed(), BoundaryStrategy::free_outflow(),
                    kNoBn, opts);
    CHECK(traj.states.back().mass(0, grid.dx()) < 1e-3);
    CHECK(traj.states.back().min_density_seen >= -1e-12);
}

TEST_CASE("bottleneck caps the interface flux and queues traffic") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 100);
    auto state = uniform_state(100, 0.45);
    Bottleneck bn;
    bn.position = 0.6;
    bn.capacity_factor = 0.3;
    RunOptions opts;
    opts.horizon = 1.0;
    auto traj = run(state, fd, grid, BoundaryStrategy::dirichlet(SampledSeries::constant(0.45)),
                    BoundaryStrategy::free_outflow(), {bn}, opts);
    const auto& rho = traj.states.back().rho[0];
    // Congested upstream of the restriction, free downstream of it.
    const double upstream = rho[55];   // x ~ 0.555
    const double downstream = rho[65]; // x ~ 0.655
    CHECK(upstream > fd.sigma());
    CHECK(downstream < fd.sigma());
    CHECK(fd.flux(downstream) == doctest::Approx(0.3 * fd.f_max()).epsilon(0.05));

    // Outside its active window the restriction is a no-op.
    Bottleneck inactive = bn;
    inactive.t_start = 100.0;
    auto traj2 = run(uniform_state(100, 0.45), fd, grid,
                     BoundaryStrategy::dirichlet(SampledSeries::constant(0.45)),
                     BoundaryStrategy::free_outflow(), {inactive}, opts);
    for (double r : traj2.states.back().rho[0]) CHECK(r == doctest::Approx(0.45).epsilon(1e-9));
}

TEST_CASE("unprojected flux injection can push densities negative") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 50);
    auto state = uniform_state(50, 0.05);  // thin traffic, demand ~ 0.0475
    // Outflow boundary demands far more flux than the road can deliver.
    auto greedy = BoundaryStrategy::flux_injection(SampledSeries::constant(0.2), false);
    RunOptions opts;
    opts.horizon = 2.0;
    auto traj = run(state, fd, grid, BoundaryStrategy::closed(), greedy, kNoBn, opts);
    CHECK(traj.states.back().min_density_seen < -1e-9);

    // The projected variant stays admissible.
    auto projected = BoundaryStrategy::flux_injection(SampledSeries::constant(0.2), true);
    auto traj2 = run(uniform_state(50, 0.05), fd, grid, BoundaryStrategy::closed(), projected,
                     kNoBn, opts);
    CHECK(traj2.states.back().min_density_seen >= -1e-12);
}

TEST_CASE("density-from-sensor boundary reconstructs the upstream state") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 50);
    auto state = uniform_state(50, 0.0);
    const double rho_in = 0.3;
    auto left = BoundaryStrategy::density_from_sensor(SampledSeries::constant(fd.flux(rho_in)),
                                                      RegimeSeries::constant(Regime::Free));
    RunOptions opts;
    opts.horizon = 4.0;
    auto traj = run(state, fd, grid, left, BoundaryStrategy::free_outflow(), kNoBn, opts);
    // The road fills to the sensor density.
    for (double r : traj.states.back().rho[0]) CHECK(r == doctest::Approx(rho_in).epsilon(1e-3));
}

TEST_CASE("trajectory recording lands exactly on the output instants") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 30);
    RunOptions opts;
    opts.horizon = 0.5;
    opts.output_every = 0.1;
    auto traj = run(uniform_state(30, 0.3), fd, grid, BoundaryStrategy::closed(),
                    BoundaryStrategy::closed(), kNoBn, opts);
    REQUIRE(traj.times.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(traj.times[k] == doctest::Approx(0.1 * k).epsilon(1e-12));
    CHECK(traj.states.front().time == doctest::Approx(0.0));
    CHECK(traj.states.back().time == doctest::Approx(0.5));
}

TEST_CASE("zero horizon returns the initial state") {
    SingleClassFD fd(1.0, 1.0);
    Grid grid(0.0, 1.0, 10);
    RunOptions opts;
    opts.horizon = 0.0;
    auto traj = run(uniform_state(10, 0.25), fd, grid, BoundaryStrategy::closed(),
                    BoundaryStrategy::closed(), kNoBn, opts);
    REQUIRE(traj.states.size() == 1);
    for (double r : traj.states.back().rho[0]) CHECK(r == doctest::Approx(0.25));
}

TEST_CASE("two-class run with zero heavy density reduces to single class") {
    TwoClassFD tfd;
    tfd.rho_max_light = 1.0;
    tfd.rho_max_heavy = 1.0;
    tfd.v_max_light = 1.0;
    tfd.v_max_heavy = 0.6;
    tfd.eta = 2.0;
    tfd.rho_transition = 0.4;
    SingleClassFD sfd(1.0, 1.0);

    Grid grid(0.0, 1.0, 60);
    std::vector<double> light(60);
    for (int j = 0; j < 60; ++j) light[j] = grid.center(j) < 0.5 ? 0.6 : 0.2;

    RunOptions opts;
    opts.horizon = 0.4;
    opts.dt = cfl_dt(tfd, grid.dx(), 0.9);

    std::array<BoundaryStrategy, 2> closed{BoundaryStrategy::closed(),
                                           BoundaryStrategy::closed()};
    auto two = run_two_class(RoadState::two_class(light, std::vector<double>(60, 0.0)), tfd,
                             grid, closed, closed, kNoBn, opts);
    auto one = run(RoadState::single(light), sfd, grid, BoundaryStrategy::closed(),
                   BoundaryStrategy::closed(), kNoBn, opts);
    const auto& rl = two.states.back().rho[0];
    const auto& rs = one.states.back().rho[0];
    for (int j = 0; j < 60; ++j) CHECK(rl[j] == doctest::Approx(rs[j]).epsilon(1e-10));
    for (double rh : two.states.back().rho[1]) CHECK(rh == doctest::Approx(0.0));
}

TEST_CASE("heavy class ignores light traffic below the transition") {
    TwoClassFD tfd;
    tfd.rho_max_light = 1.0;
    tfd.rho_max_heavy = 1.0;
    tfd.v_max_light = 1.0;
    tfd.v_max_heavy = 0.6;
    tfd.eta = 2.0;
    tfd.rho_transition = 0.4;

    Grid grid(0.0, 1.0, 40);
    std::vector<double> heavy(40);
    for (int j = 0; j < 40; ++j) heavy[j] = grid.center(j) < 0.5 ? 0.3 : 0.1;

    const double dt = cfl_dt(tfd, grid.dx(), 0.9);
    std::array<BoundaryStrategy, 2> closed{BoundaryStrategy::closed(),
                                           BoundaryStrategy::closed()};

    auto a = RoadState::two_class(std::vector<double>(40, 0.1), heavy);
    auto b = RoadState::two_class(std::vector<double>(40, 0.3), heavy);
    step_two_class(a, tfd, grid, closed, closed, kNoBn, dt);
    step_two_class(b, tfd, grid, closed, closed, kNoBn, dt);
    // Light density below rho_transition on both sides: identical heavy update.
    for (int j = 0; j < 40; ++j)
        CHECK(a.rho[1][j] == doctest::Approx(b.rho[1][j]).epsilon(1e-12));
    // Above the transition the heavy flux is squeezed and the update differs.
    auto c = RoadState::two_class(std::vector<double>(40, 0.6), heavy);
    step_two_class(c, tfd, grid, closed, closed, kNoBn, dt);
    bool differs = false;
    for (int j = 0; j < 40; ++j)
        if (std::fabs(c.rho[1][j] - a.rho[1][j]) > 1e-9) differs = true;
    CHECK(differs);
}

TEST_CASE("two-class closed road conserves both masses") {
    TwoClassFD tfd;
    tfd.rho_max_light = 1.0;
    tfd.rho_max_heavy = 1.0;
    tfd.v_max_light = 1.0;
    tfd.v_max_heavy = 0.6;
    tfd.eta = 2.0;
    tfd.rho_transition = 0.4;

    Grid grid(0.0, 1.0, 50);
    std::vector<double> light(50), heavy(50);
    for (int j = 0; j < 50; ++j) {
        light[j] = 0.2 + 0.3 * std::exp(-40.0 * std::pow(grid.center(j) - 0.3, 2));
        heavy[j] = 0.05 + 0.1 * std::exp(-40.0 * std::pow(grid.center(j) - 0.7, 2));
    }
    auto init = RoadState::two_class(light, heavy);
    const double ml = init.mass(0, grid.dx()), mh = init.mass(1, grid.dx());
    RunOptions opts;
    opts.horizon = 0.8;
    std::array<BoundaryStrategy, 2> closed{BoundaryStrategy::closed(),
                                           BoundaryStrategy::closed()};
    auto traj = run_two_class(init, tfd, grid, closed, closed, kNoBn, opts);
    CHECK(traj.states.back().mass(0, grid.dx()) == doctest::Approx(ml).epsilon(1e-12));
    CHECK(traj.states.back().mass(1, grid.dx()) == doctest::Approx(mh).epsilon(1e-12));
}

TEST_CASE("sampled series semantics") {
    SampledSeries s(10.0, 2.0, {1.0, 5.0, 3.0});
    CHECK(s.at(9.0) == doctest::Approx(1.0));   // clamped before t0
    CHECK(s.at(10.0) == doctest::Approx(1.0));
    CHECK(s.at(11.9) == doctest::Approx(1.0));
    CHECK(s.at(12.0) == doctest::Approx(5.0));
    CHECK(s.at(14.5) == doctest::Approx(3.0));
    CHECK(s.at(100.0) == doctest::Approx(3.0));  // held beyond the range

    RegimeSeries r{0.0, 1.0, {Regime::Free, Regime::Congested}};
    CHECK(r.at(0.5) == Regime::Free);
    CHECK(r.at(1.5) == Regime::Congested);
    CHECK(r.at(10.0) == Regime::Congested);
}

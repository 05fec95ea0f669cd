#include "doctest.h"
#include "trafcast/fundamental_diagram.hpp"

#include <cmath>
#include <stdexcept>

using namespace trafcast;

TEST_CASE("single-class flux values") {
    SingleClassFD fd(1.0, 1.0);
    CHECK(fd.flux(0.0) == 0.0);
    CHECK(fd.flux(1.0) == 0.0);
    CHECK(fd.flux(0.45) == doctest::Approx(0.2475).epsilon(1e-12));
    CHECK(fd.sigma() == doctest::Approx(0.5));
    CHECK(fd.f_max() == doctest::Approx(0.25));
    CHECK(fd.flux(fd.sigma()) == doctest::Approx(fd.f_max()));
    CHECK_THROWS_AS(fd.flux(-0.1), std::out_of_range);
    CHECK_THROWS_AS(fd.flux(1.1), std::out_of_range);
}

TEST_CASE("single-class flux with physical units") {
    SingleClassFD fd(120.0, 1.5);  // rho_max 120 veh/km, v_max 1.5 km/min
    CHECK(fd.f_max() == doctest::Approx(45.0));
    CHECK(fd.sigma() == doctest::Approx(60.0));
    CHECK(fd.flux(30.0) == doctest::Approx(1.5 * 30.0 * 0.75));
}

TEST_CASE("branch inversion") {
    SingleClassFD fd(1.0, 1.0);
    CHECK(fd.invert(0.21, Regime::Free) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(fd.invert(0.21, Regime::Congested) == doctest::Approx(0.7).epsilon(1e-12));
    // Exact at the endpoints, no cancellation residue.
    CHECK(fd.invert(0.0, Regime::Free) == 0.0);
    CHECK(fd.invert(0.0, Regime::Congested) == 1.0);
    CHECK(fd.invert(fd.f_max(), Regime::Free) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(fd.invert(0.26, Regime::Free), std::domain_error);
}

TEST_CASE("inversion round trip across both branches") {
    SingleClassFD fd(140.0, 1.8);
    for (int k = 0; k <= 200; ++k) {
        const double rho = fd.rho_max() * k / 200.0;
        const Regime r = rho <= fd.sigma() ? Regime::Free : Regime::Congested;
        const double back = fd.invert(fd.flux(rho), r);
        CHECK(back == doctest::Approx(rho).epsilon(1e-10).scale(fd.rho_max()));
    }
}

TEST_CASE("demand and supply") {
    SingleClassFD fd(1.0, 1.0);
    CHECK(fd.demand(0.3) == doctest::Approx(fd.flux(0.3)));
    CHECK(fd.demand(0.8) == doctest::Approx(fd.f_max()));
    CHECK(fd.supply(0.3) == doctest::Approx(fd.f_max()));
    CHECK(fd.supply(0.8) == doctest::Approx(fd.flux(0.8)));
    // Flux = min(demand, supply) at equal densities.
    for (int k = 0; k <= 50; ++k) {
        const double rho = k / 50.0;
        CHECK(std::min(fd.demand(rho), fd.supply(rho)) == doctest::Approx(fd.flux(rho)));
    }
}

TEST_CASE("admissible flux projection") {
    SingleClassFD fd(1.0, 1.0);
    CHECK(fd.admissible_flux_projection(0.2, 0.0) == 0.0);
    CHECK(fd.admissible_flux_projection(-0.1, 0.3) == 0.0);
    CHECK(fd.admissible_flux_projection(0.1, 0.3) == doctest::Approx(0.1));
    CHECK(fd.admissible_flux_projection(0.3, 0.3) == doctest::Approx(fd.flux(0.3)));
    CHECK(fd.admissible_flux_projection(0.3, 0.7) == doctest::Approx(0.25));
    // Projection is idempotent.
    for (double fs : {-0.5, 0.0, 0.1, 0.2, 0.4}) {
        for (double up : {0.0, 0.2, 0.5, 0.9}) {
            const double p = fd.admissible_flux_projection(fs, up);
            CHECK(fd.admissible_flux_projection(p, up) == doctest::Approx(p));
        }
    }
}

TEST_CASE("two-class flux and coupling") {
    TwoClassFD fd;
    fd.rho_max_light = 1.0;
    fd.rho_max_heavy = 1.0;
    fd.v_max_light = 1.0;
    fd.v_max_heavy = 0.6;
    fd.eta = 2.0;
    fd.rho_transition = 0.4;

    // Heavy vehicles cost the light class eta slots.
    CHECK(fd.flux_light(0.3, 0.0) == doctest::Approx(0.3 * 0.7));
    CHECK(fd.flux_light(0.3, 0.2) == doctest::Approx(0.3 * (1.0 - 0.7)));
    // Below the transition the heavy class ignores light vehicles.
    CHECK(fd.flux_heavy(0.1, 0.2) == doctest::Approx(fd.flux_heavy(0.3, 0.2)));
    CHECK(fd.flux_heavy(0.3, 0.2) == doctest::Approx(0.6 * 0.2 * 0.8));
    // Above the transition the excess light density squeezes the heavy flux.
    CHECK(fd.flux_heavy(0.6, 0.2) == doctest::Approx(0.6 * 0.2 * (1.0 - 0.4)));
    CHECK(fd.flux_heavy(0.6, 0.2) < fd.flux_heavy(0.4, 0.2));
    // Saturated mixtures carry no flux.
    CHECK(fd.flux_light(0.5, 0.3) == 0.0);
    CHECK(fd.flux(VehicleClass::Light, 0.3, 0.2) == doctest::Approx(fd.flux_light(0.3, 0.2)));
    CHECK(fd.flux(VehicleClass::Heavy, 0.3, 0.2) == doctest::Approx(fd.flux_heavy(0.3, 0.2)));
}

TEST_CASE("sectional diagram matches the two-class flux at frozen other density") {
    TwoClassFD fd;
    fd.rho_max_light = 100.0;
    fd.rho_max_heavy = 50.0;
    fd.v_max_light = 1.8;
    fd.v_max_heavy = 1.2;
    fd.eta = 2.0;
    fd.rho_transition = 40.0;

    const double rho_h = 10.0;
    FdSection sec_l(fd, VehicleClass::Light, rho_h);
    CHECK(sec_l.rho_eff_max() == doctest::Approx(100.0 - 2.0 * 10.0));
    for (int k = 0; k <= 40; ++k) {
        const double rl = 80.0 * k / 40.0;
        CHECK(sec_l.flux(rl) == doctest::Approx(fd.flux_light(rl, rho_h)).scale(1.0));
    }

    const double rho_l = 55.0;  // above transition by 15
    FdSection sec_h(fd, VehicleClass::Heavy, rho_l);
    CHECK(sec_h.rho_eff_max() == doctest::Approx(50.0 - 15.0));
    for (int k = 0; k <= 35; ++k) {
        const double rh = 35.0 * k / 35.0;
        CHECK(sec_h.flux(rh) == doctest::Approx(fd.flux_heavy(rho_l, rh)).scale(1.0));
    }

    // Extended by zero beyond the effective maximum.
    CHECK(sec_l.flux(90.0) == 0.0);
    CHECK(sec_h.flux(40.0) == 0.0);
}

TEST_CASE("sectional inversion and class inversion") {
    TwoClassFD fd;
    fd.rho_max_light = 1.0;
    fd.rho_max_heavy = 1.0;
    fd.v_max_light = 1.0;
    fd.v_max_heavy = 0.6;
    fd.eta = 2.0;
    fd.rho_transition = 0.4;

    FdSection sec(fd, VehicleClass::Light, 0.1);  // rho_eff_max = 0.8
    CHECK(sec.rho_eff_max() == doctest::Approx(0.8));
    CHECK(sec.invert(0.0, Regime::Free) == doctest::Approx(0.0));
    CHECK(sec.invert(0.0, Regime::Congested) == doctest::Approx(0.8));
    const double f = sec.flux(0.2);
    CHECK(sec.invert(f, Regime::Free) == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(sec.invert(f, Regime::Congested) == doctest::Approx(0.6).epsilon(1e-10));
    CHECK_THROWS_AS(sec.invert(sec.capacity() * 1.01, Regime::Free), std::domain_error);

    // invert_class agrees with the sectional inversion.
    CHECK(invert_class(fd, VehicleClass::Light, f, 0.1, Regime::Free) ==
          doctest::Approx(0.2).epsilon(1e-10));

    // At lower effective capacity the same flux needs more density on the free branch.
    const double r_low = invert_class(fd, VehicleClass::Light, 0.05, 0.05, Regime::Free);
    const double r_high = invert_class(fd, VehicleClass::Light, 0.05, 0.2, Regime::Free);
    CHECK(r_high > r_low);
}

TEST_CASE("single-class fd reduces from two-class at zero other density") {
    TwoClassFD tfd;
    tfd.rho_max_light = 120.0;
    tfd.v_max_light = 1.5;
    SingleClassFD sfd(120.0, 1.5);
    FdSection sec(tfd, VehicleClass::Light, 0.0);
    for (int k = 0; k <= 24; ++k) {
        const double rho = 120.0 * k / 24.0;
        CHECK(sec.flux(rho) == doctest::Approx(sfd.flux(rho)));
    }
    CHECK(sec.capacity() == doctest::Approx(sfd.f_max()));
}

#pragma once

#include "trafcast/types.hpp"

namespace trafcast {

// Quadratic concave flux-density relation f(rho) = v_max * rho * (1 - rho/rho_max).
// Critical density sigma = rho_max/2, capacity f_max = f(sigma) = v_max*rho_max/4.
class SingleClassFD {
public:
    SingleClassFD() = default;
    SingleClassFD(double rho_max, double v_max);

    double rho_max() const { return rho_max_; }
    double v_max() const { return v_max_; }
    double sigma() const { return 0.5 * rho_max_; }
    double f_max() const { return 0.25 * v_max_ * rho_max_; }

    // Throws std::out_of_range when rho is outside [0, rho_max].
    double flux(double rho) const;

    // Branch-aware inversion: root of f(rho) = f_s on [0,sigma] (Free) or
    // [sigma,rho_max] (Congested). Closed-form quadratic roots; exact at the
    // endpoints: invert(0,Free)=0, invert(0,Congested)=rho_max.
    // Throws std::domain_error when f_s > f_max ("flux exceeds capacity").
    double invert(double f_s, Regime regime) const;

    // Maximal flux deliverable from an upwind cell of density rho.
    double demand(double rho) const;
    // Maximal flux receivable by a downwind cell of density rho.
    double supply(double rho) const;

    // Clamp a sensor flux into the admissible set of boundary fluxes given
    // the upwind density: [0, f(rho_up)] for rho_up < sigma, [0, f_max] otherwise.
    double admissible_flux_projection(double f_s, double rho_upwind) const;

private:
    double rho_max_ = 1.0;
    double v_max_ = 1.0;
};

// Two-class (light/heavy) diagram with a phase transition on the light density.
//   f_L(rho_L, rho_H) = v_L * rho_L * max(0, 1 - (rho_L + eta*rho_H)/rho_L_max)
//   f_H(rho_L, rho_H) = v_H * rho_H * max(0, 1 - (rho_H + max(0, rho_L - rho_tr))/rho_H_max)
// Below the transition level rho_tr the heavy dynamics ignores light vehicles
// (partial coupling); above it the classes are fully coupled.
struct TwoClassFD {
    double rho_max_light = 1.0;
    double rho_max_heavy = 1.0;
    double v_max_light = 1.0;
    double v_max_heavy = 0.6;
    double eta = 2.0;             // road space a heavy vehicle costs the light class
    double rho_transition = 0.4;  // on light density; default 0.4*rho_max_light

    double flux(VehicleClass c, double rho_light, double rho_heavy) const;
    double flux_light(double rho_light, double rho_heavy) const;
    double flux_heavy(double rho_light, double rho_heavy) const;

    double rho_max(VehicleClass c) const {
        return c == VehicleClass::Light ? rho_max_light : rho_max_heavy;
    }
    double v_max(VehicleClass c) const {
        return c == VehicleClass::Light ? v_max_light : v_max_heavy;
    }
};

// One-dimensional section of a two-class diagram: own-class flux at frozen
// other-class density. A quadratic with roots 0 and rho_eff_max, extended by
// zero beyond rho_eff_max (own density may exceed it transiently).
class FdSection {
public:
    FdSection(const TwoClassFD& fd, VehicleClass own, double other_density);

    double rho_eff_max() const { return rho_eff_max_; }
    double sigma() const { return 0.5 * rho_eff_max_; }
    double capacity() const;

    double flux(double rho) const;  // clamped to >= 0, no range check
    double invert(double f_s, Regime regime) const;
    double demand(double rho) const;
    double supply(double rho) const;

private:
    double rho_eff_max_ = 0.0;
    double scale_ = 0.0;  // f(rho) = scale * rho * (rho_eff_max - rho)
};

// Branch root of the own-class section at frozen other-class density.
// Throws std::domain_error when f_s exceeds the sectional capacity.
double invert_class(const TwoClassFD& fd, VehicleClass own, double f_s,
                    double other_density, Regime regime);

}  // namespace trafcast

#include "trafcast/fundamental_diagram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trafcast {

SingleClassFD::SingleClassFD(double rho_max, double v_max)
    : rho_max_(rho_max), v_max_(v_max) {
    if (rho_max <= 0.0 || v_max <= 0.0)
        throw std::invalid_argument("fundamental diagram requires rho_max > 0 and v_max > 0");
}

double SingleClassFD::flux(double rho) const {
    if (rho < 0.0 || rho > rho_max_)
        throw std::out_of_range("density outside [0, rho_max]");
    return v_max_ * rho * (1.0 - rho / rho_max_);
}

double SingleClassFD::invert(double f_s, Regime regime) const {
    if (f_s < 0.0) throw std::domain_error("negative flux");
    const double fm = f_max();
    if (f_s > fm) throw std::domain_error("flux exceeds capacity");
    // rho = sigma * (1 -/+ sqrt(1 - f_s/f_max)); exact roots of the quadratic.
    const double s = std::sqrt(std::max(0.0, 1.0 - f_s / fm));
    return regime == Regime::Free ? sigma() * (1.0 - s) : sigma() * (1.0 + s);
}

double SingleClassFD::demand(double rho) const {
    return rho < sigma() ? flux(rho) : f_max();
}

double SingleClassFD::supply(double rho) const {
    return rho <= sigma() ? f_max() : flux(rho);
}

double SingleClassFD::admissible_flux_projection(double f_s, double rho_upwind) const {
    return std::clamp(f_s, 0.0, demand(rho_upwind));
}

double TwoClassFD::flux_light(double rho_light, double rho_heavy) const {
    const double occupied = (rho_light + eta * rho_heavy) / rho_max_light;
    return v_max_light * rho_light * std::max(0.0, 1.0 - occupied);
}

double TwoClassFD::flux_heavy(double rho_light, double rho_heavy) const {
    const double excess_light = std::max(0.0, rho_light - rho_transition);
    const double occupied = (rho_heavy + excess_light) / rho_max_heavy;
    return v_max_heavy * rho_heavy * std::max(0.0, 1.0 - occupied);
}

double TwoClassFD::flux(VehicleClass c, double rho_light, double rho_heavy) const {
    return c == VehicleClass::Light ? flux_light(rho_light, rho_heavy)
                                    : flux_heavy(rho_light, rho_heavy);
}

FdSection::FdSection(const TwoClassFD& fd, VehicleClass own, double other_density) {
    if (own == VehicleClass::Light) {
        rho_eff_max_ = std::max(0.0, fd.rho_max_light - fd.eta * other_density);
        scale_ = fd.v_max_light / fd.rho_max_light;
    } else {
        const double excess_light = std::max(0.0, other_density - fd.rho_transition);
        rho_eff_max_ = std::max(0.0, fd.rho_max_heavy - excess_light);
        scale_ = fd.v_max_heavy / fd.rho_max_heavy;
    }
}

double FdSection::capacity() const {
    const double s = sigma();
    return scale_ * s * s;
}

double FdSection::flux(double rho) const {
    return std::max(0.0, scale_ * rho * (rho_eff_max_ - rho));
}

double FdSection::invert(double f_s, Regime regime) const {
    if (f_s < 0.0) throw std::domain_error("negative flux");
    const double cap = capacity();
    if (f_s > cap) {
        if (f_s > cap * (1.0 + 1e-12) + 1e-300)
            throw std::domain_error("flux exceeds sectional capacity");
        f_s = cap;
    }
    if (cap <= 0.0) return regime == Regime::Free ? 0.0 : rho_eff_max_;
    const double s = std::sqrt(std::max(0.0, 1.0 - f_s / cap));
    return regime == Regime::Free ? sigma() * (1.0 - s) : sigma() * (1.0 + s);
}

double FdSection::demand(double rho) const {
    return rho < sigma() ? flux(rho) : capacity();
}

double FdSection::supply(double rho) const {
    return rho <= sigma() ? capacity() : flux(rho);
}

double invert_class(const TwoClassFD& fd, VehicleClass own, double f_s,
                    double other_density, Regime regime) {
    return FdSection(fd, own, other_density).invert(f_s, regime);
}

}  // namespace trafcast

#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "caslab/optics.hpp"

namespace caslab::lifshitz {

/// Knobs for the finite-temperature Lifshitz pressure evaluation.
struct LifshitzSettings {
    double temperature_K = 300.0;
    long l_max = 5000;           // hard cap; the tolerance truncates earlier
    double k_rel_tol = 1e-10;    // transverse-wavevector quadrature tolerance
    double series_rel_tol = 1e-10; // Matsubara truncation tolerance

    void validate() const;
};

/// Casimir (or electric) pressure vs absolute separation, attraction positive.
struct PressureCurve {
    std::vector<double> separations; // m, strictly increasing
    std::vector<double> pressures;   // Pa
    std::vector<double> sigmas;      // Pa, optional (empty or same length)
    std::string label;

    /// Grid invariants: matching lengths, finite values, strictly increasing
    /// separations. Holds for every curve.
    void validate_grid() const;
    /// Theory-curve invariant: pressures strictly decreasing in separation.
    /// Measured curves with realistic noise cannot promise this.
    void validate_decreasing() const;

    std::size_t size() const { return separations.size(); }
};

struct ReflectionPair {
    double r_tm = 0.0;
    double r_te = 0.0;
};

/// Fresnel reflection coefficients at imaginary frequency xi for a half-space
/// of permittivity eps: with q = sqrt(k_perp^2 + xi^2/c^2) and
/// k_m = sqrt(k_perp^2 + eps xi^2/c^2),
///   r_TM = (eps q - k_m)/(eps q + k_m),  r_TE = (q - k_m)/(q + k_m).
ReflectionPair fresnel_imag(double eps, double xi_rad_s, double k_perp);

/// Zero-frequency (l = 0) reflections: the Drude/plasma dichotomy lives here.
/// Drude relaxation kills the TE zero mode; the lossless plasma model keeps
///   r_TE = -(sqrt(k_perp^2 + w_p^2/c^2) - k_perp)/(sqrt(...) + k_perp).
ReflectionPair zero_frequency_reflection(optics::PermittivityVariant variant,
                                         double omega_p_rad_s, double k_perp);

/// Reusable pressure evaluator: caches eps(i xi_l) per (model, T) and the
/// pressure per separation, so sweeps and repeated synthetic runs pay the
/// Kramers-Kronig and quadrature costs once. The model must outlive the
/// engine. Safe for concurrent readers.
class PressureEngine {
  public:
    PressureEngine(const optics::PermittivityModel& model, LifshitzSettings settings);

    /// Lifshitz pressure magnitude between parallel plates at separation a (m),
    ///   P(a,T) = kT/pi sum'_l int k q_l sum_pol [e^{2 q_l a}/r^2 - 1]^{-1} dk,
    /// the l = 0 term entering with weight 1/2 through the explicit
    /// zero-frequency branch. a restricted to the validated working range
    /// [50 nm, 5 um].
    double pressure(double a) const;

    const LifshitzSettings& settings() const { return settings_; }
    const optics::PermittivityModel& model() const { return model_; }

  private:
    double matsubara_term(long l, double a) const;
    double pressure_uncached(double a) const;

    const optics::PermittivityModel& model_;
    LifshitzSettings settings_;
    optics::MatsubaraPermittivityCache cache_;
    mutable std::map<double, double> memo_;
    mutable std::mutex memo_mutex_;
};

/// One-shot convenience wrapper around PressureEngine.
double casimir_pressure_plates(double a, const optics::PermittivityModel& model,
                               const LifshitzSettings& settings);

/// Inverse proximity-force map: sphere-plate force gradient 2 pi R P.
double sphere_gradient_from_pressure(double pressure_pa, double radius_m);

/// Quoted relative accuracy of the proximity force approximation, 0.5 a/R.
double pfa_correction_estimate(double a, double R);

/// Theory curve on a separation grid (strictly decreasing by construction).
PressureCurve make_theory_curve(const PressureEngine& engine,
                                const std::vector<double>& separations,
                                const std::string& label);

} // namespace caslab::lifshitz

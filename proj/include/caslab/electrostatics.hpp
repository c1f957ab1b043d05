#pragma once

#include "caslab/core.hpp"

namespace caslab::electrostatics {

/// Sphere of radius R above a plane at surface separation a, both in meters.
/// Valid only in the experiment's operating regime 0 < a < R.
struct SpherePlateGeometry {
    double R = 0.0;
    double a = 0.0;

    void validate() const;
};

/// Voltages on the plate: the applied drive and the residual (contact/patch)
/// potential difference. The force responds to (V - V0) only.
struct ElectricDrive {
    double applied_voltage = 0.0;  // V
    double residual_potential = 0.0; // V

    double delta() const { return applied_voltage - residual_potential; }
};

/// alpha with cosh(alpha) = 1 + a/R, evaluated in the cancellation-safe form
/// log1p(x + sqrt(x(x+2))), x = a/R.
double alpha_of(const SpherePlateGeometry& g);

/// One term of the image-charge series for the separation derivative of the
/// sphere-plate electrostatic force. Exposed for oracle tests. Treated as
/// exactly zero once n*alpha > 350 (the true value is below double denormals).
double beta_summand(long n, double alpha);

/// d(F_el)/da per unit (V - V0)^2, in N/(m V^2):
///   2 pi eps0 sqrt(1/(a(2R+a))) * sum_n beta_summand(n, alpha).
/// The series is summed to rel_tol with max_terms as a hard cap.
double beta_geometric(const SpherePlateGeometry& g, double rel_tol = 1e-10,
                      long max_terms = 1000000);

/// Magnitude of the electrostatic force-gradient, beta_geometric * (V-V0)^2.
/// Zero iff the drive is fully compensated. Orientation: the force is
/// attractive; magnitudes returned here are positive.
double electric_force_gradient(const SpherePlateGeometry& g, const ElectricDrive& d,
                               double rel_tol = 1e-10, long max_terms = 1000000);

/// Effective parallel-plate electric pressure via the same proximity-force
/// mapping used for the Casimir gradient: gradient / (2 pi R). In Pa.
double electric_pressure_pfa(const SpherePlateGeometry& g, const ElectricDrive& d,
                             double rel_tol = 1e-10, long max_terms = 1000000);

} // namespace caslab::electrostatics

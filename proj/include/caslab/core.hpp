#pragma once

#include <functional>
#include <vector>

namespace caslab {

/// CODATA 2018 values, fixed at build time. Internal unit system is strict SI
/// (m, V, s, rad/s, Pa, K); anything in experiment units (nm, mV, eV) is
/// converted at the module boundary.
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34; // J s
    static constexpr double c = 299792458.0;        // m/s
    static constexpr double k_B = 1.380649e-23;     // J/K
    static constexpr double eps0 = 8.8541878128e-12; // F/m
    static constexpr double eV = 1.602176634e-19;   // J
    static constexpr double eV_to_rad_per_s = eV / hbar; // omega = E/hbar
};

/// Outcome of a truncated series summation.
struct SeriesResult {
    double value = 0.0;
    long terms_used = 0;
    bool converged = false;
};

/// Weighted least-squares fit result. covariance is row-major n x n.
struct FitResult {
    std::vector<double> params;
    std::vector<double> covariance;
    double chi2 = 0.0;
    long dof = 0;

    std::size_t n_params() const { return params.size(); }
    double cov(std::size_t i, std::size_t j) const { return covariance[i * params.size() + j]; }
    double sigma(std::size_t i) const;
};

/// Sums term(1) + term(2) + ... until the added term is negligible against the
/// running partial sum (two consecutive terms below rel_tol * |partial|), or
/// max_terms is reached (converged = false).
///
/// Throws NumericalError on a non-finite term, naming the index.
SeriesResult sum_series(const std::function<double(long)>& term, double rel_tol, long max_terms);

/// Adaptive Simpson quadrature of f over [lo, hi] to a relative tolerance.
/// Throws NumericalError (with the achieved estimate and error bound in the
/// message) if the subdivision budget is exhausted.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double rel_tol, int max_depth = 48);

/// Same machinery driven by an absolute error budget. `initial_panels` seeds a
/// fixed partition before refinement so features cannot hide between the first
/// Simpson nodes. Composite callers (piecewise integrands) use this to spread
/// one global budget over many smooth pieces.
double integrate_adaptive_abs(const std::function<double(double)>& f, double lo, double hi,
                              double abs_tol, int max_depth = 48, int initial_panels = 8);

/// Integral of f over (0, inf) via the rational map x = scale * t / (1 - t),
/// t in (0,1), followed by adaptive Simpson subdivision. `scale` should be of
/// the order of the integrand's decay length; the default suits integrands
/// already rescaled to O(1) argument.
double integrate_semi_infinite(const std::function<double(double)>& f, double rel_tol,
                               double scale = 1.0);

/// Weighted straight-line fit y = slope*x + intercept.
/// params = [slope, intercept]; covariance from the normal equations
/// (unit weights when sigma is empty).
FitResult fit_linear_least_squares(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& sigma = {});

/// Weighted polynomial fit, params = [c0, c1, ..., c_degree] with
/// y = sum_k c_k x^k. Plumbing shared by the line and parabola fits.
FitResult fit_polynomial_least_squares(const std::vector<double>& x, const std::vector<double>& y,
                                       const std::vector<double>& sigma, int degree);

/// Damped (Levenberg) least squares with numeric central-difference Jacobians.
/// model(params, x) -> y. Terminates on relative chi2 change < 1e-10 or scaled
/// step norm < 1e-12; never returns a chi2 above chi2(p0).
FitResult fit_nonlinear_least_squares(
    const std::function<double(const std::vector<double>&, double)>& model,
    const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma,
    const std::vector<double>& p0);

/// Inverse standard normal CDF (Acklam's rational approximation refined by one
/// Halley step); |error| < 1e-12 over (0,1).
double normal_quantile(double p);

/// In-place solve of the symmetric positive-definite system A x = b,
/// A row-major n x n. Used by the fitters; exposed for tests.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n);

/// Inverse of a symmetric positive-definite matrix, row-major.
std::vector<double> invert_spd(const std::vector<double>& a, std::size_t n);

} // namespace caslab

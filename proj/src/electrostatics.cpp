#include "caslab/electrostatics.hpp"

#include <cmath>
#include <sstream>

#include "caslab/errors.hpp"

namespace caslab::electrostatics {

void SpherePlateGeometry::validate() const {
    if (!(R > 0.0)) throw ValidationError("geometry: sphere radius R must be > 0");
    if (!(a > 0.0)) throw ValidationError("geometry: separation a must be > 0");
    if (!(a < R)) {
        std::ostringstream os;
        os << "geometry: operating regime requires a < R (a = " << a << " m, R = " << R << " m)";
        throw ValidationError(os.str());
    }
}

double alpha_of(const SpherePlateGeometry& g) {
    g.validate();
    const double x = g.a / g.R;
    return std::log1p(x + std::sqrt(x * (x + 2.0)));
}

namespace {

// coth via expm1 keeps full relative precision for small arguments.
inline double coth(double t) { return 1.0 + 2.0 / std::expm1(2.0 * t); }
inline double csch(double t) { return 1.0 / std::sinh(t); }

} // namespace

double beta_summand(long n, double alpha) {
    const double na = static_cast<double>(n) * alpha;
    if (na > 350.0) return 0.0; // csch(na) below denormal range

    const double nd = static_cast<double>(n);
    const double cth_na = coth(na);
    const double cth_a = coth(alpha);
    const double csch_na = csch(na);
    const double csch_a = csch(alpha);

    // Group [n coth(n a) - coth(a)] before multiplying: both factors grow like
    // 1/alpha for small alpha and the difference is O(alpha).
    const double bracket = nd * cth_na - cth_a;
    return csch_na *
           (nd * cth_na * bracket - csch_a * csch_a + nd * nd * csch_na * csch_na);
}

double beta_geometric(const SpherePlateGeometry& g, double rel_tol, long max_terms) {
    g.validate();
    const double alpha = alpha_of(g);
    // rel_tol bounds the result. The terms decay like e^{-n alpha}, so the
    // tail left beyond the last accepted term is ~term/alpha; two extra
    // decades on the per-term threshold cover any alpha in the working range.
    const SeriesResult s = sum_series([alpha](long n) { return beta_summand(n, alpha); },
                                      rel_tol * 1e-2, max_terms);
    if (!s.converged) {
        std::ostringstream os;
        os << "beta_geometric: series not converged after " << s.terms_used
           << " terms (partial sum " << s.value << ")";
        throw NumericalError(os.str());
    }
    const double prefactor =
        2.0 * M_PI * PhysicalConstants::eps0 * std::sqrt(1.0 / (g.a * (2.0 * g.R + g.a)));
    return prefactor * s.value;
}

double electric_force_gradient(const SpherePlateGeometry& g, const ElectricDrive& d,
                               double rel_tol, long max_terms) {
    const double dv = d.delta();
    return beta_geometric(g, rel_tol, max_terms) * dv * dv;
}

double electric_pressure_pfa(const SpherePlateGeometry& g, const ElectricDrive& d, double rel_tol,
                             long max_terms) {
    return electric_force_gradient(g, d, rel_tol, max_terms) / (2.0 * M_PI * g.R);
}

} // namespace caslab::electrostatics

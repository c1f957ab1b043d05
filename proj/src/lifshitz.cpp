#include "caslab/lifshitz.hpp"

#include <cmath>
#include <sstream>

#include "caslab/core.hpp"
#include "caslab/errors.hpp"

namespace caslab::lifshitz {

namespace {

constexpr double kMinSeparation = 50e-9;
constexpr double kMaxSeparation = 5e-6;
constexpr double kYCutoff = 80.0; // e^-80 is far below any tolerance in range

inline double mode_occupancy(double r, double emy) {
    // [e^y / r^2 - 1]^{-1} written with the decaying exponential; r = 0 mode
    // carries nothing.
    if (r == 0.0) return 0.0;
    const double r2e = r * r * emy;
    return r2e / (1.0 - r2e);
}

} // namespace

void LifshitzSettings::validate() const {
    if (!(temperature_K > 0.0)) throw ValidationError("lifshitz settings: T must be > 0");
    if (l_max < 1) throw ValidationError("lifshitz settings: l_max must be >= 1");
    if (!(k_rel_tol > 0.0 && k_rel_tol <= 1e-3))
        throw ValidationError("lifshitz settings: k_rel_tol must be in (0, 1e-3]");
    if (!(series_rel_tol > 0.0 && series_rel_tol <= 1e-3))
        throw ValidationError("lifshitz settings: series_rel_tol must be in (0, 1e-3]");
}

void PressureCurve::validate_grid() const {
    if (separations.size() != pressures.size())
        throw ValidationError("pressure curve: separation/pressure length mismatch");
    if (!sigmas.empty() && sigmas.size() != separations.size())
        throw ValidationError("pressure curve: sigma length mismatch");
    if (separations.size() < 1) throw ValidationError("pressure curve: empty");
    double prev = 0.0;
    for (std::size_t i = 0; i < separations.size(); ++i) {
        if (!std::isfinite(separations[i]) || !std::isfinite(pressures[i]))
            throw ValidationError("pressure curve: non-finite entry");
        if (!(separations[i] > prev))
            throw ValidationError("pressure curve: separations must be strictly increasing");
        prev = separations[i];
    }
}

void PressureCurve::validate_decreasing() const {
    validate_grid();
    for (std::size_t i = 1; i < pressures.size(); ++i)
        if (!(pressures[i] < pressures[i - 1]))
            throw ValidationError("pressure curve: pressures must decrease with separation");
}

ReflectionPair fresnel_imag(double eps, double xi_rad_s, double k_perp) {
    if (!(k_perp > 0.0)) throw ValidationError("fresnel_imag: k_perp must be > 0");
    if (xi_rad_s < 0.0) throw ValidationError("fresnel_imag: xi must be >= 0");
    const double xi_c = xi_rad_s / PhysicalConstants::c;
    const double q = std::sqrt(k_perp * k_perp + xi_c * xi_c);
    const double km = std::sqrt(k_perp * k_perp + eps * xi_c * xi_c);
    ReflectionPair r;
    r.r_tm = (eps * q - km) / (eps * q + km);
    r.r_te = (q - km) / (q + km);
    return r;
}

ReflectionPair zero_frequency_reflection(optics::PermittivityVariant variant,
                                         double omega_p_rad_s, double k_perp) {
    if (!(k_perp > 0.0)) throw ValidationError("zero_frequency_reflection: k_perp must be > 0");
    if (variant == optics::PermittivityVariant::DrudeExtrapolated) return {1.0, 0.0};
    const double wp_c = omega_p_rad_s / PhysicalConstants::c;
    const double root = std::sqrt(k_perp * k_perp + wp_c * wp_c);
    return {1.0, -(root - k_perp) / (root + k_perp)};
}

PressureEngine::PressureEngine(const optics::PermittivityModel& model, LifshitzSettings settings)
    : model_(model), settings_(settings), cache_(model, settings.temperature_K) {
    settings_.validate();
}

double PressureEngine::matsubara_term(long l, double a) const {
    // After y = 2 q_l a the k-integral of one Matsubara term becomes
    //   int_{y0}^inf y^2 sum_pol [e^y/r^2 - 1]^{-1} dy,   y0 = 2 a xi_l / c,
    // integrated here over u = y - y0. The reflections depend on k_perp only
    // through q, so the integrand is smooth at u = 0.
    const double xi = cache_.xi(l);
    const double y0 = 2.0 * a * xi / PhysicalConstants::c;
    if (y0 > kYCutoff) return 0.0;

    const double eps_l = (l >= 1) ? cache_.eps(l) : 0.0;
    const double wp = model_.drude().omega_p_rad_s();
    const auto variant = model_.variant();

    auto integrand = [&](double u) {
        const double y = u + y0;
        if (y > kYCutoff || y <= 0.0) return 0.0;
        const double k_perp = std::sqrt(u * (u + 2.0 * y0)) / (2.0 * a);
        if (!(k_perp > 0.0)) return 0.0;
        const ReflectionPair r =
            (l == 0) ? zero_frequency_reflection(variant, wp, k_perp)
                     : fresnel_imag(eps_l, xi, k_perp);
        const double emy = std::exp(-y);
        return y * y * (mode_occupancy(r.r_tm, emy) + mode_occupancy(r.r_te, emy));
    };
    // decay scale in u is O(1); scale 2 keeps the peak near the middle nodes
    return integrate_semi_infinite(integrand, settings_.k_rel_tol, 2.0);
}

double PressureEngine::pressure(double a) const {
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        const auto it = memo_.find(a);
        if (it != memo_.end()) return it->second;
    }
    const double p = pressure_uncached(a);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    return memo_.emplace(a, p).first->second;
}

double PressureEngine::pressure_uncached(double a) const {
    if (!(a >= kMinSeparation && a <= kMaxSeparation)) {
        std::ostringstream os;
        os << "casimir_pressure_plates: a = " << a * 1e9
           << " nm outside the validated working range [50 nm, 5 um]";
        throw ValidationError(os.str());
    }
    // primed Matsubara sum: l = 0 enters with weight 1/2
    auto term = [this, a](long n) {
        const long l = n - 1;
        const double t = matsubara_term(l, a);
        return (l == 0) ? 0.5 * t : t;
    };
    const SeriesResult s = sum_series(term, settings_.series_rel_tol, settings_.l_max + 1);
    if (!s.converged) {
        std::ostringstream os;
        os << "casimir_pressure_plates: Matsubara sum hit the l_max = " << settings_.l_max
           << " cap before reaching series_rel_tol = " << settings_.series_rel_tol
           << " (partial pressure " << s.value << " * prefactor)";
        throw NumericalError(os.str());
    }
    const double kT = PhysicalConstants::k_B * settings_.temperature_K;
    return kT / (8.0 * M_PI * a * a * a) * s.value;
}

double casimir_pressure_plates(double a, const optics::PermittivityModel& model,
                               const LifshitzSettings& settings) {
    return PressureEngine(model, settings).pressure(a);
}

double sphere_gradient_from_pressure(double pressure_pa, double radius_m) {
    if (!(radius_m > 0.0)) throw ValidationError("sphere_gradient_from_pressure: R must be > 0");
    return 2.0 * M_PI * radius_m * pressure_pa;
}

double pfa_correction_estimate(double a, double R) {
    if (a < 0.0 || !(R > 0.0))
        throw ValidationError("pfa_correction_estimate: need a >= 0 and R > 0");
    return 0.5 * a / R;
}

PressureCurve make_theory_curve(const PressureEngine& engine,
                                const std::vector<double>& separations,
                                const std::string& label) {
    PressureCurve curve;
    curve.separations = separations;
    curve.pressures.reserve(separations.size());
    for (double a : separations) curve.pressures.push_back(engine.pressure(a));
    curve.label = label;
    curve.validate_decreasing();
    return curve;
}

} // namespace caslab::lifshitz

#include <doctest.h>

#include <cmath>

#include "caslab/core.hpp"
#include "caslab/errors.hpp"
#include "caslab/lifshitz.hpp"
#include "helpers.hpp"

using namespace caslab;
using namespace caslab::lifshitz;
using caslab::optics::PermittivityModel;
using caslab::optics::PermittivityVariant;
using caslab::testing::au_table;

namespace {

double ideal_pressure(double a) {
    return M_PI * M_PI * PhysicalConstants::hbar * PhysicalConstants::c /
           (240.0 * a * a * a * a);
}

const PermittivityModel& au_plasma() {
    static PermittivityModel m(PermittivityVariant::GeneralizedPlasma, au_table(), {});
    return m;
}

const PermittivityModel& au_drude() {
    static PermittivityModel m(PermittivityVariant::DrudeExtrapolated, au_table(), {});
    return m;
}

} // namespace

TEST_CASE("fresnel_imag limits and closed-form point") {
    const double xi = 1e15, k = 1e7;
    const ReflectionPair vacuum = fresnel_imag(1.0, xi, k);
    CHECK(vacuum.r_tm == 0.0);
    CHECK(vacuum.r_te == 0.0);

    const ReflectionPair metal = fresnel_imag(1e10, xi, k);
    CHECK(metal.r_tm == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(metal.r_te == doctest::Approx(-1.0).epsilon(1e-2));

    // eps = 2 with xi/c = k_perp: r_TM = (2 sqrt2 - sqrt3)/(2 sqrt2 + sqrt3)
    const double kp = 5e6;
    const ReflectionPair p = fresnel_imag(2.0, kp * PhysicalConstants::c, kp);
    const double want_tm = (2.0 * std::sqrt(2.0) - std::sqrt(3.0)) /
                           (2.0 * std::sqrt(2.0) + std::sqrt(3.0));
    const double want_te =
        (std::sqrt(2.0) - std::sqrt(3.0)) / (std::sqrt(2.0) + std::sqrt(3.0));
    CHECK(p.r_tm == doctest::Approx(want_tm).epsilon(1e-12));
    CHECK(p.r_te == doctest::Approx(want_te).epsilon(1e-12));
}

TEST_CASE("fresnel_imag sign pattern for eps > 1") {
    const ReflectionPair r = fresnel_imag(13.0, 2e15, 3e6);
    CHECK(r.r_tm > 0.0);
    CHECK(r.r_te < 0.0);
    CHECK(r.r_tm <= 1.0);
    CHECK(r.r_te > -1.0);
}

TEST_CASE("zero_frequency_reflection: the Drude/plasma dichotomy") {
    for (double k : {1e5, 1e7, 1e9}) {
        const ReflectionPair d =
            zero_frequency_reflection(PermittivityVariant::DrudeExtrapolated, 1.4e16, k);
        CHECK(d.r_tm == 1.0);
        CHECK(d.r_te == 0.0);
    }
    const double wp = 9.0 * PhysicalConstants::eV_to_rad_per_s;
    const ReflectionPair p = zero_frequency_reflection(PermittivityVariant::GeneralizedPlasma, wp,
                                                       wp / PhysicalConstants::c);
    const double want = (std::sqrt(2.0) - 1.0) / (std::sqrt(2.0) + 1.0);
    CHECK(std::abs(p.r_te) == doctest::Approx(want).epsilon(1e-12));
    CHECK(p.r_tm == 1.0);
    // grazing limit
    const ReflectionPair grazing = zero_frequency_reflection(
        PermittivityVariant::GeneralizedPlasma, wp, 1e6 * wp / PhysicalConstants::c);
    CHECK(std::abs(grazing.r_te) < 1e-5);
}

TEST_CASE("ideal-conductor proxy reproduces pi^2 hbar c / (240 a^4)") {
    const PermittivityModel proxy(PermittivityVariant::GeneralizedPlasma, au_table(),
                                  {9000.0, 0.035});
    LifshitzSettings s;
    s.temperature_K = 1.0;
    s.l_max = 60000;
    const double P = casimir_pressure_plates(235e-9, proxy, s);
    CHECK(P == doctest::Approx(ideal_pressure(235e-9)).epsilon(5e-3));
}

TEST_CASE("pressure decreases with separation, plasma above Drude") {
    const LifshitzSettings s;
    const PressureEngine drude(au_drude(), s);
    const PressureEngine plasma(au_plasma(), s);
    double prev_d = 1e300, prev_p = 1e300;
    for (double a_nm : {235.0, 300.0, 400.0, 550.0, 700.0}) {
        const double pd = drude.pressure(a_nm * 1e-9);
        const double pp = plasma.pressure(a_nm * 1e-9);
        CHECK(pd < prev_d);
        CHECK(pp < prev_p);
        CHECK(pp > pd); // TE zero mode only helps
        prev_d = pd;
        prev_p = pp;
    }
    // Au at room temperature, shortest separation: difference in (0.5%, 8%)
    const double pd = drude.pressure(235e-9);
    const double pp = plasma.pressure(235e-9);
    const double gap = (pp - pd) / pp;
    CHECK(gap > 0.005);
    CHECK(gap < 0.08);
}

TEST_CASE("Matsubara truncation and k-quadrature are converged") {
    LifshitzSettings base;
    base.series_rel_tol = 1e-10;
    base.k_rel_tol = 1e-10;
    LifshitzSettings more = base;
    more.l_max = 10000;
    LifshitzSettings finer = base;
    finer.k_rel_tol = 5e-11;
    const PressureEngine e0(au_plasma(), base);
    const PressureEngine e1(au_plasma(), more);
    const PressureEngine e2(au_plasma(), finer);
    for (double a_nm : {235.0, 700.0}) {
        const double p0 = e0.pressure(a_nm * 1e-9);
        CHECK(std::abs(e1.pressure(a_nm * 1e-9) - p0) / p0 < 1e-6);
        CHECK(std::abs(e2.pressure(a_nm * 1e-9) - p0) / p0 < 1e-6);
    }
}

TEST_CASE("temperature continuity at 300 K") {
    LifshitzSettings t300, t299;
    t299.temperature_K = 299.0;
    const PressureEngine e300(au_plasma(), t300);
    const PressureEngine e299(au_plasma(), t299);
    const double p300 = e300.pressure(235e-9);
    CHECK(std::abs(p300 - e299.pressure(235e-9)) / p300 < 0.01);
}

TEST_CASE("working-range validation and truncation-cap error") {
    const LifshitzSettings s;
    const PressureEngine engine(au_plasma(), s);
    CHECK_THROWS_AS(engine.pressure(10e-9), ValidationError);
    CHECK_THROWS_AS(engine.pressure(1e-3), ValidationError);

    LifshitzSettings capped;
    capped.temperature_K = 1.0; // needs tens of thousands of terms
    capped.l_max = 50;
    const PermittivityModel proxy(PermittivityVariant::GeneralizedPlasma, au_table(),
                                  {9000.0, 0.035});
    CHECK_THROWS_WITH_AS(casimir_pressure_plates(235e-9, proxy, capped),
                         doctest::Contains("l_max"), NumericalError);
}

TEST_CASE("sphere_gradient_from_pressure is the exact linear map") {
    CHECK(sphere_gradient_from_pressure(0.0, 60.8e-6) == 0.0);
    CHECK(sphere_gradient_from_pressure(0.4263, 60.8e-6) ==
          doctest::Approx(1.629e-4).epsilon(1e-3));
    const double g1 = sphere_gradient_from_pressure(0.1, 60.8e-6);
    CHECK(sphere_gradient_from_pressure(0.1, 2 * 60.8e-6) == doctest::Approx(2.0 * g1));
}

TEST_CASE("pfa_correction_estimate reproduces the quoted accuracy range") {
    const double r235 = pfa_correction_estimate(235e-9, 60.8e-6);
    const double r400 = pfa_correction_estimate(400e-9, 60.8e-6);
    // rounded to two digits: 0.19% and 0.33%
    CHECK(std::round(r235 * 1e4) / 1e2 == doctest::Approx(0.19));
    CHECK(std::round(r400 * 1e4) / 1e2 == doctest::Approx(0.33));
    CHECK(pfa_correction_estimate(0.0, 60.8e-6) == 0.0);
}

TEST_CASE("pressure curves validate their invariants") {
    PressureCurve c;
    c.separations = {1e-7, 2e-7, 3e-7};
    c.pressures = {3.0, 2.0, 1.0};
    CHECK_NOTHROW(c.validate_decreasing());
    c.pressures = {3.0, 3.5, 1.0};
    CHECK_NOTHROW(c.validate_grid());
    CHECK_THROWS_AS(c.validate_decreasing(), ValidationError);
    c.separations = {2e-7, 1e-7, 3e-7};
    CHECK_THROWS_AS(c.validate_grid(), ValidationError);
}

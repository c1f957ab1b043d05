#include <doctest.h>

#include <cmath>
#include <random>

#include "caslab/calibrate.hpp"
#include "caslab/electrostatics.hpp"
#include "caslab/errors.hpp"
#include "helpers.hpp"

using namespace caslab;
using namespace caslab::calibrate;
using namespace caslab::simulate;
using caslab::lifshitz::LifshitzSettings;
using caslab::lifshitz::PressureEngine;
using caslab::optics::PermittivityModel;
using caslab::optics::PermittivityVariant;
using caslab::testing::au_table;

namespace {

const PressureEngine& engine() {
    static PermittivityModel model(PermittivityVariant::GeneralizedPlasma, au_table(), {});
    static PressureEngine e(model, LifshitzSettings{});
    return e;
}

ExperimentConfig base_config(double z_stop = 460e-9, double z_step = 20e-9) {
    ExperimentConfig c;
    c.R = 60.8e-6;
    c.a0 = 235e-9;
    c.C = 2.0e4;
    c.v0_law = {2.60e-3, 31.95};
    for (int i = 0; i < 11; ++i) c.voltages.push_back(-0.117 + 0.030 * i);
    for (double z = 0.0; z <= z_stop + 1e-15; z += z_step) c.z_grid.push_back(z);
    c.seed = 7;
    return c;
}

} // namespace

TEST_CASE("fit_sweep_parabola recovers vertex, curvature and shift exactly") {
    const ExperimentConfig c = base_config();
    const SweepDataset ds = generate_sweeps(c, engine());
    const double z = c.z_grid[2];
    const double a = c.a0 + z;
    const ParabolaFitPoint p = fit_sweep_parabola(ds.at_z(z), 0.0);

    const double v0_truth = v0_at(c.v0_law, a);
    CHECK(p.v0 == doctest::Approx(v0_truth).epsilon(1e-10));

    const electrostatics::SpherePlateGeometry geom{c.R, a};
    const double beta_truth = c.C * electrostatics::beta_geometric(geom);
    CHECK(p.beta == doctest::Approx(beta_truth).epsilon(1e-8));

    const double shift_truth =
        -c.C * lifshitz::sphere_gradient_from_pressure(engine().pressure(a), c.R);
    CHECK(p.casimir_shift == doctest::Approx(shift_truth).epsilon(1e-8));
    CHECK(p.chi2 < 1e-12);
}

TEST_CASE("fit_sweep_parabola near 235 nm sees the uncleaned V0 above 32 mV") {
    const ExperimentConfig c = base_config();
    const SweepDataset ds = generate_sweeps(c, engine());
    const ParabolaFitPoint p = fit_sweep_parabola(ds.at_z(0.0), 0.0);
    CHECK(p.v0 > 32e-3);
}

TEST_CASE("fit_sweep_parabola rejects a non-concave voltage response") {
    std::vector<SweepRecord> records;
    for (int i = 0; i < 11; ++i) {
        const double v = -0.1 + 0.02 * i;
        records.push_back({0.0, v, 3.0 * v * v - 0.5, 0});
    }
    CHECK_THROWS_WITH_AS(fit_sweep_parabola(records, 0.0),
                         doctest::Contains("electrostatic signature absent"), NumericalError);
    records.resize(4);
    CHECK_THROWS_AS(fit_sweep_parabola(records, 0.0), ValidationError);
}

TEST_CASE("fit_sweep_parabola chi2/dof is calibrated for matched noise") {
    // With 21 voltages (dof 19) the chi-square law puts ~95% of trials in
    // [0.5, 2]; the 11-voltage protocol (dof 9) can only reach ~84%, so the
    // >= 90% band is checked where the statistics allow it and the protocol
    // case gets the chi2_9 expectation.
    auto run = [](int n_voltages, int& in_band) {
        ExperimentConfig c = base_config(100e-9, 50e-9);
        c.voltages.clear();
        for (int i = 0; i < n_voltages; ++i)
            c.voltages.push_back(-0.117 + 0.300 * i / (n_voltages - 1));
        c.allow_nonstandard_voltage_count = true;
        c.noise_sigma = 0.05;
        in_band = 0;
        for (int s = 0; s < 100; ++s) {
            c.seed = 4000 + s;
            const SweepDataset ds = generate_sweeps(c, engine());
            const ParabolaFitPoint p = fit_sweep_parabola(ds.at_z(0.0), c.noise_sigma);
            const double per_dof = p.chi2 / static_cast<double>(p.dof);
            if (per_dof >= 0.5 && per_dof <= 2.0) ++in_band;
        }
    };
    int wide = 0, protocol = 0;
    run(21, wide);
    CHECK(wide >= 90);
    run(11, protocol);
    CHECK(protocol >= 75); // chi2_9 in-band probability is 0.84
}

TEST_CASE("fit_absolute_separation: noiseless round-trip and separability") {
    const ExperimentConfig c = base_config();
    const SweepDataset ds = generate_sweeps(c, engine());
    std::vector<ParabolaFitPoint> points;
    for (double z : ds.z_values()) points.push_back(fit_sweep_parabola(ds.at_z(z), 0.0));

    const SeparationFit fit = fit_absolute_separation(points, c.R);
    CHECK(std::abs(fit.a0 - c.a0) < 0.1e-9);
    CHECK(fit.C == doctest::Approx(c.C).epsilon(1e-6));

    // doubling every beta doubles C and leaves a0 put
    std::vector<ParabolaFitPoint> scaled = points;
    for (ParabolaFitPoint& p : scaled) {
        p.beta *= 2.0;
        p.beta_sigma *= 2.0;
    }
    const SeparationFit fit2 = fit_absolute_separation(scaled, c.R);
    CHECK(fit2.a0 == doctest::Approx(fit.a0).epsilon(1e-8));
    CHECK(fit2.C == doctest::Approx(2.0 * fit.C).epsilon(1e-8));
}

TEST_CASE("fit_absolute_separation validates span and count") {
    const ExperimentConfig c = base_config();
    const SweepDataset ds = generate_sweeps(c, engine());
    std::vector<ParabolaFitPoint> points;
    for (double z : ds.z_values()) points.push_back(fit_sweep_parabola(ds.at_z(z), 0.0));
    std::vector<ParabolaFitPoint> few(points.begin(), points.begin() + 5);
    CHECK_THROWS_AS(fit_absolute_separation(few, c.R), ValidationError);
    std::vector<ParabolaFitPoint> narrow(points.begin(), points.begin() + 10);
    CHECK_THROWS_WITH_AS(fit_absolute_separation(narrow, c.R), doctest::Contains("span"),
                         ValidationError);
}

TEST_CASE("fit_absolute_separation Monte-Carlo coverage under 1% beta noise") {
    const ExperimentConfig c = base_config(460e-9, 40e-9);
    std::vector<double> z, beta_truth;
    for (double zz : c.z_grid) {
        z.push_back(zz);
        const electrostatics::SpherePlateGeometry g{c.R, c.a0 + zz};
        beta_truth.push_back(c.C * electrostatics::beta_geometric(g));
    }
    int covered = 0;
    for (int s = 0; s < 100; ++s) {
        std::mt19937_64 rng(8800 + s);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<ParabolaFitPoint> points(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            points[i].z_piezo = z[i];
            points[i].beta_sigma = 0.01 * beta_truth[i];
            points[i].beta = beta_truth[i] + points[i].beta_sigma * gauss(rng);
            points[i].v0 = 0.03;
            points[i].v0_sigma = 1e-4;
        }
        const SeparationFit fit = fit_absolute_separation(points, c.R);
        const double a0_sigma = std::sqrt(fit.covariance[0]);
        if (std::abs(fit.a0 - c.a0) <= 3.0 * a0_sigma) ++covered;
    }
    CHECK(covered >= 95);
}

TEST_CASE("fit_v0_line reproduces the paper's line fits and slope ratios") {
    // exact samples of the three laws on the 235..700 nm grid
    auto points_for = [](const V0Law& law) {
        std::vector<ParabolaFitPoint> pts;
        for (double a_nm = 235.0; a_nm <= 700.0; a_nm += 1.0) {
            ParabolaFitPoint p;
            p.z_piezo = (a_nm - 235.0) * 1e-9;
            p.v0 = v0_at(law, a_nm * 1e-9);
            p.v0_sigma = 1e-6;
            p.beta = 1.0;
            pts.push_back(p);
        }
        return pts;
    };
    const V0LineFit uncleaned = fit_v0_line(points_for({2.60e-3, 31.95}), 235e-9);
    CHECK(uncleaned.line.params[0] == doctest::Approx(2.60e-3).epsilon(1e-8));
    CHECK(uncleaned.line.params[1] == doctest::Approx(31.95).epsilon(1e-8));

    const V0LineFit cleaned = fit_v0_line(points_for({0.917e-3, -5.80}), 235e-9);
    CHECK(cleaned.line.params[0] == doctest::Approx(0.917e-3).epsilon(1e-8));
    CHECK(cleaned.line.params[1] == doctest::Approx(-5.80).epsilon(1e-8));
    // the paper's mean compensation value on this grid
    CHECK(cleaned.v0_mean == doctest::Approx(-5.37e-3).epsilon(1e-3));

    // slope reduction factors relative to the uncleaned sample
    const V0LineFit after100 = fit_v0_line(points_for({1.07e-3, 0.928}), 235e-9);
    CHECK(uncleaned.line.params[0] / after100.line.params[0] ==
          doctest::Approx(2.43).epsilon(2e-3));
    CHECK(uncleaned.line.params[0] / cleaned.line.params[0] ==
          doctest::Approx(2.84).epsilon(2e-3));
}

TEST_CASE("calibrate_dataset: full noiseless pipeline recovers every truth value") {
    ExperimentConfig c = base_config(460e-9, 5e-9);
    const SweepDataset ds = generate_sweeps(c, engine());
    const CalibrationResult r = calibrate_dataset(ds, c.R);
    CHECK(std::abs(r.a0 - c.a0) < 0.1e-9);
    CHECK(r.C == doctest::Approx(c.C).epsilon(1e-6));
    CHECK(r.v0_fit.params[0] == doctest::Approx(2.60e-3).epsilon(1e-6));
    CHECK(r.v0_fit.params[1] == doctest::Approx(31.95).epsilon(1e-6));
}

TEST_CASE("calibrate_dataset: voltage-offset gauge shifts V0 and nothing else") {
    ExperimentConfig c = base_config(460e-9, 20e-9);
    c.noise_sigma = 0.0;
    const CalibrationResult base = calibrate_dataset(generate_sweeps(c, engine()), c.R);

    ExperimentConfig shifted = c;
    shifted.v0_law.intercept_mV += 10.0;
    for (double& v : shifted.voltages) v += 10e-3;
    const CalibrationResult moved = calibrate_dataset(generate_sweeps(shifted, engine()), c.R);

    CHECK(moved.a0 == doctest::Approx(base.a0).epsilon(1e-9));
    CHECK(moved.C == doctest::Approx(base.C).epsilon(1e-9));
    CHECK(moved.v0_fit.params[0] == doctest::Approx(base.v0_fit.params[0]).epsilon(1e-7));
    CHECK(moved.v0_fit.params[1] ==
          doctest::Approx(base.v0_fit.params[1] + 10.0).epsilon(1e-9));
    for (std::size_t i = 0; i < base.points.size(); ++i)
        CHECK(moved.points[i].v0 == doctest::Approx(base.points[i].v0 + 10e-3).epsilon(1e-10));
}

TEST_CASE("calibration JSON round-trip") {
    ExperimentConfig c = base_config(460e-9, 20e-9);
    c.noise_sigma = 0.02;
    c.drift_rate = 0.01;
    const CalibrationResult r = calibrate_dataset(generate_sweeps(c, engine()), c.R);
    const CalibrationResult back = calibration_from_json(calibration_to_json(r));
    CHECK(back.a0 == doctest::Approx(r.a0).epsilon(1e-12));
    CHECK(back.C == doctest::Approx(r.C).epsilon(1e-12));
    CHECK(back.v0_mean == doctest::Approx(r.v0_mean).epsilon(1e-12));
    CHECK(back.points.size() == r.points.size());
    CHECK(back.points[3].beta == doctest::Approx(r.points[3].beta).epsilon(1e-12));
    CHECK_THROWS_AS(calibration_from_json("{ not json"), IoError);
}

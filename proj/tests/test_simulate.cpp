#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "caslab/electrostatics.hpp"
#include "caslab/errors.hpp"
#include "caslab/simulate.hpp"
#include "helpers.hpp"

using namespace caslab;
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

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.R = 60.8e-6;
    c.a0 = 235e-9;
    c.C = 2.0e4;
    c.v0_law = {2.60e-3, 31.95};
    for (int i = 0; i < 11; ++i) c.voltages.push_back(-0.117 + 0.030 * i);
    c.z_grid = {0.0, 50e-9, 100e-9, 150e-9, 200e-9};
    c.seed = 99;
    return c;
}

} // namespace

TEST_CASE("v0_at reproduces the three straight-line laws") {
    const V0Law uncleaned{2.60e-3, 31.95};
    const V0Law after100{1.07e-3, 0.928};
    const V0Law cleaned{0.917e-3, -5.80};

    CHECK(v0_at(uncleaned, 0.0) == doctest::Approx(31.95e-3).epsilon(1e-12));
    CHECK(v0_at(cleaned, 700e-9) == doctest::Approx(-5.158e-3).epsilon(1e-4));
    // drop over 235 -> 700 nm
    const double drop_uncleaned = v0_at(uncleaned, 700e-9) - v0_at(uncleaned, 235e-9);
    CHECK(drop_uncleaned == doctest::Approx(1.209e-3).epsilon(1e-3));
    const double drop_after100 = v0_at(after100, 700e-9) - v0_at(after100, 235e-9);
    CHECK(drop_after100 == doctest::Approx(0.50e-3).epsilon(5e-3));
}

TEST_CASE("config validation: the 11-voltage protocol is enforced by name") {
    ExperimentConfig c = small_config();
    c.voltages.pop_back();
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("allow_nonstandard_voltage_count"),
                         ValidationError);
    c.allow_nonstandard_voltage_count = true;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation: piezo travel and V0 bracketing") {
    ExperimentConfig c = small_config();
    c.z_grid.push_back(2.4e-6);
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("2.3"), ValidationError);
    c = small_config();
    for (double& v : c.voltages) v -= 0.5; // all far below V0
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("span"), ValidationError);
}

TEST_CASE("frequency_shift_model: vertex, symmetry and electrostatic identity") {
    const ExperimentConfig c = small_config();
    const double a = 300e-9;
    const double v0 = v0_at(c.v0_law, a);

    // vertex: pure Casimir point
    const double at_v0 = frequency_shift_model(a, v0, c, engine());
    const double casimir =
        -c.C * lifshitz::sphere_gradient_from_pressure(engine().pressure(a), c.R);
    CHECK(at_v0 == doctest::Approx(casimir).epsilon(1e-12));

    // parabola symmetry
    const double up = frequency_shift_model(a, v0 + 0.040, c, engine());
    const double dn = frequency_shift_model(a, v0 - 0.040, c, engine());
    CHECK(up == doctest::Approx(dn).epsilon(1e-14));

    // with the Casimir term removed, the shift is -C * electric_force_gradient
    const double dv = 0.03316;
    const electrostatics::SpherePlateGeometry geom{c.R, a};
    const double elec = electrostatics::electric_force_gradient(geom, {v0 + dv, v0});
    CHECK(frequency_shift_model(a, v0 + dv, c, engine()) - at_v0 ==
          doctest::Approx(-c.C * elec).epsilon(1e-12));

    // noiseless argmax over V sits at V0 (vertex identity)
    double best_v = 0.0, best = -1e300;
    for (double v = v0 - 0.1; v <= v0 + 0.1; v += 1e-4) {
        const double s = frequency_shift_model(a, v, c, engine());
        if (s > best) {
            best = s;
            best_v = v;
        }
    }
    CHECK(best_v == doctest::Approx(v0).epsilon(1e-3));
}

TEST_CASE("gauge invariance: shifting voltages and the law intercept together") {
    ExperimentConfig c = small_config();
    ExperimentConfig shifted = c;
    shifted.v0_law.intercept_mV += 10.0;
    for (double& v : shifted.voltages) v += 10e-3;
    for (double z : c.z_grid) {
        const double a = c.a0 + z;
        for (std::size_t i = 0; i < c.voltages.size(); ++i) {
            CHECK(frequency_shift_model(a, c.voltages[i], c, engine()) ==
                  doctest::Approx(
                      frequency_shift_model(a, shifted.voltages[i], shifted, engine()))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("generate_sweeps: noiseless dataset equals the model, protocol shape") {
    const ExperimentConfig c = small_config();
    const SweepDataset ds = generate_sweeps(c, engine());
    REQUIRE(ds.records.size() == c.z_grid.size() * 12); // 11 voltages + anchor
    CHECK(ds.meta.anchors);
    for (const SweepRecord& r : ds.records) {
        const double a = c.a0 + r.z_piezo;
        CHECK(r.frequency_shift ==
              doctest::Approx(frequency_shift_model(a, r.applied_voltage, c, engine()))
                  .epsilon(1e-12));
    }
    // each sweep closes on its first voltage
    const auto sweep0 = ds.at_z(c.z_grid[0]);
    CHECK(sweep0.front().applied_voltage == sweep0.back().applied_voltage);
}

TEST_CASE("generate_sweeps is deterministic per seed") {
    ExperimentConfig c = small_config();
    c.noise_sigma = 0.05;
    c.drift_rate = 0.01;
    const SweepDataset a = generate_sweeps(c, engine());
    const SweepDataset b = generate_sweeps(c, engine());
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK(a.records[i].frequency_shift == b.records[i].frequency_shift); // bit-identical
    c.seed += 1;
    const SweepDataset other = generate_sweeps(c, engine());
    CHECK(other.records[0].frequency_shift != a.records[0].frequency_shift);
}

TEST_CASE("noise injection: sample mean over 10^4 seeds converges to the model") {
    ExperimentConfig c = small_config();
    c.z_grid = {100e-9};
    c.noise_sigma = 0.2;
    const double truth = frequency_shift_model(c.a0 + c.z_grid[0], c.voltages[4], c, engine());
    const int n_seeds = 10000;
    double sum = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        c.seed = 5000 + s;
        const SweepDataset ds = generate_sweeps(c, engine());
        sum += ds.records[4].frequency_shift;
    }
    const double mean = sum / n_seeds;
    CHECK(std::abs(mean - truth) < 3.0 * c.noise_sigma / std::sqrt(double(n_seeds)));
}

TEST_CASE("subtract_drift: exact removal of a pure linear drift") {
    ExperimentConfig c = small_config();
    c.drift_rate = 0.25;
    const SweepDataset drifted = generate_sweeps(c, engine());
    const DriftFit fit = subtract_drift(drifted);
    CHECK(fit.rate == doctest::Approx(0.25).epsilon(1e-10));
    c.drift_rate = 0.0;
    const SweepDataset clean = generate_sweeps(c, engine());
    REQUIRE(fit.corrected.records.size() == clean.records.size());
    for (std::size_t i = 0; i < clean.records.size(); ++i)
        CHECK(fit.corrected.records[i].frequency_shift ==
              doctest::Approx(clean.records[i].frequency_shift).epsilon(1e-10).scale(1.0));
}

TEST_CASE("subtract_drift: zero-drift input passes through within noise") {
    ExperimentConfig c = small_config();
    c.noise_sigma = 0.02;
    const SweepDataset ds = generate_sweeps(c, engine());
    const DriftFit fit = subtract_drift(ds);
    CHECK(std::abs(fit.rate) < 5.0 * fit.rate_se + 1e-12);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        CHECK(std::abs(fit.corrected.records[i].frequency_shift -
                       ds.records[i].frequency_shift) < 0.2);
}

TEST_CASE("subtract_drift Monte-Carlo coverage of the recovered rate") {
    ExperimentConfig c = small_config();
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(2e-9 * i);
    c.z_grid = grid;
    c.noise_sigma = 0.05;
    c.drift_rate = 0.02;
    int covered = 0;
    for (int s = 0; s < 100; ++s) {
        c.seed = 300 + s;
        const DriftFit fit = subtract_drift(generate_sweeps(c, engine()));
        if (std::abs(fit.rate - 0.02) <= 3.0 * fit.rate_se) ++covered;
    }
    CHECK(covered >= 95);
}

TEST_CASE("subtract_drift demands anchors") {
    ExperimentConfig c = small_config();
    const SweepDataset comp = generate_compensation_repeats(c, engine(), 0.033, 5);
    CHECK_THROWS_WITH_AS(subtract_drift(comp), doctest::Contains("anchors"), ValidationError);
}

TEST_CASE("compensation repeats: shape and drift-free acquisition") {
    ExperimentConfig c = small_config();
    c.drift_rate = 5.0; // must not leak into compensation records
    c.noise_sigma = 0.0;
    const SweepDataset ds = generate_compensation_repeats(c, engine(), 0.0331, 11);
    REQUIRE(ds.records.size() == c.z_grid.size() * 11);
    CHECK(ds.meta.mode == "compensation");
    CHECK(ds.meta.repeats == 11);
    for (const SweepRecord& r : ds.records) {
        CHECK(r.applied_voltage == 0.0331);
        const double model = frequency_shift_model(c.a0 + r.z_piezo, 0.0331, c, engine());
        CHECK(r.frequency_shift == doctest::Approx(model).epsilon(1e-12));
    }
    CHECK_THROWS_AS(generate_compensation_repeats(c, engine(), 0.0331, 1), ValidationError);
}

TEST_CASE("sweep CSV round-trip preserves records and the truth block") {
    ExperimentConfig c = small_config();
    c.noise_sigma = 0.03;
    c.drift_rate = 0.01;
    const SweepDataset ds = generate_sweeps(c, engine());
    std::ostringstream out;
    write_sweep_csv(ds, out);
    std::istringstream in(out.str());
    const SweepDataset back = read_sweep_csv(in);
    REQUIRE(back.records.size() == ds.records.size());
    CHECK(back.meta.a0 == doctest::Approx(ds.meta.a0).epsilon(1e-12));
    CHECK(back.meta.C == doctest::Approx(ds.meta.C).epsilon(1e-12));
    CHECK(back.meta.seed == ds.meta.seed);
    CHECK(back.meta.anchors == ds.meta.anchors);
    CHECK(back.meta.v0_law.intercept_mV ==
          doctest::Approx(ds.meta.v0_law.intercept_mV).epsilon(1e-12));
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        CHECK(back.records[i].frequency_shift ==
              doctest::Approx(ds.records[i].frequency_shift).epsilon(1e-14));
        CHECK(back.records[i].sweep_index == ds.records[i].sweep_index);
    }
}

TEST_CASE("sweep CSV rejects corrupted rows with the line number") {
    std::istringstream in("z_piezo_nm,applied_voltage_mV,frequency_shift_rad_s,sweep_index\n"
                          "0,10,-1.5,0\n0,garbage,-1.6,0\n");
    CHECK_THROWS_WITH_AS(read_sweep_csv(in), doctest::Contains("line 3"), IoError);
}

TEST_CASE("noise_sigma_for_pressure_error backs out the documented scaling") {
    const double sigma = noise_sigma_for_pressure_error(0.02, 0.285, 2.0e4, 60.8e-6, 11);
    // with this sigma, SE/(C 2 pi R) after 11 repeats is 2% of 0.285 Pa
    const double se = sigma / std::sqrt(11.0);
    const double rel = se / (2.0e4 * 2.0 * M_PI * 60.8e-6) / 0.285;
    CHECK(rel == doctest::Approx(0.02).epsilon(1e-12));
}

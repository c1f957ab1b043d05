// caslab: sphere-plate Casimir metrology pipeline.
// Verbs: simulate, calibrate, theory, report. Exit codes: 0 success,
// 2 validation, 3 numerical failure, 4 I/O.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "caslab/analysis.hpp"
#include "caslab/calibrate.hpp"
#include "caslab/config.hpp"
#include "caslab/errors.hpp"
#include "caslab/lifshitz.hpp"
#include "caslab/optics.hpp"
#include "caslab/simulate.hpp"

namespace fs = std::filesystem;
using namespace caslab;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

config::RunConfig load_config(const CommonArgs& args) {
    config::RunConfig cfg = config::RunConfig::load(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

int cmd_simulate(const CommonArgs& args, const std::string& mode_override) {
    config::RunConfig cfg = load_config(args);
    if (!mode_override.empty()) cfg.mode = mode_override;
    ensure_out_dir(args.out_dir);

    const optics::PermittivityModel model =
        cfg.permittivity(optics::PermittivityVariant::GeneralizedPlasma);
    const lifshitz::PressureEngine engine(model, cfg.lifshitz);
    const simulate::ExperimentConfig exp = cfg.experiment();

    simulate::SweepDataset ds;
    std::string filename;
    if (cfg.mode == "compensation") {
        // measure at the mean residual potential of the configured law
        double v0_sum = 0.0;
        for (double z : exp.z_grid) v0_sum += simulate::v0_at(exp.v0_law, exp.a0 + z);
        const double v_mean = v0_sum / static_cast<double>(exp.z_grid.size());
        ds = simulate::generate_compensation_repeats(exp, engine, v_mean, cfg.repeats);
        filename = "compensation.csv";
    } else {
        ds = simulate::generate_sweeps(exp, engine);
        filename = "sweeps.csv";
    }
    ds.meta.model_label = "plasma";
    const std::string path = (fs::path(args.out_dir) / filename).string();
    simulate::write_sweep_csv_file(ds, path);
    std::cout << "wrote " << path << " (" << ds.records.size() << " records)\n";
    return 0;
}

int cmd_calibrate(const CommonArgs& args, const std::string& sweeps_path) {
    config::RunConfig cfg = load_config(args);
    ensure_out_dir(args.out_dir);
    const simulate::SweepDataset ds = simulate::read_sweep_csv_file(sweeps_path);
    const calibrate::CalibrationResult result = calibrate::calibrate_dataset(ds, cfg.R);

    const std::string path = (fs::path(args.out_dir) / "calibration.json").string();
    write_text(path, calibrate::calibration_to_json(result));
    std::cout.precision(6);
    std::cout << "wrote " << path << "\n"
              << "  a0 = " << result.a0 * 1e9 << " nm (sigma " << result.a0_sigma * 1e9
              << " nm)\n"
              << "  C  = " << result.C << " (sigma " << result.C_sigma << ")\n"
              << "  V0 line: " << result.v0_fit.params[0] << " mV/nm * a + "
              << result.v0_fit.params[1] << " mV\n"
              << "  <V0> = " << result.v0_mean * 1e3 << " mV\n";
    return 0;
}

int cmd_theory(const CommonArgs& args) {
    config::RunConfig cfg = load_config(args);
    ensure_out_dir(args.out_dir);
    const std::vector<double> grid = cfg.report_grid();

    const auto emit = [&](optics::PermittivityVariant variant, const std::string& name) {
        const optics::PermittivityModel model = cfg.permittivity(variant);
        const lifshitz::PressureEngine engine(model, cfg.lifshitz);
        lifshitz::PressureCurve curve = lifshitz::make_theory_curve(engine, grid, name);
        const std::string path = (fs::path(args.out_dir) / ("theory_" + name + ".csv")).string();
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path);
        out << "#model=" << name << "\n";
        out << "#temperature_K=" << cfg.lifshitz.temperature_K << "\n";
        out << "#l_max=" << cfg.lifshitz.l_max << "\n";
        out << "#k_rel_tol=" << cfg.lifshitz.k_rel_tol << "\n";
        out << "#series_rel_tol=" << cfg.lifshitz.series_rel_tol << "\n";
        out << "#drude_omega_p_eV=" << cfg.drude.omega_p_eV << "\n";
        out << "#drude_gamma_eV=" << cfg.drude.gamma_eV << "\n";
        analysis::write_curve_csv(curve, out);
        std::cout << "wrote " << path << " (" << curve.size() << " rows)\n";
    };
    emit(optics::PermittivityVariant::DrudeExtrapolated, "drude");
    emit(optics::PermittivityVariant::GeneralizedPlasma, "plasma");
    return 0;
}

int cmd_report(const CommonArgs& args, const std::string& experiment_path,
               const std::string& compensation_sweeps_path, const std::string& calibration_path,
               const std::string& theory_drude_path, const std::string& theory_plasma_path,
               const std::string& compensation_mode) {
    config::RunConfig cfg = load_config(args);
    if (!compensation_mode.empty()) cfg.compensation = compensation_mode;
    ensure_out_dir(args.out_dir);

    // experiment curve: either a ready-made curve or extracted from sweeps
    lifshitz::PressureCurve experiment;
    std::optional<calibrate::CalibrationResult> calib;
    if (!experiment_path.empty()) {
        experiment = analysis::read_curve_csv_file(experiment_path);
    } else {
        if (compensation_sweeps_path.empty() || calibration_path.empty())
            throw ValidationError("report: provide either --experiment or both "
                                  "--compensation-sweeps and --calibration");
        std::ifstream in(calibration_path);
        if (!in) throw IoError("cannot open calibration: " + calibration_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        calib = calibrate::calibration_from_json(buf.str());
        simulate::SweepDataset ds = simulate::read_sweep_csv_file(compensation_sweeps_path);
        if (ds.meta.anchors) ds = simulate::subtract_drift(ds).corrected;
        experiment = analysis::extract_pressure(ds, *calib, cfg.R, cfg.budget.confidence);
    }
    if (experiment.size() == 0) throw ValidationError("report: empty experiment curve");
    experiment = analysis::propagate_separation_error(experiment, cfg.budget);

    const auto load_or_compute = [&](const std::string& path,
                                     optics::PermittivityVariant variant,
                                     const std::string& name) {
        if (!path.empty()) return analysis::read_curve_csv_file(path);
        const optics::PermittivityModel model = cfg.permittivity(variant);
        const lifshitz::PressureEngine engine(model, cfg.lifshitz);
        return lifshitz::make_theory_curve(engine, experiment.separations, name);
    };
    const lifshitz::PressureCurve drude =
        load_or_compute(theory_drude_path, optics::PermittivityVariant::DrudeExtrapolated, "drude");
    const lifshitz::PressureCurve plasma =
        load_or_compute(theory_plasma_path, optics::PermittivityVariant::GeneralizedPlasma,
                        "plasma");

    analysis::ComparisonReport report =
        analysis::compare_with_theory(experiment, drude, plasma, cfg.budget);

    // ratio table on the paper's four reference separations, against the
    // plasma theory
    double compensation = 0.0;
    std::string interp = "V0 law pointwise, compensation = 0 (uncompensated device)";
    if (cfg.compensation == "mean") {
        double v0_sum = 0.0;
        for (double a : experiment.separations) v0_sum += simulate::v0_at(cfg.v0_law, a);
        compensation = v0_sum / static_cast<double>(experiment.size());
        std::ostringstream os;
        os << "V0 law pointwise, compensation = grid mean <V0> = " << compensation * 1e3 << " mV";
        interp = os.str();
    }
    {
        const optics::PermittivityModel model =
            cfg.permittivity(optics::PermittivityVariant::GeneralizedPlasma);
        const lifshitz::PressureEngine engine(model, cfg.lifshitz);
        const std::vector<double> ratio_grid{235e-9, 300e-9, 400e-9, 700e-9};
        report.ratio_table =
            analysis::electric_to_casimir_ratio(ratio_grid, cfg.v0_law, compensation, cfg.R,
                                                engine);
        report.ratio_interpretation = interp;
    }

    write_text((fs::path(args.out_dir) / "report.json").string(),
               analysis::report_to_json(report));
    analysis::write_curve_csv_file(report.experiment,
                                   (fs::path(args.out_dir) / "experiment.csv").string());
    analysis::write_curve_csv_file(report.theory_drude,
                                   (fs::path(args.out_dir) / "theory_drude.csv").string());
    analysis::write_curve_csv_file(report.theory_plasma,
                                   (fs::path(args.out_dir) / "theory_plasma.csv").string());
    std::cout << analysis::report_summary(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sphere-plate Casimir metrology pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "TOML run configuration")->required();
        cmd->add_option("--out", args.out_dir, "output directory")->required();
        cmd->add_option("--seed", seed_value, "override the configured RNG seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* sim = app.add_subcommand("simulate", "generate a synthetic sweep dataset");
    std::string sim_mode;
    add_common(sim);
    sim->add_option("--mode", sim_mode, "sweeps|compensation (overrides config)")
        ->check(CLI::IsMember({"sweeps", "compensation"}));

    auto* cal = app.add_subcommand("calibrate", "fit a0, C and the V0 line from sweeps");
    std::string sweeps_path;
    add_common(cal);
    cal->add_option("--sweeps", sweeps_path, "sweep dataset CSV")->required();

    auto* the = app.add_subcommand("theory", "Drude and plasma pressure curves");
    add_common(the);

    auto* rep = app.add_subcommand("report", "experiment-vs-theory comparison report");
    std::string experiment_path, comp_sweeps_path, calibration_path;
    std::string theory_drude_path, theory_plasma_path, compensation_mode;
    add_common(rep);
    rep->add_option("--experiment", experiment_path, "experiment pressure-curve CSV");
    rep->add_option("--compensation-sweeps", comp_sweeps_path,
                    "compensation sweep CSV (extracted with --calibration)");
    rep->add_option("--calibration", calibration_path, "calibration JSON");
    rep->add_option("--theory-drude", theory_drude_path, "Drude curve CSV (else computed)");
    rep->add_option("--theory-plasma", theory_plasma_path, "plasma curve CSV (else computed)");
    rep->add_option("--compensation", compensation_mode,
                    "ratio-table compensation: zero|mean (overrides config)")
        ->check(CLI::IsMember({"zero", "mean"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (seed_set) args.seed = seed_value;
        if (app.got_subcommand(sim)) return cmd_simulate(args, sim_mode);
        if (app.got_subcommand(cal)) return cmd_calibrate(args, sweeps_path);
        if (app.got_subcommand(the)) return cmd_theory(args);
        if (app.got_subcommand(rep))
            return cmd_report(args, experiment_path, comp_sweeps_path, calibration_path,
                              theory_drude_path, theory_plasma_path, compensation_mode);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

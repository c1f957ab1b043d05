#include "caslab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "caslab/core.hpp"
#include "caslab/electrostatics.hpp"
#include "caslab/errors.hpp"

namespace caslab::analysis {

void ErrorBudget::validate() const {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ValidationError("error budget: confidence must be in (0,1)");
    if (sigma_a < 0.0) throw ValidationError("error budget: sigma_a must be >= 0");
    if (sigma_P_random < 0.0) throw ValidationError("error budget: sigma_P_random must be >= 0");
}

double ErrorBudget::k() const {
    validate();
    if (std::abs(confidence - 0.67) < 1e-9) return 1.0; // the paper's 1-sigma bars
    return normal_quantile(0.5 * (1.0 + confidence));
}

lifshitz::PressureCurve extract_pressure(const simulate::SweepDataset& sweeps,
                                         const calibrate::CalibrationResult& calib, double R,
                                         double confidence) {
    calib.validate();
    if (!(R > 0.0)) throw ValidationError("extract_pressure: R must be > 0");
    const std::vector<double> zs = sweeps.z_values();
    if (zs.empty()) throw ValidationError("extract_pressure: empty dataset");

    ErrorBudget conf_only;
    conf_only.confidence = confidence;
    const double k = conf_only.k();

    lifshitz::PressureCurve curve;
    curve.label = "experiment";
    for (double z : zs) {
        const std::vector<simulate::SweepRecord> recs = sweeps.at_z(z);
        if (recs.size() < 2)
            throw ValidationError("extract_pressure: need >= 2 repeats per separation "
                                  "(protocol: 11)");
        const double v0ref = recs.front().applied_voltage;
        double mean = 0.0;
        for (const simulate::SweepRecord& r : recs) {
            if (r.applied_voltage != v0ref)
                throw ValidationError("extract_pressure: records at one separation must share "
                                      "the compensation voltage");
            mean += r.frequency_shift;
        }
        mean /= static_cast<double>(recs.size());
        double var = 0.0;
        for (const simulate::SweepRecord& r : recs) {
            const double d = r.frequency_shift - mean;
            var += d * d;
        }
        var /= static_cast<double>(recs.size() - 1);
        const double se = std::sqrt(var / static_cast<double>(recs.size()));

        const double gradient = -mean / calib.C;            // N/m
        const double pressure = gradient / (2.0 * M_PI * R); // Pa
        const double sigma = k * se / (calib.C * 2.0 * M_PI * R);
        curve.separations.push_back(calib.a0 + z);
        curve.pressures.push_back(pressure);
        curve.sigmas.push_back(sigma);
    }
    curve.validate_grid();
    return curve;
}

lifshitz::PressureCurve propagate_separation_error(const lifshitz::PressureCurve& curve,
                                                   const ErrorBudget& budget) {
    budget.validate();
    curve.validate_grid();
    const std::size_t n = curve.size();
    if (n < 3)
        throw ValidationError("propagate_separation_error: need >= 3 points for finite "
                              "differences");

    lifshitz::PressureCurve out = curve;
    out.sigmas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dpda;
        if (i == 0)
            dpda = (curve.pressures[1] - curve.pressures[0]) /
                   (curve.separations[1] - curve.separations[0]);
        else if (i + 1 == n)
            dpda = (curve.pressures[n - 1] - curve.pressures[n - 2]) /
                   (curve.separations[n - 1] - curve.separations[n - 2]);
        else
            dpda = (curve.pressures[i + 1] - curve.pressures[i - 1]) /
                   (curve.separations[i + 1] - curve.separations[i - 1]);
        const double random = curve.sigmas.empty() ? budget.sigma_P_random : curve.sigmas[i];
        const double sep_term = dpda * budget.sigma_a;
        out.sigmas[i] = std::sqrt(random * random + sep_term * sep_term);
    }
    return out;
}

std::size_t ComparisonReport::consistent_count(const std::vector<Verdict>& v) const {
    return static_cast<std::size_t>(
        std::count(v.begin(), v.end(), Verdict::Consistent));
}

namespace {

void check_same_grid(const lifshitz::PressureCurve& a, const lifshitz::PressureCurve& b) {
    if (a.size() != b.size())
        throw ValidationError("compare_with_theory: grids differ in length (no resampling)");
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ref = std::max(std::abs(a.separations[i]), std::abs(b.separations[i]));
        if (std::abs(a.separations[i] - b.separations[i]) > 1e-9 * ref)
            throw ValidationError("compare_with_theory: separation grids do not match "
                                  "(no silent resampling)");
    }
}

std::vector<Verdict> pointwise_verdicts(const lifshitz::PressureCurve& exp,
                                        const lifshitz::PressureCurve& theory, double k) {
    std::vector<Verdict> v(exp.size(), Verdict::Consistent);
    for (std::size_t i = 0; i < exp.size(); ++i) {
        const double gap = std::abs(exp.pressures[i] - theory.pressures[i]);
        if (gap > k * exp.sigmas[i]) v[i] = Verdict::Excluded;
    }
    return v;
}

ExclusionBand longest_band(const std::vector<Verdict>& v, const std::vector<double>& a) {
    ExclusionBand best;
    std::size_t run_start = 0, run_len = 0;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i < v.size() && v[i] == Verdict::Excluded) {
            if (run_len == 0) run_start = i;
            ++run_len;
        } else {
            if (run_len > best.points) {
                best.present = true;
                best.points = run_len;
                best.lo = a[run_start];
                best.hi = a[run_start + run_len - 1];
            }
            run_len = 0;
        }
    }
    return best;
}

} // namespace

ComparisonReport compare_with_theory(const lifshitz::PressureCurve& experiment,
                                     const lifshitz::PressureCurve& theory_drude,
                                     const lifshitz::PressureCurve& theory_plasma,
                                     const ErrorBudget& budget) {
    budget.validate();
    experiment.validate_grid();
    if (experiment.sigmas.empty())
        throw ValidationError("compare_with_theory: experiment curve carries no sigmas");
    check_same_grid(experiment, theory_drude);
    check_same_grid(experiment, theory_plasma);

    ComparisonReport rep;
    rep.experiment = experiment;
    rep.theory_drude = theory_drude;
    rep.theory_plasma = theory_plasma;
    rep.k = budget.k();
    rep.confidence = budget.confidence;
    rep.drude_verdicts = pointwise_verdicts(experiment, theory_drude, rep.k);
    rep.plasma_verdicts = pointwise_verdicts(experiment, theory_plasma, rep.k);
    rep.drude_band = longest_band(rep.drude_verdicts, experiment.separations);
    rep.plasma_band = longest_band(rep.plasma_verdicts, experiment.separations);
    return rep;
}

std::vector<RatioRow> electric_to_casimir_ratio(const std::vector<double>& separations,
                                                const simulate::V0Law& v0_law,
                                                double compensation_V, double R,
                                                const lifshitz::PressureEngine& engine) {
    std::vector<RatioRow> rows;
    rows.reserve(separations.size());
    for (double a : separations) {
        const electrostatics::SpherePlateGeometry geom{R, a};
        const electrostatics::ElectricDrive drive{simulate::v0_at(v0_law, a), compensation_V};
        RatioRow row;
        row.separation = a;
        row.electric_pa = electrostatics::electric_pressure_pfa(geom, drive);
        row.casimir_pa = engine.pressure(a);
        row.percent = 100.0 * row.electric_pa / row.casimir_pa;
        rows.push_back(row);
    }
    return rows;
}

void write_curve_csv(const lifshitz::PressureCurve& curve, std::ostream& out) {
    curve.validate_grid();
    if (!curve.label.empty()) out << "#label=" << curve.label << "\n";
    out << "a_nm,P_Pa,sigma_Pa\n";
    out.precision(17);
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << curve.separations[i] * 1e9 << ',' << curve.pressures[i] << ','
            << (curve.sigmas.empty() ? 0.0 : curve.sigmas[i]) << "\n";
}

void write_curve_csv_file(const lifshitz::PressureCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve CSV: " + path);
    write_curve_csv(curve, out);
}

lifshitz::PressureCurve read_curve_csv(std::istream& in) {
    lifshitz::PressureCurve curve;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    bool any_sigma = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos && line.substr(1, eq - 1) == "label")
                curve.label = line.substr(eq + 1);
            continue;
        }
        if (!header_seen) {
            if (line != "a_nm,P_Pa,sigma_Pa") {
                std::ostringstream os;
                os << "curve CSV line " << line_no << ": unexpected header '" << line << "'";
                throw IoError(os.str());
            }
            header_seen = true;
            continue;
        }
        double a_nm = 0.0, p = 0.0, s = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> a_nm >> c1 >> p >> c2 >> s) || c1 != ',' || c2 != ',') {
            std::ostringstream os;
            os << "curve CSV line " << line_no << ": malformed row '" << line << "'";
            throw IoError(os.str());
        }
        curve.separations.push_back(a_nm * 1e-9);
        curve.pressures.push_back(p);
        curve.sigmas.push_back(s);
        if (s != 0.0) any_sigma = true;
    }
    if (!header_seen) throw IoError("curve CSV: missing header");
    if (curve.separations.empty()) throw IoError("curve CSV: no rows");
    if (!any_sigma) curve.sigmas.clear();
    curve.validate_grid();
    return curve;
}

lifshitz::PressureCurve read_curve_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curve CSV: " + path);
    return read_curve_csv(in);
}

namespace {

nlohmann::json curve_to_json(const lifshitz::PressureCurve& c) {
    nlohmann::json j;
    j["label"] = c.label;
    j["a_m"] = c.separations;
    j["P_Pa"] = c.pressures;
    if (!c.sigmas.empty()) j["sigma_Pa"] = c.sigmas;
    return j;
}

nlohmann::json band_to_json(const ExclusionBand& b) {
    nlohmann::json j;
    j["present"] = b.present;
    if (b.present) {
        j["lo_m"] = b.lo;
        j["hi_m"] = b.hi;
        j["points"] = b.points;
    }
    return j;
}

std::string verdict_str(Verdict v) {
    return v == Verdict::Consistent ? "consistent" : "excluded";
}

} // namespace

std::string report_to_json(const ComparisonReport& rep) {
    nlohmann::json j;
    j["confidence"] = rep.confidence;
    j["k"] = rep.k;
    j["ratio_interpretation"] = rep.ratio_interpretation;
    j["experiment"] = curve_to_json(rep.experiment);
    j["theory_drude"] = curve_to_json(rep.theory_drude);
    j["theory_plasma"] = curve_to_json(rep.theory_plasma);
    nlohmann::json dv = nlohmann::json::array(), pv = nlohmann::json::array();
    for (Verdict v : rep.drude_verdicts) dv.push_back(verdict_str(v));
    for (Verdict v : rep.plasma_verdicts) pv.push_back(verdict_str(v));
    j["drude_verdicts"] = std::move(dv);
    j["plasma_verdicts"] = std::move(pv);
    j["drude_exclusion_band"] = band_to_json(rep.drude_band);
    j["plasma_exclusion_band"] = band_to_json(rep.plasma_band);
    nlohmann::json rows = nlohmann::json::array();
    for (const RatioRow& r : rep.ratio_table)
        rows.push_back({{"a_m", r.separation},
                        {"electric_Pa", r.electric_pa},
                        {"casimir_Pa", r.casimir_pa},
                        {"percent", r.percent}});
    j["ratio_table"] = std::move(rows);
    return j.dump(2);
}

std::string report_summary(const ComparisonReport& rep) {
    std::ostringstream os;
    os.precision(4);
    const std::size_t n = rep.experiment.size();
    os << "comparison at " << rep.confidence * 100 << "% confidence (k = " << rep.k << "), " << n
       << " grid points\n";
    auto describe = [&](const char* name, const std::vector<Verdict>& v, const ExclusionBand& b) {
        const std::size_t consistent = rep.consistent_count(v);
        os << "  " << name << ": consistent at " << consistent << "/" << n << " points";
        if (b.present)
            os << "; longest exclusion band " << b.lo * 1e9 << " - " << b.hi * 1e9 << " nm ("
               << b.points << " points)";
        else
            os << "; no excluded points";
        os << "\n";
    };
    describe("Drude ", rep.drude_verdicts, rep.drude_band);
    describe("plasma", rep.plasma_verdicts, rep.plasma_band);
    if (!rep.ratio_table.empty()) {
        os << "  electric/Casimir pressure ratios";
        if (!rep.ratio_interpretation.empty()) os << " (" << rep.ratio_interpretation << ")";
        os << ":\n";
        for (const RatioRow& r : rep.ratio_table)
            os << "    a = " << r.separation * 1e9 << " nm: " << r.electric_pa << " Pa / "
               << r.casimir_pa << " Pa = " << r.percent << "%\n";
    }
    return os.str();
}

} // namespace caslab::analysis

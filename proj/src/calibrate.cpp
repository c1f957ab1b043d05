#include "caslab/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "caslab/electrostatics.hpp"
#include "caslab/errors.hpp"

namespace caslab::calibrate {

void CalibrationResult::validate() const {
    if (!(a0 > 0.0)) throw ValidationError("calibration: a0 must be > 0");
    if (!(C > 0.0)) throw ValidationError("calibration: C must be > 0");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i].z_piezo > points[i - 1].z_piezo))
            throw ValidationError("calibration: points must be ordered in z");
}

ParabolaFitPoint fit_sweep_parabola(const std::vector<simulate::SweepRecord>& records,
                                    double sigma) {
    if (records.size() < 5)
        throw ValidationError("fit_sweep_parabola: need >= 5 voltages (protocol: 11)");
    std::size_t distinct = 1;
    std::vector<double> v(records.size()), w(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        v[i] = records[i].applied_voltage;
        w[i] = records[i].frequency_shift;
    }
    {
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        distinct = static_cast<std::size_t>(
            std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    }
    if (distinct < 5)
        throw ValidationError("fit_sweep_parabola: need >= 5 distinct voltages");

    std::vector<double> sig;
    if (sigma > 0.0) sig.assign(records.size(), sigma);
    const FitResult fit = fit_polynomial_least_squares(v, w, sig, 2);
    const double d = fit.params[0], b = fit.params[1], a = fit.params[2];
    if (a >= 0.0)
        throw NumericalError("fit_sweep_parabola: electrostatic signature absent (fitted "
                             "parabola is not concave)");

    ParabolaFitPoint p;
    p.z_piezo = records.front().z_piezo;
    p.v0 = -b / (2.0 * a);
    p.beta = -a;
    p.casimir_shift = d - a * p.v0 * p.v0;
    p.chi2 = fit.chi2;
    p.dof = fit.dof;
    // delta method for V0 = -B/(2A): dV0/dA = B/(2A^2), dV0/dB = -1/(2A)
    const double dv0_da = b / (2.0 * a * a);
    const double dv0_db = -1.0 / (2.0 * a);
    const double var_v0 = dv0_da * dv0_da * fit.cov(2, 2) + dv0_db * dv0_db * fit.cov(1, 1) +
                          2.0 * dv0_da * dv0_db * fit.cov(2, 1);
    p.v0_sigma = var_v0 > 0.0 ? std::sqrt(var_v0) : 0.0;
    p.beta_sigma = fit.sigma(2);
    return p;
}

SeparationFit fit_absolute_separation(const std::vector<ParabolaFitPoint>& points, double R) {
    if (points.size() < 10)
        throw ValidationError("fit_absolute_separation: need >= 10 separations");
    const double z_min = points.front().z_piezo;
    const double z_max = points.back().z_piezo;
    if (z_max - z_min < 200e-9)
        throw ValidationError("fit_absolute_separation: insufficient z span (need >= 200 nm)");

    std::vector<double> z(points.size()), beta(points.size()), sigma(points.size());
    bool weighted = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        z[i] = points[i].z_piezo;
        beta[i] = points[i].beta;
        sigma[i] = points[i].beta_sigma;
        if (!(sigma[i] > 0.0)) weighted = false;
    }
    if (!weighted) std::fill(sigma.begin(), sigma.end(), 1.0);

    std::vector<double> beta_sorted = beta, z_sorted = z;
    std::sort(beta_sorted.begin(), beta_sorted.end());
    std::sort(z_sorted.begin(), z_sorted.end());
    const double beta_med = beta_sorted[beta_sorted.size() / 2];
    const double z_med = z_sorted[z_sorted.size() / 2];

    const double a0_guess = 200e-9;
    const electrostatics::SpherePlateGeometry g0{R, a0_guess + z_med};
    const double c_guess = beta_med / electrostatics::beta_geometric(g0);

    auto model = [R](const std::vector<double>& p, double zz) {
        const double a = p[0] + zz;
        if (!(a > 1e-10) || !(a < R)) return 1e30; // off the physical branch
        const electrostatics::SpherePlateGeometry g{R, a};
        return p[1] * electrostatics::beta_geometric(g);
    };
    const FitResult fit = fit_nonlinear_least_squares(model, z, beta, sigma, {a0_guess, c_guess});

    SeparationFit out;
    out.a0 = fit.params[0];
    out.C = fit.params[1];
    out.covariance = fit.covariance;
    out.chi2 = fit.chi2;
    out.dof = fit.dof;
    if (!(out.a0 > 0.0) || !(out.C > 0.0))
        throw NumericalError("fit_absolute_separation: fit left the physical region");
    return out;
}

V0LineFit fit_v0_line(const std::vector<ParabolaFitPoint>& points, double a0) {
    if (points.size() < 3) throw ValidationError("fit_v0_line: need >= 3 points");
    std::vector<double> a_nm(points.size()), v0_mV(points.size()), sig(points.size());
    bool weighted = true;
    double mean = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        a_nm[i] = (a0 + points[i].z_piezo) * 1e9;
        v0_mV[i] = points[i].v0 * 1e3;
        sig[i] = points[i].v0_sigma * 1e3;
        if (!(sig[i] > 0.0)) weighted = false;
        mean += points[i].v0;
    }
    V0LineFit out;
    out.line = fit_linear_least_squares(a_nm, v0_mV, weighted ? sig : std::vector<double>{});
    out.v0_mean = mean / static_cast<double>(points.size());
    return out;
}

CalibrationResult calibrate_dataset(const simulate::SweepDataset& dataset, double R) {
    const simulate::DriftFit drift = simulate::subtract_drift(dataset);
    const std::vector<double> zs = drift.corrected.z_values();

    CalibrationResult result;
    result.points.reserve(zs.size());
    const double sigma = dataset.meta.noise_sigma; // 0 selects unit weights
    for (double z : zs)
        result.points.push_back(fit_sweep_parabola(drift.corrected.at_z(z), sigma));

    const SeparationFit sep = fit_absolute_separation(result.points, R);
    result.a0 = sep.a0;
    result.C = sep.C;
    result.a0_sigma = sep.covariance.size() == 4 && sep.covariance[0] > 0.0
                          ? std::sqrt(sep.covariance[0])
                          : 0.0;
    result.C_sigma = sep.covariance.size() == 4 && sep.covariance[3] > 0.0
                         ? std::sqrt(sep.covariance[3])
                         : 0.0;

    const V0LineFit v0 = fit_v0_line(result.points, result.a0);
    result.v0_fit = v0.line;
    result.v0_mean = v0.v0_mean;
    result.drift_rate = drift.rate;
    result.drift_rate_se = drift.rate_se;
    result.validate();
    return result;
}

std::string calibration_to_json(const CalibrationResult& r) {
    nlohmann::json j;
    j["a0"] = r.a0;
    j["a0_sigma"] = r.a0_sigma;
    j["C"] = r.C;
    j["C_sigma"] = r.C_sigma;
    j["v0_mean"] = r.v0_mean;
    j["drift_rate"] = r.drift_rate;
    j["drift_rate_se"] = r.drift_rate_se;
    j["v0_fit"] = {{"slope_mV_per_nm", r.v0_fit.params[0]},
                   {"intercept_mV", r.v0_fit.params[1]},
                   {"slope_sigma_mV_per_nm", r.v0_fit.sigma(0)},
                   {"intercept_sigma_mV", r.v0_fit.sigma(1)},
                   {"chi2", r.v0_fit.chi2},
                   {"dof", r.v0_fit.dof}};
    nlohmann::json pts = nlohmann::json::array();
    for (const ParabolaFitPoint& p : r.points) {
        pts.push_back({{"z_piezo", p.z_piezo},
                       {"v0", p.v0},
                       {"v0_sigma", p.v0_sigma},
                       {"beta", p.beta},
                       {"beta_sigma", p.beta_sigma},
                       {"casimir_shift", p.casimir_shift},
                       {"chi2", p.chi2},
                       {"dof", p.dof}});
    }
    j["points"] = std::move(pts);
    return j.dump(2);
}

CalibrationResult calibration_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("calibration JSON parse error: ") + e.what());
    }
    CalibrationResult r;
    try {
        r.a0 = j.at("a0").get<double>();
        r.a0_sigma = j.at("a0_sigma").get<double>();
        r.C = j.at("C").get<double>();
        r.C_sigma = j.at("C_sigma").get<double>();
        r.v0_mean = j.at("v0_mean").get<double>();
        r.drift_rate = j.value("drift_rate", 0.0);
        r.drift_rate_se = j.value("drift_rate_se", 0.0);
        const auto& vf = j.at("v0_fit");
        r.v0_fit.params = {vf.at("slope_mV_per_nm").get<double>(),
                           vf.at("intercept_mV").get<double>()};
        const double ss = vf.value("slope_sigma_mV_per_nm", 0.0);
        const double is = vf.value("intercept_sigma_mV", 0.0);
        r.v0_fit.covariance = {ss * ss, 0.0, 0.0, is * is};
        r.v0_fit.chi2 = vf.value("chi2", 0.0);
        r.v0_fit.dof = vf.value("dof", 0L);
        for (const auto& pj : j.at("points")) {
            ParabolaFitPoint p;
            p.z_piezo = pj.at("z_piezo").get<double>();
            p.v0 = pj.at("v0").get<double>();
            p.v0_sigma = pj.at("v0_sigma").get<double>();
            p.beta = pj.at("beta").get<double>();
            p.beta_sigma = pj.at("beta_sigma").get<double>();
            p.casimir_shift = pj.at("casimir_shift").get<double>();
            p.chi2 = pj.value("chi2", 0.0);
            p.dof = pj.value("dof", 0L);
            r.points.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("calibration JSON missing field: ") + e.what());
    }
    r.validate();
    return r;
}

} // namespace caslab::calibrate

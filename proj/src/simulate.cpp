#include "caslab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "caslab/electrostatics.hpp"
#include "caslab/errors.hpp"

namespace caslab::simulate {

namespace {

constexpr double kPiezoTravel = 2.3e-6; // actuator range, m

} // namespace

double v0_at(const V0Law& law, double a_m) {
    if (!(a_m >= 0.0)) throw ValidationError("v0_at: separation must be >= 0");
    const double a_nm = a_m * 1e9;
    return (law.slope_mV_per_nm * a_nm + law.intercept_mV) * 1e-3;
}

void ExperimentConfig::validate() const {
    if (!(R > 0.0)) throw ValidationError("config: R must be > 0");
    if (!(a0 > 0.0 && a0 < R)) throw ValidationError("config: a0 must satisfy 0 < a0 < R");
    if (!(C > 0.0)) throw ValidationError("config: calibration constant C must be > 0");
    if (!std::isfinite(v0_law.slope_mV_per_nm) || !std::isfinite(v0_law.intercept_mV))
        throw ValidationError("config: V0 law coefficients must be finite");
    if (voltages.size() != 11 && !allow_nonstandard_voltage_count) {
        std::ostringstream os;
        os << "config: the measurement protocol applies exactly 11 voltages (got "
           << voltages.size()
           << "); set allow_nonstandard_voltage_count = true to override";
        throw ValidationError(os.str());
    }
    if (voltages.size() < 5)
        throw ValidationError("config: need at least 5 voltages for a parabola");
    for (std::size_t i = 1; i < voltages.size(); ++i)
        if (!(voltages[i] > voltages[i - 1]))
            throw ValidationError("config: voltages must be strictly increasing");
    if (z_grid.empty()) throw ValidationError("config: empty z grid");
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
        if (z_grid[i] < 0.0 || z_grid[i] > kPiezoTravel)
            throw ValidationError("config: z grid outside the 2.3 um actuator travel");
        if (i > 0 && !(z_grid[i] > z_grid[i - 1]))
            throw ValidationError("config: z grid must be strictly increasing");
    }
    // the sweep must bracket the expected V0 everywhere on the grid
    for (double z : z_grid) {
        const double v0 = v0_at(v0_law, a0 + z);
        if (!(voltages.front() < v0 && v0 < voltages.back())) {
            std::ostringstream os;
            os << "config: voltage list [" << voltages.front() * 1e3 << ", "
               << voltages.back() * 1e3 << "] mV does not span the expected V0 = " << v0 * 1e3
               << " mV at a = " << (a0 + z) * 1e9 << " nm";
            throw ValidationError(os.str());
        }
    }
    if (noise_sigma < 0.0) throw ValidationError("config: noise_sigma must be >= 0");
    if (!std::isfinite(drift_rate)) throw ValidationError("config: drift_rate must be finite");
}

std::vector<double> SweepDataset::z_values() const {
    std::vector<double> zs;
    for (const SweepRecord& r : records)
        if (zs.empty() || zs.back() != r.z_piezo) zs.push_back(r.z_piezo);
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
    return zs;
}

std::vector<SweepRecord> SweepDataset::at_z(double z) const {
    std::vector<SweepRecord> out;
    for (const SweepRecord& r : records)
        if (r.z_piezo == z) out.push_back(r);
    return out;
}

double frequency_shift_model(double a, double voltage, const ExperimentConfig& config,
                             const lifshitz::PressureEngine& engine) {
    const electrostatics::SpherePlateGeometry geom{config.R, a};
    const double dv = voltage - v0_at(config.v0_law, a);
    const double electric = electrostatics::beta_geometric(geom) * dv * dv;
    const double casimir = lifshitz::sphere_gradient_from_pressure(engine.pressure(a), config.R);
    return -config.C * (electric + casimir);
}

namespace {

// Shared generation loop. `voltages_at(z)` yields the acquisition sequence for
// one sweep; drift is linear in the global acquisition index and continuous
// across sweeps, normalized so drift_rate means rad/s per sweep.
SweepDataset generate(const ExperimentConfig& config, const lifshitz::PressureEngine& engine,
                      const std::vector<double>& sweep_voltages, const std::string& mode,
                      bool anchors) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t per_sweep = sweep_voltages.size();
    SweepDataset ds;
    ds.records.reserve(config.z_grid.size() * per_sweep);

    long g = 0; // global acquisition index
    for (std::size_t iz = 0; iz < config.z_grid.size(); ++iz) {
        const double z = config.z_grid[iz];
        const double a = config.a0 + z;
        const electrostatics::SpherePlateGeometry geom{config.R, a};
        const double beta_geo = electrostatics::beta_geometric(geom);
        const double casimir_shift =
            -config.C * lifshitz::sphere_gradient_from_pressure(engine.pressure(a), config.R);
        const double v0 = v0_at(config.v0_law, a);

        for (double v : sweep_voltages) {
            const double dv = v - v0;
            double shift = casimir_shift - config.C * beta_geo * dv * dv;
            if (config.noise_sigma > 0.0) shift += config.noise_sigma * gauss(rng);
            shift += config.drift_rate * static_cast<double>(g) / static_cast<double>(per_sweep);
            ds.records.push_back({z, v, shift, static_cast<long>(iz)});
            ++g;
        }
    }

    ds.meta.mode = mode;
    ds.meta.R = config.R;
    ds.meta.a0 = config.a0;
    ds.meta.C = config.C;
    ds.meta.v0_law = config.v0_law;
    ds.meta.noise_sigma = config.noise_sigma;
    ds.meta.drift_rate = config.drift_rate;
    ds.meta.seed = config.seed;
    ds.meta.anchors = anchors;
    return ds;
}

} // namespace

SweepDataset generate_sweeps(const ExperimentConfig& config,
                             const lifshitz::PressureEngine& engine) {
    // protocol: the 11 voltages in order, then voltage #1 again as drift anchor
    std::vector<double> seq = config.voltages;
    seq.push_back(config.voltages.front());
    return generate(config, engine, seq, "sweeps", true);
}

SweepDataset generate_compensation_repeats(const ExperimentConfig& config,
                                           const lifshitz::PressureEngine& engine,
                                           double applied_voltage, int repeats) {
    if (repeats < 2)
        throw ValidationError("generate_compensation_repeats: need >= 2 repeats per separation");
    std::vector<double> seq(static_cast<std::size_t>(repeats), applied_voltage);
    // Pressure dwells are short and the instrument re-references the free
    // resonance at every separation, so the acquisition is drift-corrected at
    // the source; the voltage-sweep drift model does not apply here.
    ExperimentConfig c = config;
    c.drift_rate = 0.0;
    SweepDataset ds = generate(c, engine, seq, "compensation", false);
    ds.meta.repeats = repeats;
    ds.meta.applied_voltage = applied_voltage;
    return ds;
}

DriftFit subtract_drift(const SweepDataset& dataset) {
    if (!dataset.meta.anchors)
        throw ValidationError("subtract_drift: dataset has no anchor repeats; regenerate with the "
                              "sweep protocol (anchors enabled)");
    // group by sweep, preserving acquisition order
    std::map<long, std::vector<std::size_t>> sweeps;
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
        sweeps[dataset.records[i].sweep_index].push_back(i);

    double diff_sum = 0.0, diff_sq = 0.0;
    long n_sweeps = 0;
    std::size_t per_sweep = 0;
    for (const auto& [idx, rows] : sweeps) {
        if (rows.size() < 3)
            throw ValidationError("subtract_drift: sweeps too short for anchor analysis");
        if (per_sweep == 0) per_sweep = rows.size();
        const SweepRecord& first = dataset.records[rows.front()];
        const SweepRecord& last = dataset.records[rows.back()];
        if (first.applied_voltage != last.applied_voltage)
            throw ValidationError("subtract_drift: sweep does not end on the anchor voltage; "
                                  "regenerate with anchors enabled");
        const double d = last.frequency_shift - first.frequency_shift;
        diff_sum += d;
        diff_sq += d * d;
        ++n_sweeps;
    }
    const double steps = static_cast<double>(per_sweep - 1);
    const double mean_diff = diff_sum / static_cast<double>(n_sweeps);
    const double slope_per_step = mean_diff / steps; // rad/s per acquisition

    DriftFit fit;
    fit.rate = slope_per_step * static_cast<double>(per_sweep);
    if (n_sweeps > 1) {
        const double var =
            (diff_sq - diff_sum * diff_sum / static_cast<double>(n_sweeps)) /
            static_cast<double>(n_sweeps - 1);
        fit.rate_se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_sweeps)) / steps *
                      static_cast<double>(per_sweep);
    }

    fit.corrected = dataset;
    // acquisition order is the storage order within each sweep
    for (const auto& [idx, rows] : sweeps) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
            const double g = static_cast<double>(idx) * static_cast<double>(per_sweep) +
                             static_cast<double>(j);
            fit.corrected.records[rows[j]].frequency_shift -= slope_per_step * g;
        }
    }
    fit.corrected.meta.drift_rate = 0.0;
    return fit;
}

double noise_sigma_for_pressure_error(double target_rel, double pressure_ref, double C, double R,
                                      int repeats) {
    if (!(target_rel > 0.0 && pressure_ref > 0.0 && C > 0.0 && R > 0.0 && repeats >= 1))
        throw ValidationError("noise_sigma_for_pressure_error: all inputs must be positive");
    return target_rel * pressure_ref * 2.0 * M_PI * R * C * std::sqrt(static_cast<double>(repeats));
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void write_sweep_csv(const SweepDataset& ds, std::ostream& out) {
    const DatasetMeta& m = ds.meta;
    out << "#mode=" << m.mode << "\n";
    out << "#rng=" << m.rng << "\n";
    out << "#seed=" << m.seed << "\n";
    out << "#R_um=" << fmt(m.R * 1e6) << "\n";
    out << "#truth_a0_nm=" << fmt(m.a0 * 1e9) << "\n";
    out << "#truth_C=" << fmt(m.C) << "\n";
    out << "#truth_v0_slope_mV_per_nm=" << fmt(m.v0_law.slope_mV_per_nm) << "\n";
    out << "#truth_v0_intercept_mV=" << fmt(m.v0_law.intercept_mV) << "\n";
    out << "#noise_sigma_rad_s=" << fmt(m.noise_sigma) << "\n";
    out << "#drift_rate_rad_s_per_sweep=" << fmt(m.drift_rate) << "\n";
    out << "#anchors=" << (m.anchors ? 1 : 0) << "\n";
    if (m.mode == "compensation") {
        out << "#repeats=" << m.repeats << "\n";
        out << "#applied_voltage_mV=" << fmt(m.applied_voltage * 1e3) << "\n";
    }
    if (!m.model_label.empty()) out << "#model=" << m.model_label << "\n";
    out << "z_piezo_nm,applied_voltage_mV,frequency_shift_rad_s,sweep_index\n";
    out.precision(17);
    for (const SweepRecord& r : ds.records)
        out << r.z_piezo * 1e9 << ',' << r.applied_voltage * 1e3 << ',' << r.frequency_shift << ','
            << r.sweep_index << "\n";
}

void write_sweep_csv_file(const SweepDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sweep CSV: " + path);
    write_sweep_csv(ds, out);
}

SweepDataset read_sweep_csv(std::istream& in) {
    SweepDataset ds;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(1, eq - 1);
            const std::string val = line.substr(eq + 1);
            try {
                if (key == "mode") ds.meta.mode = val;
                else if (key == "rng") ds.meta.rng = val;
                else if (key == "seed") ds.meta.seed = std::stoull(val);
                else if (key == "R_um") ds.meta.R = std::stod(val) * 1e-6;
                else if (key == "truth_a0_nm") ds.meta.a0 = std::stod(val) * 1e-9;
                else if (key == "truth_C") ds.meta.C = std::stod(val);
                else if (key == "truth_v0_slope_mV_per_nm") ds.meta.v0_law.slope_mV_per_nm = std::stod(val);
                else if (key == "truth_v0_intercept_mV") ds.meta.v0_law.intercept_mV = std::stod(val);
                else if (key == "noise_sigma_rad_s") ds.meta.noise_sigma = std::stod(val);
                else if (key == "drift_rate_rad_s_per_sweep") ds.meta.drift_rate = std::stod(val);
                else if (key == "anchors") ds.meta.anchors = (val == "1" || val == "true");
                else if (key == "repeats") ds.meta.repeats = std::stoi(val);
                else if (key == "applied_voltage_mV") ds.meta.applied_voltage = std::stod(val) * 1e-3;
                else if (key == "model") ds.meta.model_label = val;
            } catch (const std::exception&) {
                std::ostringstream os;
                os << "sweep CSV line " << line_no << ": bad metadata value in '" << line << "'";
                throw IoError(os.str());
            }
            continue;
        }
        if (!header_seen) {
            if (line != "z_piezo_nm,applied_voltage_mV,frequency_shift_rad_s,sweep_index") {
                std::ostringstream os;
                os << "sweep CSV line " << line_no << ": unexpected header '" << line << "'";
                throw IoError(os.str());
            }
            header_seen = true;
            continue;
        }
        SweepRecord r;
        char c1 = 0, c2 = 0, c3 = 0;
        double z_nm = 0.0, v_mV = 0.0;
        std::istringstream ls(line);
        if (!(ls >> z_nm >> c1 >> v_mV >> c2 >> r.frequency_shift >> c3 >> r.sweep_index) ||
            c1 != ',' || c2 != ',' || c3 != ',') {
            std::ostringstream os;
            os << "sweep CSV line " << line_no << ": malformed row '" << line << "'";
            throw IoError(os.str());
        }
        if (z_nm < 0.0) {
            std::ostringstream os;
            os << "sweep CSV line " << line_no << ": negative z";
            throw IoError(os.str());
        }
        r.z_piezo = z_nm * 1e-9;
        r.applied_voltage = v_mV * 1e-3;
        ds.records.push_back(r);
    }
    if (!header_seen) throw IoError("sweep CSV: missing header");
    if (ds.records.empty()) throw IoError("sweep CSV: no records");
    return ds;
}

SweepDataset read_sweep_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sweep CSV: " + path);
    return read_sweep_csv(in);
}

} // namespace caslab::simulate

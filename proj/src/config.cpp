#include "caslab/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "caslab/errors.hpp"

namespace caslab::config {

namespace {

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
}

// strips a trailing # comment that is not inside a string literal
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

Toml::Value parse_scalar(const std::string& raw, long line_no) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
        return raw.substr(1, raw.size() - 2);
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || trim(std::string(end)) != "") {
        std::ostringstream os;
        os << "config line " << line_no << ": cannot parse value '" << raw << "'";
        throw ValidationError(os.str());
    }
    return v;
}

} // namespace

Toml Toml::parse(const std::string& text) {
    Toml toml;
    std::istringstream in(text);
    std::string line;
    std::string section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                std::ostringstream os;
                os << "config line " << line_no << ": malformed section header '" << line << "'";
                throw ValidationError(os.str());
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config line " << line_no << ": expected key = value, got '" << line << "'";
            throw ValidationError(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (key.empty() || raw.empty()) {
            std::ostringstream os;
            os << "config line " << line_no << ": empty key or value";
            throw ValidationError(os.str());
        }
        if (raw.front() == '[') {
            if (raw.back() != ']') {
                std::ostringstream os;
                os << "config line " << line_no << ": malformed array";
                throw ValidationError(os.str());
            }
            std::vector<double> nums;
            std::vector<std::string> strs;
            bool is_string = false;
            std::string body = raw.substr(1, raw.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                Value v = parse_scalar(item, line_no);
                if (std::holds_alternative<std::string>(v)) {
                    is_string = true;
                    strs.push_back(std::get<std::string>(v));
                } else if (std::holds_alternative<double>(v)) {
                    nums.push_back(std::get<double>(v));
                } else {
                    std::ostringstream os;
                    os << "config line " << line_no << ": unsupported array element '" << item
                       << "'";
                    throw ValidationError(os.str());
                }
            }
            if (is_string)
                toml.sections_[section][key] = strs;
            else
                toml.sections_[section][key] = nums;
            continue;
        }
        toml.sections_[section][key] = parse_scalar(raw, line_no);
    }
    return toml;
}

Toml Toml::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const Toml::Value& Toml::get(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end() || s->second.find(key) == s->second.end())
        throw ValidationError("config: missing required key " + section + "." + key);
    return s->second.at(key);
}

bool Toml::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

double Toml::number(const std::string& section, const std::string& key) const {
    const Value& v = get(section, key);
    if (!std::holds_alternative<double>(v))
        throw ValidationError("config: " + section + "." + key + " must be a number");
    return std::get<double>(v);
}

double Toml::number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

std::string Toml::str(const std::string& section, const std::string& key) const {
    const Value& v = get(section, key);
    if (!std::holds_alternative<std::string>(v))
        throw ValidationError("config: " + section + "." + key + " must be a string");
    return std::get<std::string>(v);
}

std::string Toml::str_or(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return has(section, key) ? str(section, key) : fallback;
}

bool Toml::boolean_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const Value& v = get(section, key);
    if (!std::holds_alternative<bool>(v))
        throw ValidationError("config: " + section + "." + key + " must be a boolean");
    return std::get<bool>(v);
}

std::vector<double> Toml::numbers(const std::string& section, const std::string& key) const {
    const Value& v = get(section, key);
    if (!std::holds_alternative<std::vector<double>>(v))
        throw ValidationError("config: " + section + "." + key + " must be a numeric array");
    return std::get<std::vector<double>>(v);
}

RunConfig RunConfig::load(const std::string& path) {
    const Toml t = Toml::parse_file(path);
    RunConfig c;
    c.R = t.number("experiment", "radius_um") * 1e-6;
    c.a0 = t.number("experiment", "a0_nm") * 1e-9;
    c.C = t.number("experiment", "calibration_C");

    c.v0_law.slope_mV_per_nm = t.number("v0", "slope_mV_per_nm");
    c.v0_law.intercept_mV = t.number("v0", "intercept_mV");

    const double z_start = t.number("sweep", "z_start_nm") * 1e-9;
    const double z_stop = t.number("sweep", "z_stop_nm") * 1e-9;
    const double z_step = t.number("sweep", "z_step_nm") * 1e-9;
    if (!(z_step > 0.0) || z_stop < z_start)
        throw ValidationError("config: sweep z grid must have positive step and stop >= start");
    for (double z = z_start; z <= z_stop + 0.5 * z_step; z += z_step) c.z_grid.push_back(z);

    if (t.has("sweep", "voltages_mV")) {
        for (double v : t.numbers("sweep", "voltages_mV")) c.voltages.push_back(v * 1e-3);
    }
    c.voltage_span = t.number_or("sweep", "voltage_span_mV", 150.0) * 1e-3;
    c.noise_sigma = t.number_or("sweep", "noise_sigma_rad_s", 0.0);
    c.drift_rate = t.number_or("sweep", "drift_rate_rad_s_per_sweep", 0.0);
    c.seed = static_cast<std::uint64_t>(t.number_or("sweep", "seed", 1.0));
    c.allow_nonstandard_voltage_count =
        t.boolean_or("sweep", "allow_nonstandard_voltage_count", false);
    c.mode = t.str_or("sweep", "mode", "sweeps");
    if (c.mode != "sweeps" && c.mode != "compensation")
        throw ValidationError("config: sweep.mode must be 'sweeps' or 'compensation'");
    c.repeats = static_cast<int>(t.number_or("sweep", "repeats", 11.0));

    c.optical_table_path = t.str("optics", "table");
    c.drude.omega_p_eV = t.number_or("optics", "drude_omega_p_eV", 9.0);
    c.drude.gamma_eV = t.number_or("optics", "drude_gamma_eV", 0.035);
    c.drude.validate();

    c.lifshitz.temperature_K = t.number_or("lifshitz", "temperature_K", 300.0);
    c.lifshitz.l_max = static_cast<long>(t.number_or("lifshitz", "l_max", 5000.0));
    c.lifshitz.k_rel_tol = t.number_or("lifshitz", "k_rel_tol", 1e-10);
    c.lifshitz.series_rel_tol = t.number_or("lifshitz", "series_rel_tol", 1e-10);
    c.lifshitz.validate();

    c.fine_start = t.number_or("grid", "fine_start_nm", 235.0) * 1e-9;
    c.fine_stop = t.number_or("grid", "fine_stop_nm", 350.0) * 1e-9;
    c.fine_step = t.number_or("grid", "fine_step_nm", 1.0) * 1e-9;
    c.coarse_stop = t.number_or("grid", "coarse_stop_nm", 700.0) * 1e-9;
    c.coarse_step = t.number_or("grid", "coarse_step_nm", 3.0) * 1e-9;

    c.budget.confidence = t.number_or("report", "confidence", 0.67);
    c.budget.sigma_a = t.number_or("report", "sigma_a_nm", 0.5) * 1e-9;
    c.budget.sigma_P_random = t.number_or("report", "sigma_P_random_Pa", 0.0);
    c.budget.validate();
    c.compensation = t.str_or("report", "compensation", "zero");
    if (c.compensation != "zero" && c.compensation != "mean")
        throw ValidationError("config: report.compensation must be 'zero' or 'mean'");

    // resolve the optical table against the config's directory
    namespace fs = std::filesystem;
    fs::path table(c.optical_table_path);
    if (table.is_relative()) {
        const fs::path base = fs::path(path).parent_path();
        const fs::path resolved = base / table;
        if (fs::exists(resolved)) c.optical_table_path = resolved.string();
    }
    if (!fs::exists(c.optical_table_path))
        throw ValidationError("config: optical table does not exist: " + c.optical_table_path);
    return c;
}

simulate::ExperimentConfig RunConfig::experiment() const {
    simulate::ExperimentConfig e;
    e.R = R;
    e.a0 = a0;
    e.C = C;
    e.v0_law = v0_law;
    e.z_grid = z_grid;
    if (!voltages.empty()) {
        e.voltages = voltages;
    } else {
        // 11 voltages centered on the expected V0 at mid grid
        const double z_mid = z_grid[z_grid.size() / 2];
        const double center = simulate::v0_at(v0_law, a0 + z_mid);
        for (int i = 0; i < 11; ++i)
            e.voltages.push_back(center - voltage_span +
                                 2.0 * voltage_span * static_cast<double>(i) / 10.0);
    }
    e.noise_sigma = noise_sigma;
    e.drift_rate = drift_rate;
    e.seed = seed;
    e.allow_nonstandard_voltage_count = allow_nonstandard_voltage_count;
    e.validate();
    return e;
}

optics::PermittivityModel RunConfig::permittivity(optics::PermittivityVariant variant) const {
    optics::OpticalTable table = optics::OpticalTable::load_csv_file(optical_table_path);
    return optics::PermittivityModel(variant, std::move(table), drude);
}

std::vector<double> RunConfig::report_grid() const {
    std::vector<double> grid;
    for (double a = fine_start; a < fine_stop - 0.5 * fine_step; a += fine_step)
        grid.push_back(a);
    for (double a = fine_stop; a <= coarse_stop + 0.5 * coarse_step; a += coarse_step)
        grid.push_back(a);
    return grid;
}

} // namespace caslab::config

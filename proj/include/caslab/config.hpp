#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "caslab/analysis.hpp"
#include "caslab/lifshitz.hpp"
#include "caslab/optics.hpp"
#include "caslab/simulate.hpp"

namespace caslab::config {

/// Minimal TOML subset: [sections], key = value with strings, numbers,
/// booleans and flat arrays, # comments. Enough for the run configs; no
/// nested tables or dates.
class Toml {
  public:
    using Value = std::variant<bool, double, std::string, std::vector<double>,
                               std::vector<std::string>>;

    static Toml parse(const std::string& text);
    static Toml parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;
    double number_or(const std::string& section, const std::string& key, double fallback) const;
    std::string str(const std::string& section, const std::string& key) const;
    std::string str_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    bool boolean_or(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> numbers(const std::string& section, const std::string& key) const;

  private:
    const Value& get(const std::string& section, const std::string& key) const;
    std::map<std::string, std::map<std::string, Value>> sections_;
};

/// One resolved run configuration: geometry, V0 law, sweep protocol, optical
/// data, Lifshitz settings, report grid and error budget. Unit-suffixed keys
/// in the file, SI here.
struct RunConfig {
    // [experiment]
    double R = 60.8e-6;
    double a0 = 235e-9;
    double C = 2.0e4;
    // [v0]
    simulate::V0Law v0_law;
    // [sweep]
    std::vector<double> z_grid;          // m
    std::vector<double> voltages;        // V (explicit or synthesized)
    double voltage_span = 0.150;         // V, used when no explicit list
    double noise_sigma = 0.0;            // rad/s
    double drift_rate = 0.0;             // rad/s per sweep
    std::uint64_t seed = 1;
    bool allow_nonstandard_voltage_count = false;
    std::string mode = "sweeps";         // or "compensation"
    int repeats = 11;
    // [optics]
    std::string optical_table_path;
    optics::DrudeParameters drude;
    // [lifshitz]
    lifshitz::LifshitzSettings lifshitz;
    // [grid] two-panel report grid
    double fine_start = 235e-9, fine_stop = 350e-9, fine_step = 1e-9;
    double coarse_stop = 700e-9, coarse_step = 3e-9;
    // [report]
    analysis::ErrorBudget budget;
    std::string compensation = "zero"; // or "mean"

    /// Loads and validates; relative paths resolve against the config file's
    /// directory.
    static RunConfig load(const std::string& path);

    simulate::ExperimentConfig experiment() const;
    optics::PermittivityModel permittivity(optics::PermittivityVariant variant) const;
    std::vector<double> report_grid() const;
};

} // namespace caslab::config

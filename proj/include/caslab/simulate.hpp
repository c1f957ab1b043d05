#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "caslab/lifshitz.hpp"

namespace caslab::simulate {

/// Straight-line residual-potential law V0(a) = slope*a + intercept with a in
/// nm and the result in mV (the experiment's reporting units).
struct V0Law {
    double slope_mV_per_nm = 0.0;
    double intercept_mV = 0.0;
};

/// V0 at absolute separation a (m), returned in volts.
double v0_at(const V0Law& law, double a_m);

/// Everything a synthetic run needs. The calibration constant C = w0/(2k)
/// converts force gradients to frequency shifts; the paper never states its
/// value, so it is free here and recovered by calibration.
struct ExperimentConfig {
    double R = 60.8e-6;   // m
    double a0 = 235e-9;   // m, closest separation
    double C = 2.0e4;     // rad m / (N s)
    V0Law v0_law;
    std::vector<double> voltages; // V, strictly increasing, 11 per protocol
    std::vector<double> z_grid;   // m, piezo displacements
    double noise_sigma = 0.0;     // rad/s
    double drift_rate = 0.0;      // rad/s per sweep index
    std::uint64_t seed = 0;
    bool allow_nonstandard_voltage_count = false;

    void validate() const;
};

struct SweepRecord {
    double z_piezo = 0.0;          // m
    double applied_voltage = 0.0;  // V
    double frequency_shift = 0.0;  // rad/s
    long sweep_index = 0;
};

/// Config echo and truth block carried with every synthetic dataset.
struct DatasetMeta {
    std::string mode = "sweeps"; // "sweeps" (voltage parabolas) or "compensation"
    std::string rng = "mt19937_64";
    double R = 0.0, a0 = 0.0, C = 0.0;
    V0Law v0_law;
    double noise_sigma = 0.0;
    double drift_rate = 0.0;
    std::uint64_t seed = 0;
    bool anchors = false; // voltage #1 re-measured at each sweep's end
    int repeats = 0;                // compensation mode
    double applied_voltage = 0.0;   // compensation mode
    std::string model_label;
};

struct SweepDataset {
    std::vector<SweepRecord> records;
    DatasetMeta meta;

    /// z values in grid order (unique, ascending).
    std::vector<double> z_values() const;
    /// Records at one z, in acquisition order.
    std::vector<SweepRecord> at_z(double z) const;
};

/// Noiseless Eq.-of-motion value: dw = -C beta_geo (V - V0(a))^2 - C 2 pi R P(a).
/// Strictly maximal in V at V = V0(a).
double frequency_shift_model(double a, double voltage, const ExperimentConfig& config,
                             const lifshitz::PressureEngine& engine);

/// Per-z voltage sweeps per the measurement protocol: the configured voltages
/// in order plus a re-measurement of voltage #1 closing each sweep (the drift
/// anchor). Gaussian noise and a piezo drift linear in global acquisition
/// index (drift_rate per sweep, continuous across sweeps). Deterministic per
/// seed.
SweepDataset generate_sweeps(const ExperimentConfig& config,
                             const lifshitz::PressureEngine& engine);

/// Repeated measurements at one fixed applied voltage per separation, the
/// protocol used for Casimir-pressure extraction after compensation. The
/// frequency reference is re-acquired before each dwell, so these records are
/// free of the voltage-sweep drift model.
SweepDataset generate_compensation_repeats(const ExperimentConfig& config,
                                           const lifshitz::PressureEngine& engine,
                                           double applied_voltage, int repeats = 11);

struct DriftFit {
    SweepDataset corrected;
    double rate = 0.0;     // rad/s per sweep index
    double rate_se = 0.0;  // standard error over sweeps
};

/// Removes the best-fit linear-in-acquisition-index drift inferred from the
/// anchor repeats (first-voltage re-measurements). Errors if the dataset was
/// generated without anchors.
DriftFit subtract_drift(const SweepDataset& dataset);

/// Noise level that yields a target relative pressure error at a reference
/// pressure after `repeats` averages: sigma = rel * P * 2 pi R C sqrt(repeats).
double noise_sigma_for_pressure_error(double target_rel, double pressure_ref, double C, double R,
                                      int repeats);

void write_sweep_csv(const SweepDataset& dataset, std::ostream& out);
void write_sweep_csv_file(const SweepDataset& dataset, const std::string& path);
SweepDataset read_sweep_csv(std::istream& in);
SweepDataset read_sweep_csv_file(const std::string& path);

} // namespace caslab::simulate

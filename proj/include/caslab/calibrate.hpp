#pragma once

#include <string>
#include <vector>

#include "caslab/core.hpp"
#include "caslab/simulate.hpp"

namespace caslab::calibrate {

/// Per-separation parabola fit: vertex position (V0), curvature (beta) and the
/// voltage-independent Casimir shift, with delta-method uncertainties.
struct ParabolaFitPoint {
    double z_piezo = 0.0;       // m
    double v0 = 0.0;            // V
    double v0_sigma = 0.0;      // V
    double beta = 0.0;          // rad/(s V^2), > 0 for attractive electrostatics
    double beta_sigma = 0.0;
    double casimir_shift = 0.0; // rad/s, the -C dF_C/da component
    double chi2 = 0.0;
    long dof = 0;
};

/// Full calibration output of the measurement chain.
struct CalibrationResult {
    double a0 = 0.0;        // m
    double a0_sigma = 0.0;
    double C = 0.0;         // rad m / (N s)
    double C_sigma = 0.0;
    std::vector<ParabolaFitPoint> points;
    FitResult v0_fit;       // params = [slope mV/nm, intercept mV]
    double v0_mean = 0.0;   // V, unweighted grid mean
    double drift_rate = 0.0;    // rad/s per sweep, removed before fitting
    double drift_rate_se = 0.0;

    void validate() const;
};

/// Weighted least squares of dw = A V^2 + B V + D over the records of one
/// sweep (drift already subtracted). V0 = -B/(2A), beta = -A,
/// casimir_shift = D - A V0^2. sigma <= 0 selects unit weights.
/// A >= 0 (no concave parabola) means the electrostatic signature is absent.
ParabolaFitPoint fit_sweep_parabola(const std::vector<simulate::SweepRecord>& records,
                                    double sigma);

struct SeparationFit {
    double a0 = 0.0;
    double C = 0.0;
    std::vector<double> covariance; // 2x2 over (a0, C)
    double chi2 = 0.0;
    long dof = 0;
};

/// Global fit of beta(z) = C * beta_geometric(a0 + z, R) over (a0, C), the
/// step that turns piezo displacements into absolute separations.
SeparationFit fit_absolute_separation(const std::vector<ParabolaFitPoint>& points, double R);

struct V0LineFit {
    FitResult line;      // params = [slope mV/nm, intercept mV]
    double v0_mean = 0.0; // V
};

/// Weighted straight-line fit of V0 against absolute separation a = a0 + z,
/// reported in the experiment's mV/nm and mV units.
V0LineFit fit_v0_line(const std::vector<ParabolaFitPoint>& points, double a0);

/// The full chain: drift subtraction, per-z parabola fits, (a0, C) extraction,
/// V0 line. Uses the dataset's recorded noise level for weighting when
/// present.
CalibrationResult calibrate_dataset(const simulate::SweepDataset& dataset, double R);

std::string calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const std::string& text);

} // namespace caslab::calibrate

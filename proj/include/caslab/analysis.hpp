#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "caslab/calibrate.hpp"
#include "caslab/lifshitz.hpp"
#include "caslab/simulate.hpp"

namespace caslab::analysis {

/// Experimental error model: random per-point pressure error, the absolute
/// separation error, and the confidence level of the quoted bars.
struct ErrorBudget {
    double sigma_a = 0.5e-9;       // m
    double sigma_P_random = 0.0;   // Pa per point; fallback when a curve has no sigmas
    double confidence = 0.67;

    void validate() const;
    /// Sigma multiplier for this confidence. The experiment's "67%" label is
    /// the 1-sigma convention; other levels use the normal quantile.
    double k() const;
};

/// Casimir pressure curve from compensated repeat sweeps:
/// gradient = -mean(dw)/C per separation, pressure = gradient/(2 pi R),
/// per-point sigma from repeat scatter (standard error of the mean) scaled to
/// the requested confidence.
lifshitz::PressureCurve extract_pressure(const simulate::SweepDataset& sweeps,
                                         const calibrate::CalibrationResult& calib, double R,
                                         double confidence = 0.67);

/// Grows each point's sigma with the separation-error term:
/// sigma_total^2 = sigma_random^2 + (dP/da * sigma_a)^2, the derivative taken
/// from centered finite differences on the curve.
lifshitz::PressureCurve propagate_separation_error(const lifshitz::PressureCurve& curve,
                                                   const ErrorBudget& budget);

enum class Verdict { Consistent, Excluded };

struct RatioRow {
    double separation = 0.0;   // m
    double electric_pa = 0.0;  // Pa
    double casimir_pa = 0.0;   // Pa
    double percent = 0.0;      // 100 * electric / casimir
};

struct ExclusionBand {
    bool present = false;
    double lo = 0.0; // m
    double hi = 0.0; // m
    std::size_t points = 0;
};

struct ComparisonReport {
    lifshitz::PressureCurve experiment;    // sigmas = total
    lifshitz::PressureCurve theory_drude;
    lifshitz::PressureCurve theory_plasma;
    std::vector<Verdict> drude_verdicts;
    std::vector<Verdict> plasma_verdicts;
    ExclusionBand drude_band;  // longest contiguous run of excluded points
    ExclusionBand plasma_band;
    std::vector<RatioRow> ratio_table;
    double k = 1.0;
    double confidence = 0.67;
    std::string ratio_interpretation; // which V0 law / compensation produced the table

    std::size_t consistent_count(const std::vector<Verdict>& v) const;
};

/// Pointwise test: a theory is excluded where |P_exp - P_th| > k sigma_total.
/// The experiment curve must already carry total sigmas; grids must match
/// exactly (no silent resampling).
ComparisonReport compare_with_theory(const lifshitz::PressureCurve& experiment,
                                     const lifshitz::PressureCurve& theory_drude,
                                     const lifshitz::PressureCurve& theory_plasma,
                                     const ErrorBudget& budget);

/// Electric-to-Casimir pressure percentage at each separation, with
/// dV = V0(a) - compensation. compensation = 0 is the uncompensated device.
std::vector<RatioRow> electric_to_casimir_ratio(const std::vector<double>& separations,
                                                const simulate::V0Law& v0_law,
                                                double compensation_V, double R,
                                                const lifshitz::PressureEngine& engine);

void write_curve_csv(const lifshitz::PressureCurve& curve, std::ostream& out);
void write_curve_csv_file(const lifshitz::PressureCurve& curve, const std::string& path);
lifshitz::PressureCurve read_curve_csv(std::istream& in);
lifshitz::PressureCurve read_curve_csv_file(const std::string& path);

std::string report_to_json(const ComparisonReport& report);
/// Human-readable summary: exclusion bands and the ratio table.
std::string report_summary(const ComparisonReport& report);

} // namespace caslab::analysis

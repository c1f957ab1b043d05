#pragma once

#include <iosfwd>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace caslab::optics {

struct OpticalRow {
    double energy_eV = 0.0;
    double n = 0.0;
    double k = 0.0;
};

/// Tabulated complex refractive index of a metal vs photon energy, sorted
/// ascending. Immutable after construction; all queries are thread-safe.
class OpticalTable {
  public:
    OpticalTable(std::vector<OpticalRow> rows, std::string material, std::string source);

    /// Parses CSV with header `energy_eV,n,k`; `#`-prefixed comment lines
    /// carry provenance metadata. Throws IoError with the offending line
    /// number on parse failure, ValidationError on invariant violations.
    static OpticalTable load_csv(std::istream& in, const std::string& label);
    static OpticalTable load_csv_file(const std::string& path);

    const std::vector<OpticalRow>& rows() const { return rows_; }
    const std::string& material() const { return material_; }
    const std::string& source() const { return source_; }

    double min_energy_eV() const { return rows_.front().energy_eV; }
    double max_energy_eV() const { return rows_.back().energy_eV; }

    /// Im eps = 2 n k at photon energy E (eV), log-log interpolated between
    /// rows. E must lie within the tabulated range.
    double im_eps_at_eV(double energy_eV) const;

  private:
    void validate() const;

    std::vector<OpticalRow> rows_;
    std::string material_;
    std::string source_;
};

/// Im eps(omega) = 2 n k with omega in rad/s. Out-of-range omega is an error;
/// extrapolation beyond the table is the caller's explicit responsibility.
double im_eps(const OpticalTable& table, double omega_rad_s);

/// Free-electron parameters for the zero-frequency extrapolation of the data.
struct DrudeParameters {
    double omega_p_eV = 9.0; // conventional Au value; the paper states none
    double gamma_eV = 0.035;

    void validate() const;
    double omega_p_rad_s() const;
    double gamma_rad_s() const;
    /// Drude Im eps(omega), omega in rad/s.
    double im_eps(double omega_rad_s) const;
};

enum class PermittivityVariant { DrudeExtrapolated, GeneralizedPlasma };

/// Dielectric permittivity along the imaginary frequency axis, built from the
/// optical table by a Kramers-Kronig transform with the chosen zero-frequency
/// extrapolation:
///
///   DrudeExtrapolated:  eps(i xi) = 1 + (2/pi) Int_0^inf w Im eps(w)/(w^2+xi^2) dw
///     where Im eps below the table is the Drude form scaled to join the table
///     continuously at its lowest energy, and zero above the table.
///
///   GeneralizedPlasma:  eps(i xi) = 1 + w_p^2/xi^2 + core integral, where the
///     core (interband) absorption is max(0, Im eps(w) - Drude(w)).
class PermittivityModel {
  public:
    PermittivityModel(PermittivityVariant variant, OpticalTable table, DrudeParameters drude,
                      double kk_rel_tol = 1e-10);

    PermittivityVariant variant() const { return variant_; }
    const OpticalTable& table() const { return table_; }
    const DrudeParameters& drude() const { return drude_; }

    /// eps(i xi), xi in rad/s, xi > 0. Always >= 1 and non-increasing in xi.
    double eval(double xi_rad_s) const;

  private:
    double kramers_kronig(double xi_rad_s, bool subtract_drude) const;

    PermittivityVariant variant_;
    OpticalTable table_;
    DrudeParameters drude_;
    double kk_rel_tol_;
    double low_join_scale_; // continuity factor for the below-table Drude tail
};

double eps_imag_axis(const PermittivityModel& model, double xi_rad_s);

/// Matsubara frequencies xi_l = 2 pi k_B T l / hbar for l = 0..l_max, rad/s.
std::vector<double> matsubara_grid(double temperature_K, long l_max);

/// Memo cache of eps(i xi_l) for one (model, temperature). Lazily filled;
/// safe for concurrent readers.
class MatsubaraPermittivityCache {
  public:
    MatsubaraPermittivityCache(const PermittivityModel& model, double temperature_K);

    double xi(long l) const;
    double eps(long l) const;
    double temperature() const { return temperature_K_; }
    const PermittivityModel& model() const { return model_; }

  private:
    const PermittivityModel& model_;
    double temperature_K_;
    double xi1_;
    mutable std::map<long, double> cache_;
    mutable std::mutex mutex_;
};

} // namespace caslab::optics

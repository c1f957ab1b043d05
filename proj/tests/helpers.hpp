#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "caslab/optics.hpp"

#ifndef CASLAB_DATA_DIR
#define CASLAB_DATA_DIR "."
#endif

namespace caslab::testing {

inline std::string data_path(const std::string& name) {
    return std::string(CASLAB_DATA_DIR) + "/" + name;
}

/// n,k table generated from the pure Drude dielectric function; energies in eV.
inline optics::OpticalTable drude_table(double wp_eV, double gamma_eV, double e_lo, double e_hi,
                                        int n_pts) {
    std::vector<optics::OpticalRow> rows;
    rows.reserve(n_pts);
    for (int i = 0; i < n_pts; ++i) {
        const double e = e_lo * std::pow(e_hi / e_lo, static_cast<double>(i) / (n_pts - 1));
        const double er = 1.0 - wp_eV * wp_eV / (e * e + gamma_eV * gamma_eV);
        const double ei = wp_eV * wp_eV * gamma_eV / (e * (e * e + gamma_eV * gamma_eV));
        const double mag = std::hypot(er, ei);
        rows.push_back({e, std::sqrt(0.5 * (mag + er)), std::sqrt(0.5 * (mag - er))});
    }
    return optics::OpticalTable(std::move(rows), "Drude-synthetic", "closed form");
}

inline optics::OpticalTable au_table() {
    return optics::OpticalTable::load_csv_file(data_path("au_optical.csv"));
}

} // namespace caslab::testing

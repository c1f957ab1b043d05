#include "caslab/optics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "caslab/core.hpp"
#include "caslab/errors.hpp"

namespace caslab::optics {

namespace {

constexpr double kKkGateMinRows = 50;
constexpr double kKkGateDecades = 3.0;

} // namespace

OpticalTable::OpticalTable(std::vector<OpticalRow> rows, std::string material, std::string source)
    : rows_(std::move(rows)), material_(std::move(material)), source_(std::move(source)) {
    validate();
}

void OpticalTable::validate() const {
    if (rows_.size() < 2) throw ValidationError("optical table: need at least 2 rows");
    double prev = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const OpticalRow& r = rows_[i];
        if (!(r.energy_eV > 0.0))
            throw ValidationError("optical table: photon energies must be > 0");
        if (!(r.energy_eV > prev)) {
            std::ostringstream os;
            os << "optical table: energies must be strictly increasing (duplicate or unsorted "
                  "value "
               << r.energy_eV << " eV at row " << i + 1 << ")";
            throw ValidationError(os.str());
        }
        if (!(r.n > 0.0)) throw ValidationError("optical table: n must be > 0");
        if (r.k < 0.0) throw ValidationError("optical table: k must be >= 0");
        prev = r.energy_eV;
    }
}

OpticalTable OpticalTable::load_csv(std::istream& in, const std::string& label) {
    std::vector<OpticalRow> rows;
    std::string material = label;
    std::string source;
    std::string line;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            // provenance metadata: "# key: value" lines
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                std::string key = line.substr(1, colon - 1);
                std::string val = line.substr(colon + 1);
                auto trim = [](std::string& s) {
                    s.erase(0, s.find_first_not_of(" \t"));
                    s.erase(s.find_last_not_of(" \t\r") + 1);
                };
                trim(key);
                trim(val);
                if (key == "material") material = val;
                if (key == "source") source = val;
            }
            continue;
        }
        if (!header_seen) {
            std::string h = line;
            h.erase(std::remove_if(h.begin(), h.end(),
                                   [](char c) { return c == ' ' || c == '\r'; }),
                    h.end());
            if (h != "energy_eV,n,k") {
                std::ostringstream os;
                os << "optical CSV line " << line_no << ": expected header 'energy_eV,n,k', got '"
                   << line << "'";
                throw IoError(os.str());
            }
            header_seen = true;
            continue;
        }
        OpticalRow r;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> r.energy_eV >> c1 >> r.n >> c2 >> r.k) || c1 != ',' || c2 != ',') {
            std::ostringstream os;
            os << "optical CSV line " << line_no << ": malformed row '" << line << "'";
            throw IoError(os.str());
        }
        rows.push_back(r);
    }
    if (!header_seen) throw IoError("optical CSV: missing header 'energy_eV,n,k'");
    return OpticalTable(std::move(rows), material, source);
}

OpticalTable OpticalTable::load_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open optical table: " + path);
    return load_csv(in, path);
}

double OpticalTable::im_eps_at_eV(double energy_eV) const {
    if (energy_eV < min_energy_eV() || energy_eV > max_energy_eV()) {
        std::ostringstream os;
        os << "im_eps: " << energy_eV << " eV outside tabulated range [" << min_energy_eV() << ", "
           << max_energy_eV() << "] eV; extrapolation is the caller's responsibility";
        throw ValidationError(os.str());
    }
    auto it = std::lower_bound(rows_.begin(), rows_.end(), energy_eV,
                               [](const OpticalRow& r, double e) { return r.energy_eV < e; });
    if (it->energy_eV == energy_eV) return 2.0 * it->n * it->k;
    const OpticalRow& hi = *it;
    const OpticalRow& lo = *(it - 1);
    const double v_lo = 2.0 * lo.n * lo.k;
    const double v_hi = 2.0 * hi.n * hi.k;
    if (v_lo > 0.0 && v_hi > 0.0) {
        const double t = std::log(energy_eV / lo.energy_eV) / std::log(hi.energy_eV / lo.energy_eV);
        return v_lo * std::exp(t * std::log(v_hi / v_lo));
    }
    // a lossless endpoint: fall back to linear within the segment
    const double t = (energy_eV - lo.energy_eV) / (hi.energy_eV - lo.energy_eV);
    return v_lo + t * (v_hi - v_lo);
}

double im_eps(const OpticalTable& table, double omega_rad_s) {
    return table.im_eps_at_eV(omega_rad_s / PhysicalConstants::eV_to_rad_per_s);
}

void DrudeParameters::validate() const {
    if (!(omega_p_eV > 0.0)) throw ValidationError("Drude parameters: omega_p must be > 0");
    if (gamma_eV < 0.0) throw ValidationError("Drude parameters: gamma must be >= 0");
}

double DrudeParameters::omega_p_rad_s() const { return omega_p_eV * PhysicalConstants::eV_to_rad_per_s; }
double DrudeParameters::gamma_rad_s() const { return gamma_eV * PhysicalConstants::eV_to_rad_per_s; }

double DrudeParameters::im_eps(double omega_rad_s) const {
    const double wp = omega_p_rad_s();
    const double g = gamma_rad_s();
    return wp * wp * g / (omega_rad_s * (omega_rad_s * omega_rad_s + g * g));
}

PermittivityModel::PermittivityModel(PermittivityVariant variant, OpticalTable table,
                                     DrudeParameters drude, double kk_rel_tol)
    : variant_(variant), table_(std::move(table)), drude_(drude), kk_rel_tol_(kk_rel_tol) {
    drude_.validate();
    if (!(kk_rel_tol > 0.0 && kk_rel_tol <= 1e-3))
        throw ValidationError("permittivity model: kk_rel_tol must be in (0, 1e-3]");
    // Kramers-Kronig adequacy gate: enough rows over enough decades.
    const double decades = std::log10(table_.max_energy_eV() / table_.min_energy_eV());
    if (table_.rows().size() < kKkGateMinRows || decades < kKkGateDecades) {
        std::ostringstream os;
        os << "permittivity model: table '" << table_.material() << "' fails the Kramers-Kronig "
           << "gate (needs >= 50 rows over >= 3 decades; has " << table_.rows().size()
           << " rows over " << decades << " decades)";
        throw ValidationError(os.str());
    }
    // Scale joining the Drude tail continuously to the table's lowest row.
    const double table_val = 2.0 * table_.rows().front().n * table_.rows().front().k;
    const double drude_val =
        drude_.im_eps(table_.min_energy_eV() * PhysicalConstants::eV_to_rad_per_s);
    low_join_scale_ = (table_val > 0.0 && drude_val > 0.0) ? table_val / drude_val : 1.0;
}

double PermittivityModel::kramers_kronig(double xi, bool subtract_drude) const {
    const double to_rad = PhysicalConstants::eV_to_rad_per_s;
    const double w0 = table_.min_energy_eV() * to_rad;
    const double wp = drude_.omega_p_rad_s();
    const double g = drude_.gamma_rad_s();
    const double xi2 = xi * xi;

    // weighted integrand w * Im eps(w) / (w^2 + xi^2), with w * ImDrude written
    // in closed form so the w -> 0 limit is explicit
    auto below = [&](double w) {
        const double w_im_drude = wp * wp * g / (w * w + g * g);
        const double scale = subtract_drude ? std::max(0.0, low_join_scale_ - 1.0)
                                            : low_join_scale_;
        return scale * w_im_drude / (w * w + xi2);
    };
    auto in_table = [&](double w) {
        double im = table_.im_eps_at_eV(w / to_rad);
        if (subtract_drude) im = std::max(0.0, im - drude_.im_eps(w));
        return w * im / (w * w + xi2);
    };

    // crude composite pass sizes one absolute budget across all pieces
    const auto& rows = table_.rows();
    const std::size_t n_seg = rows.size() - 1;
    auto crude_piece = [](const std::function<double(double)>& f, double a, double b) {
        return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    };
    double crude = crude_piece(below, 0.0, w0);
    std::vector<double> seg_lo(n_seg), seg_hi(n_seg);
    for (std::size_t i = 0; i < n_seg; ++i) {
        seg_lo[i] = rows[i].energy_eV * to_rad;
        seg_hi[i] = rows[i + 1].energy_eV * to_rad;
        crude += crude_piece(in_table, seg_lo[i], seg_hi[i]);
    }
    if (crude <= 0.0) return 0.0; // fully clamped core

    const double abs_budget = kk_rel_tol_ * crude;
    const double per_piece = abs_budget / static_cast<double>(n_seg + 1);
    double total = integrate_adaptive_abs(below, 0.0, w0, per_piece, 48, 16);
    for (std::size_t i = 0; i < n_seg; ++i)
        total += integrate_adaptive_abs(in_table, seg_lo[i], seg_hi[i], per_piece, 48, 2);
    return total;
}

double PermittivityModel::eval(double xi) const {
    if (!(xi > 0.0)) throw ValidationError("eps_imag_axis: xi must be > 0");
    const double kk = 2.0 / M_PI * kramers_kronig(xi, variant_ == PermittivityVariant::GeneralizedPlasma);
    if (variant_ == PermittivityVariant::GeneralizedPlasma) {
        const double wp = drude_.omega_p_rad_s();
        return 1.0 + wp * wp / (xi * xi) + kk;
    }
    return 1.0 + kk;
}

double eps_imag_axis(const PermittivityModel& model, double xi_rad_s) { return model.eval(xi_rad_s); }

std::vector<double> matsubara_grid(double temperature_K, long l_max) {
    if (!(temperature_K > 0.0)) throw ValidationError("matsubara_grid: T must be > 0");
    if (l_max < 1) throw ValidationError("matsubara_grid: l_max must be >= 1");
    const double xi1 =
        2.0 * M_PI * PhysicalConstants::k_B * temperature_K / PhysicalConstants::hbar;
    std::vector<double> grid(static_cast<std::size_t>(l_max) + 1);
    for (long l = 0; l <= l_max; ++l) grid[static_cast<std::size_t>(l)] = xi1 * static_cast<double>(l);
    return grid;
}

MatsubaraPermittivityCache::MatsubaraPermittivityCache(const PermittivityModel& model,
                                                       double temperature_K)
    : model_(model), temperature_K_(temperature_K) {
    if (!(temperature_K > 0.0)) throw ValidationError("permittivity cache: T must be > 0");
    xi1_ = 2.0 * M_PI * PhysicalConstants::k_B * temperature_K / PhysicalConstants::hbar;
}

double MatsubaraPermittivityCache::xi(long l) const {
    return xi1_ * static_cast<double>(l);
}

double MatsubaraPermittivityCache::eps(long l) const {
    if (l < 1) throw ValidationError("permittivity cache: l must be >= 1 (l = 0 is the explicit "
                                     "zero-frequency branch)");
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(l);
        if (it != cache_.end()) return it->second;
    }
    const double value = model_.eval(xi(l));
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(l, value).first->second;
}

} // namespace caslab::optics

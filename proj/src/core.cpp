#include "caslab/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "caslab/errors.hpp"

namespace caslab {

double FitResult::sigma(std::size_t i) const {
    const double v = cov(i, i);
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

SeriesResult sum_series(const std::function<double(long)>& term, double rel_tol, long max_terms) {
    if (!(rel_tol > 0.0)) throw ValidationError("sum_series: rel_tol must be > 0");
    if (max_terms < 1) throw ValidationError("sum_series: max_terms must be >= 1");

    SeriesResult res;
    int small_streak = 0;
    for (long n = 1; n <= max_terms; ++n) {
        const double t = term(n);
        if (!std::isfinite(t)) {
            std::ostringstream os;
            os << "sum_series: non-finite term at index " << n;
            throw NumericalError(os.str());
        }
        res.value += t;
        res.terms_used = n;
        // Two consecutive negligible terms are required: the image-series
        // summand vanishes identically at n = 1, and a single small term must
        // not end the sum early.
        if (std::abs(t) <= rel_tol * std::abs(res.value))
            ++small_streak;
        else
            small_streak = 0;
        if (small_streak >= 2) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

namespace {

struct SimpsonPanel {
    double fl, fm, fr; // f at left, mid, right
};

double simpson(double fl, double fm, double fr, double h) { return h / 6.0 * (fl + 4.0 * fm + fr); }

// Recursive refinement with the classic |S2 - S1| <= 15 eps acceptance test.
// The tolerance is floored at the panel's own rounding noise so the halving
// per level cannot demand more than double precision delivers.
double adapt(const std::function<double(double)>& f, double lo, double hi, SimpsonPanel p,
             double whole, double eps, int depth, int max_depth, bool& budget_ok) {
    const double mid = 0.5 * (lo + hi);
    const double flm = f(0.5 * (lo + mid));
    const double frm = f(0.5 * (mid + hi));
    const double h = hi - lo;
    const double left = simpson(p.fl, flm, p.fm, 0.5 * h);
    const double right = simpson(p.fm, frm, p.fr, 0.5 * h);
    const double delta = left + right - whole;
    if (!std::isfinite(delta)) {
        budget_ok = false; // a non-finite value cannot be refined away
        return left + right;
    }
    const double noise_floor = std::numeric_limits<double>::epsilon() *
                               (std::abs(left) + std::abs(right) + std::abs(whole));
    const double accept = std::max(eps, noise_floor);
    if (std::abs(delta) <= 15.0 * accept || h < 1e-15 * (std::abs(lo) + std::abs(hi) + 1.0))
        return left + right + delta / 15.0;
    if (depth >= max_depth) {
        budget_ok = false;
        return left + right + delta / 15.0;
    }
    return adapt(f, lo, mid, {p.fl, flm, p.fm}, left, 0.5 * eps, depth + 1, max_depth, budget_ok) +
           adapt(f, mid, hi, {p.fm, frm, p.fr}, right, 0.5 * eps, depth + 1, max_depth, budget_ok);
}

} // namespace

namespace {

double integrate_panels(const std::function<double(double)>& f, double lo, double hi,
                        double abs_tol, int max_depth, int panels_n, bool& budget_ok) {
    const double h = (hi - lo) / panels_n;
    std::vector<SimpsonPanel> panels(panels_n);
    std::vector<double> coarse(panels_n);
    double fr_prev = f(lo);
    for (int i = 0; i < panels_n; ++i) {
        const double a = lo + i * h;
        const double b = (i + 1 == panels_n) ? hi : a + h;
        SimpsonPanel p{fr_prev, f(0.5 * (a + b)), f(b)};
        fr_prev = p.fr;
        coarse[i] = simpson(p.fl, p.fm, p.fr, b - a);
        panels[i] = p;
    }
    double total = 0.0;
    for (int i = 0; i < panels_n; ++i) {
        const double a = lo + i * h;
        const double b = (i + 1 == panels_n) ? hi : a + h;
        total += adapt(f, a, b, panels[i], coarse[i], abs_tol / panels_n, 0, max_depth, budget_ok);
    }
    return total;
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double rel_tol, int max_depth) {
    if (!(rel_tol > 0.0)) throw ValidationError("integrate_adaptive: rel_tol must be > 0");
    if (!(hi > lo)) throw ValidationError("integrate_adaptive: empty interval");

    constexpr int kInitialPanels = 32;
    // crude pass to size the absolute budget
    const double h = (hi - lo) / kInitialPanels;
    double crude = 0.0;
    double fl = f(lo);
    for (int i = 0; i < kInitialPanels; ++i) {
        const double a = lo + i * h;
        const double fr = f(a + h);
        crude += simpson(fl, f(a + 0.5 * h), fr, h);
        fl = fr;
    }
    const double abs_tol = rel_tol * std::max(std::abs(crude), std::numeric_limits<double>::min());
    bool budget_ok = true;
    const double total = integrate_panels(f, lo, hi, abs_tol, max_depth, kInitialPanels, budget_ok);
    if (!std::isfinite(total)) throw NumericalError("integrate_adaptive: non-finite result");
    if (!budget_ok) {
        std::ostringstream os;
        os << "integrate_adaptive: subdivision budget exhausted; estimate " << total
           << ", error bound not met (requested rel_tol " << rel_tol << ")";
        throw NumericalError(os.str());
    }
    return total;
}

double integrate_adaptive_abs(const std::function<double(double)>& f, double lo, double hi,
                              double abs_tol, int max_depth, int initial_panels) {
    if (!(abs_tol > 0.0)) throw ValidationError("integrate_adaptive_abs: abs_tol must be > 0");
    if (!(hi > lo)) throw ValidationError("integrate_adaptive_abs: empty interval");
    bool budget_ok = true;
    const double total =
        integrate_panels(f, lo, hi, abs_tol, max_depth, std::max(initial_panels, 1), budget_ok);
    if (!std::isfinite(total)) throw NumericalError("integrate_adaptive_abs: non-finite result");
    if (!budget_ok) {
        std::ostringstream os;
        os << "integrate_adaptive_abs: subdivision budget exhausted; estimate " << total
           << " with abs_tol " << abs_tol << " not certified";
        throw NumericalError(os.str());
    }
    return total;
}

double integrate_semi_infinite(const std::function<double(double)>& f, double rel_tol,
                               double scale) {
    if (!(scale > 0.0)) throw ValidationError("integrate_semi_infinite: scale must be > 0");
    // x = scale * t/(1-t), dx = scale dt/(1-t)^2. The right endpoint maps to
    // x = inf where an absolutely integrable f contributes nothing. Values
    // that over/underflow at the mapped endpoints (0/0 limits at the origin,
    // inf/inf in the tail) are isolated points of an integrable function and
    // carry no mass.
    auto g = [&f, scale](double t) {
        if (t >= 1.0) return 0.0;
        const double om = 1.0 - t;
        const double x = scale * t / om;
        if (!std::isfinite(x)) return 0.0;
        const double v = f(x) * scale / (om * om);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate_adaptive(g, 0.0, 1.0, rel_tol);
}

std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n) {
    // Cholesky, falling back to Gaussian elimination with partial pivoting if
    // the matrix is not numerically positive definite.
    std::vector<double> l(n * n, 0.0);
    bool spd = true;
    for (std::size_t i = 0; i < n && spd; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            if (i == j) {
                if (s <= 0.0) {
                    spd = false;
                    break;
                }
                l[i * n + i] = std::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    if (spd) {
        // forward then backward substitution
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * y[k];
            y[i] = s / l[i * n + i];
        }
        std::vector<double> x(n);
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
            x[ii] = s / l[ii * n + ii];
        }
        return x;
    }

    // Gaussian elimination fallback.
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (a[piv * n + col] == 0.0) throw NumericalError("solve_spd: singular normal matrix");
        if (piv != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[piv * n + k], a[col * n + k]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = a[r * n + col] / a[col * n + col];
            for (std::size_t k = col; k < n; ++k) a[r * n + k] -= m * a[col * n + k];
            b[r] -= m * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[ii * n + k] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return x;
}

std::vector<double> invert_spd(const std::vector<double>& a, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        const std::vector<double> col = solve_spd(a, e, n);
        for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    // enforce exact symmetry
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = inv[j * n + i] = s;
        }
    return inv;
}

FitResult fit_polynomial_least_squares(const std::vector<double>& x, const std::vector<double>& y,
                                       const std::vector<double>& sigma, int degree) {
    const std::size_t m = static_cast<std::size_t>(degree) + 1;
    if (x.size() != y.size()) throw ValidationError("polynomial fit: x/y length mismatch");
    if (!sigma.empty() && sigma.size() != x.size())
        throw ValidationError("polynomial fit: sigma length mismatch");
    if (x.size() < m + 1) throw ValidationError("polynomial fit: too few points");

    const double x0 = *std::min_element(x.begin(), x.end());
    const double x1 = *std::max_element(x.begin(), x.end());
    if (x0 == x1) throw ValidationError("polynomial fit: degenerate x (zero variance)");

    std::vector<double> ata(m * m, 0.0), atb(m, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = sigma.empty() ? 1.0 : sigma[i];
        if (!(s > 0.0)) throw ValidationError("polynomial fit: sigma must be > 0");
        const double w = 1.0 / (s * s);
        double pj = 1.0;
        std::vector<double> basis(m);
        for (std::size_t j = 0; j < m; ++j) {
            basis[j] = pj;
            pj *= x[i];
        }
        for (std::size_t r = 0; r < m; ++r) {
            atb[r] += w * basis[r] * y[i];
            for (std::size_t c = 0; c < m; ++c) ata[r * m + c] += w * basis[r] * basis[c];
        }
    }
    FitResult res;
    res.params = solve_spd(ata, atb, m);
    res.covariance = invert_spd(ata, m);
    res.dof = static_cast<long>(x.size()) - static_cast<long>(m);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double fx = 0.0, pj = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            fx += res.params[j] * pj;
            pj *= x[i];
        }
        const double s = sigma.empty() ? 1.0 : sigma[i];
        const double r = (y[i] - fx) / s;
        chi2 += r * r;
    }
    res.chi2 = chi2;
    return res;
}

FitResult fit_linear_least_squares(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& sigma) {
    if (x.size() < 3) throw ValidationError("fit_linear_least_squares: need >= 3 points");
    FitResult poly = fit_polynomial_least_squares(x, y, sigma, 1);
    // reorder to [slope, intercept]
    FitResult res;
    res.params = {poly.params[1], poly.params[0]};
    res.covariance = {poly.cov(1, 1), poly.cov(1, 0), poly.cov(0, 1), poly.cov(0, 0)};
    res.chi2 = poly.chi2;
    res.dof = poly.dof;
    return res;
}

namespace {

std::vector<double> residuals(const std::function<double(const std::vector<double>&, double)>& model,
                              const std::vector<double>& p, const std::vector<double>& x,
                              const std::vector<double>& y, const std::vector<double>& sigma) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = (y[i] - model(p, x[i])) / sigma[i];
    return r;
}

double chi2_of(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

} // namespace

FitResult fit_nonlinear_least_squares(
    const std::function<double(const std::vector<double>&, double)>& model,
    const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma,
    const std::vector<double>& p0) {
    if (x.size() != y.size() || x.size() != sigma.size())
        throw ValidationError("fit_nonlinear_least_squares: input length mismatch");
    const std::size_t np = p0.size();
    if (np == 0 || x.size() <= np)
        throw ValidationError("fit_nonlinear_least_squares: need more points than parameters");
    for (double v : p0)
        if (!std::isfinite(v)) throw ValidationError("fit_nonlinear_least_squares: p0 not finite");

    std::vector<double> p = p0;
    std::vector<double> r = residuals(model, p, x, y, sigma);
    double chi2 = chi2_of(r);
    if (!std::isfinite(chi2))
        throw NumericalError("fit_nonlinear_least_squares: chi2 not finite at p0");

    // Fallback step scale for parameters that start at exactly zero.
    double pscale = 0.0;
    for (double v : p0) pscale = std::max(pscale, std::abs(v));
    if (pscale == 0.0) pscale = 1.0;

    constexpr int kMaxIter = 300;
    constexpr double kChi2Rel = 1e-10;
    constexpr double kStepNorm = 1e-12;
    double lambda = 1e-3;
    std::vector<double> chi2_trace{chi2};
    std::vector<double> jtj(np * np), jtr(np);

    for (int iter = 0; iter < kMaxIter; ++iter) {
        // numeric Jacobian of the model, central differences, step 1e-6 x scale
        std::vector<std::vector<double>> jac(np);
        for (std::size_t k = 0; k < np; ++k) {
            const double h = 1e-6 * (std::abs(p[k]) > 0.0 ? std::abs(p[k]) : pscale);
            std::vector<double> pp = p, pm = p;
            pp[k] += h;
            pm[k] -= h;
            jac[k].resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                jac[k][i] = (model(pp, x[i]) - model(pm, x[i])) / (2.0 * h * sigma[i]);
        }
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t a = 0; a < np; ++a) {
            for (std::size_t i = 0; i < x.size(); ++i) jtr[a] += jac[a][i] * r[i];
            for (std::size_t b = 0; b <= a; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) s += jac[a][i] * jac[b][i];
                jtj[a * np + b] = jtj[b * np + a] = s;
            }
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 25 && !accepted; ++attempt) {
            std::vector<double> damped = jtj;
            for (std::size_t k = 0; k < np; ++k) {
                const double d = jtj[k * np + k];
                damped[k * np + k] = d + lambda * (d > 0.0 ? d : 1.0);
            }
            std::vector<double> step;
            try {
                step = solve_spd(damped, jtr, np);
            } catch (const NumericalError&) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> pt = p;
            double snorm = 0.0;
            for (std::size_t k = 0; k < np; ++k) {
                pt[k] += step[k];
                const double denom = std::abs(p[k]) > 0.0 ? std::abs(p[k]) : pscale;
                snorm += (step[k] / denom) * (step[k] / denom);
            }
            snorm = std::sqrt(snorm);
            std::vector<double> rt = residuals(model, pt, x, y, sigma);
            const double ct = chi2_of(rt);
            if (std::isfinite(ct) && ct <= chi2) {
                const double rel = (chi2 - ct) / std::max(chi2, 1e-300);
                p = pt;
                r = std::move(rt);
                chi2 = ct;
                chi2_trace.push_back(chi2);
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                if (rel < kChi2Rel || snorm < kStepNorm) iter = kMaxIter; // converged
            } else {
                lambda *= 5.0;
            }
        }
        if (!accepted) break; // stuck: current p is the best found
    }

    if (chi2_trace.size() < 2 && chi2 > 0.0) {
        // No step was ever accepted and chi2(p0) is not already a minimum we
        // can certify; report the trace.
        std::ostringstream os;
        os << "fit_nonlinear_least_squares: no descent from p0 (chi2 = " << chi2 << ")";
        throw NumericalError(os.str());
    }

    // covariance from the undamped normal matrix at the solution
    std::vector<std::vector<double>> jac(np);
    for (std::size_t k = 0; k < np; ++k) {
        const double h = 1e-6 * (std::abs(p[k]) > 0.0 ? std::abs(p[k]) : pscale);
        std::vector<double> pp = p, pm = p;
        pp[k] += h;
        pm[k] -= h;
        jac[k].resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            jac[k][i] = (model(pp, x[i]) - model(pm, x[i])) / (2.0 * h * sigma[i]);
    }
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (std::size_t a = 0; a < np; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += jac[a][i] * jac[b][i];
            jtj[a * np + b] = jtj[b * np + a] = s;
        }

    FitResult res;
    res.params = p;
    try {
        res.covariance = invert_spd(jtj, np);
    } catch (const NumericalError&) {
        res.covariance.assign(np * np, 0.0);
    }
    res.chi2 = chi2;
    res.dof = static_cast<long>(x.size()) - static_cast<long>(np);
    return res;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");
    // Acklam's approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement against erfc
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

} // namespace caslab

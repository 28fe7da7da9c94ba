#pragma once

// Detector probabilities mu_j(s), their displacement derivatives, and the per-frame information
// density gamma(s, b) for direct imaging, Hermite-Gaussian SPADE and plus-minus SPADE.
//
// All lengths are in units of sigma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spade/core.hpp"

namespace spade {

/// Pixelated camera in the image plane; pixel k covers [k a - a/2, k a + a/2].
struct DirectImaging {
    double pixel{4.6 / 103.0};
    long k_min{-150};
    long k_max{150};
};

/// Photon counting in the Hermite-Gaussian modes q = 0..modes-1.
struct HgSpade {
    int modes{21};
};

/// Photon counting in (phi_0 + phi_1)/sqrt2 and (phi_0 - phi_1)/sqrt2; detector 0 is "+", 1 is "-".
struct PmSpade {};

/// Normalized 1-D Hermite-Gaussian mode phi_q(x), evaluated with the three-term recurrence.
[[nodiscard]] inline double hg_mode(int q, double x) {
    if (q < 0) throw std::invalid_argument("hg_mode: negative order");
    const double u = x / std::numbers::sqrt2;
    double prev = 0.0;
    double cur = std::pow(two_pi, -0.25) * std::exp(-0.5 * u * u);
    for (int k = 1; k <= q; ++k) {
        const double next = std::sqrt(2.0 / k) * u * cur - std::sqrt((k - 1.0) / k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// phi_+(x) (sign = +1) or phi_-(x) (sign = -1).
[[nodiscard]] inline double pm_mode(int sign, double x) {
    return (hg_mode(0, x) + sign * hg_mode(1, x)) / std::numbers::sqrt2;
}

class MeasurementScheme {
public:
    using Kind = std::variant<DirectImaging, HgSpade, PmSpade>;

    MeasurementScheme() : kind_{PmSpade{}} {}

    [[nodiscard]] static MeasurementScheme direct_imaging(double pixel, long k_min, long k_max) {
        if (!(pixel > 0.0) || !std::isfinite(pixel)) {
            throw std::invalid_argument("direct imaging: pixel size must be positive");
        }
        if (k_max < k_min) throw std::invalid_argument("direct imaging: empty pixel range");
        return MeasurementScheme{DirectImaging{pixel, k_min, k_max}};
    }

    /// Pixel centres spanning [s_lo - margin, s_hi + margin].
    [[nodiscard]] static MeasurementScheme direct_imaging_covering(double pixel, double s_lo, double s_hi,
                                                                   double margin = 6.0) {
        if (!(pixel > 0.0)) throw std::invalid_argument("direct imaging: pixel size must be positive");
        const auto lo = static_cast<long>(std::floor((s_lo - margin) / pixel));
        const auto hi = static_cast<long>(std::ceil((s_hi + margin) / pixel));
        return direct_imaging(pixel, lo, hi);
    }

    [[nodiscard]] static MeasurementScheme hg_spade(int modes = 21) {
        if (modes < 2) throw std::invalid_argument("HG-SPADE: need at least 2 modes");
        return MeasurementScheme{HgSpade{modes}};
    }

    [[nodiscard]] static MeasurementScheme pm_spade() { return MeasurementScheme{PmSpade{}}; }

    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

    template <class T>
    [[nodiscard]] bool is() const noexcept {
        return std::holds_alternative<T>(kind_);
    }

    [[nodiscard]] std::string name() const {
        if (is<DirectImaging>()) return "di";
        if (is<HgSpade>()) return "hg";
        return "pm";
    }

    [[nodiscard]] std::size_t detector_count() const noexcept {
        if (const auto* di = std::get_if<DirectImaging>(&kind_)) {
            return static_cast<std::size_t>(di->k_max - di->k_min + 1);
        }
        if (const auto* hg = std::get_if<HgSpade>(&kind_)) return static_cast<std::size_t>(hg->modes);
        return 2;
    }

    /// Detection probabilities; `out` must have detector_count() entries.
    void mu(double s, std::span<double> out) const {
        check_size(out);
        std::visit([&](const auto& k) { mu_impl(k, s, out); }, kind_);
    }

    [[nodiscard]] std::vector<double> mu(double s) const {
        std::vector<double> out(detector_count());
        mu(s, out);
        return out;
    }

    /// d mu_j / ds; `out` must have detector_count() entries.
    void mu_gradient(double s, std::span<double> out) const {
        check_size(out);
        std::visit([&](const auto& k) { grad_impl(k, s, out); }, kind_);
    }

    [[nodiscard]] std::vector<double> mu_gradient(double s) const {
        std::vector<double> out(detector_count());
        mu_gradient(s, out);
        return out;
    }

    /// gamma(s, b) = sum_j (d mu_j/ds)^2 / (mu_j + b/nu), in units of 1/sigma^2.
    [[nodiscard]] double gamma(double s, double b, double nu) const {
        if (!(nu > 0.0)) throw std::invalid_argument("gamma: nu must be positive");
        if (!(b >= 0.0)) throw std::invalid_argument("gamma: b must be non-negative");
        const double r = b / nu;
        if (r == 0.0) {
            if (const auto* hg = std::get_if<HgSpade>(&kind_)) return hg_density(*hg, s);
            if (is<PmSpade>()) return pm_density(s);
        }
        const std::size_t d = detector_count();
        std::vector<double> m(d);
        std::vector<double> g(d);
        mu(s, m);
        mu_gradient(s, g);
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double den = m[j] + r;
            if (den > node_threshold) sum += g[j] * g[j] / den;
        }
        return sum;
    }

    static constexpr double node_threshold = 1e-300;

private:
    explicit MeasurementScheme(Kind k) : kind_{std::move(k)} {}

    void check_size(std::span<const double> out) const {
        if (out.size() != detector_count()) throw std::invalid_argument("detector vector size mismatch");
    }

    // Standard normal tail 0.5 erfc(|z|/sqrt2), i.e. the smaller of P(Z<z), P(Z>z).
    [[nodiscard]] static double small_tail(double z) noexcept {
        return 0.5 * std::erfc(std::abs(z) / std::numbers::sqrt2);
    }

    [[nodiscard]] static double normal_pdf(double z) noexcept {
        return std::exp(-0.5 * z * z) / std::sqrt(two_pi);
    }

    static void mu_impl(const DirectImaging& di, double s, std::span<double> out) {
        // Edge e_k = (k - 1/2) a; pixel k spans [e_k, e_{k+1}]. Tails are combined so that no
        // subtraction of two numbers close to 1 ever happens.
        const double a = di.pixel;
        double lo_edge = (static_cast<double>(di.k_min) - 0.5) * a - s;
        double lo_tail = small_tail(lo_edge);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double hi_edge = (static_cast<double>(di.k_min + static_cast<long>(i)) + 0.5) * a - s;
            const double hi_tail = small_tail(hi_edge);
            double p;
            if (hi_edge <= 0.0) {
                p = hi_tail - lo_tail;
            } else if (lo_edge >= 0.0) {
                p = lo_tail - hi_tail;
            } else {
                p = 1.0 - lo_tail - hi_tail;
            }
            out[i] = std::max(p, 0.0);
            lo_edge = hi_edge;
            lo_tail = hi_tail;
        }
    }

    static void grad_impl(const DirectImaging& di, double s, std::span<double> out) {
        const double a = di.pixel;
        double lo_pdf = normal_pdf((static_cast<double>(di.k_min) - 0.5) * a - s);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double hi_pdf =
                normal_pdf((static_cast<double>(di.k_min + static_cast<long>(i)) + 0.5) * a - s);
            out[i] = lo_pdf - hi_pdf;
            lo_pdf = hi_pdf;
        }
    }

    static void mu_impl(const HgSpade&, double s, std::span<double> out) {
        const double x2 = 0.25 * s * s;
        double m = std::exp(-x2);
        for (std::size_t q = 0; q < out.size(); ++q) {
            if (q > 0) m *= x2 / static_cast<double>(q);
            out[q] = m;
        }
    }

    static void grad_impl(const HgSpade&, double s, std::span<double> out) {
        // d mu_q/ds = x (mu_{q-1} - mu_q) with x = s/2.
        const double x = 0.5 * s;
        const double x2 = x * x;
        double prev = 0.0;
        double m = std::exp(-x2);
        for (std::size_t q = 0; q < out.size(); ++q) {
            if (q > 0) {
                prev = m;
                m *= x2 / static_cast<double>(q);
            }
            out[q] = x * (prev - m);
        }
    }

    static void mu_impl(const PmSpade&, double s, std::span<double> out) {
        const double x = 0.5 * s;
        const double e = std::exp(-x * x);
        out[0] = 0.5 * (x + 1.0) * (x + 1.0) * e;
        out[1] = 0.5 * (x - 1.0) * (x - 1.0) * e;
    }

    static void grad_impl(const PmSpade&, double s, std::span<double> out) {
        const double x = 0.5 * s;
        const double e = std::exp(-x * x);
        out[0] = 0.5 * (x + 1.0) * (1.0 - x * (x + 1.0)) * e;
        out[1] = 0.5 * (x - 1.0) * (1.0 - x * (x - 1.0)) * e;
    }

    // Noise-free densities (d mu/ds)^2 / mu in closed form; these stay finite at the nodes of mu.
    [[nodiscard]] static double hg_density(const HgSpade& hg, double s) noexcept {
        const double x2 = 0.25 * s * s;
        const double e = std::exp(-x2);
        double sum = x2 * e; // q = 0
        double t = 1.0;      // x^(2q-2) / q!
        for (int q = 1; q < hg.modes; ++q) {
            if (q > 1) t *= x2 / q;
            const double c = q - x2;
            sum += c * c * t * e;
        }
        return sum;
    }

    [[nodiscard]] static double pm_density(double s) noexcept {
        const double x = 0.5 * s;
        const double e = std::exp(-x * x);
        const double cp = 1.0 - x * (x + 1.0);
        const double cm = 1.0 - x * (x - 1.0);
        return 0.5 * (cp * cp + cm * cm) * e;
    }

    Kind kind_;
};

/// Closed-form noise-free gamma of PM-SPADE: [1 - (s/2)^2 + (s/2)^4] exp(-s^2/4).
[[nodiscard]] inline double pm_gamma_closed_form(double s) noexcept {
    const double x2 = 0.25 * s * s;
    return (1.0 - x2 + x2 * x2) * std::exp(-x2);
}

/// Upper bound on gamma for any measurement under uniform background: 1/(1 + 2 b/nu).
[[nodiscard]] inline double gamma_ceiling(double b, double nu) noexcept { return 1.0 / (1.0 + 2.0 * b / nu); }

} // namespace spade

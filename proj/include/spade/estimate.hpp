#pragma once

// Two-stage estimation: per-frame Poisson maximum-likelihood displacement, then a least-squares
// fit of the oscillation frequency to the displacement estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "spade/core.hpp"
#include "spade/modes.hpp"
#include "spade/sim.hpp"

namespace spade {

struct SearchSpec {
    double lo{-1.0};
    double hi{1.94};
    std::size_t grid_points{400};
    double tolerance{1e-4};

    void validate() const {
        if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw std::invalid_argument("SearchSpec: need a bounded interval with hi > lo");
        }
        if (grid_points < 3) throw std::invalid_argument("SearchSpec: need at least 3 grid points");
        if (!(tolerance > 0.0)) throw std::invalid_argument("SearchSpec: tolerance must be positive");
    }
};

/// [s_min - 1, s_max + 1] restricted to the branch on which the scheme's likelihood is
/// identifiable: s >= 0 for HG-SPADE (depends on s^2 only), |s| < 2 for PM-SPADE.
[[nodiscard]] inline SearchSpec default_search(const MotionModel& motion, const MeasurementScheme& scheme) {
    SearchSpec spec;
    spec.lo = motion.min_displacement() - 1.0;
    spec.hi = motion.max_displacement() + 1.0;
    if (scheme.is<HgSpade>()) spec.lo = std::max(spec.lo, 0.0);
    if (scheme.is<PmSpade>()) {
        spec.lo = std::max(spec.lo, -2.0);
        spec.hi = std::min(spec.hi, 2.0);
    }
    return spec;
}

struct DisplacementEstimate {
    double s_hat{};
    double log_likelihood{};
    std::size_t frame_index{};
    bool flagged{}; // no counts or flat likelihood: s_hat is the grid argmax only
};

/// Poisson MLE of the displacement for a fixed scheme and noise budget.
///
/// The log-rates ln(nu mu_j(s) + b) on the coarse grid are tabulated once, so each frame costs
/// one sparse pass over the grid plus a golden-section refinement around the best grid point.
class DisplacementEstimator {
public:
    DisplacementEstimator(MeasurementScheme scheme, NoiseBudget budget, SearchSpec search)
        : scheme_{std::move(scheme)}, budget_{budget}, search_{search}, detectors_{scheme_.detector_count()} {
        budget_.validate();
        search_.validate();
        const std::size_t g = search_.grid_points;
        grid_.resize(g);
        log_rate_.resize(g * detectors_);
        total_rate_.resize(g);
        std::vector<double> mu(detectors_);
        for (std::size_t i = 0; i < g; ++i) {
            grid_[i] = search_.lo + (search_.hi - search_.lo) * static_cast<double>(i) / static_cast<double>(g - 1);
            scheme_.mu(grid_[i], mu);
            double total = 0.0;
            for (std::size_t j = 0; j < detectors_; ++j) {
                const double rate = budget_.nu * mu[j] + budget_.b;
                total += rate;
                log_rate_[i * detectors_ + j] = std::log(rate); // -inf for a dark detector
            }
            total_rate_[i] = total;
        }
    }

    [[nodiscard]] const MeasurementScheme& scheme() const noexcept { return scheme_; }
    [[nodiscard]] const SearchSpec& search() const noexcept { return search_; }
    [[nodiscard]] const NoiseBudget& budget() const noexcept { return budget_; }

    /// sum_j m_j ln(nu mu_j(s) + b) - (nu mu_j(s) + b), dropping the ln m_j! constant.
    [[nodiscard]] double log_likelihood(std::span<const std::int64_t> counts, double s) const {
        std::vector<double> mu(detectors_);
        return log_likelihood(counts, s, mu);
    }

    [[nodiscard]] DisplacementEstimate estimate(std::span<const std::int64_t> counts,
                                                std::size_t frame_index = 0) const {
        if (counts.size() != detectors_) throw std::invalid_argument("MLE: count vector size mismatch");
        std::vector<std::size_t> lit;
        std::int64_t total = 0;
        for (std::size_t j = 0; j < detectors_; ++j) {
            if (counts[j] < 0) throw std::invalid_argument("MLE: negative count");
            if (counts[j] > 0) lit.push_back(j);
            total += counts[j];
        }

        const double neg_inf = -std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        double best_ll = neg_inf;
        double worst_ll = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const double* row = &log_rate_[i * detectors_];
            double ll = -total_rate_[i];
            for (std::size_t j : lit) ll += static_cast<double>(counts[j]) * row[j];
            if (ll > best_ll) { // strict: ties keep the smaller s
                best_ll = ll;
                best = i;
            }
            if (std::isfinite(ll)) worst_ll = std::min(worst_ll, ll);
        }

        DisplacementEstimate out{grid_[best], best_ll, frame_index, false};
        const bool flat = std::isfinite(best_ll) && best_ll - worst_ll <= 1e-12 * std::max(1.0, std::abs(best_ll));
        if ((total == 0 && budget_.b == 0.0) || flat || !std::isfinite(best_ll)) {
            out.flagged = true;
            return out;
        }

        const double h = grid_.size() > 1 ? grid_[1] - grid_[0] : 0.0;
        const double lo = std::max(search_.lo, grid_[best] - h);
        const double hi = std::min(search_.hi, grid_[best] + h);
        std::vector<double> mu(detectors_);
        const auto [s, ll] = golden_section_max(counts, lo, hi, mu);
        if (ll > best_ll) {
            out.s_hat = s;
            out.log_likelihood = ll;
        }
        return out;
    }

    [[nodiscard]] DisplacementEstimate estimate(const FrameRecord& frame) const {
        return estimate(frame.counts, frame.index);
    }

private:
    [[nodiscard]] double log_likelihood(std::span<const std::int64_t> counts, double s,
                                        std::span<double> mu) const {
        scheme_.mu(s, mu);
        double ll = 0.0;
        for (std::size_t j = 0; j < detectors_; ++j) {
            const double rate = budget_.nu * mu[j] + budget_.b;
            if (counts[j] > 0) ll += static_cast<double>(counts[j]) * std::log(rate);
            ll -= rate;
        }
        return ll;
    }

    [[nodiscard]] std::pair<double, double> golden_section_max(std::span<const std::int64_t> counts, double a,
                                                               double b, std::span<double> mu) const {
        constexpr double inv_phi = 0.6180339887498949;
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double fc = log_likelihood(counts, c, mu);
        double fd = log_likelihood(counts, d, mu);
        while (b - a > search_.tolerance) {
            if (fc >= fd) { // ties move toward smaller s
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = log_likelihood(counts, c, mu);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = log_likelihood(counts, d, mu);
            }
        }
        return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
    }

    MeasurementScheme scheme_;
    NoiseBudget budget_;
    SearchSpec search_;
    std::size_t detectors_;
    std::vector<double> grid_;
    std::vector<double> log_rate_;   // grid-major, grid_points x detectors
    std::vector<double> total_rate_; // sum_j (nu mu_j + b) per grid point
};

[[nodiscard]] inline DisplacementEstimate mle_displacement(const FrameRecord& frame, const MeasurementScheme& scheme,
                                                           double nu, double b, const SearchSpec& search) {
    return DisplacementEstimator(scheme, NoiseBudget{nu, b}, search).estimate(frame);
}

/// Model function amplitude * sin(2 pi f n + phase) + offset fitted to the displacement estimates.
struct SinusoidTemplate {
    double amplitude{};
    double offset{};
    double phase{};
};

/// Fundamental-harmonic template of a motion model. Square waves of amplitude A map to
/// amplitude 4A/pi around their mean A.
[[nodiscard]] inline SinusoidTemplate fit_template(const MotionModel& m) {
    switch (m.kind) {
    case MotionKind::Sinusoid: return {m.amplitude, m.offset_value(), m.phase};
    case MotionKind::SquareWave: return {4.0 * m.amplitude / std::numbers::pi, m.offset_value(), m.phase};
    case MotionKind::Constant: break;
    }
    throw std::invalid_argument("fit_template: constant motion has no frequency");
}

struct LseOptions {
    double f_min{0.02};
    double f_max{0.48};
    double grid_factor{40.0}; // grid spacing 1 / (grid_factor * N)
    bool fit_phase{false};

    void validate() const {
        if (!(f_min > 0.0 && f_max < 0.5 && f_max > f_min)) {
            throw std::invalid_argument("LseOptions: need 0 < f_min < f_max < 0.5");
        }
        if (!(grid_factor >= 1.0)) throw std::invalid_argument("LseOptions: grid_factor must be >= 1");
    }
};

struct FrequencyEstimate {
    double f_hat{};
    double rss{};
    double phase{};
    bool flagged{}; // data carry no frequency information
};

namespace detail {

[[nodiscard]] inline double lse_rss(std::span<const double> y, std::span<const double> pos,
                                    const SinusoidTemplate& t, double f, double phase) noexcept {
    double rss = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        const double r = y[n] - (t.amplitude * std::sin(two_pi * f * pos[n] + phase) + t.offset);
        rss += r * r;
    }
    return rss;
}

// Minimum over phase at fixed f: coarse scan, then Brent.
[[nodiscard]] inline std::pair<double, double> best_phase(std::span<const double> y, std::span<const double> pos,
                                                          const SinusoidTemplate& t, double f) {
    constexpr int scan = 24;
    double best_phi = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < scan; ++k) {
        const double phi = -std::numbers::pi + two_pi * k / scan;
        const double r = lse_rss(y, pos, t, f, phi);
        if (r < best) {
            best = r;
            best_phi = phi;
        }
    }
    const double step = two_pi / scan;
    const auto [phi, r] = boost::math::tools::brent_find_minima(
        [&](double p) { return lse_rss(y, pos, t, f, p); }, best_phi - step, best_phi + step,
        std::numeric_limits<double>::digits / 2);
    return {phi, r};
}

} // namespace detail

/// Least-squares frequency fit on explicit frame positions (in frames).
[[nodiscard]] inline FrequencyEstimate lse_frequency(std::span<const double> s_hats, std::span<const double> positions,
                                                     const SinusoidTemplate& tmpl, const LseOptions& opts = {}) {
    opts.validate();
    if (s_hats.size() != positions.size()) throw std::invalid_argument("LSE: size mismatch");
    if (s_hats.size() < 4) throw std::invalid_argument("LSE: need at least 4 displacement estimates");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : s_hats) {
        if (!std::isfinite(v)) throw std::invalid_argument("LSE: non-finite displacement estimate");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    auto objective = [&](double f, double& phase) {
        if (!opts.fit_phase) {
            phase = tmpl.phase;
            return detail::lse_rss(s_hats, positions, tmpl, f, tmpl.phase);
        }
        const auto [phi, r] = detail::best_phase(s_hats, positions, tmpl, f);
        phase = phi;
        return r;
    };

    const double step = 1.0 / (opts.grid_factor * static_cast<double>(s_hats.size()));
    const auto points = static_cast<std::size_t>(std::floor((opts.f_max - opts.f_min) / step)) + 1;
    double best_f = opts.f_min;
    double best = std::numeric_limits<double>::infinity();
    double worst = -best;
    double phase = tmpl.phase;
    for (std::size_t i = 0; i < points; ++i) {
        const double f = opts.f_min + step * static_cast<double>(i);
        const double r = objective(f, phase);
        if (r < best) {
            best = r;
            best_f = f;
        }
        worst = std::max(worst, r);
    }

    FrequencyEstimate out{best_f, best, tmpl.phase, false};
    const double scale = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (hi - lo <= 1e-12 * scale || worst - best <= 1e-12 * std::max(1.0, best)) {
        out.flagged = true;
        objective(best_f, out.phase);
        return out;
    }

    const double a = std::max(opts.f_min, best_f - step);
    const double b = std::min(opts.f_max, best_f + step);
    const auto [f, r] = boost::math::tools::brent_find_minima(
        [&](double x) {
            double unused = 0.0;
            return objective(x, unused);
        },
        a, b, std::numeric_limits<double>::digits / 2);
    if (r <= best) {
        out.f_hat = f;
        out.rss = r;
    }
    objective(out.f_hat, out.phase);
    return out;
}

/// Frames are assumed to sit at their nominal positions n = 0..N-1.
[[nodiscard]] inline FrequencyEstimate lse_frequency(std::span<const double> s_hats, const SinusoidTemplate& tmpl,
                                                     const LseOptions& opts = {}) {
    std::vector<double> pos(s_hats.size());
    for (std::size_t n = 0; n < pos.size(); ++n) pos[n] = static_cast<double>(n);
    return lse_frequency(s_hats, pos, tmpl, opts);
}

struct EnsembleStats {
    std::size_t count{};
    double mean{};
    double variance{};    // unbiased sample variance
    double nu_variance{}; // nu * variance
    double standard_error{};          // of the mean
    double variance_standard_error{}; // of the variance, Gaussian approximation
};

[[nodiscard]] inline EnsembleStats ensemble_stats(std::span<const double> values, double nu) {
    if (values.size() < 2) throw std::invalid_argument("ensemble_stats: need at least 2 estimates");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    EnsembleStats s;
    s.count = values.size();
    s.mean = mean;
    s.variance = ss / (n - 1.0);
    s.nu_variance = nu * s.variance;
    s.standard_error = std::sqrt(s.variance / n);
    s.variance_standard_error = s.variance * std::sqrt(2.0 / (n - 1.0));
    return s;
}

} // namespace spade

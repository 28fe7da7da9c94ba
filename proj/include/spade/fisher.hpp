#pragma once

// Classical and quantum Fisher information matrices for motion parameters, their Cramer-Rao
// bounds, and the closed-form frequency QCRB.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spade/core.hpp"
#include "spade/modes.hpp"

namespace spade {

using Matrix = Eigen::MatrixXd;

inline const std::vector<Param> frequency_only{Param::Frequency};

namespace detail {

inline void check_rates(const MotionModel& model, const SamplingSchedule& schedule) {
    if (model.sample_rate_hz != schedule.sample_rate_hz) {
        throw std::invalid_argument("motion model and sampling schedule disagree on the sample rate");
    }
}

// sum_t w(t) grad_t grad_t^T for the chosen parameters.
template <class Weight>
[[nodiscard]] Matrix weighted_outer_sum(const MotionModel& model, std::span<const double> times,
                                        std::span<const Param> params, Weight&& weight) {
    const auto p = static_cast<Eigen::Index>(params.size());
    Matrix out = Matrix::Zero(p, p);
    Eigen::VectorXd g(p);
    for (double t : times) {
        for (Eigen::Index i = 0; i < p; ++i) {
            g[i] = displacement_gradient(model, t, params[static_cast<std::size_t>(i)]);
        }
        out.noalias() += weight(t) * (g * g.transpose());
    }
    return out;
}

} // namespace detail

/// Ideal QFI matrix (nu/sigma^2) sum_t ds/dtheta_j ds/dtheta_k over explicit frame times.
[[nodiscard]] inline Matrix qfi_ideal(const MotionModel& model, std::span<const double> times, double nu,
                                      std::span<const Param> params = frequency_only) {
    return detail::weighted_outer_sum(model, times, params, [nu](double) { return nu; });
}

[[nodiscard]] inline Matrix qfi_ideal(const MotionModel& model, const SamplingSchedule& schedule, double nu,
                                      std::span<const Param> params = frequency_only) {
    detail::check_rates(model, schedule);
    const auto times = schedule.frame_times();
    return qfi_ideal(model, times, nu, params);
}

/// QFI under uniform per-detector background b: ideal QFI scaled by 1/(1 + 2b/nu).
[[nodiscard]] inline Matrix qfi_noisy(const MotionModel& model, const SamplingSchedule& schedule, double nu,
                                      double b, std::span<const Param> params = frequency_only) {
    if (!(b >= 0.0)) throw std::invalid_argument("qfi_noisy: b must be non-negative");
    return qfi_ideal(model, schedule, nu, params) * gamma_ceiling(b, nu);
}

/// CFI matrix nu sum_t gamma(s(t), b) ds/dtheta_j ds/dtheta_k over explicit frame times.
[[nodiscard]] inline Matrix cfi(const MotionModel& model, std::span<const double> times,
                                const MeasurementScheme& scheme, double nu, double b,
                                std::span<const Param> params = frequency_only) {
    return detail::weighted_outer_sum(model, times, params, [&](double t) {
        return nu * scheme.gamma(displacement(model, t), b, nu);
    });
}

[[nodiscard]] inline Matrix cfi(const MotionModel& model, const SamplingSchedule& schedule,
                                const MeasurementScheme& scheme, double nu, double b,
                                std::span<const Param> params = frequency_only) {
    detail::check_rates(model, schedule);
    const auto times = schedule.frame_times();
    return cfi(model, times, scheme, nu, b, params);
}

enum class Waveform { Sinusoid, SquareWaveFundamental };

/// Closed-form frequency bound Var(f_hat) obtained with sum n^2 cos^2 ~ N(N-1)(2N-1)/12.
///   Sinusoid:              3 sigma^2 / (pi^2 A^2 N(N-1)(2N-1) nu)
///   SquareWaveFundamental: 3 sigma^2 / (16 A^2 N(N-1)(2N-1) nu)   (A -> 4A/pi)
[[nodiscard]] inline double qcrb_frequency(double amplitude, std::size_t frames, double nu, double sigma,
                                           Waveform waveform) {
    if (frames < 2) throw std::invalid_argument("qcrb_frequency: need N >= 2");
    if (!(amplitude > 0.0)) throw std::invalid_argument("qcrb_frequency: amplitude must be positive");
    if (!(nu > 0.0)) throw std::invalid_argument("qcrb_frequency: nu must be positive");
    const double n = static_cast<double>(frames);
    const double cubic = n * (n - 1.0) * (2.0 * n - 1.0);
    const double pref = waveform == Waveform::Sinusoid ? std::numbers::pi * std::numbers::pi : 16.0;
    return 3.0 * sigma * sigma / (pref * amplitude * amplitude * cubic * nu);
}

/// Smallest eigenvalue of the symmetric part of m.
[[nodiscard]] inline double min_eigenvalue(const Matrix& m) {
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

/// lhs <= rhs in the Loewner order, with tolerance -rel_tol * trace(rhs) on the eigenvalues.
[[nodiscard]] inline bool loewner_leq(const Matrix& lhs, const Matrix& rhs, double rel_tol = 1e-9) {
    const double scale = std::max(std::abs(rhs.trace()), std::abs(lhs.trace()));
    return min_eigenvalue(rhs - lhs) >= -rel_tol * scale;
}

/// Diagonal of the inverse (variance bounds); +inf where the matrix is singular.
[[nodiscard]] inline std::vector<double> bound_diagonal(const Matrix& info) {
    std::vector<double> out(static_cast<std::size_t>(info.rows()), INFINITY);
    Eigen::FullPivLU<Matrix> lu(info);
    if (info.size() == 0 || !lu.isInvertible()) return out;
    const Matrix inv = lu.inverse();
    for (Eigen::Index i = 0; i < info.rows(); ++i) out[static_cast<std::size_t>(i)] = inv(i, i);
    return out;
}

struct FisherReport {
    std::vector<Param> params;
    Matrix cfi;
    Matrix qfi_ideal;
    Matrix qfi_noisy;
    std::vector<double> crb_diag;
    std::vector<double> qcrb_diag;
    std::vector<double> gamma_trace;
};

[[nodiscard]] inline FisherReport fisher_report(const MotionModel& model, const SamplingSchedule& schedule,
                                                const MeasurementScheme& scheme, const NoiseBudget& budget,
                                                std::span<const Param> params = frequency_only) {
    detail::check_rates(model, schedule);
    FisherReport r;
    r.params.assign(params.begin(), params.end());
    const auto times = schedule.frame_times();
    r.cfi = cfi(model, times, scheme, budget.nu, budget.b, params);
    r.qfi_ideal = qfi_ideal(model, times, budget.nu, params);
    r.qfi_noisy = r.qfi_ideal * gamma_ceiling(budget.b, budget.nu);
    r.crb_diag = bound_diagonal(r.cfi);
    r.qcrb_diag = bound_diagonal(r.qfi_noisy);
    r.gamma_trace.reserve(times.size());
    for (double t : times) r.gamma_trace.push_back(scheme.gamma(displacement(model, t), budget.b, budget.nu));
    return r;
}

} // namespace spade

#pragma once

// Shared value types: PSF width, motion models, sampling schedules, noise budgets.
//
// Unit conventions used throughout the library:
//   * lengths are in units of the PSF width sigma (so sigma == 1 internally),
//   * times are in seconds,
//   * oscillation frequency is the dimensionless f = f_o / f_s.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spade {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Raised when a derivative of a discontinuous trajectory is requested.
class unsupported_gradient : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Gaussian amplitude point-spread function psi(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / 4 sigma^2).
///
/// Internally sigma is 1; `sigma_um` is the physical width retained for unit conversion at the I/O
/// boundary (103 um in the reference setup).
struct Psf {
    double sigma_um{103.0};

    void validate() const {
        if (!(sigma_um > 0.0) || !std::isfinite(sigma_um)) {
            throw std::invalid_argument("Psf: sigma must be positive");
        }
    }

    /// Amplitude at x (x in units of sigma).
    [[nodiscard]] static double amplitude(double x) noexcept {
        return std::pow(two_pi, -0.25) * std::exp(-0.25 * x * x);
    }

    [[nodiscard]] double to_sigma(double length_um) const noexcept { return length_um / sigma_um; }
    [[nodiscard]] double to_um(double length_sigma) const noexcept { return length_sigma * sigma_um; }
};

enum class MotionKind { Sinusoid, SquareWave, Constant };

enum class Param { Amplitude, Frequency, Phase };

[[nodiscard]] inline std::string_view to_string(Param p) noexcept {
    switch (p) {
    case Param::Amplitude: return "amplitude";
    case Param::Frequency: return "frequency";
    case Param::Phase: return "phase";
    }
    return "?";
}

[[nodiscard]] inline std::string_view to_string(MotionKind k) noexcept {
    switch (k) {
    case MotionKind::Sinusoid: return "sinusoid";
    case MotionKind::SquareWave: return "square";
    case MotionKind::Constant: return "constant";
    }
    return "?";
}

/// One-dimensional displacement trajectory s(t, theta) with theta = (A, f, phi).
///
///   Sinusoid:   s = A sin(2 pi f f_s t + phi) + offset
///   SquareWave: s = A sgn[sin(2 pi f f_s t + phi)] + offset,  sgn(0) := +1
///   Constant:   s = offset
///
/// When `offset` is empty it is tied to the amplitude (offset == A), which puts the minimum of
/// the oscillation at the origin; in that case ds/dA includes the offset term.
struct MotionModel {
    MotionKind kind{MotionKind::Sinusoid};
    double amplitude{0.47};
    double frequency{0.2};
    double phase{0.0};
    std::optional<double> offset{};
    double sample_rate_hz{20.0};

    [[nodiscard]] static MotionModel sinusoid(double amplitude, double frequency, double phase = 0.0,
                                              double sample_rate_hz = 20.0) {
        return {MotionKind::Sinusoid, amplitude, frequency, phase, std::nullopt, sample_rate_hz};
    }

    [[nodiscard]] static MotionModel square_wave(double amplitude, double frequency, double phase = 0.0,
                                                 double sample_rate_hz = 20.0) {
        return {MotionKind::SquareWave, amplitude, frequency, phase, std::nullopt, sample_rate_hz};
    }

    /// Fundamental Fourier component of a square wave of amplitude A:
    /// s = (4A/pi) sin(2 pi f_o t + phi) + 4A/pi.
    [[nodiscard]] static MotionModel square_wave_fundamental(double amplitude, double frequency,
                                                             double phase = 0.0,
                                                             double sample_rate_hz = 20.0) {
        return sinusoid(4.0 * amplitude / std::numbers::pi, frequency, phase, sample_rate_hz);
    }

    [[nodiscard]] static MotionModel constant(double position) {
        return {MotionKind::Constant, 0.0, 0.2, 0.0, position, 20.0};
    }

    [[nodiscard]] double offset_value() const noexcept { return offset.value_or(amplitude); }
    [[nodiscard]] bool offset_tied() const noexcept { return !offset.has_value(); }

    void validate() const {
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
            throw std::invalid_argument("MotionModel: amplitude must be >= 0");
        }
        if (kind != MotionKind::Constant && !(frequency > 0.0 && frequency < 0.5)) {
            throw std::invalid_argument("MotionModel: dimensionless frequency must lie in (0, 0.5)");
        }
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
            throw std::invalid_argument("MotionModel: sample rate must be positive");
        }
        if (!std::isfinite(phase) || (offset && !std::isfinite(*offset))) {
            throw std::invalid_argument("MotionModel: phase and offset must be finite");
        }
    }

    /// Smallest and largest displacement the trajectory can reach.
    [[nodiscard]] double min_displacement() const noexcept {
        return kind == MotionKind::Constant ? offset_value() : offset_value() - amplitude;
    }
    [[nodiscard]] double max_displacement() const noexcept {
        return kind == MotionKind::Constant ? offset_value() : offset_value() + amplitude;
    }
};

namespace detail {

// Oscillation phase in cycles, 2 pi f_o t + phi == two_pi * cycles.
[[nodiscard]] inline double cycles(const MotionModel& m, double t) noexcept {
    return m.frequency * m.sample_rate_hz * t + m.phase / two_pi;
}

// sgn[sin(2 pi c)] with sgn(0) = +1: positive on the closed half-cycle [0, 1/2].
[[nodiscard]] inline double square_sign(double c) noexcept {
    const double frac = c - std::floor(c);
    return frac <= 0.5 ? 1.0 : -1.0;
}

} // namespace detail

/// s(t) in units of sigma.
[[nodiscard]] inline double displacement(const MotionModel& m, double t) noexcept {
    switch (m.kind) {
    case MotionKind::Sinusoid:
        return m.amplitude * std::sin(two_pi * detail::cycles(m, t)) + m.offset_value();
    case MotionKind::SquareWave:
        return m.amplitude * detail::square_sign(detail::cycles(m, t)) + m.offset_value();
    case MotionKind::Constant:
        return m.offset_value();
    }
    return 0.0;
}

/// Analytic partial derivative ds/dtheta at time t.
[[nodiscard]] inline double displacement_gradient(const MotionModel& m, double t, Param p) {
    const double tied = m.offset_tied() ? 1.0 : 0.0;
    switch (m.kind) {
    case MotionKind::Constant:
        return p == Param::Amplitude ? tied : 0.0;
    case MotionKind::SquareWave:
        if (p != Param::Amplitude) {
            throw unsupported_gradient("square-wave trajectory has no classical derivative with respect to " +
                                       std::string(to_string(p)));
        }
        return detail::square_sign(detail::cycles(m, t)) + tied;
    case MotionKind::Sinusoid: {
        const double arg = two_pi * detail::cycles(m, t);
        switch (p) {
        case Param::Amplitude: return std::sin(arg) + tied;
        case Param::Frequency: return two_pi * m.sample_rate_hz * t * m.amplitude * std::cos(arg);
        case Param::Phase: return m.amplitude * std::cos(arg);
        }
    }
    }
    return 0.0;
}

/// Truncated Fourier series of the square wave A sgn[sin(2 pi f_o t + phi)] + A using the first
/// `harmonics` odd harmonics. The constant term is the mean A.
[[nodiscard]] inline double square_wave_partial_sum(const MotionModel& m, double t, int harmonics) {
    if (m.kind != MotionKind::SquareWave) {
        throw std::invalid_argument("square_wave_partial_sum: model is not a square wave");
    }
    const double c = detail::cycles(m, t);
    double sum = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
        const double order = 2.0 * k - 1.0;
        sum += std::sin(two_pi * order * c) / order;
    }
    return m.offset_value() + 4.0 * m.amplitude / std::numbers::pi * sum;
}

/// Trigger-latency model: one delay per run, drawn from Normal(mean, sd).
struct DelayJitter {
    double mean_s{2.8e-3};
    double sd_s{0.48e-3};
};

struct SamplingSchedule {
    std::size_t frames{50};
    double sample_rate_hz{20.0};
    std::optional<DelayJitter> jitter{};

    void validate() const {
        if (frames < 2) throw std::invalid_argument("SamplingSchedule: need at least 2 frames");
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
            throw std::invalid_argument("SamplingSchedule: sample rate must be positive");
        }
        if (jitter && (!(jitter->sd_s >= 0.0) || !std::isfinite(jitter->mean_s))) {
            throw std::invalid_argument("SamplingSchedule: jitter sd must be >= 0");
        }
    }

    /// t_n = n / f_s + delay for n = 0..N-1.
    [[nodiscard]] std::vector<double> frame_times(double delay_s = 0.0) const {
        std::vector<double> t(frames);
        for (std::size_t n = 0; n < frames; ++n) {
            t[n] = static_cast<double>(n) / sample_rate_hz + delay_s;
        }
        return t;
    }
};

/// Mean photon numbers per frame: nu signal photons in total, b background photons on each detector.
struct NoiseBudget {
    double nu{60.0};
    double b{0.0};

    [[nodiscard]] static NoiseBudget relative(double nu, double b_over_nu) { return {nu, nu * b_over_nu}; }
    [[nodiscard]] double b_over_nu() const noexcept { return b / nu; }

    void validate() const {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("NoiseBudget: nu must be > 0");
        if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("NoiseBudget: b must be >= 0");
    }
};

} // namespace spade

#pragma once

// Phase-only hologram synthesis for PM-mode demultiplexing and a discrete Fourier-plane readout.
//
// Fields live on an nx x ny pixel grid stored row-major (index y * nx + x) with the optical axis at
// pixel (nx/2, ny/2). Carriers are given in radians per pixel.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "spade/core.hpp"
#include "spade/modes.hpp"

namespace spade::holo {

using Complex = std::complex<double>;
using Field = std::vector<Complex>;

struct Grid2D {
    std::size_t nx{512};
    std::size_t ny{512};
    double pitch_um{8.0};

    void validate() const {
        auto pow2 = [](std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; };
        if (!pow2(nx) || !pow2(ny)) throw std::invalid_argument("Grid2D: nx and ny must be powers of two");
        if (!(pitch_um > 0.0) || !std::isfinite(pitch_um)) throw std::invalid_argument("Grid2D: pitch must be > 0");
    }

    [[nodiscard]] std::size_t size() const noexcept { return nx * ny; }
    [[nodiscard]] double x(std::size_t i) const noexcept { return static_cast<double>(i) - static_cast<double>(nx / 2); }
    [[nodiscard]] double y(std::size_t j) const noexcept { return static_cast<double>(j) - static_cast<double>(ny / 2); }
};

/// Spatial carriers k_x, k_y in rad/pixel.
struct Carriers {
    double kx{two_pi / 8.0};
    double ky{two_pi / 16.0};

    [[nodiscard]] static Carriers from_periods(double period_x_px, double period_y_px) {
        return {two_pi / period_x_px, two_pi / period_y_px};
    }

    void validate() const {
        if (!std::isfinite(kx) || !std::isfinite(ky) || std::abs(kx) >= std::numbers::pi ||
            std::abs(ky) >= std::numbers::pi) {
            throw std::invalid_argument("carrier frequency at or above the Nyquist limit (aliasing)");
        }
    }
};

// ---------------------------------------------------------------------------------------------
// Bessel J1 and its inversion on the monotone branch.

/// J1 by its ascending series; intended for |x| <= 4.
[[nodiscard]] inline double bessel_j1(double x) noexcept {
    const double h = 0.5 * x;
    const double h2 = h * h;
    double term = h;
    double sum = term;
    for (int k = 1; k < 40; ++k) {
        term *= -h2 / (static_cast<double>(k) * static_cast<double>(k + 1));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

/// J1'(x) = (J0(x) - J2(x)) / 2, again from the series.
[[nodiscard]] inline double bessel_j1_derivative(double x) noexcept {
    const double h = 0.5 * x;
    const double h2 = h * h;
    double term = 0.5; // k = 0 term of sum (-1)^k (2k+1) h^(2k) / (2 k! (k+1)!)
    double sum = term;
    for (int k = 1; k < 40; ++k) {
        term *= -h2 / (static_cast<double>(k) * static_cast<double>(k + 1));
        const double add = term * (2.0 * k + 1.0);
        sum += add;
        if (std::abs(add) < 1e-18) break;
    }
    return sum;
}

namespace detail {

inline double find_x_max() noexcept {
    double lo = 1.5;
    double hi = 2.2;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bessel_j1_derivative(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Abscissa of the first maximum of J1 (about 1.84118).
[[nodiscard]] inline double x_max() noexcept {
    static const double v = detail::find_x_max();
    return v;
}

/// Largest value of J1 (about 0.5819).
[[nodiscard]] inline double kappa() noexcept {
    static const double v = bessel_j1(x_max());
    return v;
}

/// f(a): the x in [0, x_max] with J1(x) = kappa * a.
[[nodiscard]] inline double invert_j1(double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::domain_error("invert_j1: amplitude must lie in [0, 1]");
    if (a == 0.0) return 0.0;
    if (a == 1.0) return x_max();
    const double target = kappa() * a;
    double lo = 0.0;
    double hi = x_max();
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bessel_j1(mid) < target ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const double d = bessel_j1_derivative(x);
        if (d <= 0.0) break;
        const double step = (bessel_j1(x) - target) / d;
        const double next = std::clamp(x - step, lo, hi);
        if (next == x) break;
        x = next;
    }
    return x;
}

/// (1/2pi) * integral of exp(i f(a) sin p) exp(-i p) dp by the trapezoid rule, which is exact up
/// to aliasing of orders beyond `samples`.
[[nodiscard]] inline Complex first_order_coefficient(double a, std::size_t samples = 256) {
    const double fa = invert_j1(a);
    Complex sum{0.0, 0.0};
    for (std::size_t k = 0; k < samples; ++k) {
        const double p = two_pi * static_cast<double>(k) / static_cast<double>(samples);
        sum += std::exp(Complex{0.0, fa * std::sin(p) - p});
    }
    return sum / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------------------------
// Modes, modulation, encoding.

/// Separable analysis modes phi_+/-(x) g0(y) with g0 the fundamental Gaussian; sigma in pixels.
struct AnalysisModes {
    Field plus;
    Field minus;
};

[[nodiscard]] inline AnalysisModes pm_analysis_modes(const Grid2D& grid, double sigma_px) {
    grid.validate();
    if (!(sigma_px > 0.0)) throw std::invalid_argument("pm_analysis_modes: sigma must be positive");
    AnalysisModes m{Field(grid.size()), Field(grid.size())};
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double g = hg_mode(0, grid.y(j) / sigma_px);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double u = grid.x(i) / sigma_px;
            m.plus[j * grid.nx + i] = pm_mode(+1, u) * g;
            m.minus[j * grid.nx + i] = pm_mode(-1, u) * g;
        }
    }
    return m;
}

/// Input field of a point source displaced by s (units of sigma) along x.
[[nodiscard]] inline Field shifted_psf(const Grid2D& grid, double sigma_px, double s) {
    grid.validate();
    Field u(grid.size());
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double g = Psf::amplitude(grid.y(j) / sigma_px);
        for (std::size_t i = 0; i < grid.nx; ++i) u[j * grid.nx + i] = Psf::amplitude(grid.x(i) / sigma_px - s) * g;
    }
    return u;
}

struct Modulation {
    Field values; // |V| <= 1
    double v_max{};
};

/// V = (1/V_max) [conj(phi_+) e^{i ky y} + conj(phi_-) e^{-i ky y}] e^{i kx x}, scaled to max |V| = 1.
[[nodiscard]] inline Modulation modulation_function(const AnalysisModes& modes, const Carriers& k, const Grid2D& grid) {
    grid.validate();
    k.validate();
    if (modes.plus.size() != grid.size() || modes.minus.size() != grid.size()) {
        throw std::invalid_argument("modulation_function: mode arrays do not match the grid");
    }
    Modulation out{Field(grid.size()), 0.0};
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const Complex ey = std::polar(1.0, k.ky * grid.y(j));
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const std::size_t p = j * grid.nx + i;
            const Complex v =
                (std::conj(modes.plus[p]) * ey + std::conj(modes.minus[p]) * std::conj(ey)) *
                std::polar(1.0, k.kx * grid.x(i));
            out.values[p] = v;
            out.v_max = std::max(out.v_max, std::abs(v));
        }
    }
    if (!(out.v_max > 0.0)) throw std::invalid_argument("modulation_function: modes vanish on the grid");
    for (auto& v : out.values) v /= out.v_max;
    return out;
}

struct Hologram {
    Grid2D grid;
    Carriers carriers;
    double v_max{};
    std::vector<double> phase; // radians, |G| <= x_max
    Field target;              // the encoded modulation V
};

/// G = f(|V|) sin(arg V) per pixel.
[[nodiscard]] inline Hologram encode_hologram(const Modulation& v, const Grid2D& grid, const Carriers& k) {
    grid.validate();
    if (v.values.size() != grid.size()) throw std::invalid_argument("encode_hologram: field does not match the grid");
    Hologram h{grid, k, v.v_max, std::vector<double>(grid.size()), v.values};
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double a = std::min(std::abs(v.values[p]), 1.0);
        h.phase[p] = a == 0.0 ? 0.0 : invert_j1(a) * std::sin(std::arg(v.values[p]));
    }
    return h;
}

[[nodiscard]] inline Hologram pm_hologram(const Grid2D& grid, double sigma_px, const Carriers& k = {}) {
    return encode_hologram(modulation_function(pm_analysis_modes(grid, sigma_px), k, grid), grid, k);
}

// ---------------------------------------------------------------------------------------------
// Fourier-plane readout.

/// Forward 2-D DFT (unnormalized, kernel e^{-2 pi i (u x/nx + v y/ny)}) via FFTW.
[[nodiscard]] inline Field fft2(const Field& in, const Grid2D& grid) {
    if (in.size() != grid.size()) throw std::invalid_argument("fft2: field does not match the grid");
    Field work = in;
    Field out(grid.size());
    static_assert(sizeof(Complex) == sizeof(fftw_complex));
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(grid.ny), static_cast<int>(grid.nx),
                                      reinterpret_cast<fftw_complex*>(work.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    if (plan == nullptr) throw std::runtime_error("fft2: FFTW planning failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

/// Direct DFT sum at a single frequency bin (u, v).
[[nodiscard]] inline Complex dft_at(const Field& in, const Grid2D& grid, long u, long v) {
    Complex sum{0.0, 0.0};
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double py = static_cast<double>(v) * static_cast<double>(j) / static_cast<double>(grid.ny);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double px = static_cast<double>(u) * static_cast<double>(i) / static_cast<double>(grid.nx);
            sum += in[j * grid.nx + i] * std::polar(1.0, -two_pi * (px + py));
        }
    }
    return sum;
}

struct Optics {
    double wavelength_nm{770.0};
    double focal_length_mm{150.0};
};

struct Readout {
    long bin_x{};         // carrier bin along x
    long bin_y_plus{};    // + spot bin along y (wrapped into [0, ny))
    long bin_y_minus{};   // - spot bin
    double x0_um{};       // Fourier-plane spot position lambda l2 kx / 2 pi
    double y0_um{};
    double i_plus{};
    double i_minus{};
    double leakage{};     // higher-order energy / first-order energy inside the spot windows
    double spot_width{};  // rms radius of the first-order + spot, in bins
    double separation{};  // distance from the + spot to the nearest other order, in bins
    bool overlap_warning{};

    [[nodiscard]] double plus_fraction() const noexcept { return i_plus / (i_plus + i_minus); }
};

inline constexpr double leakage_limit = 0.05;

namespace detail {

inline long wrap(long k, std::size_t n) {
    const auto m = static_cast<long>(n);
    return ((k % m) + m) % m;
}

inline double wrapped_distance(double du, double dv, std::size_t nx, std::size_t ny) {
    const double wx = static_cast<double>(nx);
    const double wy = static_cast<double>(ny);
    du = std::remainder(du, wx);
    dv = std::remainder(dv, wy);
    return std::hypot(du, dv);
}

} // namespace detail

/// Propagates U e^{iG} to the Fourier plane and reads the intensity at the two first-order spots.
[[nodiscard]] inline Readout fourier_readout(const Field& u, const Hologram& h, const Optics& optics = {}) {
    const Grid2D& g = h.grid;
    g.validate();
    h.carriers.validate();
    if (u.size() != g.size()) throw std::invalid_argument("fourier_readout: input field does not match the grid");
    if (!(optics.wavelength_nm > 0.0) || !(optics.focal_length_mm > 0.0)) {
        throw std::invalid_argument("fourier_readout: wavelength and focal length must be positive");
    }

    const double bx = h.carriers.kx * static_cast<double>(g.nx) / two_pi;
    const double by = h.carriers.ky * static_cast<double>(g.ny) / two_pi;
    Readout r;
    r.bin_x = detail::wrap(std::lround(bx), g.nx);
    r.bin_y_plus = detail::wrap(std::lround(by), g.ny);
    r.bin_y_minus = detail::wrap(-std::lround(by), g.ny);
    const double scale = optics.wavelength_nm * 1e-3 * optics.focal_length_mm * 1e3 / two_pi; // um^2
    r.x0_um = scale * h.carriers.kx / g.pitch_um;
    r.y0_um = scale * h.carriers.ky / g.pitch_um;

    // m = 1 term of the Jacobi-Anger expansion alone: J1(f(a)) e^{i arg V} = kappa V.
    Field full(g.size());
    Field first(g.size());
    const double k1 = kappa();
    for (std::size_t p = 0; p < g.size(); ++p) {
        full[p] = u[p] * std::polar(1.0, h.phase[p]);
        first[p] = u[p] * k1 * h.target[p];
    }
    const Field f_full = fft2(full, g);
    const Field f_first = fft2(first, g);
    const auto idx = [&](long ux, long vy) {
        return static_cast<std::size_t>(detail::wrap(vy, g.ny)) * g.nx + static_cast<std::size_t>(detail::wrap(ux, g.nx));
    };
    r.i_plus = std::norm(f_full[idx(r.bin_x, r.bin_y_plus)]);
    r.i_minus = std::norm(f_full[idx(r.bin_x, r.bin_y_minus)]);

    // Nearest other diffraction order or analysis spot; order m carries y-harmonics n with n = m mod 2.
    r.separation = std::numeric_limits<double>::infinity();
    for (int m = -3; m <= 3; ++m) {
        for (int n = -4; n <= 4; ++n) {
            if ((m - n) % 2 != 0 || (m == 1 && n == 1)) continue;
            r.separation = std::min(r.separation, detail::wrapped_distance((m - 1) * bx, (n - 1) * by, g.nx, g.ny));
        }
    }

    // Per-axis rms width of the first-order + spot, measured within half the separation.
    const double half = 0.5 * r.separation;
    const long reach = static_cast<long>(std::ceil(half));
    double w = 0.0;
    double m2 = 0.0;
    for (long dv = -reach; dv <= reach; ++dv) {
        for (long du = -reach; du <= reach; ++du) {
            const double d2 = static_cast<double>(du * du + dv * dv);
            if (d2 > half * half) continue;
            const double e = std::norm(f_first[idx(r.bin_x + du, r.bin_y_plus + dv)]);
            w += e;
            m2 += e * d2;
        }
    }
    r.spot_width = w > 0.0 ? std::sqrt(0.5 * m2 / w) : 0.0;

    const double radius = std::max(1.0, 3.0 * r.spot_width);
    const long rr = static_cast<long>(std::ceil(radius));
    double stray = 0.0;
    double signal = 0.0;
    for (long centre_y : {r.bin_y_plus, r.bin_y_minus}) {
        for (long dv = -rr; dv <= rr; ++dv) {
            for (long du = -rr; du <= rr; ++du) {
                if (static_cast<double>(du * du + dv * dv) > radius * radius) continue;
                const std::size_t q = idx(r.bin_x + du, centre_y + dv);
                stray += std::norm(f_full[q] - f_first[q]);
                signal += std::norm(f_first[q]);
            }
        }
    }
    r.leakage = signal > 0.0 ? stray / signal : std::numeric_limits<double>::infinity();
    r.overlap_warning = r.leakage > leakage_limit || r.separation < 3.0 * r.spot_width;
    return r;
}

/// Binary 8-bit PGM with the phase mapped linearly from [-pi, pi] onto [0, 255].
inline void write_pgm(const Hologram& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "P5\n" << h.grid.nx << ' ' << h.grid.ny << "\n255\n";
    std::vector<unsigned char> row(h.grid.nx);
    for (std::size_t j = 0; j < h.grid.ny; ++j) {
        for (std::size_t i = 0; i < h.grid.nx; ++i) {
            const double t = (h.phase[j * h.grid.nx + i] + std::numbers::pi) / two_pi;
            row[i] = static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Gray level of a phase value as written by write_pgm.
[[nodiscard]] inline int phase_to_gray(double phase) noexcept {
    return static_cast<int>(std::lround(std::clamp((phase + std::numbers::pi) / two_pi, 0.0, 1.0) * 255.0));
}

} // namespace spade::holo

#pragma once

// Experiment commands. Each returns its tables plus a numerical self-check verdict; writing files
// is left to write_outputs so the commands stay testable in memory.

#include <algorithm>
#include <chrono>
#include <initializer_list>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spade/cli/config.hpp"
#include "spade/cli/table.hpp"
#include "spade/core.hpp"
#include "spade/estimate.hpp"
#include "spade/fisher.hpp"
#include "spade/holo.hpp"
#include "spade/modes.hpp"
#include "spade/pipeline.hpp"

#ifndef SPADE_GIT_REVISION
#define SPADE_GIT_REVISION "unknown"
#endif

namespace spade::cli {

inline constexpr const char* workers_env = "SPADE_WORKERS";

struct CommandOutput {
    std::string command;
    std::vector<Table> tables;
    bool self_check_passed{true};
    std::vector<std::string> notes;      // self-check findings, printed to stderr
    std::optional<holo::Hologram> hologram;
};

/// Worker count from SPADE_WORKERS, else the hardware concurrency.
[[nodiscard]] inline std::size_t worker_count() {
    if (const char* env = std::getenv(workers_env)) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            throw ConfigError({std::string(workers_env) + ": must be a positive integer"});
        }
        return static_cast<std::size_t>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace detail {

inline std::vector<double> arange(double lo, double hi, double step) {
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
    return v;
}

inline std::string axis_or(const ExperimentConfig& c, const std::string& fallback) {
    return c.sweep_axis.value_or(fallback);
}

inline void require_axis(const ExperimentConfig& c, const std::string& cmd, std::initializer_list<const char*> ok,
                         const std::string& fallback) {
    const std::string axis = axis_or(c, fallback);
    for (const char* a : ok) {
        if (axis == a) return;
    }
    throw ConfigError({"sweep.axis: '" + axis + "' is not supported by " + cmd});
}

inline std::vector<double> values_or(const ExperimentConfig& c, std::vector<double> fallback) {
    return c.sweep_values.value_or(std::move(fallback));
}

inline std::vector<double> default_noise_grid() { return {0.0, 0.01, 0.02, 0.05, 0.1}; }

inline void check_frequencies(const std::vector<double>& f) {
    for (double v : f) {
        if (!(v > 0.0 && v < 0.5)) throw ConfigError({"sweep.values: frequencies must lie in (0, 0.5)"});
    }
}

inline void check_noise(const std::vector<double>& b) {
    for (double v : b) {
        if (!(v >= 0.0)) throw ConfigError({"sweep.values: b/nu values must be >= 0"});
    }
}

inline LseOptions lse_of(const ExperimentConfig& c) {
    return {c.lse_f_min, c.lse_f_max, c.lse_grid_factor, c.lse_fit_phase};
}

/// Closed-form frequency bound for the configured waveform, in units of nu * Var.
inline double qcrb_nu_var(const std::string& motion, double amplitude, std::size_t frames) {
    if (motion == "sinusoid") return qcrb_frequency(amplitude, frames, 1.0, 1.0, Waveform::Sinusoid);
    return qcrb_frequency(amplitude, frames, 1.0, 1.0, Waveform::SquareWaveFundamental);
}

/// nu / CFI_ff from the exact frame sum; NaN for trajectories without a frequency derivative.
inline double exact_crb_nu_var(const MotionModel& motion, const SamplingSchedule& schedule,
                               const MeasurementScheme& scheme, double nu, double b) {
    if (motion.kind != MotionKind::Sinusoid) return std::numeric_limits<double>::quiet_NaN();
    SamplingSchedule nominal = schedule;
    nominal.jitter.reset();
    const Matrix f = cfi(motion, nominal, scheme, nu, b);
    return nu * bound_diagonal(f).front();
}

struct PointResult {
    PipelineSummary summary;
    bool finite{true};
};

inline PointResult run_point(const ExperimentConfig& c, const MotionModel& motion, const MeasurementScheme& scheme,
                             double nu, double b, std::size_t workers) {
    TrialSpec trial{motion, schedule_of(c), NoiseBudget{nu, b}};
    PipelineSpec spec = make_pipeline(trial, scheme);
    spec.search.grid_points = c.mle_grid_points;
    spec.search.tolerance = c.mle_tolerance;
    spec.lse = lse_of(c);
    const auto est = run_pipeline(spec, scheme, c.trials, c.seed, workers);
    PointResult r{summarize(est, nu), true};
    for (const auto& e : est) {
        if (!std::isfinite(e.frequency.f_hat) || e.frequency.f_hat < c.lse_f_min - 1e-12 ||
            e.frequency.f_hat > c.lse_f_max + 1e-12) {
            r.finite = false;
        }
    }
    return r;
}

inline std::vector<double> summary_cells(const PipelineSummary& s) {
    return {s.mean, s.standard_error, s.nu_variance, s.nu_variance_se};
}

inline double as_double(std::size_t n) { return static_cast<double>(n); }

} // namespace detail

// ---------------------------------------------------------------------------------------------

/// Information per photon for each scheme against the quantum limits, swept over b/nu or s.
[[nodiscard]] inline CommandOutput cmd_fisher_scan(const ExperimentConfig& c) {
    validate(c);
    detail::require_axis(c, "fisher-scan", {"b_over_nu", "displacement"}, "b_over_nu");
    if (c.motion == "square") {
        throw ConfigError({"motion.kind: fisher-scan needs a differentiable trajectory (sinusoid or fundamental)"});
    }
    CommandOutput out{"fisher-scan", {}, true, {}, std::nullopt};
    const MotionModel motion = motion_of(c);
    const SamplingSchedule schedule{c.frames, c.sample_rate_hz, std::nullopt};

    if (detail::axis_or(c, "b_over_nu") == "displacement") {
        const auto s_values = detail::values_or(c, detail::arange(-2.0, 4.0, 0.05));
        Table t{"fisher-scan", {"s[sigma]"}, {}};
        for (const auto& name : c.schemes) t.columns.push_back("gamma_" + name + "[1/sigma^2]");
        t.columns.emplace_back("gamma_ceiling[1/sigma^2]");
        const double ceiling = gamma_ceiling(c.b_over_nu, 1.0);
        const auto [s_lo, s_hi] = std::minmax_element(s_values.begin(), s_values.end());
        const MotionModel span = MotionModel::constant(0.0);
        std::vector<MeasurementScheme> schemes;
        for (const auto& name : c.schemes) {
            schemes.push_back(name == "di" ? MeasurementScheme::direct_imaging_covering(
                                                 c.di_pixel_um / c.sigma_um, *s_lo, *s_hi, c.di_margin_sigma)
                                           : scheme_of(c, name, span));
        }
        for (double s : s_values) {
            std::vector<double> row{s};
            for (std::size_t k = 0; k < c.schemes.size(); ++k) {
                const auto& name = c.schemes[k];
                const double nu = c.nu_for(name);
                const double g = schemes[k].gamma(s, c.b_over_nu * nu, nu);
                if (!(g >= 0.0) || g > ceiling * (1.0 + 1e-9)) {
                    out.self_check_passed = false;
                    out.notes.push_back("gamma of " + name + " outside [0, ceiling] at s=" + format_value(s));
                }
                row.push_back(g);
            }
            row.push_back(ceiling);
            t.add_row(std::move(row));
        }
        out.tables.push_back(std::move(t));
        return out;
    }

    const auto b_values = detail::values_or(c, detail::default_noise_grid());
    detail::check_noise(b_values);
    Table t{"fisher-scan", {"b_over_nu", "qfi_ideal_per_photon[1/f^2]", "qfi_noisy_per_photon[1/f^2]"}, {}};
    for (const auto& name : c.schemes) {
        t.columns.push_back("cfi_" + name + "_per_photon[1/f^2]");
        t.columns.push_back("cfi_" + name + "_over_qfi_ideal");
    }
    const double ideal = qfi_ideal(motion, schedule, 1.0)(0, 0);
    for (double r : b_values) {
        const double noisy = ideal * gamma_ceiling(r, 1.0);
        std::vector<double> row{r, ideal, noisy};
        for (const auto& name : c.schemes) {
            const double nu = c.nu_for(name);
            const auto scheme = scheme_of(c, name, motion);
            const Matrix f = cfi(motion, schedule, scheme, nu, r * nu) / nu;
            const Matrix q = qfi_noisy(motion, schedule, 1.0, r);
            if (!loewner_leq(f, q)) {
                out.self_check_passed = false;
                out.notes.push_back("CFI of " + name + " exceeds the noisy QFI at b/nu=" + format_value(r));
            }
            row.push_back(f(0, 0));
            row.push_back(f(0, 0) / ideal);
        }
        t.add_row(std::move(row));
    }
    out.tables.push_back(std::move(t));
    return out;
}

[[nodiscard]] inline std::vector<std::string> sweep_columns(bool noisy) {
    if (noisy) {
        return {"b_over_nu", "mean_f_hat", "se_mean", "nu_var", "nu_var_se", "crb_nu_var", "qcrb_nu_var",
                "trials_used", "trials_flagged"};
    }
    return {"f", "mean_f_hat", "se_mean", "nu_var", "nu_var_se", "qcrb_nu_var", "crb_nu_var", "trials_used",
            "trials_flagged"};
}

/// Mean and rescaled variance of f_hat versus frequency at b = 0, one table per scheme.
[[nodiscard]] inline CommandOutput cmd_ideal_sweep(const ExperimentConfig& c, std::size_t workers = 1) {
    validate(c);
    if (c.b_over_nu != 0.0) throw ConfigError({"noise.b_over_nu: ideal-sweep requires 0"});
    detail::require_axis(c, "ideal-sweep", {"frequency"}, "frequency");
    const auto f_values = detail::values_or(c, detail::arange(0.05, 0.45, 0.05));
    detail::check_frequencies(f_values);
    CommandOutput out{"ideal-sweep", {}, true, {}, std::nullopt};
    const double qcrb = detail::qcrb_nu_var(c.motion, c.amplitude_sigma, c.frames);
    for (const auto& name : c.schemes) {
        Table t{"ideal-sweep_" + name, sweep_columns(false), {}};
        const double nu = c.nu_for(name);
        for (double f : f_values) {
            const MotionModel motion = motion_of(c, c.motion, f);
            const auto scheme = scheme_of(c, name, motion);
            const auto p = detail::run_point(c, motion, scheme, nu, 0.0, workers);
            if (!p.finite) {
                out.self_check_passed = false;
                out.notes.push_back(name + ": frequency estimate outside the search band at f=" + format_value(f));
            }
            std::vector<double> row{f};
            for (double v : detail::summary_cells(p.summary)) row.push_back(v);
            row.push_back(qcrb);
            row.push_back(detail::exact_crb_nu_var(motion, schedule_of(c), scheme, nu, 0.0));
            row.push_back(detail::as_double(p.summary.used));
            row.push_back(detail::as_double(p.summary.flagged));
            t.add_row(std::move(row));
        }
        out.tables.push_back(std::move(t));
    }
    return out;
}

/// Mean and rescaled variance of f_hat versus b/nu with the classical and quantum bounds.
[[nodiscard]] inline CommandOutput cmd_noise_sweep(const ExperimentConfig& c, std::size_t workers = 1) {
    validate(c);
    detail::require_axis(c, "noise-sweep", {"b_over_nu"}, "b_over_nu");
    const auto b_values = detail::values_or(c, detail::default_noise_grid());
    detail::check_noise(b_values);
    CommandOutput out{"noise-sweep", {}, true, {}, std::nullopt};
    const MotionModel motion = motion_of(c);
    SamplingSchedule nominal = schedule_of(c);
    nominal.jitter.reset();
    for (const auto& name : c.schemes) {
        Table t{"noise-sweep_" + name, sweep_columns(true), {}};
        const double nu = c.nu_for(name);
        const auto scheme = scheme_of(c, name, motion);
        for (double r : b_values) {
            const double b = r * nu;
            const auto p = detail::run_point(c, motion, scheme, nu, b, workers);
            if (!p.finite) {
                out.self_check_passed = false;
                out.notes.push_back(name + ": frequency estimate outside the search band at b/nu=" + format_value(r));
            }
            double crb = std::numeric_limits<double>::quiet_NaN();
            double qcrb = std::numeric_limits<double>::quiet_NaN();
            if (motion.kind == MotionKind::Sinusoid) {
                const Matrix f = cfi(motion, nominal, scheme, nu, b);
                const Matrix q = qfi_noisy(motion, nominal, nu, b);
                if (!loewner_leq(f, q)) {
                    out.self_check_passed = false;
                    out.notes.push_back(name + ": CFI exceeds the noisy QFI at b/nu=" + format_value(r));
                }
                crb = nu * bound_diagonal(f).front();
                qcrb = nu * bound_diagonal(q).front();
            }
            std::vector<double> row{r};
            for (double v : detail::summary_cells(p.summary)) row.push_back(v);
            row.push_back(crb);
            row.push_back(qcrb);
            row.push_back(detail::as_double(p.summary.used));
            row.push_back(detail::as_double(p.summary.flagged));
            t.add_row(std::move(row));
        }
        out.tables.push_back(std::move(t));
    }
    return out;
}

/// Square wave versus its fundamental sinusoid (amplitude 4A/pi) under a random trigger delay, for the
/// first listed scheme. Both are compared with the fundamental-harmonic bound.
[[nodiscard]] inline CommandOutput cmd_jitter_study(const ExperimentConfig& c, std::size_t workers = 1) {
    validate(c);
    if (!c.jitter) throw ConfigError({"schedule.jitter.enabled: jitter-study requires true"});
    detail::require_axis(c, "jitter-study", {"frequency"}, "frequency");
    const auto f_values = detail::values_or(c, detail::arange(0.03, 0.47, 0.01));
    detail::check_frequencies(f_values);
    CommandOutput out{"jitter-study", {}, true, {}, std::nullopt};
    const std::string name = c.schemes.front();
    const double nu = c.nu_for(name);
    const double b = c.b_over_nu * nu;
    const double qcrb = detail::qcrb_nu_var("fundamental", c.amplitude_sigma, c.frames) / gamma_ceiling(b, nu);
    for (const auto& [label, kind] : {std::pair{"sinusoid", "fundamental"}, std::pair{"square", "square"}}) {
        Table t{std::string("jitter-study_") + label,
                {"f", "mean_f_hat", "se_mean", "nu_var", "nu_var_se", "qcrb_nu_var", "ratio_to_qcrb", "trials_used",
                 "trials_flagged"},
                {}};
        for (double f : f_values) {
            const MotionModel motion = motion_of(c, kind, f);
            const auto scheme = scheme_of(c, name, motion);
            const auto p = detail::run_point(c, motion, scheme, nu, b, workers);
            if (!p.finite) {
                out.self_check_passed = false;
                out.notes.push_back(std::string(label) + ": frequency estimate outside the search band at f=" +
                                    format_value(f));
            }
            std::vector<double> row{f};
            for (double v : detail::summary_cells(p.summary)) row.push_back(v);
            row.push_back(qcrb);
            row.push_back(p.summary.nu_variance / qcrb);
            row.push_back(detail::as_double(p.summary.used));
            row.push_back(detail::as_double(p.summary.flagged));
            t.add_row(std::move(row));
        }
        out.tables.push_back(std::move(t));
    }
    return out;
}

/// Builds the PM hologram, then checks the Fourier-plane readout against the mode model.
[[nodiscard]] inline CommandOutput cmd_holo(const ExperimentConfig& c) {
    validate(c);
    CommandOutput out{"holo", {}, true, {}, std::nullopt};
    const holo::Grid2D grid{c.holo.nx, c.holo.ny, c.holo.pitch_um};
    const double sigma_px = c.sigma_um / c.holo.pitch_um;
    const auto carriers = holo::Carriers::from_periods(c.holo.carrier_period_x_px, c.holo.carrier_period_y_px);
    auto h = holo::pm_hologram(grid, sigma_px, carriers);
    const holo::Optics optics{c.holo.wavelength_nm, c.holo.focal_length_mm};

    for (double g : h.phase) {
        if (std::abs(g) > holo::x_max() + 1e-12) {
            out.self_check_passed = false;
            out.notes.emplace_back("hologram phase exceeds the encoding bound");
            break;
        }
    }
    for (int k = 1; k <= 10; ++k) {
        const double a = 0.1 * k;
        if (std::abs(holo::first_order_coefficient(a) - holo::Complex{holo::kappa() * a, 0.0}) > 1e-6) {
            out.self_check_passed = false;
            out.notes.push_back("first-order coefficient off at a=" + format_value(a));
        }
    }

    std::vector<double> s_values;
    if (c.sweep_axis && *c.sweep_axis != "displacement") {
        throw ConfigError({"sweep.axis: '" + *c.sweep_axis + "' is not supported by holo"});
    }
    if (c.sweep_values) {
        s_values = *c.sweep_values;
    } else {
        Rng rng(child_seed(c.seed, 0));
        std::uniform_real_distribution<double> u(0.0, c.holo.s_max_sigma);
        for (std::size_t i = 0; i < c.holo.readout_points; ++i) s_values.push_back(u(rng));
    }

    Table t{"holo-readout",
            {"s[sigma]", "mu_plus", "mu_minus", "i_plus", "i_minus", "readout_plus_fraction", "model_plus_fraction",
             "relative_error", "leakage", "overlap_warning"},
            {}};
    const auto pm = MeasurementScheme::pm_spade();
    for (double s : s_values) {
        const auto r = holo::fourier_readout(holo::shifted_psf(grid, sigma_px, s), h, optics);
        const auto mu = pm.mu(s);
        const double model = mu[0] / (mu[0] + mu[1]);
        const double err = std::abs(r.plus_fraction() - model) / model;
        if (err > c.holo.tolerance) {
            out.self_check_passed = false;
            out.notes.push_back("readout ratio off by " + format_value(err) + " at s=" + format_value(s));
        }
        if (r.overlap_warning) {
            out.self_check_passed = false;
            out.notes.push_back("spot overlap: leakage " + format_value(r.leakage) + " at s=" + format_value(s));
        }
        t.add_row({s, mu[0], mu[1], r.i_plus, r.i_minus, r.plus_fraction(), model, err, r.leakage,
                   r.overlap_warning ? 1.0 : 0.0});
    }
    out.tables.push_back(std::move(t));
    out.hologram = std::move(h);
    return out;
}

// ---------------------------------------------------------------------------------------------

[[nodiscard]] inline Json hologram_sidecar(const holo::Hologram& h, const ExperimentConfig& c) {
    return {{"nx", h.grid.nx},
            {"ny", h.grid.ny},
            {"pitch_um", h.grid.pitch_um},
            {"carrier_kx_rad_per_px", h.carriers.kx},
            {"carrier_ky_rad_per_px", h.carriers.ky},
            {"carrier_kx_rad_per_um", h.carriers.kx / h.grid.pitch_um},
            {"carrier_ky_rad_per_um", h.carriers.ky / h.grid.pitch_um},
            {"v_max", h.v_max},
            {"kappa", holo::kappa()},
            {"phase_range_rad", {-std::numbers::pi, std::numbers::pi}},
            {"gray_levels", 256},
            {"sigma_um", c.sigma_um},
            {"wavelength_nm", c.holo.wavelength_nm},
            {"focal_length_mm", c.holo.focal_length_mm}};
}

/// Writes one CSV per table, the hologram files when present, and <command>_manifest.json.
/// Returns the paths written.
inline std::vector<std::string> write_outputs(const CommandOutput& out, const ExperimentConfig& c,
                                              double wall_time_s, std::size_t workers) {
    namespace fs = std::filesystem;
    fs::create_directories(c.output);
    std::vector<std::string> written;
    for (const auto& t : out.tables) {
        const auto path = (fs::path(c.output) / (t.name + ".csv")).string();
        write_text(path, to_csv(t));
        written.push_back(path);
    }
    if (out.hologram) {
        const auto pgm = (fs::path(c.output) / "hologram.pgm").string();
        holo::write_pgm(*out.hologram, pgm);
        const auto side = (fs::path(c.output) / "hologram.json").string();
        write_text(side, hologram_sidecar(*out.hologram, c).dump(2) + "\n");
        written.push_back(pgm);
        written.push_back(side);
    }
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c)));
    Json manifest{{"command", out.command},
                  {"seed", c.seed},
                  {"config_hash", hash},
                  {"git_revision", SPADE_GIT_REVISION},
                  {"wall_time_s", wall_time_s},
                  {"workers", workers},
                  {"self_check_passed", out.self_check_passed},
                  {"notes", out.notes},
                  {"outputs", written},
                  {"config", to_json(c)}};
    const auto mpath = (fs::path(c.output) / (out.command + "_manifest.json")).string();
    write_text(mpath, manifest.dump(2) + "\n");
    written.push_back(mpath);
    return written;
}

} // namespace spade::cli

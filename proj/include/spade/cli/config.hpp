#pragma once

// Versioned JSON experiment configuration with field-level validation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spade/core.hpp"
#include "spade/modes.hpp"

namespace spade::cli {

using Json = nlohmann::json;

inline constexpr int config_version = 1;

/// One or more field-level problems; what() joins them one per line.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::invalid_argument(join(problems)), problems_{std::move(problems)} {}

    [[nodiscard]] const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string out;
        for (const auto& s : p) {
            if (!out.empty()) out += '\n';
            out += s;
        }
        return out;
    }
    std::vector<std::string> problems_;
};

struct HoloConfig {
    std::size_t nx{512};
    std::size_t ny{512};
    double pitch_um{8.0};
    double carrier_period_x_px{8.0};
    double carrier_period_y_px{16.0};
    double wavelength_nm{770.0};
    double focal_length_mm{150.0};
    std::size_t readout_points{20};
    double s_max_sigma{0.94};
    double tolerance{0.02};

    friend bool operator==(const HoloConfig&, const HoloConfig&) = default;
};

struct ExperimentConfig {
    int version{config_version};
    double sigma_um{103.0};
    std::vector<std::string> schemes{"pm", "di"};
    int hg_modes{21};
    double di_pixel_um{4.6};
    double di_margin_sigma{6.0};

    std::string motion{"fundamental"}; // sinusoid | square | fundamental
    double amplitude_sigma{0.47};
    double frequency{0.2};
    double phase_rad{0.0};

    std::size_t frames{50};
    double sample_rate_hz{20.0};
    bool jitter{false};
    double jitter_mean_ms{2.8};
    double jitter_sd_ms{0.48};

    double nu_di{400.0};
    double nu_hg{60.0};
    double nu_pm{60.0};
    double b_over_nu{0.0};

    std::size_t trials{200};
    std::uint64_t seed{20240601};

    std::optional<std::string> sweep_axis;           // frequency | b_over_nu | displacement
    std::optional<std::vector<double>> sweep_values; // absent: command default

    std::size_t mle_grid_points{400};
    double mle_tolerance{1e-4};
    double lse_f_min{0.02};
    double lse_f_max{0.48};
    double lse_grid_factor{40.0};
    bool lse_fit_phase{false};

    HoloConfig holo{};
    std::string output{"out"};

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    [[nodiscard]] double nu_for(const std::string& scheme) const {
        if (scheme == "di") return nu_di;
        if (scheme == "hg") return nu_hg;
        return nu_pm;
    }
};

// ---------------------------------------------------------------------------------------------

namespace detail {

class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_{problems} {}

    // Reads j[key] into out when present; records a problem on a type mismatch.
    template <class T>
    void get(const Json& j, const std::string& path, const char* key, T& out) {
        if (!j.contains(key)) return;
        const Json& v = j.at(key);
        const std::string where = path.empty() ? key : path + "." + key;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::invalid_argument("expected true/false");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::invalid_argument("expected a string");
            } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
                if (!v.is_array()) throw std::invalid_argument("expected a list of strings");
                for (const auto& e : v) {
                    if (!e.is_string()) throw std::invalid_argument("expected a list of strings");
                }
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                if (!v.is_array()) throw std::invalid_argument("expected a list of numbers");
                for (const auto& e : v) {
                    if (!e.is_number()) throw std::invalid_argument("expected a list of numbers");
                }
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
                if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw std::invalid_argument("expected a non-negative integer");
                }
            } else {
                if (!v.is_number()) throw std::invalid_argument("expected a number");
            }
            out = v.get<T>();
        } catch (const std::exception& e) {
            problems_.push_back(where + ": " + e.what());
        }
    }

    void object(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
        if (!j.is_object()) {
            problems_.push_back((path.empty() ? std::string{"<root>"} : path) + ": expected an object");
            return;
        }
        for (const auto& [k, _] : j.items()) {
            bool known = false;
            for (const char* allowed : keys) known = known || k == allowed;
            if (!known) problems_.push_back((path.empty() ? k : path + "." + k) + ": unknown key");
        }
    }

    [[nodiscard]] static const Json& child(const Json& j, const char* key) {
        static const Json empty = Json::object();
        return j.is_object() && j.contains(key) ? j.at(key) : empty;
    }

private:
    std::vector<std::string>& problems_;
};

} // namespace detail

/// Field-level range checks; returns every problem found.
[[nodiscard]] inline std::vector<std::string> validation_problems(const ExperimentConfig& c) {
    std::vector<std::string> p;
    auto need = [&](bool ok, const char* field, const char* msg) {
        if (!ok) p.push_back(std::string(field) + ": " + msg);
    };
    auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    need(c.version == config_version, "version", "unsupported schema version (expected 1)");
    need(finite_pos(c.sigma_um), "psf.sigma_um", "must be > 0");
    need(!c.schemes.empty(), "schemes", "must list at least one of di, hg, pm");
    for (const auto& s : c.schemes) need(s == "di" || s == "hg" || s == "pm", "schemes", "entries must be di, hg or pm");
    need(c.hg_modes >= 2, "hg.modes", "must be >= 2");
    need(finite_pos(c.di_pixel_um), "di.pixel_um", "must be > 0");
    need(std::isfinite(c.di_margin_sigma) && c.di_margin_sigma >= 6.0, "di.margin_sigma", "must be >= 6");
    need(c.motion == "sinusoid" || c.motion == "square" || c.motion == "fundamental", "motion.kind",
         "must be sinusoid, square or fundamental");
    need(std::isfinite(c.amplitude_sigma) && c.amplitude_sigma > 0.0, "motion.amplitude_sigma", "must be > 0");
    need(c.frequency > 0.0 && c.frequency < 0.5, "motion.frequency", "must lie in (0, 0.5)");
    need(std::isfinite(c.phase_rad), "motion.phase_rad", "must be finite");
    need(c.frames >= 4, "schedule.frames", "must be >= 4");
    need(finite_pos(c.sample_rate_hz), "schedule.sample_rate_hz", "must be > 0");
    need(std::isfinite(c.jitter_mean_ms), "schedule.jitter.mean_ms", "must be finite");
    need(std::isfinite(c.jitter_sd_ms) && c.jitter_sd_ms >= 0.0, "schedule.jitter.sd_ms", "must be >= 0");
    need(finite_pos(c.nu_di), "noise.photons.di", "must be > 0");
    need(finite_pos(c.nu_hg), "noise.photons.hg", "must be > 0");
    need(finite_pos(c.nu_pm), "noise.photons.pm", "must be > 0");
    need(std::isfinite(c.b_over_nu) && c.b_over_nu >= 0.0, "noise.b_over_nu", "must be >= 0");
    need(c.trials >= 1, "trials", "must be >= 1");
    if (c.sweep_axis) {
        need(*c.sweep_axis == "frequency" || *c.sweep_axis == "b_over_nu" || *c.sweep_axis == "displacement",
             "sweep.axis", "must be frequency, b_over_nu or displacement");
    }
    if (c.sweep_values) {
        need(!c.sweep_values->empty(), "sweep.values", "must not be empty");
        for (double v : *c.sweep_values) need(std::isfinite(v), "sweep.values", "entries must be finite");
    }
    need(c.mle_grid_points >= 3, "estimator.mle_grid_points", "must be >= 3");
    need(finite_pos(c.mle_tolerance), "estimator.mle_tolerance", "must be > 0");
    need(c.lse_f_min > 0.0 && c.lse_f_max < 0.5 && c.lse_f_min < c.lse_f_max, "estimator.lse_f_min/lse_f_max",
         "need 0 < f_min < f_max < 0.5");
    need(std::isfinite(c.lse_grid_factor) && c.lse_grid_factor >= 1.0, "estimator.lse_grid_factor", "must be >= 1");
    auto pow2 = [](std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; };
    need(pow2(c.holo.nx), "holo.nx", "must be a power of two");
    need(pow2(c.holo.ny), "holo.ny", "must be a power of two");
    need(finite_pos(c.holo.pitch_um), "holo.pitch_um", "must be > 0");
    need(std::isfinite(c.holo.carrier_period_x_px) && std::abs(c.holo.carrier_period_x_px) > 2.0,
         "holo.carrier_period_x_px", "carrier aliases: period must exceed 2 pixels");
    need(std::isfinite(c.holo.carrier_period_y_px) && std::abs(c.holo.carrier_period_y_px) > 2.0,
         "holo.carrier_period_y_px", "carrier aliases: period must exceed 2 pixels");
    need(finite_pos(c.holo.wavelength_nm), "holo.wavelength_nm", "must be > 0");
    need(finite_pos(c.holo.focal_length_mm), "holo.focal_length_mm", "must be > 0");
    need(c.holo.readout_points >= 1, "holo.readout_points", "must be >= 1");
    need(std::isfinite(c.holo.s_max_sigma) && c.holo.s_max_sigma >= 0.0, "holo.s_max_sigma", "must be >= 0");
    need(finite_pos(c.holo.tolerance), "holo.tolerance", "must be > 0");
    need(!c.output.empty(), "output", "must not be empty");
    return p;
}

inline void validate(const ExperimentConfig& c) {
    auto p = validation_problems(c);
    if (!p.empty()) throw ConfigError(std::move(p));
}

[[nodiscard]] inline Json to_json(const ExperimentConfig& c) {
    Json j;
    j["version"] = c.version;
    j["psf"] = {{"sigma_um", c.sigma_um}};
    j["schemes"] = c.schemes;
    j["hg"] = {{"modes", c.hg_modes}};
    j["di"] = {{"pixel_um", c.di_pixel_um}, {"margin_sigma", c.di_margin_sigma}};
    j["motion"] = {{"kind", c.motion},
                   {"amplitude_sigma", c.amplitude_sigma},
                   {"frequency", c.frequency},
                   {"phase_rad", c.phase_rad}};
    j["schedule"] = {{"frames", c.frames},
                     {"sample_rate_hz", c.sample_rate_hz},
                     {"jitter", {{"enabled", c.jitter}, {"mean_ms", c.jitter_mean_ms}, {"sd_ms", c.jitter_sd_ms}}}};
    j["noise"] = {{"photons", {{"di", c.nu_di}, {"hg", c.nu_hg}, {"pm", c.nu_pm}}}, {"b_over_nu", c.b_over_nu}};
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    Json sweep = Json::object();
    if (c.sweep_axis) sweep["axis"] = *c.sweep_axis;
    if (c.sweep_values) sweep["values"] = *c.sweep_values;
    j["sweep"] = sweep;
    j["estimator"] = {{"mle_grid_points", c.mle_grid_points}, {"mle_tolerance", c.mle_tolerance},
                      {"lse_f_min", c.lse_f_min},             {"lse_f_max", c.lse_f_max},
                      {"lse_grid_factor", c.lse_grid_factor}, {"lse_fit_phase", c.lse_fit_phase}};
    j["holo"] = {{"nx", c.holo.nx},
                 {"ny", c.holo.ny},
                 {"pitch_um", c.holo.pitch_um},
                 {"carrier_period_x_px", c.holo.carrier_period_x_px},
                 {"carrier_period_y_px", c.holo.carrier_period_y_px},
                 {"wavelength_nm", c.holo.wavelength_nm},
                 {"focal_length_mm", c.holo.focal_length_mm},
                 {"readout_points", c.holo.readout_points},
                 {"s_max_sigma", c.holo.s_max_sigma},
                 {"tolerance", c.holo.tolerance}};
    j["output"] = c.output;
    return j;
}

/// Parses and validates; missing keys keep their defaults, unknown keys are errors.
[[nodiscard]] inline ExperimentConfig from_json(const Json& j) {
    std::vector<std::string> problems;
    detail::Reader r(problems);
    ExperimentConfig c;
    using detail::Reader;

    r.object(j, "", {"version", "psf", "schemes", "hg", "di", "motion", "schedule", "noise", "trials", "seed",
                     "sweep", "estimator", "holo", "output"});
    if (!j.is_object()) throw ConfigError(std::move(problems));
    if (!j.contains("version")) problems.emplace_back("version: required");
    r.get(j, "", "version", c.version);
    r.get(j, "", "schemes", c.schemes);
    r.get(j, "", "trials", c.trials);
    r.get(j, "", "seed", c.seed);
    r.get(j, "", "output", c.output);

    auto section = [&](const char* key, std::initializer_list<const char*> keys) -> const Json& {
        const Json& s = Reader::child(j, key);
        r.object(s, key, keys);
        return s;
    };
    const Json& psf = section("psf", {"sigma_um"});
    r.get(psf, "psf", "sigma_um", c.sigma_um);
    const Json& hg = section("hg", {"modes"});
    r.get(hg, "hg", "modes", c.hg_modes);
    const Json& di = section("di", {"pixel_um", "margin_sigma"});
    r.get(di, "di", "pixel_um", c.di_pixel_um);
    r.get(di, "di", "margin_sigma", c.di_margin_sigma);
    const Json& motion = section("motion", {"kind", "amplitude_sigma", "frequency", "phase_rad"});
    r.get(motion, "motion", "kind", c.motion);
    r.get(motion, "motion", "amplitude_sigma", c.amplitude_sigma);
    r.get(motion, "motion", "frequency", c.frequency);
    r.get(motion, "motion", "phase_rad", c.phase_rad);
    const Json& sched = section("schedule", {"frames", "sample_rate_hz", "jitter"});
    r.get(sched, "schedule", "frames", c.frames);
    r.get(sched, "schedule", "sample_rate_hz", c.sample_rate_hz);
    const Json& jit = Reader::child(sched, "jitter");
    r.object(jit, "schedule.jitter", {"enabled", "mean_ms", "sd_ms"});
    r.get(jit, "schedule.jitter", "enabled", c.jitter);
    r.get(jit, "schedule.jitter", "mean_ms", c.jitter_mean_ms);
    r.get(jit, "schedule.jitter", "sd_ms", c.jitter_sd_ms);
    const Json& noise = section("noise", {"photons", "b_over_nu"});
    const Json& photons = Reader::child(noise, "photons");
    r.object(photons, "noise.photons", {"di", "hg", "pm"});
    r.get(photons, "noise.photons", "di", c.nu_di);
    r.get(photons, "noise.photons", "hg", c.nu_hg);
    r.get(photons, "noise.photons", "pm", c.nu_pm);
    r.get(noise, "noise", "b_over_nu", c.b_over_nu);
    const Json& sweep = section("sweep", {"axis", "values"});
    if (sweep.is_object() && sweep.contains("axis")) {
        std::string axis;
        r.get(sweep, "sweep", "axis", axis);
        c.sweep_axis = axis;
    }
    if (sweep.is_object() && sweep.contains("values")) {
        std::vector<double> values;
        r.get(sweep, "sweep", "values", values);
        c.sweep_values = values;
    }
    const Json& est = section("estimator", {"mle_grid_points", "mle_tolerance", "lse_f_min", "lse_f_max",
                                            "lse_grid_factor", "lse_fit_phase"});
    r.get(est, "estimator", "mle_grid_points", c.mle_grid_points);
    r.get(est, "estimator", "mle_tolerance", c.mle_tolerance);
    r.get(est, "estimator", "lse_f_min", c.lse_f_min);
    r.get(est, "estimator", "lse_f_max", c.lse_f_max);
    r.get(est, "estimator", "lse_grid_factor", c.lse_grid_factor);
    r.get(est, "estimator", "lse_fit_phase", c.lse_fit_phase);
    const Json& h = section("holo", {"nx", "ny", "pitch_um", "carrier_period_x_px", "carrier_period_y_px",
                                     "wavelength_nm", "focal_length_mm", "readout_points", "s_max_sigma",
                                     "tolerance"});
    r.get(h, "holo", "nx", c.holo.nx);
    r.get(h, "holo", "ny", c.holo.ny);
    r.get(h, "holo", "pitch_um", c.holo.pitch_um);
    r.get(h, "holo", "carrier_period_x_px", c.holo.carrier_period_x_px);
    r.get(h, "holo", "carrier_period_y_px", c.holo.carrier_period_y_px);
    r.get(h, "holo", "wavelength_nm", c.holo.wavelength_nm);
    r.get(h, "holo", "focal_length_mm", c.holo.focal_length_mm);
    r.get(h, "holo", "readout_points", c.holo.readout_points);
    r.get(h, "holo", "s_max_sigma", c.holo.s_max_sigma);
    r.get(h, "holo", "tolerance", c.holo.tolerance);

    if (!problems.empty()) throw ConfigError(std::move(problems));
    validate(c);
    return c;
}

[[nodiscard]] inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError({origin + ": not valid JSON (" + e.what() + ")"});
    }
}

[[nodiscard]] inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path + ": cannot open config file"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON text.
[[nodiscard]] inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------------------------
// Model objects built from a config.

[[nodiscard]] inline MotionModel motion_of(const ExperimentConfig& c, const std::string& kind, double frequency) {
    if (kind == "sinusoid") return MotionModel::sinusoid(c.amplitude_sigma, frequency, c.phase_rad, c.sample_rate_hz);
    if (kind == "square") return MotionModel::square_wave(c.amplitude_sigma, frequency, c.phase_rad, c.sample_rate_hz);
    return MotionModel::square_wave_fundamental(c.amplitude_sigma, frequency, c.phase_rad, c.sample_rate_hz);
}

[[nodiscard]] inline MotionModel motion_of(const ExperimentConfig& c) { return motion_of(c, c.motion, c.frequency); }

[[nodiscard]] inline SamplingSchedule schedule_of(const ExperimentConfig& c) {
    SamplingSchedule s{c.frames, c.sample_rate_hz, std::nullopt};
    if (c.jitter) s.jitter = DelayJitter{c.jitter_mean_ms * 1e-3, c.jitter_sd_ms * 1e-3};
    return s;
}

/// Scheme by name; direct imaging pixels cover the motion range plus the configured margin.
[[nodiscard]] inline MeasurementScheme scheme_of(const ExperimentConfig& c, const std::string& name,
                                                 const MotionModel& motion) {
    if (name == "di") {
        return MeasurementScheme::direct_imaging_covering(c.di_pixel_um / c.sigma_um, motion.min_displacement(),
                                                          motion.max_displacement(), c.di_margin_sigma);
    }
    if (name == "hg") return MeasurementScheme::hg_spade(c.hg_modes);
    if (name == "pm") return MeasurementScheme::pm_spade();
    throw ConfigError({"schemes: unknown scheme '" + name + "'"});
}

} // namespace spade::cli

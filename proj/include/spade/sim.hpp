#pragma once

// Seeded Monte Carlo generator of per-frame Poisson photon counts.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "spade/core.hpp"
#include "spade/modes.hpp"

namespace spade {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates consecutive seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

/// Seed of trial `index` under `master`; independent of execution order.
[[nodiscard]] constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

struct FrameRecord {
    std::size_t index{};
    double time{};
    double displacement{}; // ground truth, units of sigma
    std::vector<std::int64_t> counts;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Everything that determines the statistics of a single run.
struct TrialSpec {
    MotionModel motion;
    SamplingSchedule schedule;
    NoiseBudget budget;

    void validate() const {
        motion.validate();
        schedule.validate();
        budget.validate();
        if (motion.sample_rate_hz != schedule.sample_rate_hz) {
            throw std::invalid_argument("TrialSpec: motion and schedule sample rates differ");
        }
    }
};

struct TrialResult {
    std::uint64_t seed{};
    double delay_s{};
    std::vector<FrameRecord> frames;

    friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Draw one frame: m_j ~ Poisson(nu mu_j(s) + b), independently per detector.
inline void sample_counts(const MeasurementScheme& scheme, double s, double nu, double b, Rng& rng,
                          std::span<double> mu_workspace, std::span<std::int64_t> counts) {
    scheme.mu(s, mu_workspace);
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const double mean = nu * mu_workspace[j] + b;
        if (mean > 0.0) {
            std::poisson_distribution<std::int64_t> dist(mean);
            counts[j] = dist(rng);
        } else {
            counts[j] = 0;
        }
    }
}

[[nodiscard]] inline std::vector<std::int64_t> sample_frame(const MeasurementScheme& scheme, double s, double nu,
                                                            double b, Rng& rng) {
    if (!(nu > 0.0) || !(b >= 0.0)) throw std::invalid_argument("sample_frame: need nu > 0 and b >= 0");
    std::vector<double> mu(scheme.detector_count());
    std::vector<std::int64_t> counts(scheme.detector_count());
    sample_counts(scheme, s, nu, b, rng, mu, counts);
    return counts;
}

/// One run: a single trigger delay (when jitter is enabled), then N frames.
[[nodiscard]] inline TrialResult run_trial(const TrialSpec& spec, const MeasurementScheme& scheme,
                                           std::uint64_t seed) {
    Rng rng(seed);
    TrialResult out;
    out.seed = seed;
    if (const auto& j = spec.schedule.jitter) {
        if (j->sd_s > 0.0) {
            std::normal_distribution<double> delay(j->mean_s, j->sd_s);
            out.delay_s = delay(rng);
        } else {
            out.delay_s = j->mean_s;
        }
    }
    const auto times = spec.schedule.frame_times(out.delay_s);
    std::vector<double> mu(scheme.detector_count());
    out.frames.reserve(times.size());
    for (std::size_t n = 0; n < times.size(); ++n) {
        FrameRecord f;
        f.index = n;
        f.time = times[n];
        f.displacement = displacement(spec.motion, times[n]);
        f.counts.resize(scheme.detector_count());
        sample_counts(scheme, f.displacement, spec.budget.nu, spec.budget.b, rng, mu, f.counts);
        out.frames.push_back(std::move(f));
    }
    return out;
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. fn must only touch slot i.
template <class Fn>
void parallel_for_index(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    const std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Trials in index order; trial i uses child_seed(master_seed, i).
[[nodiscard]] inline std::vector<TrialResult> run_ensemble(const TrialSpec& spec, const MeasurementScheme& scheme,
                                                           std::size_t trials, std::uint64_t master_seed,
                                                           std::size_t workers = 1) {
    if (trials < 1) throw std::invalid_argument("run_ensemble: need at least one trial");
    spec.validate();
    std::vector<TrialResult> out(trials);
    parallel_for_index(trials, workers,
                       [&](std::size_t i) { out[i] = run_trial(spec, scheme, child_seed(master_seed, i)); });
    return out;
}

} // namespace spade

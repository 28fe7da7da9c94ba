#pragma once

// Simulate-then-estimate runs: Monte Carlo counts -> per-frame MLE -> LSE frequency, per trial.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spade/estimate.hpp"
#include "spade/sim.hpp"

namespace spade {

struct TrialEstimate {
    std::uint64_t seed{};
    double delay_s{};
    std::vector<double> s_hats;
    FrequencyEstimate frequency;
    std::size_t flagged_frames{};

    /// Any degenerate frame or a degenerate fit excludes the trial from ensemble statistics.
    [[nodiscard]] bool flagged() const noexcept { return frequency.flagged || flagged_frames > 0; }
};

/// Estimates from a simulated trial. The LSE uses the nominal frame positions n = 0..N-1, since the
/// trigger delay of a run is unknown to the estimator.
[[nodiscard]] inline TrialEstimate estimate_trial(const TrialResult& trial, const DisplacementEstimator& mle,
                                                  const SinusoidTemplate& tmpl, const LseOptions& lse = {}) {
    TrialEstimate out;
    out.seed = trial.seed;
    out.delay_s = trial.delay_s;
    out.s_hats.reserve(trial.frames.size());
    for (const auto& frame : trial.frames) {
        const auto e = mle.estimate(frame);
        out.s_hats.push_back(e.s_hat);
        if (e.flagged) ++out.flagged_frames;
    }
    out.frequency = lse_frequency(out.s_hats, tmpl, lse);
    return out;
}

struct PipelineSpec {
    TrialSpec trial;
    SearchSpec search;
    SinusoidTemplate tmpl;
    LseOptions lse;
};

/// Default search interval and template for a motion model.
[[nodiscard]] inline PipelineSpec make_pipeline(const TrialSpec& trial, const MeasurementScheme& scheme) {
    return {trial, default_search(trial.motion, scheme), fit_template(trial.motion), LseOptions{}};
}

/// Trial i is simulated with child_seed(master_seed, i) and estimated in the same worker slot.
[[nodiscard]] inline std::vector<TrialEstimate> run_pipeline(const PipelineSpec& spec, const MeasurementScheme& scheme,
                                                             std::size_t trials, std::uint64_t master_seed,
                                                             std::size_t workers = 1) {
    if (trials < 1) throw std::invalid_argument("run_pipeline: need at least one trial");
    spec.trial.validate();
    const DisplacementEstimator mle(scheme, spec.trial.budget, spec.search);
    std::vector<TrialEstimate> out(trials);
    parallel_for_index(trials, workers, [&](std::size_t i) {
        const auto trial = run_trial(spec.trial, scheme, child_seed(master_seed, i));
        out[i] = estimate_trial(trial, mle, spec.tmpl, spec.lse);
    });
    return out;
}

struct PipelineSummary {
    std::size_t trials{};
    std::size_t used{};
    std::size_t flagged{};
    double mean{std::numeric_limits<double>::quiet_NaN()};
    double standard_error{std::numeric_limits<double>::quiet_NaN()};
    double nu_variance{std::numeric_limits<double>::quiet_NaN()};
    double nu_variance_se{std::numeric_limits<double>::quiet_NaN()};
};

/// Statistics over unflagged trials. With fewer than two usable trials the variance fields are NaN.
[[nodiscard]] inline PipelineSummary summarize(const std::vector<TrialEstimate>& estimates, double nu) {
    PipelineSummary s;
    s.trials = estimates.size();
    std::vector<double> f;
    f.reserve(estimates.size());
    for (const auto& e : estimates) {
        if (e.flagged()) {
            ++s.flagged;
        } else {
            f.push_back(e.frequency.f_hat);
        }
    }
    s.used = f.size();
    if (f.size() == 1) s.mean = f.front();
    if (f.size() >= 2) {
        const auto st = ensemble_stats(f, nu);
        s.mean = st.mean;
        s.standard_error = st.standard_error;
        s.nu_variance = st.nu_variance;
        s.nu_variance_se = nu * st.variance_standard_error;
    }
    return s;
}

} // namespace spade

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Monte Carlo criteria use the committed master seed 20240601 and 200 trials per point.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "spade/cli/commands.hpp"

using namespace spade;
using namespace spade::cli;

namespace {

constexpr std::uint64_t master_seed = 20240601;
constexpr std::size_t trials = 200;
constexpr double pi = std::numbers::pi;
const double pixel_4p6 = 4.6 / 103.0;
const std::vector<Param> all_params{Param::Amplitude, Param::Frequency, Param::Phase};

bool report(const std::string& id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s %-4s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), what.c_str(), detail.c_str());
    std::fflush(stdout);
    return ok;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ExperimentConfig mc_config(std::vector<std::string> schemes) {
    ExperimentConfig c;
    c.schemes = std::move(schemes);
    c.amplitude_sigma = 0.47;
    c.trials = trials;
    c.seed = master_seed;
    return c;
}

std::size_t workers() {
    try {
        return worker_count();
    } catch (const ConfigError&) {
        return 1;
    }
}

// ---------------------------------------------------------------------------------------------

bool criterion_1() {
    auto c = mc_config({"pm", "di"});
    c.sweep_values = std::vector<double>{0.1, 0.2, 0.3};
    const auto out = cmd_ideal_sweep(c, workers());
    const double bound = qcrb_frequency(0.47, 50, 1.0, 1.0, Waveform::SquareWaveFundamental);
    bool ok = out.self_check_passed;
    std::string detail = "closed-form bound " + fmt("%.3e", bound) + ";";
    for (const auto& t : out.tables) {
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const double f = t.at(r, "f");
            const double ratio = t.at(r, "nu_var") / bound;
            const double z = (t.at(r, "mean_f_hat") - f) / t.at(r, "se_mean");
            const bool point = ratio >= 1.0 && ratio <= 3.0 && std::abs(z) < 3.0;
            ok = ok && point;
            detail += " " + t.name.substr(12) + "@" + fmt("%.1f", f) + " ratio=" + fmt("%.3f", ratio) +
                      " z=" + fmt("%+.2f", z) + (point ? "" : "(!)");
        }
    }
    return report("1", ok, "QCRB attainment without background, nu*Var in [1,3]x bound and |bias|<3SE", detail);
}

bool criterion_2() {
    bool ok = true;
    std::string detail;
    for (double A : {0.28, 0.47}) {
        const auto m = MotionModel::sinusoid(A, 0.2);
        const SamplingSchedule sched{};
        const Matrix q = qfi_ideal(m, sched, 60.0, all_params);
        const auto di = MeasurementScheme::direct_imaging_covering(1.0 / 500.0, m.min_displacement(),
                                                                   m.max_displacement(), 8.0);
        const double e_di = (cfi(m, sched, di, 60.0, 0.0, all_params) - q).norm() / q.norm();
        const double e_hg = (cfi(m, sched, MeasurementScheme::hg_spade(60), 60.0, 0.0, all_params) - q).norm() / q.norm();
        const Matrix pm = cfi(m, sched, MeasurementScheme::pm_spade(), 60.0, 0.0, all_params);
        const bool below = loewner_leq(pm, q);
        const double ratio = cfi(m, sched, MeasurementScheme::pm_spade(), 60.0, 0.0)(0, 0) / qfi_ideal(m, sched, 60.0)(0, 0);
        ok = ok && e_di < 1e-6 && e_hg < 1e-6 && below;
        if (A == 0.28) ok = ok && ratio >= 0.95;
        detail += " A=" + fmt("%.2f", A) + " |DI-Q|/|Q|=" + fmt("%.1e", e_di) + " |HG-Q|/|Q|=" + fmt("%.1e", e_hg) +
                  " PM<=Q:" + (below ? "yes" : "no") + " PM/Q=" + fmt("%.4f", ratio) + ";";
    }
    return report("2", ok, "noise-free Fisher ordering DI(a=sigma/500)=HG(Q=60)=QFI>=PM, PM/QFI>=0.95 at A=0.28", detail);
}

bool criterion_3() {
    bool ok = true;
    std::string detail;
    const auto motion = MotionModel::square_wave_fundamental(0.47, 0.2);
    const SamplingSchedule sched{};
    const auto di = MeasurementScheme::direct_imaging_covering(pixel_4p6, motion.min_displacement(),
                                                               motion.max_displacement());
    for (double r : {0.05, 0.1}) {
        const double f_pm = cfi(motion, sched, MeasurementScheme::pm_spade(), 60.0, 60.0 * r)(0, 0) / 60.0;
        const double f_hg = cfi(motion, sched, MeasurementScheme::hg_spade(21), 60.0, 60.0 * r)(0, 0) / 60.0;
        const double f_di = cfi(motion, sched, di, 400.0, 400.0 * r)(0, 0) / 400.0;
        const bool order = f_pm > f_hg && f_hg > f_di;
        ok = ok && order;
        detail += " b/nu=" + fmt("%.2f", r) + " CFI/photon pm=" + fmt("%.4g", f_pm) + " hg=" + fmt("%.4g", f_hg) +
                  " di=" + fmt("%.4g", f_di) + (order ? "" : "(!)") + ";";
    }

    auto c = mc_config({"pm", "hg", "di"});
    c.sweep_values = std::vector<double>{0.05, 0.1};
    const auto out = cmd_noise_sweep(c, workers());
    ok = ok && out.self_check_passed;
    for (std::size_t r = 0; r < 2; ++r) {
        const auto& pm = out.tables[0];
        const auto& hg = out.tables[1];
        const auto& dm = out.tables[2];
        auto sep = [&](const Table& lo, const Table& hi) {
            const double d = hi.at(r, "nu_var") - lo.at(r, "nu_var");
            return d / std::hypot(lo.at(r, "nu_var_se"), hi.at(r, "nu_var_se"));
        };
        const double s1 = sep(pm, hg);
        const double s2 = sep(hg, dm);
        const bool mc = s1 >= 2.0 && s2 >= 2.0;
        ok = ok && mc;
        detail += " MC b/nu=" + fmt("%.2f", pm.at(r, "b_over_nu")) + " nuVar pm=" + fmt("%.3e", pm.at(r, "nu_var")) +
                  " hg=" + fmt("%.3e", hg.at(r, "nu_var")) + " di=" + fmt("%.3e", dm.at(r, "nu_var")) +
                  " sep(hg-pm)=" + fmt("%.2f", s1) + "SE sep(di-hg)=" + fmt("%.2f", s2) + "SE" + (mc ? "" : "(!)") + ";";
    }
    return report("3", ok, "noise robustness: CFI pm>hg>di and MC nu*Var pm<hg<di separated by >=2 SE", detail);
}

bool criterion_4() {
    bool ok = true;
    std::size_t checked = 0;
    for (double A : {0.01, 0.28, 0.47, 1.0}) {
        for (double f : {0.1, 0.2, 0.3}) {
            const auto m = MotionModel::sinusoid(A, f, 0.2);
            const auto di = MeasurementScheme::direct_imaging_covering(pixel_4p6, m.min_displacement(),
                                                                       m.max_displacement());
            for (const auto& scheme : {MeasurementScheme::pm_spade(), MeasurementScheme::hg_spade(21), di}) {
                for (double r : {0.0, 0.01, 0.05, 0.1, 0.5}) {
                    const auto rep = fisher_report(m, SamplingSchedule{}, scheme, NoiseBudget{60.0, 60.0 * r}, all_params);
                    ok = ok && loewner_leq(rep.cfi, rep.qfi_noisy);
                    ++checked;
                }
            }
        }
    }
    std::string detail = std::to_string(checked) + " configs CFI<=noisy QFI:" + (ok ? "yes" : "no") + ";";
    const auto small = MotionModel::sinusoid(0.01, 0.2);
    double worst = 1.0;
    for (double r : {0.0, 0.01, 0.05, 0.1, 0.5}) {
        const double ratio = cfi(small, SamplingSchedule{}, MeasurementScheme::pm_spade(), 60.0, 60.0 * r)(0, 0) /
                             qfi_noisy(small, SamplingSchedule{}, 60.0, 60.0 * r)(0, 0);
        worst = std::min(worst, ratio);
    }
    ok = ok && worst >= 0.99;
    detail += " PM/ceiling at A=0.01 min over b/nu=" + fmt("%.6f", worst);
    return report("4", ok, "noisy QFI ceiling bounds every CFI; PM reaches it as A->0", detail);
}

bool criterion_5() {
    auto c = mc_config({"pm"});
    c.jitter = true;
    const auto out = cmd_jitter_study(c, workers());
    auto peak = [](const Table& t, double& at) {
        double m = -1.0;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (t.at(r, "ratio_to_qcrb") > m) {
                m = t.at(r, "ratio_to_qcrb");
                at = t.at(r, "f");
            }
        }
        return m;
    };
    double f_sin = 0.0, f_sq = 0.0;
    const double sin_peak = peak(out.tables.at(0), f_sin);
    const double sq_peak = peak(out.tables.at(1), f_sq);
    std::size_t over = 0;
    for (std::size_t r = 0; r < out.tables[1].rows.size(); ++r) over += out.tables[1].at(r, "ratio_to_qcrb") > 5.0;
    const bool ok = out.self_check_passed && sq_peak > 5.0 && sin_peak <= 5.0;
    return report("5", ok, "trigger jitter: square wave has a point >5x QCRB, sinusoid none",
                  "sinusoid max " + fmt("%.2f", sin_peak) + "x at f=" + fmt("%.2f", f_sin) + "; square max " +
                      fmt("%.2f", sq_peak) + "x at f=" + fmt("%.2f", f_sq) + ", points >5x: " + std::to_string(over) +
                      " of " + std::to_string(out.tables[1].rows.size()));
}

bool criterion_6() {
    const holo::Grid2D grid{};
    const double sigma_px = 103.0 / grid.pitch_um;
    const auto h = holo::pm_hologram(grid, sigma_px);
    const auto pm = MeasurementScheme::pm_spade();
    std::mt19937_64 rng(master_seed);
    std::uniform_real_distribution<double> u(0.0, 0.94);
    double worst = 0.0;
    bool overlap = false;
    for (int i = 0; i < 20; ++i) {
        const double s = u(rng);
        const auto r = holo::fourier_readout(holo::shifted_psf(grid, sigma_px, s), h);
        const auto mu = pm.mu(s);
        const double model = mu[0] / (mu[0] + mu[1]);
        worst = std::max(worst, std::abs(r.plus_fraction() - model) / model);
        overlap = overlap || r.overlap_warning;
    }
    double residual = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const double a = i / 100000.0;
        residual = std::max(residual, std::abs(holo::bessel_j1(holo::invert_j1(a)) - holo::kappa() * a));
    }
    double c1 = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double a = 0.1 * k;
        c1 = std::max(c1, std::abs(holo::first_order_coefficient(a) - holo::Complex{holo::kappa() * a, 0.0}));
    }
    const bool ok = worst < 0.02 && !overlap && residual < 1e-10 && c1 < 1e-6;
    return report("6", ok, "hologram chain: readout vs mu within 2%, J1 inversion residual <1e-10, c1=kappa*a within 1e-6",
                  "max readout error " + fmt("%.2e", worst) + (overlap ? " overlap!" : "") + "; max residual " +
                      fmt("%.1e", residual) + "; max |c1-kappa a| " + fmt("%.1e", c1));
}

// ---------------------------------------------------------------------------------------------
// Criterion 7: module properties, re-checked here in compact form.

bool prop_gradients() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> A(0.01, 2.0), f(0.02, 0.48), ph(-pi, pi), t(0.0, 2.45);
    double worst = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const auto m = MotionModel::sinusoid(A(rng), f(rng), ph(rng));
        const double tt = t(rng);
        for (Param p : all_params) {
            auto at = [&](double d) {
                MotionModel x = m;
                (p == Param::Amplitude ? x.amplitude : p == Param::Frequency ? x.frequency : x.phase) += d;
                return displacement(x, tt);
            };
            const double a = displacement_gradient(m, tt, p);
            const double fd = (at(1e-6) - at(-1e-6)) / 2e-6;
            worst = std::max(worst, std::abs(a - fd) / std::max(std::abs(a), 1e-2));
        }
    }
    double mu_worst = 0.0;
    for (const auto& scheme : {MeasurementScheme::pm_spade(), MeasurementScheme::hg_spade(21),
                               MeasurementScheme::direct_imaging_covering(pixel_4p6, -2.0, 4.0)}) {
        for (int i = 0; i <= 600; ++i) {
            const double s = -2.0 + 0.01 * i;
            const auto g = scheme.mu_gradient(s);
            const auto up = scheme.mu(s + 1e-5), dn = scheme.mu(s - 1e-5);
            double gmax = 0.0;
            for (double v : g) gmax = std::max(gmax, std::abs(v));
            for (std::size_t j = 0; j < g.size(); ++j) {
                const double fd = (up[j] - dn[j]) / 2e-5;
                mu_worst = std::max(mu_worst, std::abs(g[j] - fd) / std::max({std::abs(g[j]), 1e-3 * gmax, 1e-9}));
            }
        }
    }
    return report("7.1", worst < 1e-6 && mu_worst < 1e-6, "analytic gradients vs central differences",
                  "motion " + fmt("%.1e", worst) + ", mu " + fmt("%.1e", mu_worst) + " (limit 1e-6)");
}

bool prop_poisson() {
    struct P {
        MeasurementScheme scheme;
        double s, nu, b;
        std::size_t j;
    };
    const std::vector<P> points{{MeasurementScheme::pm_spade(), 0.0, 60.0, 0.0, 0},
                                {MeasurementScheme::pm_spade(), 0.94, 60.0, 3.0, 1},
                                {MeasurementScheme::hg_spade(21), 0.47, 60.0, 0.6, 1},
                                {MeasurementScheme::hg_spade(21), 1.5, 60.0, 6.0, 3},
                                {MeasurementScheme::direct_imaging(pixel_4p6, -150, 150), 0.3, 400.0, 4.0, 150}};
    Rng rng(master_seed);
    double min_p = 1.0;
    for (const auto& p : points) {
        const double mean = p.nu * p.scheme.mu(p.s)[p.j] + p.b;
        std::map<std::int64_t, double> obs;
        const int n = 100000;
        for (int i = 0; i < n; ++i) obs[sample_frame(p.scheme, p.s, p.nu, p.b, rng)[p.j]] += 1.0;
        // Pearson statistic with cells pooled to expected >= 5
        std::vector<double> e_cells, o_cells;
        double e = 0.0, o = 0.0, lp = -mean, tail = 1.0;
        const auto hi = static_cast<std::int64_t>(mean + 12.0 * std::sqrt(mean) + 20.0);
        for (std::int64_t k = 0; k <= hi; ++k) {
            if (k > 0) lp += std::log(mean) - std::log(static_cast<double>(k));
            tail -= std::exp(lp);
            e += n * std::exp(lp);
            o += obs.count(k) ? obs[k] : 0.0;
            if (e >= 5.0) {
                e_cells.push_back(e);
                o_cells.push_back(o);
                e = o = 0.0;
            }
        }
        e_cells.back() += e + n * std::max(tail, 0.0);
        o_cells.back() += o;
        for (const auto& [k, v] : obs)
            if (k > hi) o_cells.back() += v;
        double chi2 = 0.0;
        for (std::size_t i = 0; i < e_cells.size(); ++i) chi2 += std::pow(o_cells[i] - e_cells[i], 2) / e_cells[i];
        const boost::math::chi_squared dist(static_cast<double>(e_cells.size() - 1));
        min_p = std::min(min_p, boost::math::cdf(boost::math::complement(dist, chi2)));
    }
    return report("7.2", min_p > 1e-3, "Poisson chi-square goodness of fit, 5 points x 1e5 draws",
                  "smallest p-value " + fmt("%.3g", min_p) + " (limit 1e-3)");
}

bool prop_loewner() {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> A(0.01, 1.5), f(0.03, 0.47), ph(-pi, pi), r(0.0, 0.5);
    std::size_t n = 0, bad = 0;
    for (int i = 0; i < 60; ++i) {
        const auto m = MotionModel::sinusoid(A(rng), f(rng), ph(rng));
        const double b = 60.0 * r(rng);
        const auto di = MeasurementScheme::direct_imaging_covering(pixel_4p6, m.min_displacement(), m.max_displacement());
        for (const auto& scheme : {MeasurementScheme::pm_spade(), MeasurementScheme::hg_spade(21), di}) {
            const auto rep = fisher_report(m, SamplingSchedule{}, scheme, NoiseBudget{60.0, b}, all_params);
            bad += !(loewner_leq(rep.cfi, rep.qfi_noisy) && loewner_leq(rep.qfi_noisy, rep.qfi_ideal));
            ++n;
        }
    }
    return report("7.3", bad == 0, "Loewner chain CFI <= noisy QFI <= ideal QFI",
                  std::to_string(n - bad) + "/" + std::to_string(n) + " random (A, f, phi, b) configurations");
}

bool prop_completeness() {
    const auto pm = MeasurementScheme::pm_spade();
    const auto hg = MeasurementScheme::hg_spade(2);
    const auto di = MeasurementScheme::direct_imaging_covering(pixel_4p6, -2.0, 4.0);
    const auto hg60 = MeasurementScheme::hg_spade(60);
    double id = 0.0, bound = 0.0, full = 0.0;
    for (double s = -2.0; s <= 4.0; s += 0.01) {
        const auto a = pm.mu(s), b = hg.mu(s);
        id = std::max(id, std::abs(a[0] + a[1] - b[0] - b[1]));
        for (const auto* m : {&pm, &di, &hg60}) {
            const auto mu = m->mu(s);
            double sum = 0.0;
            for (double v : mu) sum += v;
            bound = std::max(bound, sum - 1.0);
            if (m != &pm) full = std::max(full, std::abs(sum - 1.0));
        }
    }
    return report("7.4", id < 1e-12 && bound <= 1e-12 && full < 1e-8, "PM completeness identity and probability sums",
                  "|mu+ + mu- - mu0 - mu1| " + fmt("%.1e", id) + "; complete-scheme |sum-1| " + fmt("%.1e", full));
}

bool prop_determinism() {
    auto c = mc_config({"pm", "di"});
    c.trials = 50;
    c.sweep_values = std::vector<double>{0.15, 0.35};
    const auto a = cmd_ideal_sweep(c, 1);
    const auto b = cmd_ideal_sweep(c, 4);
    bool same = a.tables.size() == b.tables.size();
    for (std::size_t i = 0; same && i < a.tables.size(); ++i) same = to_csv(a.tables[i]) == to_csv(b.tables[i]);
    const TrialSpec spec{MotionModel::sinusoid(0.47, 0.2), SamplingSchedule{}, NoiseBudget{60.0, 1.0}};
    same = same && run_ensemble(spec, MeasurementScheme::hg_spade(21), 100, master_seed, 1) ==
                       run_ensemble(spec, MeasurementScheme::hg_spade(21), 100, master_seed, 4);
    return report("7.5", same, "determinism: byte-identical tables and trials for 1 vs 4 workers", same ? "identical" : "differ");
}

bool prop_noise_free_ordering() {
    const auto di = MeasurementScheme::direct_imaging_covering(1.0 / 500.0, -2.0, 4.0, 8.0);
    const auto hg = MeasurementScheme::hg_spade(60);
    const auto pm = MeasurementScheme::pm_spade();
    double eq = 0.0;
    bool ge = true;
    for (double s = -2.0; s <= 4.0 + 1e-9; s += 0.02) {
        const double gh = hg.gamma(s, 0.0, 60.0);
        eq = std::max(eq, std::abs(di.gamma(s, 0.0, 400.0) - gh));
        ge = ge && gh + 1e-12 >= pm.gamma(s, 0.0, 60.0);
    }
    const bool at0 = std::abs(pm.gamma(0.0, 0.0, 60.0) - hg.gamma(0.0, 0.0, 60.0)) < 1e-15;
    return report("7.6", eq < 1e-6 && ge && at0, "noise-free gamma ordering DI(a->0) = HG(Q->inf) >= PM, equal at s=0",
                  "max |DI-HG| " + fmt("%.1e", eq) + ", HG>=PM " + (ge ? "everywhere" : "violated"));
}

bool prop_noisy_ordering() {
    const auto di = MeasurementScheme::direct_imaging_covering(pixel_4p6, -2.0, 4.0);
    const auto hg = MeasurementScheme::hg_spade(21);
    const auto pm = MeasurementScheme::pm_spade();
    std::size_t n = 0, pm_hg = 0, hg_di = 0;
    double pm_hg_from = INFINITY, hg_di_to = -INFINITY;
    for (double r : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}) {
        for (int i = 0; i <= 94; ++i) {
            const double s = 0.01 * i;
            const double gp = pm.gamma(s, 60.0 * r, 60.0), gh = hg.gamma(s, 60.0 * r, 60.0);
            const double gd = di.gamma(s, 400.0 * r, 400.0);
            ++n;
            if (gp < gh) {
                ++pm_hg;
                pm_hg_from = std::min(pm_hg_from, s);
            }
            if (gh < gd) {
                ++hg_di;
                hg_di_to = std::max(hg_di_to, s);
            }
        }
    }
    const bool ok = pm_hg == 0 && hg_di == 0;
    std::string detail = std::to_string(n - pm_hg - hg_di) + "/" + std::to_string(n) + " grid points ordered";
    if (hg_di) detail += "; HG<DI at " + std::to_string(hg_di) + " points, s<=" + fmt("%.2f", hg_di_to);
    if (pm_hg) detail += "; PM<HG at " + std::to_string(pm_hg) + " points, s>=" + fmt("%.2f", pm_hg_from);
    return report("7.7", ok, "noisy gamma ordering PM >= HG(21) >= DI(4.6um) on s in [0,0.94], b/nu in (0,0.5]", detail);
}

bool prop_ceiling() {
    const auto di = MeasurementScheme::direct_imaging_covering(pixel_4p6, -2.0, 4.0);
    const auto hg = MeasurementScheme::hg_spade(21);
    const auto pm = MeasurementScheme::pm_spade();
    double worst = -INFINITY;
    for (double r : {0.0, 0.01, 0.05, 0.1, 0.5, 2.0}) {
        for (double s = -2.0; s <= 4.0; s += 0.01) {
            for (const auto* m : {&di, &hg, &pm}) worst = std::max(worst, m->gamma(s, 60.0 * r, 60.0) - gamma_ceiling(60.0 * r, 60.0));
        }
    }
    return report("7.8", worst <= 1e-9, "gamma never exceeds 1/(1+2b/nu)", "max excess " + fmt("%.1e", worst));
}

bool prop_qfi_convergence() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> fd(0.05, 0.45);
    double worst = 0.0;
    for (std::size_t N : {20U, 50U, 100U, 400U}) {
        for (int i = 0; i < 200; ++i) {
            const auto m = MotionModel::sinusoid(0.47, fd(rng));
            const double q = qfi_ideal(m, SamplingSchedule{N, 20.0, std::nullopt}, 1.0)(0, 0);
            const double n = static_cast<double>(N);
            const double closed = pi * pi * 0.47 * 0.47 / 3.0 * n * (n - 1) * (2 * n - 1);
            worst = std::max(worst, std::abs(q - closed) / closed * n);
        }
    }
    return report("7.9", worst < 5.0, "frame-sum QFI within 5/N of the closed form for N>=20",
                  "max N*|rel dev| " + fmt("%.3f", worst));
}

bool prop_estimators() {
    const double nu = 1e9;
    const auto motion = MotionModel::sinusoid(0.47, 0.2);
    double worst = 0.0;
    for (const auto& scheme : {MeasurementScheme::pm_spade(), MeasurementScheme::hg_spade(21),
                               MeasurementScheme::direct_imaging_covering(pixel_4p6, 0.0, 0.94)}) {
        const DisplacementEstimator mle(scheme, NoiseBudget{nu, 0.0}, default_search(motion, scheme));
        for (double s0 = 0.05; s0 <= 0.94 + 1e-12; s0 += 0.01) {
            const auto mu = scheme.mu(s0);
            std::vector<std::int64_t> counts(mu.size());
            for (std::size_t j = 0; j < mu.size(); ++j) counts[j] = std::llround(nu * mu[j]);
            worst = std::max(worst, std::abs(mle.estimate(counts).s_hat - s0));
        }
    }
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(0.0, 0.1);
    SinusoidTemplate t{0.47, 0.47, 0.4};
    std::vector<double> y(50);
    for (std::size_t n = 0; n < 50; ++n) y[n] = 0.47 * std::sin(2 * pi * 0.23 * n + 0.4) + 0.47 + noise(rng);
    const double base = lse_frequency(y, t).f_hat;
    double shift = 0.0;
    for (int k : {-3, 2, 7}) {
        SinusoidTemplate s = t;
        s.phase += 2 * pi * k;
        shift = std::max(shift, std::abs(lse_frequency(y, s).f_hat - base));
    }
    return report("7.10", worst < 1e-4 && shift < 1e-9, "MLE self-consistency and LSE 2pi phase invariance",
                  "max |s_hat-s0| " + fmt("%.1e", worst) + "; max f shift " + fmt("%.1e", shift));
}

bool prop_holo() {
    const double xm = holo::x_max();
    double worst = 0.0, worst_at = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = xm * i / 10000.0;
        const double back = holo::invert_j1(std::min(holo::bessel_j1(x) / holo::kappa(), 1.0));
        if (std::abs(back - x) > worst) {
            worst = std::abs(back - x);
            worst_at = x;
        }
    }
    const holo::Grid2D g{256, 256, 8.0};
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    holo::Field f(g.size());
    for (auto& v : f) v = {n(rng), n(rng)};
    const auto F = holo::fft2(f, g);
    double ef = 0.0, eF = 0.0;
    for (const auto& v : f) ef += std::norm(v);
    for (const auto& v : F) eF += std::norm(v);
    const double parseval = std::abs(eF / (ef * static_cast<double>(g.size())) - 1.0);
    const bool ok_id = worst < 1e-9;
    report("7.11", ok_id, "invert_j1(J1(x)/kappa) = x on [0, x_max] to 1e-9",
           "max error " + fmt("%.2e", worst) + " at x=" + fmt("%.6f", worst_at));
    return report("7.12", parseval < 1e-9, "Parseval on the FFT path", "relative energy error " + fmt("%.1e", parseval)) &&
           ok_id;
}

bool criterion_7(double elapsed_before) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    ok = prop_gradients() && ok;
    ok = prop_poisson() && ok;
    ok = prop_loewner() && ok;
    ok = prop_completeness() && ok;
    ok = prop_determinism() && ok;
    ok = prop_noise_free_ordering() && ok;
    ok = prop_noisy_ordering() && ok;
    ok = prop_ceiling() && ok;
    ok = prop_qfi_convergence() && ok;
    ok = prop_estimators() && ok;
    ok = prop_holo() && ok;
    const double total = elapsed_before + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ok = report("7.13", total < 300.0, "acceptance runtime under 5 minutes", fmt("%.1f s", total)) && ok;
    return report("7", ok, "module invariants and properties", ok ? "all sub-checks pass" : "see failing sub-checks above");
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    std::printf("acceptance: seed %llu, %zu trials per Monte Carlo point, %zu workers\n",
                static_cast<unsigned long long>(master_seed), trials, workers());
    bool ok = true;
    ok = criterion_1() && ok;
    ok = criterion_2() && ok;
    ok = criterion_3() && ok;
    ok = criterion_4() && ok;
    ok = criterion_5() && ok;
    ok = criterion_6() && ok;
    ok = criterion_7(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) && ok;
    std::printf("%s overall\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

// Acceptance suite: one pass/fail line per criterion. Exit code is the number
// of failed criteria. Run a subset with --criterion N (repeatable).

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lcseq/eprocess.hpp"
#include "lcseq/errors.hpp"
#include "lcseq/lcmle.hpp"
#include "lcseq/mixture.hpp"
#include "lcseq/rng.hpp"
#include "lcseq/simlab.hpp"
#include "support.hpp"

using namespace lcseq;

namespace {

int g_threads = 0;

ExperimentConfig protocol_config(double mu, int64_t reps, uint64_t seed) {
    ExperimentConfig config;
    config.mu_values = {mu};
    config.alpha = 0.1;
    config.horizon = 100;
    config.interval = 20;
    config.reps = reps;
    config.checkpoints = {20, 40, 60, 80, 100};
    config.base_seed = seed;
    config.mle_tol = 1e-7;
    return config;
}

double final_fraction(const ExperimentResult& result) {
    double fraction = 0.0;
    int64_t last_cp = 0;
    for (const SummaryRow& row : result.summary.rows) {
        if (row.checkpoint >= last_cp) {
            last_cp = row.checkpoint;
            fraction = row.rejection_fraction;
        }
    }
    return fraction;
}

// independent per-segment Simpson over the fitted support
double segment_simpson(const PiecewiseLogLinear& d, bool weighted_by_x) {
    const auto& knots = d.knots();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const int nodes = 65;
        const double h = (knots[i + 1] - knots[i]) / (nodes - 1);
        double sum = 0.0;
        for (int j = 0; j < nodes; ++j) {
            const double x = knots[i] + h * j;
            double v = std::exp(d.logpdf(x));
            if (weighted_by_x) v *= x;
            const double w = (j == 0 || j == nodes - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            sum += w * v;
        }
        total += sum * h / 3.0;
    }
    return total;
}

bool criterion1(std::string& detail) {
    const auto result = run_experiment(protocol_config(0.0, 200, 101), g_threads);
    const double fraction = final_fraction(result);
    detail = "null rejection fraction at t=100 is " + format_double(fraction) + " (limit 0.05)";
    return fraction <= 0.05;
}

bool criterion2(std::string& detail) {
    const auto result = run_experiment(protocol_config(2.0, 200, 102), g_threads);
    const double fraction = final_fraction(result);
    const double limit = 0.10 + 3.0 * std::sqrt(0.1 * 0.9 / 200.0);
    detail = "boundary rejection fraction at t=100 is " + format_double(fraction) + " (limit " +
             format_double(limit) + ")";
    return fraction <= limit;
}

bool criterion3(std::string& detail) {
    const auto result = run_experiment(protocol_config(8.0, 100, 103), g_threads);
    const double fraction = final_fraction(result);
    detail = "rejection fraction at t=100 for mu=8 is " + format_double(fraction) +
             " (required >= 0.9)";
    return fraction >= 0.9;
}

bool criterion4(std::string& detail) {
    ExperimentConfig config = protocol_config(4.0, 100, 104);
    EstimatorSpec oracle;
    oracle.variant = EstimatorVariant::oracle;
    oracle.oracle_mu = 4.0;
    EstimatorSpec kde;
    EstimatorSpec gmm2;
    gmm2.variant = EstimatorVariant::gmm2;
    const std::vector<EstimatorSpec> arms = {oracle, kde, gmm2};
    const auto results = compare_estimators(config, arms, g_threads);
    const double f_oracle = final_fraction(results[0]);
    const double f_kde = final_fraction(results[1]);
    const double f_gmm2 = final_fraction(results[2]);
    detail = "fractions at t=100: oracle=" + format_double(f_oracle) +
             " kde=" + format_double(f_kde) + " gmm2=" + format_double(f_gmm2);
    return f_oracle >= f_kde - 0.05 && f_oracle >= f_gmm2 - 0.05;
}

bool criterion5(std::string& detail) {
    ExperimentConfig config;
    config.mu_values = {0.0};
    config.alpha = 0.1;
    config.horizon = 500;
    config.interval = 50;
    config.reps = 100;
    config.checkpoints = {100, 200, 300, 400, 500};
    config.base_seed = 105;
    const auto result = run_experiment(config, g_threads);
    const double fraction = final_fraction(result);
    detail = "null rejection fraction at t=500 is " + format_double(fraction) + " (limit 0.10)";
    return fraction <= 0.10;
}

bool criterion6(std::string& detail) {
    const auto result = run_experiment(protocol_config(0.0, 500, 106), g_threads);
    double mean = 0.0;
    for (const RunRecord& run : result.runs) mean += r_value(run.final_log_r);
    mean /= static_cast<double>(result.runs.size());
    double ss = 0.0;
    for (const RunRecord& run : result.runs) {
        const double d = r_value(run.final_log_r) - mean;
        ss += d * d;
    }
    const double se = std::sqrt(ss / (result.runs.size() - 1.0)) /
                      std::sqrt(static_cast<double>(result.runs.size()));
    detail = "mean e-value at t=100 is " + format_double(mean) + " (limit " +
             format_double(1.0 + 3.0 * se) + ")";
    return mean <= 1.0 + 3.0 * se;
}

bool criterion7(std::string& detail) {
    SplitMix64 rng(107);
    double worst = -1e300;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + (trial % 3);
        std::vector<double> values;
        while (true) {
            values.clear();
            for (std::size_t i = 0; i < n; ++i) {
                switch (trial % 4) {
                    case 0: values.push_back(2.0 * rng.next_normal()); break;
                    case 1: values.push_back(-1.0 + 4.0 * rng.next_double()); break;
                    case 2: values.push_back(-2.0 * std::log(rng.next_double_open())); break;
                    default: values.push_back(rng.next_normal() +
                                              (rng.next_double() < 0.5 ? -3.0 : 3.0));
                }
            }
            std::vector<double> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            bool distinct = true;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                if (sorted[i] == sorted[i + 1]) distinct = false;
            }
            if (distinct) break;
        }
        const auto sample = WeightedSortedSample::from_raw(values);
        const auto report = fit_lcmle(sample, 1e-7);
        const double oracle = testsupport::oracle_loglik(sample);
        worst = std::max(worst, oracle - report.loglik);
        if (report.loglik < oracle - 1e-4) {
            detail = "solver fell below the grid oracle by " +
                     format_double(oracle - report.loglik) + " on trial " +
                     std::to_string(trial);
            return false;
        }
    }
    // two-point fits recover the uniform density
    for (int trial = 0; trial < 20; ++trial) {
        const double a = 5.0 * (rng.next_double() - 0.5);
        const double b = a + 0.1 + 4.0 * rng.next_double();
        const auto report = fit_lcmle(WeightedSortedSample::from_raw(std::vector<double>{a, b}));
        const double expected = -std::log(b - a);
        for (double phi : report.density.phi()) {
            if (std::abs(phi - expected) >= 1e-6) {
                detail = "two-point fit deviates from the uniform by " +
                         format_double(std::abs(phi - expected));
                return false;
            }
        }
    }
    detail = "worst oracle-minus-solver log-likelihood deficit " + format_double(worst) +
             " (limit 1e-4); two-point fits uniform to 1e-6";
    return true;
}

bool criterion8(std::string& detail) {
    SplitMix64 rng(108);
    double worst_slope = -1e300, worst_mass = 0.0, worst_moment = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        static constexpr double mus[4] = {0.0, 2.0, 4.0, 8.0};
        const std::size_t n = 2 + (rng.next_u64() % 199);
        const double mu = mus[trial % 4];
        const double shift = 3.0 * (rng.next_double() - 0.5);
        const double scale = 0.5 + 2.0 * rng.next_double();
        auto values = sample_mixture(mu, n, rng.next_u64());
        for (double& v : values) v = shift + scale * v;
        WeightedSortedSample sample;
        try {
            sample = WeightedSortedSample::from_raw(values);
        } catch (const DegenerateSampleError&) {
            continue;
        }
        const auto report = fit_lcmle(sample, 1e-7);
        const double slope_inc = report.density.max_slope_increase();
        const double mass_err = std::abs(segment_simpson(report.density, false) - 1.0);
        const double moment_err =
            std::abs(segment_simpson(report.density, true) - sample.mean());
        worst_slope = std::max(worst_slope, slope_inc);
        worst_mass = std::max(worst_mass, mass_err);
        worst_moment = std::max(worst_moment, moment_err);
        if (slope_inc > 1e-9 || mass_err > 1e-7 || moment_err > 1e-5) {
            detail = "trial " + std::to_string(trial) + ": slope increase " +
                     format_double(slope_inc) + ", |mass-1| " + format_double(mass_err) +
                     ", |moment-mean| " + format_double(moment_err);
            return false;
        }
    }
    detail = "worst slope increase " + format_double(worst_slope) + ", |mass-1| " +
             format_double(worst_mass) + ", |moment-mean| " + format_double(worst_moment);
    return true;
}

bool criterion9(std::string& detail) {
    std::vector<double> sigmas;
    GaussianMixture1D truth6(6.0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto buffer = sample_mixture(6.0, 500, derive_run_seed(109, 6.0, rep));
        sigmas.push_back(sigma_diagnostic(truth6, buffer, 1e-7));
    }
    std::sort(sigmas.begin(), sigmas.end());
    const double median = 0.5 * (sigmas[9] + sigmas[10]);

    double worst_null = -1e300;
    GaussianMixture1D truth0(0.0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto buffer = sample_mixture(0.0, 500, derive_run_seed(109, 0.0, rep));
        worst_null = std::max(worst_null, sigma_diagnostic(truth0, buffer, 1e-7));
    }
    detail = "median sigma at mu=6 is " + format_double(median) +
             " (required > 0); max sigma at mu=0 is " + format_double(worst_null) +
             " (limit 1e-7)";
    return median > 0.0 && worst_null <= 1e-7;
}

bool criterion10(std::string& detail) {
    double worst = 0.0;
    for (double mu : {0.0, 4.0}) {
        GaussianMixture1D truth(mu);
        const auto schedule = BatchSchedule::uniform(20, 100);
        EstimatorSpec spec;
        const EstimatorFn fn = make_estimator_fn(spec);
        for (int rep = 0; rep < 10; ++rep) {
            const auto stream = sample_mixture(mu, 100, derive_run_seed(110, mu, rep));
            EProcessState state;
            std::size_t seen = 0;
            for (double x : stream) {
                state = eprocess_step(std::move(state), x, schedule, fn, 1e-7);
                if (state.trace.size() == seen) continue;
                seen = state.trace.size();
                const int64_t t = state.t;
                const auto prefix =
                    std::span<const double>(stream).subspan(0, static_cast<std::size_t>(t));
                const auto fit = fit_lcmle(WeightedSortedSample::from_raw(prefix), 1e-7);
                double truth_sum = 0.0;
                for (int64_t s = 1; s < t; ++s) {
                    truth_sum += truth.logpdf(stream[static_cast<std::size_t>(s)]);
                }
                const double sigma_part = truth_sum - fit.loglik;
                const double rho_part = regret_diagnostic(truth, prefix, schedule, fn);
                const double deviation =
                    std::abs(state.log_r + state.cumulative_gap - (sigma_part - rho_part));
                worst = std::max(worst, deviation);
            }
        }
    }
    detail = "largest identity deviation over all batch boundaries is " + format_double(worst) +
             " (limit 1e-9)";
    return worst <= 1e-9;
}

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected.push_back(std::atoi(argv[++i]));
        } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
            g_threads = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--criterion N]... [--threads T]\n";
            return 64;
        }
    }

    const std::vector<Criterion> criteria = {
        {1, "null rejection rate over the default protocol", criterion1},
        {2, "rejection rate at the log-concavity boundary", criterion2},
        {3, "power at wide mixture separation (mu=8)", criterion3},
        {4, "oracle estimator is not dominated", criterion4},
        {5, "long-horizon null rejection rate", criterion5},
        {6, "e-value mean under the null", criterion6},
        {7, "solver versus independent grid oracle", criterion7},
        {8, "concavity, normalization and moment certificates", criterion8},
        {9, "truth-minus-fit log-likelihood direction", criterion9},
        {10, "batch accounting identity", criterion10},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
            continue;
        }
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " ("
                  << detail << ")\n";
        if (!ok) ++failures;
    }
    return failures;
}

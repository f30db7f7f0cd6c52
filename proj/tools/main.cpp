#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcseq/eprocess.hpp"
#include "lcseq/errors.hpp"
#include "lcseq/lcmle.hpp"
#include "lcseq/serde.hpp"
#include "lcseq/simlab.hpp"

namespace {

using namespace lcseq;

std::vector<double> read_stream(const std::string& path) {
    if (path == "-") return parse_stream(std::cin);
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file: " + path);
    return parse_stream(in);
}

EstimatorSpec estimator_from_flags(const std::string& name, const std::string& bandwidth,
                                   double oracle_mu, bool oracle_mu_set) {
    EstimatorSpec spec;
    if (name == "kde") {
        spec.variant = EstimatorVariant::kde;
    } else if (name == "gmm2") {
        spec.variant = EstimatorVariant::gmm2;
    } else if (name == "oracle") {
        spec.variant = EstimatorVariant::oracle;
        if (!oracle_mu_set) throw InputError("--oracle-mu is required with --estimator oracle");
        spec.oracle_mu = oracle_mu;
    } else {
        throw InputError("--estimator must be kde, gmm2 or oracle");
    }
    if (bandwidth == "silverman") {
        spec.bandwidth_rule = BandwidthRule::silverman;
    } else {
        try {
            std::size_t consumed = 0;
            const double h = std::stod(bandwidth, &consumed);
            if (consumed != bandwidth.size() || !(h > 0.0)) throw std::invalid_argument("");
            spec.bandwidth_rule = BandwidthRule::fixed;
            spec.fixed_bandwidth = h;
        } catch (const std::exception&) {
            throw InputError("--bandwidth must be 'silverman' or a positive number");
        }
    }
    spec.validate();
    return spec;
}

std::vector<int64_t> parse_schedule_flag(const std::string& text) {
    std::vector<int64_t> times;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            std::size_t consumed = 0;
            const long long v = std::stoll(token, &consumed);
            if (consumed != token.size()) throw std::invalid_argument("");
            times.push_back(v);
        } catch (const std::exception&) {
            throw InputError("--schedule must be a comma-separated list of integers");
        }
    }
    if (times.empty()) throw InputError("--schedule must be nonempty");
    return times;
}

int cmd_fit(const std::string& input, double tol, int max_iter) {
    const std::vector<double> values = read_stream(input);
    if (values.size() < 2) throw DegenerateSampleError("need at least 2 values");
    const WeightedSortedSample sample = WeightedSortedSample::from_raw(values);
    const MleFitReport report = fit_lcmle(sample, tol, max_iter);
    std::cout << fit_report_to_json(report) << "\n";
    return 0;
}

int cmd_test(const std::vector<double>& stream, double alpha, const BatchSchedule& schedule,
             const EstimatorSpec& spec, double mle_tol) {
    if (!(alpha > 0.0) || !(alpha <= 1.0)) throw InputError("--alpha must lie in (0, 1]");
    const double threshold = -std::log(alpha);
    const EstimatorFn estimator = make_estimator_fn(spec);

    std::cout << "t,log_R,rejected\n";
    EProcessState state;
    bool rejected = false;
    int64_t tau = 0;
    std::size_t printed = 0;
    for (double x : stream) {
        state = eprocess_step(std::move(state), x, schedule, estimator, mle_tol);
        for (; printed < state.trace.size(); ++printed) {
            const TracePoint& p = state.trace[printed];
            const bool crossed = p.log_r >= threshold;
            std::cout << p.t << ',' << format_double(p.log_r) << ',' << (crossed ? 1 : 0)
                      << "\n";
            if (crossed && !rejected) {
                rejected = true;
                tau = p.t;
            }
        }
        if (rejected) break; // tau_alpha is a stopping time
    }
    if (rejected) {
        std::cout << "{\"rejected\":true,\"tau\":" << tau << "}\n";
    } else {
        std::cout << "{\"rejected\":false,\"tau\":null}\n";
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int threads) {
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot open config file: " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const ExperimentConfig config = parse_experiment_config(buf.str());

    const ExperimentResult result = run_experiment(config, threads);

    const std::string summary_path = out_dir + "/summary.csv";
    const std::string runs_path = out_dir + "/runs.csv";
    std::ofstream summary(summary_path);
    if (!summary) throw InputError("cannot write " + summary_path);
    write_summary_csv(summary, result.summary);
    std::ofstream runs(runs_path);
    if (!runs) throw InputError("cannot write " + runs_path);
    write_runs_csv(runs, result.runs);

    const int64_t last_cp = config.checkpoints.back();
    for (double mu : config.mu_values) {
        double fraction = 0.0;
        for (const SummaryRow& row : result.summary.rows) {
            if (row.mu == mu && row.checkpoint == last_cp) fraction = row.rejection_fraction;
        }
        std::cout << "mu=" << format_double(mu) << " rejection@" << last_cp << "="
                  << format_double(fraction) << " (" << config.reps << " reps)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential log-concavity testing via the batched universal likelihood "
                 "ratio e-process"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit the 1-D log-concave MLE to newline-delimited data");
    std::string fit_input = "-";
    double fit_tol = 1e-7;
    int fit_max_iter = 500;
    fit->add_option("input", fit_input, "input file, or - for stdin");
    fit->add_option("--tol", fit_tol, "certified log-likelihood gap tolerance");
    fit->add_option("--max-iter", fit_max_iter, "active-set iteration cap");

    // test
    auto* test = app.add_subcommand("test", "Run the sequential test on a data stream");
    std::string test_input = "-";
    double alpha = 0.1;
    int64_t interval = 0;
    std::string schedule_text;
    std::string estimator_name = "kde";
    std::string bandwidth = "silverman";
    double oracle_mu = 0.0;
    double mle_tol = 1e-7;
    test->add_option("input", test_input, "input file, or - for stdin");
    test->add_option("--alpha", alpha, "test level in (0, 1]");
    auto* opt_interval = test->add_option("--interval", interval, "uniform batching interval");
    auto* opt_schedule =
        test->add_option("--schedule", schedule_text, "explicit schedule t1,t2,...");
    opt_interval->excludes(opt_schedule);
    opt_schedule->excludes(opt_interval);
    test->add_option("--estimator", estimator_name, "kde, gmm2 or oracle");
    test->add_option("--bandwidth", bandwidth, "silverman or a fixed positive bandwidth");
    auto* opt_oracle_mu = test->add_option("--oracle-mu", oracle_mu, "mu for the oracle estimator");
    test->add_option("--mle-tol", mle_tol, "MLE gap tolerance");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo experiment from a JSON config");
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    simulate->add_option("config", config_path, "experiment config JSON")->required();
    simulate->add_option("--out-dir", out_dir, "output directory for summary.csv and runs.csv");
    simulate->add_option("--threads", threads, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_input, fit_tol, fit_max_iter);
        if (test->parsed()) {
            const std::vector<double> stream = read_stream(test_input);
            BatchSchedule schedule;
            if (opt_schedule->count() > 0) {
                schedule = BatchSchedule(parse_schedule_flag(schedule_text));
            } else if (opt_interval->count() > 0) {
                if (interval < 1) throw lcseq::InputError("--interval must be >= 1");
                schedule = BatchSchedule::uniform(
                    interval, std::max<int64_t>(static_cast<int64_t>(stream.size()), 2));
            } else {
                throw lcseq::InputError("one of --interval or --schedule is required");
            }
            const EstimatorSpec spec = estimator_from_flags(estimator_name, bandwidth, oracle_mu,
                                                            opt_oracle_mu->count() > 0);
            return cmd_test(stream, alpha, schedule, spec, mle_tol);
        }
        if (simulate->parsed()) return cmd_simulate(config_path, out_dir, threads);
    } catch (const lcseq::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const lcseq::DegenerateSampleError& e) {
        std::cerr << "error: degenerate sample: " << e.what() << "\n";
        return 3;
    } catch (const lcseq::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

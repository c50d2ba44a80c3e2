// effcap: batch front-end for the effective-capacity toolkit.
//
// Subcommands: constant, harq, finite, mc, optimize. Output is CSV (17
// significant digits, deterministic column order) or JSON; re-runs with the
// same seed are byte-identical regardless of --workers.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "effcap/cli_support.hpp"
#include "effcap/effcap.hpp"

namespace {

using effcap::cli::RowSink;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_variance = 4;

struct CommonOpts {
    std::string output;
    std::string format = "csv";
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
    int workers = 0;
    bool strict = false;
};

void add_output_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--output", opts.output, "write rows to this path instead of stdout");
    cmd->add_option("--format", opts.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

void add_mc_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--samples", opts.samples, "Monte Carlo episodes/paths");
    cmd->add_option("--seed", opts.seed, "Monte Carlo seed");
    cmd->add_option("--workers", opts.workers, "worker threads (0 = hardware)");
    cmd->add_flag("--strict", opts.strict, "escalate Monte Carlo variance warnings");
}

void emit(const RowSink& sink, const CommonOpts& opts) {
    std::ostringstream buf;
    if (opts.format == "json")
        sink.write_json(buf);
    else
        sink.write_csv(buf);
    if (opts.output.empty()) {
        std::cout << buf.str();
    } else {
        std::ofstream file(opts.output, std::ios::binary);
        if (!file) throw effcap::ConfigError("output", "cannot open " + opts.output);
        file << buf.str();
    }
}

std::vector<double> theta_list(const std::optional<double>& theta,
                               const std::string& grid_spec) {
    if (theta && !grid_spec.empty())
        throw effcap::ConfigError("theta", "give either --theta or --theta-grid, not both");
    if (!grid_spec.empty()) return effcap::cli::parse_theta_grid(grid_spec).values();
    if (theta) return {*theta};
    throw effcap::ConfigError("theta", "need --theta or --theta-grid");
}

// ---------------------------------------------------------------------------
// constant

struct ConstantArgs {
    std::string pmf_spec;
    double reward = 1.0;
    std::optional<double> theta;
    std::string theta_grid;
    CommonOpts common;
};

int run_constant(const ConstantArgs& args) {
    const auto pmf = effcap::cli::parse_pmf(args.pmf_spec);
    RowSink sink;
    sink.header = {"theta", "zeta", "capacity", "lower", "upper", "approx", "ltat"};
    for (double theta : theta_list(args.theta, args.theta_grid)) {
        const auto ec = effcap::effective_capacity_constant(pmf, args.reward, theta);
        sink.rows.push_back({theta, ec.zeta, ec.capacity, ec.lower_bound, ec.upper_bound,
                             ec.approx_small_theta, ec.ltat});
    }
    emit(sink, args.common);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// harq

struct HarqArgs {
    std::string mode = "outage";
    std::string config_path;
    std::string scheme = "cc";
    int max_rounds = 5;
    std::vector<double> rates;
    double snr_db = 20.0;
    double fading_m = 1.0;
    double fading_omega = 1.0;
    double packet_bits = 1080.0;
    std::optional<double> theta;
    std::string theta_grid;
    CommonOpts common;
};

effcap::HarqConfig build_config(const HarqArgs& args, std::optional<double>& cfg_theta,
                                std::optional<effcap::cli::ThetaGrid>& cfg_grid,
                                CommonOpts& common) {
    const auto scheme = effcap::parse_scheme(args.scheme);
    if (!scheme) throw effcap::ConfigError("scheme", "scheme must be type1|cc|ir|vr|xp");
    effcap::HarqConfig config = effcap::HarqConfig::defaults(*scheme);
    config.max_rounds = args.max_rounds;
    config.snr_db = args.snr_db;
    config.packet_bits = args.packet_bits;
    config.fading.assign(static_cast<std::size_t>(config.max_rounds),
                         {args.fading_m, args.fading_omega});
    if (!args.rates.empty())
        config.rates = args.rates;
    else if (!effcap::is_fixed_rate(*scheme))
        config.rates.assign(static_cast<std::size_t>(config.max_rounds),
                            *scheme == effcap::HarqScheme::Xp ? 0.0 : 4.0);
    if (*scheme == effcap::HarqScheme::Xp && args.rates.empty()) config.rates[0] = 4.0;

    if (!args.config_path.empty()) {
        std::ifstream file(args.config_path);
        if (!file)
            throw effcap::ConfigError("config", "cannot open " + args.config_path);
        nlohmann::json j;
        try {
            file >> j;
        } catch (const nlohmann::json::exception& e) {
            throw effcap::ConfigError("config", std::string("invalid JSON: ") + e.what());
        }
        const auto run = effcap::cli::RunConfig::from_json(j);
        run.apply(config);
        if (run.fading && run.fading->empty())
            config.fading.clear();
        if (run.theta) cfg_theta = run.theta;
        if (run.theta_grid) cfg_grid = run.theta_grid;
        if (run.samples) common.samples = *run.samples;
        if (run.seed) common.seed = *run.seed;
        if (run.output && common.output.empty()) common.output = *run.output;
        if (config.fading.size() != static_cast<std::size_t>(config.max_rounds))
            config.fading.assign(static_cast<std::size_t>(config.max_rounds),
                                 {args.fading_m, args.fading_omega});
    }
    config.validate();
    return config;
}

int run_harq(const HarqArgs& args) {
    CommonOpts common = args.common;
    std::optional<double> cfg_theta = args.theta;
    std::optional<effcap::cli::ThetaGrid> cfg_grid;
    effcap::HarqConfig config = build_config(args, cfg_theta, cfg_grid, common);

    std::vector<double> thetas;
    if (cfg_grid)
        thetas = cfg_grid->values();
    else
        thetas = theta_list(cfg_theta, args.theta_grid);

    const bool max_arrival = args.mode == "max-arrival";
    if (max_arrival && !effcap::is_fixed_rate(config.scheme))
        throw effcap::ConfigError("mode", "max-arrival applies to fixed-rate schemes only");

    const bool closed = config.scheme == effcap::HarqScheme::TypeI ||
                        (config.scheme == effcap::HarqScheme::Cc && config.iid_fading());

    RowSink sink;
    sink.header = {"theta", "capacity", "ltat", "lower", "upper"};
    for (int k = 1; k <= config.max_rounds; ++k)
        sink.header.push_back("p" + std::to_string(k));
    sink.header.push_back("stderr_capacity");
    for (int k = 1; k <= config.max_rounds; ++k)
        sink.header.push_back("stderr_p" + std::to_string(k));

    // Monte Carlo schemes draw one episode batch and sweep theta on it.
    std::optional<effcap::HarqSampler> sampler;
    if (!closed)
        sampler.emplace(config, common.samples, common.seed, common.workers);

    for (double theta : thetas) {
        effcap::EcResult ec;
        effcap::OutageCurve curve;
        double cap_stderr = 0.0;
        if (closed) {
            curve = effcap::closed_form_outage_curve(config);
            ec = max_arrival
                     ? effcap::ec_max_arrival(
                           effcap::interarrival_pmf_from_outage(curve),
                           config.rates[0], theta)
                     : effcap::ec_outage_from_curve(curve, config.rates, config.scheme,
                                                    theta);
        } else {
            const auto est = max_arrival ? sampler->max_arrival_capacity(theta)
                                         : sampler->outage_capacity(theta);
            ec = est.ec;
            curve = est.table.curve;
            cap_stderr = est.capacity_stderr;
        }
        std::vector<double> row = {theta, ec.capacity, ec.ltat, ec.lower_bound,
                                   ec.upper_bound};
        for (int k = 1; k <= config.max_rounds; ++k)
            row.push_back(curve.p[static_cast<std::size_t>(k)]);
        row.push_back(cap_stderr);
        for (int k = 1; k <= config.max_rounds; ++k)
            row.push_back(curve.stderr_p.empty()
                              ? 0.0
                              : curve.stderr_p[static_cast<std::size_t>(k)]);
        sink.rows.push_back(std::move(row));
    }
    emit(sink, common);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// finite

struct FiniteArgs {
    std::string table_spec;
    double theta = 1.0;
    int t_max = 10;
    std::string check = "none";
    CommonOpts common;
};

int run_finite(const FiniteArgs& args) {
    const auto table = effcap::cli::parse_table(args.table_spec);
    const auto series = effcap::phi_recursion(table, args.theta, args.t_max);

    RowSink sink;
    sink.header = {"t", "phi", "log_phi", "capacity"};
    for (int t = 0; t <= args.t_max; ++t) {
        const double log_phi = series.log_value(t);
        sink.rows.push_back({static_cast<double>(t), std::exp(log_phi), log_phi,
                             t == 0 ? std::nan("") : -log_phi / (args.theta * t)});
    }
    emit(sink, args.common);

    bool agree = true;
    const bool check_enum = args.check == "enumeration" || args.check == "all";
    const bool check_det = args.check == "determinant" || args.check == "all";
    if (check_enum) {
        for (int t = 0; t <= args.t_max; ++t) {
            const double exact = effcap::phi_enumeration(table, args.theta, t);
            if (std::abs(exact - series.value(t)) > 1e-12 * std::max(exact, 1e-300)) {
                std::cerr << "enumeration disagrees with recursion at t=" << t << "\n";
                agree = false;
            }
        }
    }
    if (check_det) {
        for (int t = table.max_interarrival(); t <= args.t_max; ++t) {
            const double det = effcap::phi_determinant(table, args.theta, t);
            if (std::abs(det - series.value(t)) >
                1e-8 * std::max(series.value(t), 1e-300)) {
                std::cerr << "determinant form disagrees with recursion at t=" << t << "\n";
                agree = false;
            }
        }
    }
    return agree ? exit_ok : 1;
}

// ---------------------------------------------------------------------------
// mc

struct McArgs {
    std::string scheme;
    int max_rounds = 5;
    std::vector<double> rates;
    double snr_db = 20.0;
    double fading_m = 1.0;
    double fading_omega = 1.0;
    std::string table_spec;
    std::optional<double> theta;
    int t = 10;
    CommonOpts common;
};

int run_mc_curve(const McArgs& args) {
    const auto scheme = effcap::parse_scheme(args.scheme);
    if (!scheme) throw effcap::ConfigError("scheme", "scheme must be type1|cc|ir|vr|xp");
    effcap::HarqConfig config = effcap::HarqConfig::defaults(*scheme);
    config.max_rounds = args.max_rounds;
    config.snr_db = args.snr_db;
    config.fading.assign(static_cast<std::size_t>(config.max_rounds),
                         {args.fading_m, args.fading_omega});
    if (!args.rates.empty())
        config.rates = args.rates;
    else if (!effcap::is_fixed_rate(*scheme))
        config.rates.assign(static_cast<std::size_t>(config.max_rounds), 4.0);
    config.validate();

    const auto curve = effcap::estimate_outage_curve(config, args.common.samples,
                                                     args.common.seed, args.common.workers);
    const bool closed = *scheme == effcap::HarqScheme::TypeI ||
                        (*scheme == effcap::HarqScheme::Cc && config.iid_fading());

    RowSink sink;
    sink.header = {"k", "p_hat", "stderr", "p_closed", "z_score"};
    for (int k = 1; k <= config.max_rounds; ++k) {
        const double p_hat = curve.p[static_cast<std::size_t>(k)];
        const double se = curve.stderr_p[static_cast<std::size_t>(k)];
        double p_closed = std::nan("");
        double z = std::nan("");
        if (closed) {
            p_closed = effcap::outage_closed_form(config, k);
            const double sigma = std::max(
                {se,
                 std::sqrt(p_closed * (1.0 - p_closed) /
                           static_cast<double>(args.common.samples)),
                 1e-300});
            z = (p_hat - p_closed) / sigma;
        }
        sink.rows.push_back({static_cast<double>(k), p_hat, se, p_closed, z});
    }
    emit(sink, args.common);
    return exit_ok;
}

int run_mc_mgf(const McArgs& args) {
    if (!args.theta) throw effcap::ConfigError("theta", "mgf mode needs --theta");
    const auto table = effcap::cli::parse_table(args.table_spec);
    const auto est = effcap::estimate_mgf_finite(table, *args.theta, args.t,
                                                 args.common.samples, args.common.seed,
                                                 args.common.workers);
    const auto series = effcap::phi_recursion(table, *args.theta, args.t);
    const double phi = series.value(args.t);
    const double cap_hat = -std::log(est.mean) / (*args.theta * args.t);
    const double cap = -series.log_value(args.t) / (*args.theta * args.t);
    const double sigma = std::max(est.stderr_value, 1e-300);

    RowSink sink;
    sink.header = {"t",       "theta",        "phi_hat",      "stderr",
                   "phi",     "capacity_hat", "capacity",     "z_score"};
    sink.rows.push_back({static_cast<double>(args.t), *args.theta, est.mean,
                         est.stderr_value, phi, cap_hat, cap, (est.mean - phi) / sigma});
    emit(sink, args.common);
    if (est.variance_warning) {
        std::cerr << "variance warning: stderr/mean = "
                  << est.stderr_value / est.mean << "\n";
        if (args.common.strict) return exit_variance;
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeArgs {
    std::string scheme = "vr";
    int max_rounds = 2;
    double snr_db = 15.0;
    double fading_m = 1.0;
    double fading_omega = 1.0;
    double theta = 1e-3;
    std::string grid_initial;
    std::string grid_subsequent;
    CommonOpts common;
};

int run_optimize(const OptimizeArgs& args) {
    const auto scheme = effcap::parse_scheme(args.scheme);
    if (!scheme) throw effcap::ConfigError("scheme", "scheme must be type1|cc|ir|vr|xp");
    effcap::HarqConfig templ = effcap::HarqConfig::defaults(*scheme);
    templ.max_rounds = args.max_rounds;
    templ.snr_db = args.snr_db;
    templ.fading.assign(static_cast<std::size_t>(templ.max_rounds),
                        {args.fading_m, args.fading_omega});
    templ.rates = effcap::is_fixed_rate(*scheme)
                      ? std::vector<double>{2.0}
                      : std::vector<double>(static_cast<std::size_t>(templ.max_rounds), 2.0);

    effcap::RateGrid grid = effcap::RateGrid::default_grid(*scheme);
    auto parse_grid = [](const std::string& spec, const char* what) {
        std::vector<double> v;
        for (auto part : effcap::cli::split(spec, ','))
            v.push_back(effcap::cli::parse_double(part, what));
        return v;
    };
    if (!args.grid_initial.empty()) grid.initial = parse_grid(args.grid_initial, "grid");
    if (!args.grid_subsequent.empty())
        grid.subsequent = parse_grid(args.grid_subsequent, "grid");

    effcap::OptimizeOptions opt;
    opt.theta = args.theta;
    opt.coarse_samples = args.common.samples;
    opt.seed = args.common.seed;
    opt.workers = args.common.workers;
    const auto result = effcap::optimize_rates(*scheme, grid, templ, opt);

    RowSink sink;
    const std::size_t n_rates = result.points.front().rates.size();
    for (std::size_t i = 1; i <= n_rates; ++i)
        sink.header.push_back("r" + std::to_string(i));
    sink.header.insert(sink.header.end(), {"capacity", "stderr", "refined", "best"});
    for (const auto& p : result.points) {
        std::vector<double> row = p.rates;
        row.push_back(p.capacity);
        row.push_back(p.capacity_stderr);
        row.push_back(p.refined ? 1.0 : 0.0);
        row.push_back(p.rates == result.best_rates ? 1.0 : 0.0);
        sink.rows.push_back(std::move(row));
    }
    emit(sink, args.common);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"effective capacity of renewal reward service processes"};
    app.require_subcommand(1);

    ConstantArgs constant_args;
    auto* constant = app.add_subcommand(
        "constant", "constant-reward renewal effective capacity");
    constant->add_option("--pmf", constant_args.pmf_spec, "interarrival pmf, k:prob[,...]")
        ->required();
    constant->add_option("--reward", constant_args.reward, "reward per renewal")
        ->required();
    double constant_theta = 0.0;
    auto* constant_theta_opt =
        constant->add_option("--theta", constant_theta, "QoS exponent");
    constant->add_option("--theta-grid", constant_args.theta_grid,
                         "min,max,points[,log|lin]");
    constant->add_option("--seed", constant_args.common.seed,
                         "accepted for uniformity; command is deterministic");
    add_output_flags(constant, constant_args.common);

    HarqArgs harq_args;
    auto* harq = app.add_subcommand("harq", "HARQ effective capacity (Table-style)");
    harq->add_option("--mode", harq_args.mode, "max-arrival or outage")
        ->check(CLI::IsMember({"max-arrival", "outage"}));
    harq->add_option("--config", harq_args.config_path, "JSON run configuration");
    harq->add_option("--scheme", harq_args.scheme, "type1|cc|ir|vr|xp");
    harq->add_option("--k", harq_args.max_rounds, "max HARQ rounds");
    harq->add_option("--rates", harq_args.rates, "per-round rates (one value for fixed-rate)")
        ->delimiter(',');
    harq->add_option("--snr-db", harq_args.snr_db, "transmit SNR in dB");
    harq->add_option("--m", harq_args.fading_m, "Nakagami fading order (all rounds)");
    harq->add_option("--omega", harq_args.fading_omega, "average channel power (all rounds)");
    harq->add_option("--b", harq_args.packet_bits, "packet bits");
    double harq_theta = 0.0;
    auto* harq_theta_opt =
        harq->add_option("--theta", harq_theta, "normalized QoS exponent");
    harq->add_option("--theta-grid", harq_args.theta_grid, "min,max,points[,log|lin]");
    add_output_flags(harq, harq_args.common);
    add_mc_flags(harq, harq_args.common);

    FiniteArgs finite_args;
    auto* finite = app.add_subcommand("finite", "finite-time mgf and capacity");
    finite->add_option("--table", finite_args.table_spec,
                       "reward table, k,state,prob,reward[;...]")
        ->required();
    finite->add_option("--theta", finite_args.theta, "QoS exponent")->required();
    finite->add_option("--t-max", finite_args.t_max, "largest time index");
    finite->add_option("--check", finite_args.check, "none|enumeration|determinant|all")
        ->check(CLI::IsMember({"none", "enumeration", "determinant", "all"}));
    finite->add_option("--seed", finite_args.common.seed,
                       "accepted for uniformity; command is deterministic");
    add_output_flags(finite, finite_args.common);

    McArgs mc_args;
    auto* mc = app.add_subcommand("mc", "Monte Carlo estimation");
    mc->add_option("--scheme", mc_args.scheme, "outage-curve mode: type1|cc|ir|vr|xp");
    mc->add_option("--k", mc_args.max_rounds, "max HARQ rounds");
    mc->add_option("--rates", mc_args.rates, "per-round rates")->delimiter(',');
    mc->add_option("--rate", mc_args.rates, "single fixed rate")->delimiter(',');
    mc->add_option("--snr-db", mc_args.snr_db, "transmit SNR in dB");
    mc->add_option("--m", mc_args.fading_m, "Nakagami fading order");
    mc->add_option("--omega", mc_args.fading_omega, "average channel power");
    mc->add_option("--table", mc_args.table_spec, "mgf mode: reward table spec");
    double mc_theta = 0.0;
    auto* mc_theta_opt = mc->add_option("--theta", mc_theta, "QoS exponent (mgf mode)");
    mc->add_option("--t", mc_args.t, "time horizon (mgf mode)");
    add_output_flags(mc, mc_args.common);
    add_mc_flags(mc, mc_args.common);

    OptimizeArgs optimize_args;
    auto* optimize = app.add_subcommand("optimize", "exhaustive rate-grid search");
    optimize->add_option("--scheme", optimize_args.scheme, "type1|cc|ir|vr|xp");
    optimize->add_option("--k", optimize_args.max_rounds, "max HARQ rounds");
    optimize->add_option("--snr-db", optimize_args.snr_db, "transmit SNR in dB");
    optimize->add_option("--m", optimize_args.fading_m, "Nakagami fading order");
    optimize->add_option("--omega", optimize_args.fading_omega, "average channel power");
    optimize->add_option("--theta", optimize_args.theta, "normalized QoS exponent");
    optimize->add_option("--grid-initial", optimize_args.grid_initial,
                         "first-round rate candidates, comma separated");
    optimize->add_option("--grid-subsequent", optimize_args.grid_subsequent,
                         "later-round rate candidates, comma separated");
    add_output_flags(optimize, optimize_args.common);
    add_mc_flags(optimize, optimize_args.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (constant->parsed()) {
            if (*constant_theta_opt) constant_args.theta = constant_theta;
            return run_constant(constant_args);
        }
        if (harq->parsed()) {
            if (*harq_theta_opt) harq_args.theta = harq_theta;
            return run_harq(harq_args);
        }
        if (finite->parsed()) return run_finite(finite_args);
        if (mc->parsed()) {
            if (*mc_theta_opt) mc_args.theta = mc_theta;
            if (!mc_args.table_spec.empty()) return run_mc_mgf(mc_args);
            if (!mc_args.scheme.empty()) return run_mc_curve(mc_args);
            throw effcap::ConfigError("scheme", "mc needs --scheme (curve) or --table (mgf)");
        }
        if (optimize->parsed()) return run_optimize(optimize_args);
    } catch (const effcap::ConfigError& e) {
        std::cerr << "config error (" << e.key() << "): " << e.what() << "\n";
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const effcap::NonConvergence& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const effcap::EvaluatorDiverged& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const effcap::CoincidentRoots& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const effcap::EnumerationTooLarge& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const effcap::LatticeError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const effcap::GridTooLarge& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    return exit_ok;
}

// Command-line front end: run experiments, optimize communication budgets,
// evaluate regret-bound constants, and stress the stochastic quantizer.
#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ofl/analysis.hpp"
#include "ofl/config.hpp"
#include "ofl/quantizer.hpp"
#include "ofl/sim.hpp"

namespace {

using nlohmann::json;

struct RunArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int64_t> T;
    std::optional<int> K;
    std::optional<std::string> method;
    std::optional<double> eta;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
};

int cmd_run(const RunArgs& args) {
    ofl::RunConfig cfg = ofl::load_run_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.T) cfg.T = *args.T;
    if (args.K) cfg.K = *args.K;
    if (args.method) cfg.method.variant = ofl::method_from_name(*args.method);
    if (args.eta) cfg.method.eta = *args.eta;
    if (args.threads) cfg.threads = *args.threads;
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    if (cfg.out_dir.empty()) cfg.out_dir = "out";

    const ofl::RunResult res = ofl::run(cfg);
    const ofl::MetricsRecord& last = res.metrics.back();
    std::cout << "method=" << ofl::method_name(cfg.method.variant) << " T=" << cfg.T
              << " K=" << cfg.K << " seed=" << cfg.seed << "\n"
              << (cfg.model.classification() ? "Accuracy(T)=" : "MSE(T)=") << last.metric
              << " cum_loss=" << last.cum_loss << " cum_bits=" << last.cum_bits
              << " transmissions=" << res.transmissions << "\n"
              << "wrote " << cfg.out_dir << "/" << cfg.run_name << "_metrics.csv and _meta.json\n";
    return 0;
}

struct OptimizeArgs {
    double gamma = 0.1;
    int64_t D = 1;
    int s_max = 32768;
    bool as_json = false;
};

int cmd_optimize(const OptimizeArgs& args) {
    const ofl::BudgetPlan plan = ofl::optimize_budget(args.gamma, args.D, args.s_max);
    if (args.as_json) {
        json j{{"gamma", plan.gamma_target},
               {"gamma_achieved", plan.gamma_achieved},
               {"s", plan.s},
               {"b", plan.b},
               {"rho", plan.rho},
               {"p", plan.p},
               {"L", plan.L},
               {"p_clamped", plan.p_clamped},
               {"objective", plan.objective},
               {"alpha_table1", plan.alpha_table1_value},
               {"alpha_L1", plan.alpha_L1_value}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "budget gamma=" << plan.gamma_target << " D=" << args.D << "\n"
              << "  s=" << plan.s << " b=" << plan.b << " rho=" << plan.rho << " p=" << plan.p
              << " L=" << plan.L << "\n"
              << "  achieved gamma=" << plan.gamma_achieved
              << (plan.p_clamped ? "  (p clamped to 1; requested budget not reachable)" : "")
              << "\n"
              << "  alpha(table)=" << plan.alpha_table1_value
              << " alpha(L=1 form)=" << plan.alpha_L1_value << " objective=" << plan.objective
              << "\n";
    return 0;
}

struct BoundsArgs {
    std::string method = "fedogd";
    double p = 1.0;
    int64_t L = 1;
    int s = 0;
    int b = 1;
    int64_t D = 1;
    int K = 1000;
    std::optional<double> wstar_norm;
    std::optional<double> sigma;
    int64_t T = 0;
    std::optional<double> beta;
    bool as_json = false;
};

int cmd_bounds(const BoundsArgs& args) {
    const ofl::Method method = ofl::method_from_name(args.method);
    ofl::BoundParams params{args.L, args.p, args.s, args.b, args.D, args.K};
    const double alpha = ofl::alpha_table1(method, params);
    const ofl::CommCost cost = ofl::comm_cost(method, params);

    json j{{"method", args.method},
           {"alpha_table1", alpha},
           {"bits_per_step", cost.bits_per_step},
           {"ccr_percent", cost.ccr_percent}};
    if (args.L == 1)
        j["alpha_L1"] = ofl::alpha_L1(args.p, args.s, args.b, static_cast<double>(args.D),
                                      static_cast<double>(args.K));
    if (args.wstar_norm && args.sigma && args.T > 0) {
        const ofl::EtaRecommendation eta =
            ofl::optimal_eta(method, params, *args.wstar_norm, *args.sigma, args.T, args.beta);
        j["eta_formula"] = eta.formula;
        if (eta.cap) j["eta_cap"] = *eta.cap;
        j["eta"] = eta.value;
    }

    if (args.as_json) {
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "method=" << args.method << " alpha=" << alpha;
    if (j.contains("alpha_L1")) std::cout << " alpha_L1=" << j["alpha_L1"].get<double>();
    std::cout << "\n  comm cost=" << cost.bits_per_step << " bits/step, CCR=" << cost.ccr_percent
              << "%\n";
    if (j.contains("eta")) {
        std::cout << "  optimal eta=" << j["eta_formula"].get<double>();
        if (j.contains("eta_cap")) std::cout << " (stability cap " << j["eta_cap"].get<double>() << ")";
        std::cout << " -> eta=" << j["eta"].get<double>() << "\n";
    }
    return 0;
}

struct QuantcheckArgs {
    int s = 1;
    int b = 1;
    int D = 2;
    int64_t trials = 100000;
    int vectors = 20;
    uint64_t seed = 1;
};

int cmd_quantcheck(const QuantcheckArgs& args) {
    ofl::QuantizerSpec spec{args.s, args.b, args.D};
    spec.validate();
    const double bound = spec.variance_bound();
    std::cout << "quantcheck s=" << args.s << " b=" << args.b << " D=" << args.D
              << " trials=" << args.trials << " sigma_q^2=" << bound << "\n";

    bool ok = true;
    for (int v = 0; v < args.vectors; ++v) {
        ofl::RngStream gen(args.seed, ofl::StreamPurpose::DataGen, static_cast<uint64_t>(v));
        ofl::ParameterVector u(args.D);
        for (double& x : u) x = gen.normal();

        std::vector<double> mean(args.D, 0.0);
        double mse = 0.0;
        for (int64_t trial = 0; trial < args.trials; ++trial) {
            ofl::RngStream rng(args.seed, ofl::StreamPurpose::Quantize, static_cast<uint64_t>(v),
                               static_cast<uint64_t>(trial));
            const ofl::ParameterVector dec = ofl::dequantize(ofl::quantize(spec, u, rng), spec);
            double err = 0.0;
            for (int i = 0; i < args.D; ++i) {
                mean[i] += dec[i];
                const double d = dec[i] - u[i];
                err += d * d;
            }
            mse += err;
        }
        for (double& m : mean) m /= static_cast<double>(args.trials);
        mse /= static_cast<double>(args.trials);

        // Per-coordinate 4-standard-error band from the two-point support.
        double worst_bias_se = 0.0;
        for (int i = 0; i < args.D; ++i) {
            const double bias = std::abs(mean[i] - u[i]);
            // Conservative per-trial std dev: half the support gap.
            int block = 0;
            while (spec.block_end(block) <= i) ++block;
            double block_norm = 0.0;
            for (int j = spec.block_begin(block); j < spec.block_end(block); ++j)
                block_norm += u[j] * u[j];
            const double gap = std::sqrt(block_norm) / args.s;
            const double se = gap / 2.0 / std::sqrt(static_cast<double>(args.trials));
            if (se > 0.0) worst_bias_se = std::max(worst_bias_se, bias / se);
        }
        const double mse_ratio = mse / (ofl::squared_norm(u) * bound);
        const bool pass = worst_bias_se <= 4.0 && mse_ratio <= 1.05;
        ok = ok && pass;
        std::cout << "  vector " << v << ": max |bias|/SE=" << worst_bias_se
                  << " MSE/(sigma_q^2 ||u||^2)=" << mse_ratio << (pass ? "" : "  VIOLATION")
                  << "\n";
    }
    std::cout << (ok ? "quantizer bounds hold\n" : "quantizer bounds violated\n");
    return ok ? 0 : 3;
}

struct CompareArgs {
    std::string config_path;
    std::optional<int> repeats;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
};

int cmd_compare(const CompareArgs& args) {
    ofl::CompareConfig cmp = ofl::load_compare_config(args.config_path);
    if (args.repeats) cmp.repeats = *args.repeats;
    if (args.threads) cmp.base.threads = *args.threads;
    if (args.out_dir) cmp.base.out_dir = *args.out_dir;
    if (cmp.base.out_dir.empty()) cmp.base.out_dir = "out";

    const ofl::CompareResult result = ofl::compare(cmp.base, cmp.methods, cmp.repeats);
    std::cout << (cmp.base.model.classification() ? "final Accuracy" : "final MSE")
              << " over " << cmp.repeats << " seeds\n";
    for (const ofl::CompareRow& row : result.rows)
        std::cout << "  " << row.method << ": metric=" << row.final_metric
                  << " cum_bits=" << row.cum_bits << " CCR=" << row.ccr_percent << "%\n";
    std::cout << "wrote " << cmp.base.out_dir << "/" << cmp.base.run_name << "_compare.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online federated learning simulator and analysis toolkit"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run one experiment from a JSON config");
    run->add_option("--config", run_args.config_path, "JSON run config")->required();
    run->add_option("--seed", run_args.seed, "Override seed");
    run->add_option("--T", run_args.T, "Override steps per client");
    run->add_option("--K", run_args.K, "Override client count");
    run->add_option("--method", run_args.method, "Override method variant");
    run->add_option("--eta", run_args.eta, "Override learning rate");
    run->add_option("--threads", run_args.threads, "Worker threads (1 = serial)");
    run->add_option("--out-dir", run_args.out_dir, "Output directory");

    OptimizeArgs opt_args;
    CLI::App* opt = app.add_subcommand("optimize", "Closed-form communication budget optimizer");
    opt->add_option("--gamma", opt_args.gamma, "Target cost ratio in (0,1]")->required();
    opt->add_option("--D", opt_args.D, "Model parameter count")->required();
    opt->add_option("--s-max", opt_args.s_max, "Scan limit for s");
    opt->add_flag("--json", opt_args.as_json, "Emit JSON");

    BoundsArgs bounds_args;
    CLI::App* bounds = app.add_subcommand("bounds", "Regret-bound constants and comm costs");
    bounds->add_option("--method", bounds_args.method, "fedogd|ofedavg|fedomd|ofediq")->required();
    bounds->add_option("--p", bounds_args.p, "Participation probability");
    bounds->add_option("--L", bounds_args.L, "Transmission period");
    bounds->add_option("--s", bounds_args.s, "Quantizer levels (0 = none)");
    bounds->add_option("--b", bounds_args.b, "Quantizer blocks");
    bounds->add_option("--D", bounds_args.D, "Model parameter count");
    bounds->add_option("--K", bounds_args.K, "Client count");
    bounds->add_option("--wstar-norm", bounds_args.wstar_norm, "||w*|| for the eta formula");
    bounds->add_option("--sigma-diff", bounds_args.sigma, "sigma_diff for the eta formula");
    bounds->add_option("--T", bounds_args.T, "Horizon for the eta formula");
    bounds->add_option("--beta", bounds_args.beta, "Smoothness constant for the eta cap");
    bounds->add_flag("--json", bounds_args.as_json, "Emit JSON");

    QuantcheckArgs quant_args;
    CLI::App* quant = app.add_subcommand("quantcheck", "Monte Carlo quantizer verification");
    quant->add_option("--s", quant_args.s, "Levels")->required();
    quant->add_option("--b", quant_args.b, "Blocks")->required();
    quant->add_option("--D", quant_args.D, "Dimension")->required();
    quant->add_option("--trials", quant_args.trials, "Trials per vector");
    quant->add_option("--vectors", quant_args.vectors, "Random vectors");
    quant->add_option("--seed", quant_args.seed, "Seed");

    CompareArgs cmp_args;
    CLI::App* cmp = app.add_subcommand("compare", "Run several methods on shared streams");
    cmp->add_option("--config", cmp_args.config_path, "JSON compare config")->required();
    cmp->add_option("--repeats", cmp_args.repeats, "Seed-averaging repeats");
    cmp->add_option("--threads", cmp_args.threads, "Worker threads (1 = serial)");
    cmp->add_option("--out-dir", cmp_args.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (opt->parsed()) return cmd_optimize(opt_args);
        if (bounds->parsed()) return cmd_bounds(bounds_args);
        if (quant->parsed()) return cmd_quantcheck(quant_args);
        if (cmp->parsed()) return cmd_compare(cmp_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

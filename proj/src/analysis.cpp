#include "ofl/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace ofl {

namespace {

// Mean loss over all K*T samples; fills grad with the mean gradient.
// Clients accumulate their own partial serially; the cross-client reduction
// runs in ascending client order so results do not depend on thread count.
double mean_objective(const ClientStreams& streams, const ModelSpec& model,
                      const ParameterVector& w, ParameterVector* grad) {
    const int K = streams.clients();
    const int64_t T = streams.steps();
    const size_t D = w.size();

    std::vector<double> losses(K, 0.0);
    std::vector<ParameterVector> grads;
    if (grad) grads.assign(K, ParameterVector(D, 0.0));

#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        double loss_k = 0.0;
        for (int64_t t = 1; t <= T; ++t) {
            if (grad) {
                Evaluation ev = evaluate(model, w, streams.at(k, t));
                loss_k += ev.loss;
                axpy(1.0, ev.gradient, grads[k]);
            } else {
                loss_k += loss(model, w, streams.at(k, t));
            }
        }
        losses[k] = loss_k;
    }

    const double scale_inv = 1.0 / (static_cast<double>(K) * static_cast<double>(T));
    double total = 0.0;
    for (int k = 0; k < K; ++k) total += losses[k];
    if (grad) {
        grad->assign(D, 0.0);
        for (int k = 0; k < K; ++k) axpy(1.0, grads[k], *grad);
        scale(*grad, scale_inv);
    }
    return total * scale_inv;
}

double quant_term(double s, double b, double D) {
    if (s <= 0.0 || std::isinf(s)) return 0.0;
    return std::sqrt(D / (s * s * b));
}

}  // namespace

HindsightSolution solve_hindsight(const ClientStreams& streams, const ModelSpec& model,
                                  double tol, int max_iterations, uint64_t seed) {
    model.validate();
    HindsightSolution sol;
    sol.w_star = init_params(model, seed);

    ParameterVector grad;
    double f = mean_objective(streams, model, sol.w_star, &grad);
    double step = 1.0;
    const double armijo = 1e-4;

    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        const double gnorm = norm(grad);
        if (gnorm <= tol) break;

        const double gsq = gnorm * gnorm;
        step = std::min(step * 2.0, 1e12);  // try growing the last accepted step
        ParameterVector trial;
        double f_trial = 0.0;
        bool accepted = false;
        while (step > 1e-18) {
            trial = sol.w_star;
            axpy(-step, grad, trial);
            f_trial = mean_objective(streams, model, trial, nullptr);
            if (f_trial <= f - armijo * step * gsq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search exhausted; gradient norm reported below

        sol.w_star = std::move(trial);
        f = mean_objective(streams, model, sol.w_star, &grad);
    }

    sol.iterations = iter;
    sol.final_gradient_norm = norm(grad);
    sol.converged = sol.final_gradient_norm <= tol;
    sol.total_loss =
        f * static_cast<double>(streams.clients()) * static_cast<double>(streams.steps());
    return sol;
}

double sigma_diff(const ClientStreams& streams, const ModelSpec& model,
                  const ParameterVector& w_star) {
    const int K = streams.clients();
    const int64_t T = streams.steps();
    std::vector<double> per_client(K, 0.0);

#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (int64_t t = 1; t <= T; ++t)
            acc += squared_norm(gradient(model, w_star, streams.at(k, t)));
        per_client[k] = acc / static_cast<double>(T);
    }

    double total = 0.0;
    for (int k = 0; k < K; ++k) total += per_client[k];
    return total / static_cast<double>(K);
}

double regret(const std::vector<ParameterVector>& in_force, const ClientStreams& streams,
              const ModelSpec& model, const HindsightSolution& hindsight) {
    if (static_cast<int64_t>(in_force.size()) != streams.steps())
        throw std::invalid_argument("regret: trajectory length does not match the stream");

    const int K = streams.clients();
    const int64_t T = streams.steps();
    std::vector<double> per_client(K, 0.0);

#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (int64_t t = 1; t <= T; ++t)
            acc += loss(model, in_force[static_cast<size_t>(t - 1)], streams.at(k, t));
        per_client[k] = acc;
    }

    double cumulative = 0.0;
    for (int k = 0; k < K; ++k) cumulative += per_client[k];
    return cumulative - hindsight.total_loss;
}

double alpha_table1(Method method, const BoundParams& params) {
    if (!(params.p > 0.0) || params.p > 1.0)
        throw std::invalid_argument("alpha_table1: p must lie in (0, 1]");
    const double p = params.p;
    const double L = static_cast<double>(params.L);
    switch (method) {
        case Method::FedOGD:
            return 2.0;
        case Method::OFedAvg:
            return 2.0 / p;
        case Method::OFedIQ: {
            const double q = quant_term(params.s, params.b, static_cast<double>(params.D));
            return 4.0 * (3.0 * p * p * (L - 1.0) / 8.0 + 1.0 + q * (p + 1.0 / params.K)) /
                   (p / L);
        }
        case Method::FedOMD:
            // OFedIQ form at p = 1 without a quantization term.
            return 4.0 * L * (3.0 * (L - 1.0) / 8.0 + 1.0);
    }
    throw std::logic_error("alpha_table1: unknown method");
}

double alpha_L1(double p, double s, double b, double D, double K) {
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("alpha_L1: p must lie in (0, 1]");
    return (2.0 / p) * (1.0 + quant_term(s, b, D) * (p + 1.0 / K));
}

EtaRecommendation optimal_eta(Method method, const BoundParams& params, double wstar_norm,
                              double sigma_diff_value, int64_t T, std::optional<double> beta) {
    if (!(sigma_diff_value > 0.0))
        throw std::invalid_argument("optimal_eta: sigma_diff must be positive (degenerate run)");
    if (T < 1) throw std::invalid_argument("optimal_eta: T must be >= 1");

    const double p = method == Method::FedOGD || method == Method::FedOMD ? 1.0 : params.p;
    const double L = static_cast<double>(params.L);
    const double wsq = wstar_norm * wstar_norm;
    const double ssq = sigma_diff_value * sigma_diff_value;

    EtaRecommendation rec;
    const bool unquantized_l1 = method == Method::FedOGD || method == Method::OFedAvg;
    if (unquantized_l1) {
        rec.formula = std::sqrt(p * wsq / (2.0 * ssq * static_cast<double>(T)));
    } else {
        const double c =
            1.0 + quant_term(params.s, params.b, static_cast<double>(params.D)) *
                      (p + 1.0 / params.K);
        const double denom = 4.0 * ssq * (3.0 * p * p * (L - 1.0) / 8.0 + 1.0 + c) *
                             static_cast<double>(T);
        rec.formula = std::sqrt((p / L) * wsq / denom);
    }

    if (beta) {
        if (unquantized_l1) {
            rec.cap = p / (2.0 * *beta);
        } else {
            QuantizerSpec q{params.s, params.b, static_cast<int>(params.D)};
            const double sq = params.s > 0 ? q.variance_bound() : 0.0;
            const double p_sum = p * params.K;
            rec.cap = p / (4.0 * *beta * (1.0 + sq * (p_sum - p + 1.0) / params.K));
        }
    }
    rec.value = rec.cap ? std::min(rec.formula, *rec.cap) : rec.formula;
    return rec;
}

double budget_objective(double gamma, int s) {
    return std::log2(static_cast<double>(s) + 1.0) / 16.0 +
           4.0 * std::pow(gamma / static_cast<double>(s), 2.0 / 3.0);
}

BudgetPlan optimize_budget(double gamma, int64_t D, int s_max) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("optimize_budget: gamma must lie in (0, 1]");
    if (D < 1) throw std::invalid_argument("optimize_budget: D must be >= 1");
    if (s_max < 1) throw std::invalid_argument("optimize_budget: s_max must be >= 1");

    int best_s = 1;
    double best_obj = budget_objective(gamma, 1);
    for (int s = 2; s <= s_max; ++s) {
        const double obj = budget_objective(gamma, s);
        if (obj < best_obj) {
            best_obj = obj;
            best_s = s;
        }
    }

    BudgetPlan plan;
    plan.gamma_target = gamma;
    plan.s = best_s;
    plan.objective = best_obj;
    const double rho_cont = std::pow(gamma / best_s, 2.0 / 3.0);
    const int64_t b_raw = static_cast<int64_t>(std::floor(rho_cont * static_cast<double>(D)));
    plan.b = static_cast<int>(std::clamp<int64_t>(b_raw, 1, D));
    plan.rho = static_cast<double>(plan.b) / static_cast<double>(D);

    const double log_term = std::log2(static_cast<double>(best_s) + 1.0);
    double p = 32.0 * gamma / (1.0 + 32.0 * rho_cont + log_term);
    plan.p_clamped = p > 1.0;
    plan.p = std::min(p, 1.0);
    plan.L = 1;
    plan.gamma_achieved = plan.p * (32.0 * plan.rho + 1.0 + log_term) / 32.0;

    BoundParams bp{plan.L, plan.p, plan.s, plan.b, D, 1000};
    plan.alpha_table1_value = alpha_table1(Method::OFedIQ, bp);
    plan.alpha_L1_value = alpha_L1(plan.p, plan.s, plan.b, static_cast<double>(D), 1000.0);
    return plan;
}

CommCost comm_cost(Method method, const BoundParams& params) {
    const double K = static_cast<double>(params.K);
    const double D = static_cast<double>(params.D);
    const double L = static_cast<double>(params.L);
    const double baseline = 32.0 * K * D;

    CommCost cost;
    switch (method) {
        case Method::FedOGD:
            cost.bits_per_step = baseline;
            break;
        case Method::OFedAvg:
            cost.bits_per_step = 32.0 * params.p * K * D;
            break;
        case Method::FedOMD:
            cost.bits_per_step = baseline / L;
            break;
        case Method::OFedIQ: {
            const double per_message =
                params.s > 0
                    ? 32.0 * params.b + D * (1.0 + std::log2(static_cast<double>(params.s) + 1.0))
                    : 32.0 * D;
            cost.bits_per_step = params.p / L * K * per_message;
            break;
        }
    }
    cost.ccr_percent = (1.0 - cost.bits_per_step / baseline) * 100.0;
    return cost;
}

DominanceResult dominance_check_L(double p, int64_t L, int s, int b, int64_t D, int K) {
    if (!(p > 0.0) || p / static_cast<double>(L) > 1.0)
        throw std::invalid_argument("dominance_check_L: need 0 < p/L <= 1");
    const double q = quant_term(s, b, static_cast<double>(D));
    const double pl = p / static_cast<double>(L);
    const double inv_k = 1.0 / static_cast<double>(K);

    DominanceResult res;
    res.lhs_equal_budget_l1 = (1.0 + q * (pl + inv_k)) / pl;
    res.rhs_general =
        (3.0 * p * p * (static_cast<double>(L) - 1.0) / 8.0 + 1.0 + q * (p + inv_k)) / pl;
    res.l1_no_worse = res.lhs_equal_budget_l1 <= res.rhs_general;
    return res;
}

}  // namespace ofl

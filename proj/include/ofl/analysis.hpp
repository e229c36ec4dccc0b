// Analytical side: hindsight optimum, heterogeneity measure, cumulative
// regret, regret-bound constants, optimal learning rates, and the closed-form
// communication-budget parameter optimizer.
#pragma once

#include <optional>
#include <vector>

#include "ofl/core.hpp"
#include "ofl/data.hpp"
#include "ofl/model.hpp"
#include "ofl/protocol.hpp"

namespace ofl {

struct HindsightSolution {
    ParameterVector w_star;
    double total_loss = 0.0;          // sum of losses over all (k, t) at w_star
    int iterations = 0;
    double final_gradient_norm = 0.0;  // on the per-sample mean objective
    bool converged = true;
};

// Full-batch gradient descent with backtracking line search on the
// per-sample mean objective, run until the mean-gradient norm falls below
// tol. Deterministic from the seeded init. Non-convergence is reported via
// the `converged` flag, never silently accepted.
HindsightSolution solve_hindsight(const ClientStreams& streams, const ModelSpec& model,
                                  double tol = 1e-8, int max_iterations = 200000,
                                  uint64_t seed = 0);

// (1/K) sum_k (1/T) sum_t ||grad L(w_star; x_{k,t}, y_{k,t})||^2.
double sigma_diff(const ClientStreams& streams, const ModelSpec& model,
                  const ParameterVector& w_star);

// Cumulative prequential loss of the in-force model sequence minus the
// hindsight total loss. in_force[t-1] is the model used at step t.
double regret(const std::vector<ParameterVector>& in_force, const ClientStreams& streams,
              const ModelSpec& model, const HindsightSolution& hindsight);

// Shared parameter bag for the bound formulas. s = 0 means "no quantizer"
// (the variance term vanishes, as with s -> infinity).
struct BoundParams {
    int64_t L = 1;
    double p = 1.0;
    int s = 0;
    int b = 1;
    int64_t D = 1;
    int K = 1;
};

// Regret-bound constants alpha, regret <= sqrt(alpha ||w*||^2 K^2 sigma^2 T):
//   FedOGD  -> 2
//   OFedAvg -> 2/p
//   OFedIQ  -> 4 (3p^2(L-1)/8 + 1 + sqrt(D/(s^2 b)) (p + 1/K)) / (p/L)
//   FedOMD  -> the OFedIQ form at p = 1 with no quantization term
double alpha_table1(Method method, const BoundParams& params);

// Factor-2 specialization used for the L=1 numeric comparisons:
// (2/p) (1 + sqrt(D/(s^2 b)) (p + 1/K)). s <= 0 drops the quantizer term.
double alpha_L1(double p, double s, double b, double D, double K);

struct EtaRecommendation {
    double formula = 0.0;             // closed-form optimal rate
    std::optional<double> cap;        // stability cap, when beta is known
    double value = 0.0;               // min(formula, cap)
};

// Closed-form rates:
//   OFedAvg (FedOGD at p=1):  sqrt(p ||w*||^2 / (2 sigma^2 T))
//   OFedIQ (FedOMD at p=1):   sqrt((p/L) ||w*||^2 / (4 sigma^2 (3p^2(L-1)/8 + 1 + C) T))
// with C = 1 + sqrt(D/(b s^2)) (p + 1/K). Caps (when beta is supplied):
//   p/(2 beta) for the unquantized L=1 methods,
//   p/(4 beta (1 + sigma_q^2 (p_sum - p_min + 1)/K)) otherwise.
EtaRecommendation optimal_eta(Method method, const BoundParams& params, double wstar_norm,
                              double sigma_diff_value, int64_t T,
                              std::optional<double> beta = std::nullopt);

struct BudgetPlan {
    double gamma_target = 0.0;
    double gamma_achieved = 0.0;  // with the integer b actually chosen
    int s = 1;
    int b = 1;
    double rho = 0.0;  // b / D
    double p = 1.0;
    int64_t L = 1;
    bool p_clamped = false;
    double objective = 0.0;  // log2(s+1)/16 + 4 (gamma/s)^(2/3) at the chosen s
    double alpha_table1_value = 0.0;
    double alpha_L1_value = 0.0;
};

// The scanned objective, exposed for verification.
double budget_objective(double gamma, int s);

// Exhaustive scan of s in [1, s_max] (ties to the smaller s), then
// rho = (gamma/s)^(2/3), b = max(1, floor(rho D)),
// p = 32 gamma / (1 + 32 rho + log2(s+1)) clamped to <= 1, L = 1.
BudgetPlan optimize_budget(double gamma, int64_t D, int s_max = 32768);

struct CommCost {
    double bits_per_step = 0.0;
    double ccr_percent = 0.0;  // (1 - cost / 32KD) * 100
};

// Average uplink bits per time step:
//   FedOGD 32KD; OFedAvg 32pKD; FedOMD 32KD/L;
//   OFedIQ (p/L) K (32b + D(1+log2(s+1))), or (p/L) 32KD without a quantizer.
CommCost comm_cost(Method method, const BoundParams& params);

struct DominanceResult {
    double lhs_equal_budget_l1 = 0.0;  // OFedIQ(1, p/L, s, b) bound factor
    double rhs_general = 0.0;          // OFedIQ(L, p, s, b) bound factor
    bool l1_no_worse = false;
};

// Both sides of the equal-budget comparison: subsampling alone is never
// worse than the periodic plan of the same cost, with equality only at L=1.
DominanceResult dominance_check_L(double p, int64_t L, int s, int b, int64_t D, int K);

}  // namespace ofl

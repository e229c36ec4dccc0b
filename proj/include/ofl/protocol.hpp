// Client and server state machines: local OGD updates, anchor bookkeeping,
// message construction with probabilistic participation, and the periodic
// global aggregation shared by all four method variants.
#pragma once

#include <optional>
#include <vector>

#include "ofl/core.hpp"
#include "ofl/model.hpp"
#include "ofl/quantizer.hpp"

namespace ofl {

enum class Method { FedOGD, OFedAvg, FedOMD, OFedIQ };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct MethodSpec {
    Method variant = Method::FedOGD;
    int64_t period = 1;                   // L
    std::vector<double> participation{};  // p_k; size 1 applies to every client
    std::optional<QuantizerSpec> quantizer;
    double eta = 0.01;

    double p(int client) const {
        if (participation.empty()) return 1.0;
        if (participation.size() == 1) return participation[0];
        return participation[static_cast<size_t>(client)];
    }

    // Enforces the per-variant constraints:
    //   FedOGD:  L = 1, p_k = 1, no quantizer
    //   OFedAvg: L = 1, no quantizer
    //   FedOMD:  p_k = 1, no quantizer
    //   OFedIQ:  anything valid
    // eta = 0 is accepted (frozen-model diagnostic runs); negative is not.
    void validate(int clients, int dim) const;
};

struct ClientState {
    ParameterVector theta;   // local parameter, theta_{k,t}
    ParameterVector anchor;  // latest broadcast global model w_{psi_L(t)}
    double participation = 1.0;
    double accumulated_loss = 0.0;
};

struct StepOutcome {
    double predicted = 0.0;  // made with the in-force global model
    double loss = 0.0;
};

// One local step per Eq.-style recursion: g = broadcast at period starts,
// g = theta otherwise; theta <- g - eta * grad(g). The returned prediction
// and loss are evaluated with the in-force global model (the anchor), before
// the update.
StepOutcome local_step(ClientState& client, const std::optional<ParameterVector>& broadcast,
                       const StreamSample& sample, const MethodSpec& method,
                       const ModelSpec& model, TimeIndex t);

// What a participating client sends at a transmission step. Exactly one of
// `quantized` / `raw` is populated depending on the method's quantizer.
struct LocalUpdate {
    std::optional<QuantizedMessage> quantized;
    ParameterVector raw;
    double nominal_bits = 0.0;
    uint32_t sender = 0;
    uint32_t step = 0;

    ParameterVector decode(const std::optional<QuantizerSpec>& spec) const;
};

// Draws Bernoulli(p_k) participation from the subsampling stream; when
// participating, returns (anchor - theta) / (eta * p_k) — the p-scaled sum of
// the period's gradients — quantized if the method carries a quantizer.
// Returns nullopt when the client sits out this boundary.
std::optional<LocalUpdate> build_message(const ClientState& client, int client_id,
                                         const MethodSpec& method, TimeIndex t,
                                         RngStream& subsample_rng, RngStream& quantize_rng);

struct ServerState {
    ParameterVector w;
    TimeIndex step;
};

// w <- w - (eta/K) * sum of decoded messages, summed in ascending sender
// order. The sum never needs to know which clients were sampled.
void global_step(ServerState& server, const std::vector<LocalUpdate>& messages,
                 const MethodSpec& method, int clients);

}  // namespace ofl

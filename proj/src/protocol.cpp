#include "ofl/protocol.hpp"

#include <algorithm>

namespace ofl {

const char* method_name(Method m) {
    switch (m) {
        case Method::FedOGD: return "fedogd";
        case Method::OFedAvg: return "ofedavg";
        case Method::FedOMD: return "fedomd";
        case Method::OFedIQ: return "ofediq";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "fedogd") return Method::FedOGD;
    if (name == "ofedavg") return Method::OFedAvg;
    if (name == "fedomd") return Method::FedOMD;
    if (name == "ofediq") return Method::OFedIQ;
    throw std::invalid_argument("unknown method '" + name + "'");
}

void MethodSpec::validate(int clients, int dim) const {
    if (period < 1) throw std::invalid_argument("method: period must be >= 1");
    if (eta < 0.0) throw std::invalid_argument("method: eta must be >= 0");
    if (!participation.empty() && participation.size() != 1 &&
        static_cast<int>(participation.size()) != clients)
        throw std::invalid_argument("method: participation must have 1 or K entries");
    for (int k = 0; k < clients; ++k) {
        const double pk = p(k);
        if (!(pk > 0.0) || pk > 1.0)
            throw std::invalid_argument("method: participation must lie in (0, 1]");
    }
    if (quantizer) {
        QuantizerSpec q = *quantizer;
        q.dim = dim;
        q.validate();
    }

    auto require_full_participation = [&](const char* who) {
        for (int k = 0; k < clients; ++k)
            if (p(k) != 1.0)
                throw std::invalid_argument(std::string(who) + " requires p_k = 1");
    };
    switch (variant) {
        case Method::FedOGD:
            if (period != 1) throw std::invalid_argument("fedogd requires L = 1");
            require_full_participation("fedogd");
            if (quantizer) throw std::invalid_argument("fedogd does not quantize");
            break;
        case Method::OFedAvg:
            if (period != 1) throw std::invalid_argument("ofedavg requires L = 1");
            if (quantizer) throw std::invalid_argument("ofedavg does not quantize");
            break;
        case Method::FedOMD:
            require_full_participation("fedomd");
            if (quantizer) throw std::invalid_argument("fedomd does not quantize");
            break;
        case Method::OFedIQ:
            break;
    }
}

StepOutcome local_step(ClientState& client, const std::optional<ParameterVector>& broadcast,
                       const StreamSample& sample, const MethodSpec& method,
                       const ModelSpec& model, TimeIndex t) {
    t.period = method.period;
    const bool start = t.period_start();
    if (start && !broadcast)
        throw std::invalid_argument("local_step: missing broadcast at a period boundary");
    if (!start && broadcast)
        throw std::invalid_argument("local_step: unexpected broadcast off-boundary");

    if (start) client.anchor = *broadcast;
    const ParameterVector& g = start ? client.anchor : client.theta;

    StepOutcome out;
    if (start) {
        // g is the in-force model: one fused pass serves metrics and update.
        Evaluation ev = evaluate(model, g, sample);
        out.predicted = ev.predicted;
        out.loss = ev.loss;
        client.theta = g;
        axpy(-method.eta, ev.gradient, client.theta);
    } else {
        // Metrics come from the frozen broadcast model, the OGD update from
        // the local recursion.
        Evaluation in_force = evaluate(model, client.anchor, sample);
        out.predicted = in_force.predicted;
        out.loss = in_force.loss;
        ParameterVector grad = gradient(model, g, sample);
        ParameterVector next = g;
        axpy(-method.eta, grad, next);
        client.theta = std::move(next);
    }
    ensure_finite(client.theta, "local_step theta");
    client.accumulated_loss += out.loss;
    return out;
}

ParameterVector LocalUpdate::decode(const std::optional<QuantizerSpec>& spec) const {
    if (quantized) {
        if (!spec) throw std::invalid_argument("decode: quantized message without a spec");
        return dequantize(*quantized, *spec);
    }
    return raw;
}

std::optional<LocalUpdate> build_message(const ClientState& client, int client_id,
                                         const MethodSpec& method, TimeIndex t,
                                         RngStream& subsample_rng, RngStream& quantize_rng) {
    t.period = method.period;
    if (!t.transmission())
        throw std::invalid_argument("build_message: called off a transmission step");

    const double pk = client.participation;
    if (!subsample_rng.bernoulli(pk)) return std::nullopt;

    // (anchor - theta)/(eta p_k) telescopes to the p-scaled gradient sum of
    // the period just ended. With eta = 0 the difference is exactly zero and
    // stays unscaled.
    ParameterVector u = client.anchor;
    axpy(-1.0, client.theta, u);
    if (method.eta > 0.0) scale(u, 1.0 / (method.eta * pk));

    LocalUpdate upd;
    upd.sender = static_cast<uint32_t>(client_id);
    upd.step = static_cast<uint32_t>(t.t);
    if (method.quantizer) {
        QuantizerSpec q = *method.quantizer;
        q.dim = static_cast<int>(u.size());
        upd.quantized = quantize(q, u, quantize_rng, upd.sender, upd.step);
        upd.nominal_bits = q.nominal_bits();
    } else {
        upd.raw = std::move(u);
        upd.nominal_bits = 32.0 * static_cast<double>(client.theta.size());
    }
    return upd;
}

void global_step(ServerState& server, const std::vector<LocalUpdate>& messages,
                 const MethodSpec& method, int clients) {
    server.step.period = method.period;
    if (!server.step.transmission())
        throw std::invalid_argument("global_step: called off a transmission step");

    std::vector<const LocalUpdate*> ordered;
    ordered.reserve(messages.size());
    for (const LocalUpdate& m : messages) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(),
              [](const LocalUpdate* a, const LocalUpdate* b) { return a->sender < b->sender; });

    std::optional<QuantizerSpec> qspec = method.quantizer;
    if (qspec) qspec->dim = static_cast<int>(server.w.size());

    ParameterVector sum(server.w.size(), 0.0);
    for (const LocalUpdate* m : ordered) {
        const ParameterVector v = m->decode(qspec);
        if (v.size() != server.w.size())
            throw std::invalid_argument("global_step: message dimension mismatch");
        axpy(1.0, v, sum);
    }
    axpy(-method.eta / static_cast<double>(clients), sum, server.w);
    ensure_finite(server.w, "global_step w");
}

}  // namespace ofl

#include "ofl/model.hpp"

#include <algorithm>
#include <cmath>

namespace ofl {

namespace {

int output_dim(const ModelSpec& spec) { return spec.classification() ? spec.classes : 1; }

void check_input(const ModelSpec& spec, const ParameterVector& w, const std::vector<double>& x) {
    if (static_cast<int>(w.size()) != spec.param_count())
        throw std::invalid_argument("model: parameter dimension mismatch");
    if (static_cast<int>(x.size()) != spec.input_dim)
        throw std::invalid_argument("model: feature dimension mismatch");
}

int class_label(const ModelSpec& spec, double label) {
    const int y = static_cast<int>(label);
    if (static_cast<double>(y) != label || y < 0 || y >= spec.classes)
        throw std::invalid_argument("model: classification label outside [0, C)");
    return y;
}

// logits -> probabilities, in place; returns log(sum exp(logit - max)) + max.
double softmax_inplace(std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& z : v) {
        z = std::exp(z - mx);
        sum += z;
    }
    for (double& z : v) z /= sum;
    return std::log(sum) + mx;
}

}  // namespace

int ModelSpec::param_count() const {
    const int out = classification() ? classes : 1;
    const int b = bias ? 1 : 0;
    switch (family) {
        case ModelFamily::Linear:
            return input_dim + b;
        case ModelFamily::Softmax:
            return classes * input_dim + b * classes;
        case ModelFamily::MlpRegression:
        case ModelFamily::MlpClassifier:
            return hidden * input_dim + b * hidden + out * hidden + b * out;
    }
    throw std::logic_error("model: unknown family");
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw std::invalid_argument("model: input_dim must be >= 1");
    if (classification() && classes < 2)
        throw std::invalid_argument("model: classifier needs classes >= 2");
    if (mlp() && hidden < 1) throw std::invalid_argument("model: MLP needs hidden >= 1");
    if (ridge < 0.0) throw std::invalid_argument("model: ridge must be >= 0");
}

Evaluation evaluate(const ModelSpec& spec, const ParameterVector& w, const StreamSample& sample) {
    check_input(spec, w, sample.features);
    const std::vector<double>& x = sample.features;
    const int N = spec.input_dim;

    Evaluation ev;
    ev.gradient.assign(w.size(), 0.0);

    switch (spec.family) {
        case ModelFamily::Linear: {
            double z = spec.bias ? w[N] : 0.0;
            for (int i = 0; i < N; ++i) z += w[i] * x[i];
            const double r = z - sample.label;
            ev.predicted = z;
            ev.loss = r * r;
            const double dz = 2.0 * r;
            for (int i = 0; i < N; ++i) ev.gradient[i] = dz * x[i];
            if (spec.bias) ev.gradient[N] = dz;
            break;
        }
        case ModelFamily::Softmax: {
            const int C = spec.classes;
            const int y = class_label(spec, sample.label);
            std::vector<double> p(C);
            for (int c = 0; c < C; ++c) {
                double z = spec.bias ? w[C * N + c] : 0.0;
                for (int i = 0; i < N; ++i) z += w[c * N + i] * x[i];
                p[c] = z;
            }
            const double logit_y = p[y];
            const double lse = softmax_inplace(p);
            ev.loss = lse - logit_y;  // -log softmax(y)
            ev.predicted = static_cast<double>(
                std::max_element(p.begin(), p.end()) - p.begin());
            for (int c = 0; c < C; ++c) {
                const double d = p[c] - (c == y ? 1.0 : 0.0);
                for (int i = 0; i < N; ++i) ev.gradient[c * N + i] = d * x[i];
                if (spec.bias) ev.gradient[C * N + c] = d;
            }
            break;
        }
        case ModelFamily::MlpRegression:
        case ModelFamily::MlpClassifier: {
            const int H = spec.hidden;
            const int out = output_dim(spec);
            const int w1 = 0;                                  // H x N
            const int b1 = H * N;                              // H (if bias)
            const int w2 = b1 + (spec.bias ? H : 0);           // out x H
            const int b2 = w2 + out * H;                       // out (if bias)

            std::vector<double> act(H), hid(H);
            for (int j = 0; j < H; ++j) {
                double z = spec.bias ? w[b1 + j] : 0.0;
                for (int i = 0; i < N; ++i) z += w[w1 + j * N + i] * x[i];
                act[j] = z;
                hid[j] = z > 0.0 ? z : 0.0;  // ReLU, derivative 0 at the kink
            }
            std::vector<double> logits(out);
            for (int c = 0; c < out; ++c) {
                double z = spec.bias ? w[b2 + c] : 0.0;
                for (int j = 0; j < H; ++j) z += w[w2 + c * H + j] * hid[j];
                logits[c] = z;
            }

            std::vector<double> dlogits(out);
            if (spec.family == ModelFamily::MlpRegression) {
                const double r = logits[0] - sample.label;
                ev.predicted = logits[0];
                ev.loss = r * r;
                dlogits[0] = 2.0 * r;
            } else {
                const int y = class_label(spec, sample.label);
                const double logit_y = logits[y];
                std::vector<double> p = logits;
                const double lse = softmax_inplace(p);
                ev.loss = lse - logit_y;
                ev.predicted = static_cast<double>(
                    std::max_element(p.begin(), p.end()) - p.begin());
                for (int c = 0; c < out; ++c) dlogits[c] = p[c] - (c == y ? 1.0 : 0.0);
            }

            std::vector<double> dhid(H, 0.0);
            for (int c = 0; c < out; ++c) {
                for (int j = 0; j < H; ++j) {
                    ev.gradient[w2 + c * H + j] = dlogits[c] * hid[j];
                    dhid[j] += dlogits[c] * w[w2 + c * H + j];
                }
                if (spec.bias) ev.gradient[b2 + c] = dlogits[c];
            }
            for (int j = 0; j < H; ++j) {
                const double da = act[j] > 0.0 ? dhid[j] : 0.0;
                for (int i = 0; i < N; ++i) ev.gradient[w1 + j * N + i] = da * x[i];
                if (spec.bias) ev.gradient[b1 + j] = da;
            }
            break;
        }
    }

    if (spec.ridge > 0.0) {
        ev.loss += spec.ridge * squared_norm(w);
        axpy(2.0 * spec.ridge, w, ev.gradient);
    }
    return ev;
}

Prediction predict(const ModelSpec& spec, const ParameterVector& w, const std::vector<double>& x) {
    check_input(spec, w, x);
    Prediction pred;
    if (!spec.classification()) {
        StreamSample probe{x, 0.0};
        pred.value = evaluate(spec, w, probe).predicted;
        return pred;
    }
    const int C = spec.classes;
    const int N = spec.input_dim;
    std::vector<double> logits(C);
    if (spec.family == ModelFamily::Softmax) {
        for (int c = 0; c < C; ++c) {
            double z = spec.bias ? w[C * N + c] : 0.0;
            for (int i = 0; i < N; ++i) z += w[c * N + i] * x[i];
            logits[c] = z;
        }
    } else {
        const int H = spec.hidden;
        const int b1 = H * N;
        const int w2 = b1 + (spec.bias ? H : 0);
        const int b2 = w2 + C * H;
        std::vector<double> hid(H);
        for (int j = 0; j < H; ++j) {
            double z = spec.bias ? w[b1 + j] : 0.0;
            for (int i = 0; i < N; ++i) z += w[j * N + i] * x[i];
            hid[j] = z > 0.0 ? z : 0.0;
        }
        for (int c = 0; c < C; ++c) {
            double z = spec.bias ? w[b2 + c] : 0.0;
            for (int j = 0; j < H; ++j) z += w[w2 + c * H + j] * hid[j];
            logits[c] = z;
        }
    }
    softmax_inplace(logits);
    pred.scores = logits;
    pred.value =
        static_cast<double>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    return pred;
}

double loss(const ModelSpec& spec, const ParameterVector& w, const StreamSample& sample) {
    return evaluate(spec, w, sample).loss;
}

ParameterVector gradient(const ModelSpec& spec, const ParameterVector& w,
                         const StreamSample& sample) {
    return evaluate(spec, w, sample).gradient;
}

ParameterVector init_params(const ModelSpec& spec, uint64_t seed) {
    spec.validate();
    RngStream rng(seed, StreamPurpose::ModelInit);
    ParameterVector w(spec.param_count());
    for (double& v : w) v = rng.uniform(-0.05, 0.05);
    return w;
}

std::optional<double> smoothness_estimate(const ModelSpec& spec, double max_feature_sq_norm) {
    if (spec.smoothness) return spec.smoothness;
    if (spec.family == ModelFamily::Linear) {
        const double b = spec.bias ? 1.0 : 0.0;
        return 2.0 * (max_feature_sq_norm + b) + 2.0 * spec.ridge;
    }
    return std::nullopt;
}

}  // namespace ofl

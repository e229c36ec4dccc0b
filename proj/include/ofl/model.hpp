// Prediction functions, loss functions, and exact analytic gradients for the
// model families used in runs.
#pragma once

#include <optional>
#include <vector>

#include "ofl/core.hpp"

namespace ofl {

enum class ModelFamily {
    Linear,         // linear regression, squared loss
    Softmax,        // logistic / softmax classifier, cross-entropy
    MlpRegression,  // one hidden ReLU layer -> scalar output, squared loss
    MlpClassifier,  // one hidden ReLU layer -> softmax, cross-entropy
};

struct ModelSpec {
    ModelFamily family = ModelFamily::Linear;
    int input_dim = 1;  // N
    int hidden = 0;     // H, MLP families only
    int classes = 0;    // C, classifier families only
    bool bias = true;
    double ridge = 0.0;                 // lambda: adds lambda*||w||^2 to the loss
    std::optional<double> smoothness;   // user-supplied beta for learning-rate caps

    bool classification() const {
        return family == ModelFamily::Softmax || family == ModelFamily::MlpClassifier;
    }
    bool mlp() const {
        return family == ModelFamily::MlpRegression || family == ModelFamily::MlpClassifier;
    }
    // D: weights + biases. Linear: N(+1). Softmax: C*N(+C).
    // MLP: H*N(+H) + out*H(+out) with out = 1 or C.
    int param_count() const;
    void validate() const;
};

struct Prediction {
    // Regression output, or argmax class index for classifiers.
    double value = 0.0;
    // Class probabilities (classifiers only).
    std::vector<double> scores;
};

// Fused forward + backward pass; the simulator's inner loop uses this.
struct Evaluation {
    double loss = 0.0;
    double predicted = 0.0;  // same convention as Prediction::value
    ParameterVector gradient;
};

Prediction predict(const ModelSpec& spec, const ParameterVector& w, const std::vector<double>& x);
double loss(const ModelSpec& spec, const ParameterVector& w, const StreamSample& sample);
ParameterVector gradient(const ModelSpec& spec, const ParameterVector& w,
                         const StreamSample& sample);
Evaluation evaluate(const ModelSpec& spec, const ParameterVector& w, const StreamSample& sample);

// Seeded init: uniform(-0.05, 0.05) per coordinate.
ParameterVector init_params(const ModelSpec& spec, uint64_t seed);

// Smoothness constant for learning-rate caps: 2 * max ||x||^2 for linear
// least squares (plus the ridge term), otherwise the user-supplied value.
std::optional<double> smoothness_estimate(const ModelSpec& spec, double max_feature_sq_norm);

}  // namespace ofl

#include "ofl/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace ofl {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
}

DatasetSpec parse_dataset(const json& j) {
    reject_unknown(j,
                   {"type", "path", "label_column", "feature_columns", "standardize", "task",
                    "classes", "features", "heterogeneity", "noise"},
                   "dataset");
    DatasetSpec d;
    const std::string type = j.value("type", "synthetic-linear");
    if (type == "csv") {
        d.csv_path = j.at("path").get<std::string>();
        d.label_column = j.at("label_column").get<std::string>();
        if (j.contains("feature_columns"))
            d.feature_columns = j["feature_columns"].get<std::vector<std::string>>();
        d.standardize_features = j.value("standardize", true);
    } else if (type == "synthetic-linear") {
        d.synthetic = SyntheticKind::LinearRegression;
    } else if (type == "synthetic-classes") {
        d.synthetic = SyntheticKind::SeparableClasses;
    } else {
        throw std::runtime_error("config: unknown dataset type '" + type + "'");
    }
    const std::string task = j.value("task", type == "synthetic-classes" ? "classification"
                                                                         : "regression");
    if (task == "classification") {
        d.classification = true;
        d.classes = j.at("classes").get<int>();
    } else if (task != "regression") {
        throw std::runtime_error("config: task must be classification or regression");
    }
    d.feature_dim = j.value("features", 10);
    d.heterogeneity = j.value("heterogeneity", 0.0);
    d.noise = j.value("noise", 0.0);
    return d;
}

ModelSpec parse_model(const json& j, const DatasetSpec& dataset) {
    reject_unknown(j, {"family", "hidden", "bias", "ridge", "beta"}, "model");
    ModelSpec m;
    const std::string family = j.value("family", dataset.classification ? "softmax" : "linear");
    if (family == "linear")
        m.family = ModelFamily::Linear;
    else if (family == "softmax")
        m.family = ModelFamily::Softmax;
    else if (family == "mlp-regression")
        m.family = ModelFamily::MlpRegression;
    else if (family == "mlp-classifier")
        m.family = ModelFamily::MlpClassifier;
    else
        throw std::runtime_error("config: unknown model family '" + family + "'");
    m.hidden = j.value("hidden", 0);
    m.bias = j.value("bias", true);
    m.ridge = j.value("ridge", 0.0);
    if (j.contains("beta")) m.smoothness = j["beta"].get<double>();
    m.classes = dataset.classes;
    if (dataset.synthetic_source()) m.input_dim = dataset.feature_dim;
    if (m.classification() != dataset.classification)
        throw std::runtime_error("config: model family does not match the dataset task");
    return m;
}

MethodSpec parse_method(const json& j) {
    reject_unknown(j, {"variant", "eta", "period", "participation", "quantizer"}, "method");
    MethodSpec m;
    m.variant = method_from_name(j.at("variant").get<std::string>());
    m.eta = j.value("eta", 0.01);
    m.period = j.value("period", 1);
    if (j.contains("participation")) {
        if (j["participation"].is_array())
            m.participation = j["participation"].get<std::vector<double>>();
        else
            m.participation = {j["participation"].get<double>()};
    }
    if (j.contains("quantizer") && !j["quantizer"].is_null()) {
        const json& q = j["quantizer"];
        reject_unknown(q, {"s", "b"}, "method.quantizer");
        QuantizerSpec spec;
        spec.levels = q.at("s").get<int>();
        spec.blocks = q.at("b").get<int>();
        spec.dim = std::max(spec.blocks, 1);  // real dim is bound at run time
        m.quantizer = spec;
    }
    return m;
}

}  // namespace

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config: invalid JSON in " + path + ": " + e.what());
    }
}

RunConfig parse_run_config(const json& j, bool with_method) {
    std::set<std::string> known = {"seed",          "T",
                                   "K",             "threads",
                                   "metric_cadence", "out_dir",
                                   "run_name",      "record_trajectory",
                                   "record_predictions", "dataset",
                                   "model"};
    known.insert(with_method ? "method" : "methods");
    if (!with_method) known.insert("repeats");
    reject_unknown(j, known, "config root");

    RunConfig cfg;
    cfg.dataset = parse_dataset(j.at("dataset"));
    cfg.model = parse_model(j.value("model", json::object()), cfg.dataset);
    if (with_method) cfg.method = parse_method(j.at("method"));
    cfg.seed = j.value("seed", 1);
    cfg.T = j.at("T").get<int64_t>();
    cfg.K = j.at("K").get<int>();
    cfg.threads = j.value("threads", 0);
    cfg.metric_cadence = j.value("metric_cadence", 0);
    cfg.out_dir = j.value("out_dir", "");
    cfg.run_name = j.value("run_name", "run");
    cfg.record_trajectory = j.value("record_trajectory", false);
    cfg.record_predictions = j.value("record_predictions", false);
    return cfg;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(load_json_file(path), true);
}

CompareConfig load_compare_config(const std::string& path) {
    const json j = load_json_file(path);
    CompareConfig cmp;
    cmp.base = parse_run_config(j, false);
    if (!j.contains("methods") || !j["methods"].is_array() || j["methods"].empty())
        throw std::runtime_error("config: compare file needs a nonempty 'methods' array");
    for (const json& m : j["methods"]) cmp.methods.push_back(parse_method(m));
    cmp.repeats = j.value("repeats", 10);
    return cmp;
}

MethodSpec parse_method_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: invalid method JSON: ") + e.what());
    }
    return parse_method(j);
}

}  // namespace ofl

#include "ofl/sim.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

namespace ofl {

int64_t RunConfig::effective_cadence() const {
    if (metric_cadence > 0) return metric_cadence;
    if (T <= 10000) return 1;
    return (T + 9999) / 10000;
}

double accuracy_metric(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("accuracy_metric: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("accuracy_metric: empty input");
    double err = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i)
        err += std::min(1.0, std::abs(predictions[i] - labels[i]));
    return 1.0 - err / static_cast<double>(predictions.size());
}

double mse_metric(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("mse_metric: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("mse_metric: empty input");
    double err = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        err += d * d;
    }
    return err / static_cast<double>(predictions.size());
}

namespace {

struct StepBuffers {
    std::vector<double> preds;
    std::vector<double> labels;
    std::vector<double> losses;
};

}  // namespace

RunResult run(const RunConfig& cfg, const ClientStreams& streams) {
    cfg.model.validate();
    cfg.dataset.validate();
    if (streams.clients() != cfg.K || streams.steps() != cfg.T)
        throw std::invalid_argument("run: stream shape does not match config");
    if (streams.feature_dim() != cfg.model.input_dim)
        throw std::invalid_argument("run: model input_dim does not match the dataset");
    const int D = cfg.model.param_count();
    cfg.method.validate(cfg.K, D);

    const int K = cfg.K;
    const int64_t T = cfg.T;
    const int64_t L = cfg.method.period;
    const bool classify = cfg.model.classification();
    const int64_t cadence = cfg.effective_cadence();

#ifdef _OPENMP
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#else
    const int threads = 1;
#endif
    const bool serial = threads == 1;

    RunResult res;
    ParameterVector w = init_params(cfg.model, cfg.seed);
    std::vector<ClientState> clients(K);
    for (int k = 0; k < K; ++k) {
        clients[k].theta = w;
        clients[k].anchor = w;
        clients[k].participation = cfg.method.p(k);
    }

    StepBuffers buf;
    buf.preds.resize(K);
    buf.labels.resize(K);
    buf.losses.resize(K);
    std::vector<std::optional<LocalUpdate>> pending(K);

    double err_acc = 0.0;  // running sum of the per-sample metric terms
    int64_t participants_last = 0;
    if (cfg.record_trajectory) res.trajectory.reserve(T);
    if (cfg.record_predictions) {
        res.predictions.reserve(static_cast<size_t>(T) * K);
        res.labels.reserve(static_cast<size_t>(T) * K);
    }

    for (int64_t t = 1; t <= T; ++t) {
        const TimeIndex now{t, L};
        const bool start = now.period_start();
        const std::optional<ParameterVector> broadcast =
            start ? std::optional<ParameterVector>(w) : std::nullopt;
        if (cfg.record_trajectory) res.trajectory.push_back(w);

        auto step_client = [&](int k) {
            const StreamSample& sample = streams.at(k, t);
            const StepOutcome out =
                local_step(clients[k], broadcast, sample, cfg.method, cfg.model, now);
            buf.preds[k] = out.predicted;
            buf.labels[k] = sample.label;
            buf.losses[k] = out.loss;
        };
        if (serial) {
            for (int k = 0; k < K; ++k) step_client(k);
        } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
            for (int k = 0; k < K; ++k) step_client(k);
        }

        // Ordered accumulation keeps results independent of thread count.
        for (int k = 0; k < K; ++k) {
            res.cum_loss += buf.losses[k];
            err_acc += classify ? std::min(1.0, std::abs(buf.preds[k] - buf.labels[k]))
                                : (buf.preds[k] - buf.labels[k]) * (buf.preds[k] - buf.labels[k]);
        }
        if (cfg.record_predictions) {
            res.predictions.insert(res.predictions.end(), buf.preds.begin(), buf.preds.end());
            res.labels.insert(res.labels.end(), buf.labels.begin(), buf.labels.end());
        }

        if (now.transmission()) {
            auto message_client = [&](int k) {
                RngStream sub(cfg.seed, StreamPurpose::Subsample, static_cast<uint64_t>(k),
                              static_cast<uint64_t>(t));
                RngStream qnt(cfg.seed, StreamPurpose::Quantize, static_cast<uint64_t>(k),
                              static_cast<uint64_t>(t));
                pending[k] = build_message(clients[k], k, cfg.method, now, sub, qnt);
            };
            if (serial) {
                for (int k = 0; k < K; ++k) message_client(k);
            } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
                for (int k = 0; k < K; ++k) message_client(k);
            }

            std::vector<LocalUpdate> messages;
            messages.reserve(K);
            double bits_per_message = 0.0;
            for (int k = 0; k < K; ++k) {
                if (pending[k]) {
                    bits_per_message = pending[k]->nominal_bits;
                    messages.push_back(std::move(*pending[k]));
                    pending[k].reset();
                }
            }

            ServerState server{std::move(w), now};
            global_step(server, messages, cfg.method, K);
            w = std::move(server.w);

            participants_last = static_cast<int64_t>(messages.size());
            res.transmissions += participants_last;
            res.cum_bits += bits_per_message * static_cast<double>(participants_last);
            res.boundary_log.push_back({t, participants_last, bits_per_message});
        }

        if (t % cadence == 0 || t == T) {
            const double denom = static_cast<double>(t) * static_cast<double>(K);
            const double metric = classify ? 1.0 - err_acc / denom : err_acc / denom;
            res.metrics.push_back({t, res.cum_loss, metric, res.cum_bits, participants_last});
        }
    }

    res.final_w = std::move(w);
    res.final_metric = res.metrics.back().metric;
    return res;
}

RunResult run(const RunConfig& cfg) {
    SampleTable meta;
    const ClientStreams streams = make_streams(cfg.dataset, cfg.K, cfg.T, cfg.seed, &meta);
    RunConfig bound = cfg;
    // CSV feature width is only known after loading.
    if (!cfg.dataset.synthetic_source()) bound.model.input_dim = streams.feature_dim();
    RunResult res = run(bound, streams);
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_metrics_csv(cfg.out_dir + "/" + cfg.run_name + "_metrics.csv", res);
        write_metadata_json(cfg.out_dir + "/" + cfg.run_name + "_meta.json", bound, meta);
    }
    return res;
}

void write_metrics_csv(const std::string& path, const RunResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,cum_loss,metric,cum_bits,participants\n";
    out << std::setprecision(17);
    for (const MetricsRecord& r : result.metrics)
        out << r.t << ',' << r.cum_loss << ',' << r.metric << ',' << r.cum_bits << ','
            << r.participants << '\n';
}

namespace {

nlohmann::json dataset_json(const DatasetSpec& d) {
    nlohmann::json j;
    if (d.synthetic_source()) {
        j["type"] = d.synthetic == SyntheticKind::LinearRegression ? "synthetic-linear"
                                                                   : "synthetic-classes";
        j["features"] = d.feature_dim;
        j["heterogeneity"] = d.heterogeneity;
        j["noise"] = d.noise;
    } else {
        j["type"] = "csv";
        j["path"] = d.csv_path;
        j["label_column"] = d.label_column;
        j["feature_columns"] = d.feature_columns;
        j["standardize"] = d.standardize_features;
    }
    j["task"] = d.classification ? "classification" : "regression";
    if (d.classification) j["classes"] = d.classes;
    return j;
}

const char* family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::Linear: return "linear";
        case ModelFamily::Softmax: return "softmax";
        case ModelFamily::MlpRegression: return "mlp-regression";
        case ModelFamily::MlpClassifier: return "mlp-classifier";
    }
    return "?";
}

}  // namespace

void write_metadata_json(const std::string& path, const RunConfig& cfg,
                         const SampleTable& meta) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["T"] = cfg.T;
    j["K"] = cfg.K;
    j["threads"] = cfg.threads;
    j["metric_cadence"] = cfg.effective_cadence();
    j["dataset"] = dataset_json(cfg.dataset);
    j["model"] = {{"family", family_name(cfg.model.family)},
                  {"input_dim", cfg.model.input_dim},
                  {"hidden", cfg.model.hidden},
                  {"classes", cfg.model.classes},
                  {"bias", cfg.model.bias},
                  {"ridge", cfg.model.ridge},
                  {"param_count", cfg.model.param_count()}};
    nlohmann::json m;
    m["variant"] = method_name(cfg.method.variant);
    m["period"] = cfg.method.period;
    m["eta"] = cfg.method.eta;
    if (cfg.method.participation.size() == 1)
        m["participation"] = cfg.method.participation[0];
    else if (!cfg.method.participation.empty())
        m["participation"] = cfg.method.participation;
    else
        m["participation"] = 1.0;
    if (cfg.method.quantizer)
        m["quantizer"] = {{"s", cfg.method.quantizer->levels}, {"b", cfg.method.quantizer->blocks}};
    j["method"] = m;
    if (!cfg.dataset.synthetic_source()) {
        j["normalization"] = {{"label_min", meta.label_min},
                              {"label_max", meta.label_max},
                              {"dropped_rows", meta.dropped_rows}};
        if (!meta.feature_mean.empty()) {
            j["normalization"]["feature_mean"] = meta.feature_mean;
            j["normalization"]["feature_std"] = meta.feature_std;
        }
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

CompareResult compare(const RunConfig& base, const std::vector<MethodSpec>& methods,
                      int repeats) {
    if (methods.empty()) throw std::invalid_argument("compare: no methods given");
    if (repeats < 1) throw std::invalid_argument("compare: repeats must be >= 1");

    CompareResult cmp;
    cmp.rows.resize(methods.size());
    cmp.metric_curves.assign(methods.size(), {});
    int param_count = base.model.param_count();

    for (int r = 0; r < repeats; ++r) {
        const uint64_t seed = base.seed + static_cast<uint64_t>(r);
        const ClientStreams streams = make_streams(base.dataset, base.K, base.T, seed);
        for (size_t m = 0; m < methods.size(); ++m) {
            RunConfig cfg = base;
            if (!base.dataset.synthetic_source()) cfg.model.input_dim = streams.feature_dim();
            cfg.seed = seed;
            cfg.method = methods[m];
            cfg.out_dir.clear();
            param_count = cfg.model.param_count();
            const RunResult result = run(cfg, streams);
            if (r == 0 && m == 0) {
                cmp.grid.reserve(result.metrics.size());
                for (const MetricsRecord& rec : result.metrics) cmp.grid.push_back(rec.t);
            }
            if (cmp.metric_curves[m].empty()) cmp.metric_curves[m].assign(cmp.grid.size(), 0.0);
            for (size_t i = 0; i < result.metrics.size(); ++i)
                cmp.metric_curves[m][i] += result.metrics[i].metric / repeats;
            cmp.rows[m].final_metric += result.final_metric / repeats;
            cmp.rows[m].cum_bits += result.cum_bits / repeats;
        }
    }

    const int D = param_count;
    for (size_t m = 0; m < methods.size(); ++m) {
        const MethodSpec& ms = methods[m];
        cmp.rows[m].method = method_name(ms.variant);
        BoundParams bp;
        bp.L = ms.period;
        bp.p = ms.participation.empty() ? 1.0 : ms.participation[0];
        bp.s = ms.quantizer ? ms.quantizer->levels : 0;
        bp.b = ms.quantizer ? ms.quantizer->blocks : 1;
        bp.D = D;
        bp.K = base.K;
        cmp.rows[m].ccr_percent = comm_cost(ms.variant, bp).ccr_percent;
    }

    if (!base.out_dir.empty()) {
        std::filesystem::create_directories(base.out_dir);
        std::ofstream out(base.out_dir + "/" + base.run_name + "_compare.csv");
        if (!out) throw std::runtime_error("compare: cannot write merged csv");
        out << "t";
        for (size_t m = 0; m < methods.size(); ++m) out << ',' << method_name(methods[m].variant) << m;
        out << '\n' << std::setprecision(17);
        for (size_t i = 0; i < cmp.grid.size(); ++i) {
            out << cmp.grid[i];
            for (size_t m = 0; m < methods.size(); ++m) out << ',' << cmp.metric_curves[m][i];
            out << '\n';
        }
    }
    return cmp;
}

}  // namespace ofl

// The orchestrator: runs T steps x K clients under a MethodSpec, collects
// prequential metrics and bit accounting, and writes results.
#pragma once

#include <string>
#include <vector>

#include "ofl/analysis.hpp"
#include "ofl/core.hpp"
#include "ofl/data.hpp"
#include "ofl/model.hpp"
#include "ofl/protocol.hpp"

namespace ofl {

struct RunConfig {
    DatasetSpec dataset;
    ModelSpec model;
    MethodSpec method;
    uint64_t seed = 1;
    int64_t T = 100;
    int K = 1;
    // 0 = auto: every step for T <= 10^4, else every ceil(T/10^4) steps.
    int64_t metric_cadence = 0;
    // 1 = serial reference path, 0 = hardware default, n = that many threads.
    int threads = 0;
    bool record_trajectory = false;
    bool record_predictions = false;
    std::string out_dir;  // empty: no files written
    std::string run_name = "run";

    int64_t effective_cadence() const;
};

struct MetricsRecord {
    int64_t t = 0;
    double cum_loss = 0.0;
    double metric = 0.0;  // Accuracy(t) for classification, MSE(t) otherwise
    double cum_bits = 0.0;
    int64_t participants = 0;  // at the most recent transmission step
};

struct BoundaryLog {
    int64_t t = 0;
    int64_t participants = 0;
    double bits_per_message = 0.0;
};

struct RunResult {
    std::vector<MetricsRecord> metrics;
    ParameterVector final_w;
    double cum_loss = 0.0;
    double cum_bits = 0.0;
    double final_metric = 0.0;
    int64_t transmissions = 0;
    std::vector<BoundaryLog> boundary_log;
    // In-force model per step (record_trajectory).
    std::vector<ParameterVector> trajectory;
    // Step-major prediction/label pairs (record_predictions).
    std::vector<double> predictions;
    std::vector<double> labels;
};

// 1 - (1/n) sum min{1, |pred - label|}; for argmax class predictions this is
// one minus the 0/1 error rate.
double accuracy_metric(const std::vector<double>& predictions, const std::vector<double>& labels);
// (1/n) sum (pred - label)^2.
double mse_metric(const std::vector<double>& predictions, const std::vector<double>& labels);

RunResult run(const RunConfig& config, const ClientStreams& streams);
RunResult run(const RunConfig& config);  // builds streams from config.dataset

void write_metrics_csv(const std::string& path, const RunResult& result);
void write_metadata_json(const std::string& path, const RunConfig& config,
                         const SampleTable& table_meta);

struct CompareRow {
    std::string method;
    double final_metric = 0.0;     // mean over repeats
    double cum_bits = 0.0;         // mean over repeats
    double ccr_percent = 0.0;      // expected, from comm_cost
    double regret_value = 0.0;     // mean over repeats (when computed)
};

struct CompareResult {
    std::vector<CompareRow> rows;
    std::vector<int64_t> grid;                      // recorded steps
    std::vector<std::vector<double>> metric_curves;  // [method][grid idx], seed-averaged
};

// Runs every method on the same per-seed streams for seeds
// base.seed .. base.seed + repeats - 1 and averages the metric curves.
// Writes <out_dir>/<run_name>_compare.csv when base.out_dir is set.
CompareResult compare(const RunConfig& base, const std::vector<MethodSpec>& methods,
                      int repeats = 10);

}  // namespace ofl

// Streaming data sources: CSV ingestion with normalization, synthetic
// generators with a controllable heterogeneity knob, and random partitioning
// of the pooled samples into per-client streams.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ofl/core.hpp"

namespace ofl {

enum class SyntheticKind {
    LinearRegression,  // y = 0.5 + <x, w_true + delta_k>, x on the unit sphere
    SeparableClasses,  // class centers on the sphere + per-client shift
};

struct DatasetSpec {
    // Source: csv_path when nonempty, otherwise a synthetic generator.
    std::string csv_path;
    SyntheticKind synthetic = SyntheticKind::LinearRegression;

    bool classification = false;
    int classes = 0;

    // CSV options.
    std::string label_column;
    std::vector<std::string> feature_columns;  // empty: every other column
    bool standardize_features = true;

    // Synthetic options.
    int feature_dim = 10;
    double heterogeneity = 0.0;  // per-client label-shift magnitude, >= 0
    double noise = 0.0;          // label noise std dev (regression only)

    bool synthetic_source() const { return csv_path.empty(); }
    void validate() const;
};

// Pooled samples plus the normalization metadata recorded for run output.
struct SampleTable {
    int feature_dim = 0;
    std::vector<StreamSample> rows;
    double label_min = 0.0;
    double label_max = 1.0;
    std::vector<double> feature_mean;  // empty when not standardized
    std::vector<double> feature_std;
    int64_t dropped_rows = 0;
};

// K client streams of T steps each; client k sees sample (k, t) exactly at
// step t. Immutable once built.
class ClientStreams {
public:
    ClientStreams(int clients, int64_t steps, int feature_dim)
        : clients_(clients), steps_(steps), feature_dim_(feature_dim),
          samples_(static_cast<size_t>(clients) * steps) {}

    int clients() const { return clients_; }
    int64_t steps() const { return steps_; }
    int feature_dim() const { return feature_dim_; }

    // t is 1-based.
    const StreamSample& at(int client, int64_t t) const {
        return samples_[static_cast<size_t>(client) * steps_ + (t - 1)];
    }
    StreamSample& at(int client, int64_t t) {
        return samples_[static_cast<size_t>(client) * steps_ + (t - 1)];
    }

    double max_feature_sq_norm() const;

private:
    int clients_;
    int64_t steps_;
    int feature_dim_;
    std::vector<StreamSample> samples_;
};

// Reads a numeric CSV (UTF-8, comma separated, first row header). Rows with
// missing or non-numeric required fields are dropped and counted. Regression
// labels are min-max normalized to [0,1] over the whole file; classification
// labels must already be integers in [0, C).
SampleTable load_csv(const DatasetSpec& spec);

// Tiles the table to at least K*T rows, truncates to exactly K*T, shuffles
// with the data-shuffling stream, and splits contiguously into K blocks of T.
ClientStreams replicate_and_partition(const SampleTable& table, int clients, int64_t steps,
                                      RngStream& rng);

ClientStreams synthetic_stream(const DatasetSpec& spec, int clients, int64_t steps,
                               uint64_t seed);

// Dispatcher: CSV -> load + partition, synthetic -> generator.
ClientStreams make_streams(const DatasetSpec& spec, int clients, int64_t steps, uint64_t seed,
                           SampleTable* table_out = nullptr);

}  // namespace ofl

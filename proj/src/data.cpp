#include "ofl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ofl {

void DatasetSpec::validate() const {
    if (classification && classes < 2)
        throw std::invalid_argument("dataset: classification needs classes >= 2");
    if (heterogeneity < 0.0) throw std::invalid_argument("dataset: heterogeneity must be >= 0");
    if (noise < 0.0) throw std::invalid_argument("dataset: noise must be >= 0");
    if (synthetic_source() && feature_dim < 1)
        throw std::invalid_argument("dataset: feature_dim must be >= 1");
    if (!synthetic_source() && label_column.empty())
        throw std::invalid_argument("dataset: label_column required for CSV sources");
}

double ClientStreams::max_feature_sq_norm() const {
    double mx = 0.0;
    for (const StreamSample& s : samples_) mx = std::max(mx, squared_norm(s.features));
    return mx;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_number(const std::string& cell, double& out) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\r' || *end == '\t') ++end;
    return *end == '\0' && std::isfinite(out);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

// Uniform integer in [0, n) by rejection, bias-free.
uint64_t bounded(RngStream& rng, uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        const uint64_t r = rng.next_u64();
        if (r >= threshold) return r % n;
    }
}

// Standard normal vector of length n from the stream.
std::vector<double> normal_vector(RngStream& rng, int n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

void scale_to_norm(std::vector<double>& v, double target) {
    const double n = norm(v);
    if (n == 0.0) return;
    for (double& x : v) x *= target / n;
}

}  // namespace

SampleTable load_csv(const DatasetSpec& spec) {
    spec.validate();
    std::ifstream in(spec.csv_path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + spec.csv_path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
    std::vector<std::string> header = split_csv_line(line);
    for (std::string& h : header) h = trim(h);

    auto find_column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error("load_csv: column '" + name + "' not found");
        return static_cast<int>(it - header.begin());
    };

    const int label_idx = find_column(spec.label_column);
    std::vector<int> feature_idx;
    if (spec.feature_columns.empty()) {
        for (int i = 0; i < static_cast<int>(header.size()); ++i)
            if (i != label_idx) feature_idx.push_back(i);
    } else {
        for (const std::string& name : spec.feature_columns) feature_idx.push_back(find_column(name));
    }
    if (feature_idx.empty()) throw std::runtime_error("load_csv: no feature columns");

    SampleTable table;
    table.feature_dim = static_cast<int>(feature_idx.size());
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        StreamSample sample;
        sample.features.resize(feature_idx.size());
        bool ok = static_cast<int>(cells.size()) > label_idx && parse_number(cells[label_idx], sample.label);
        for (size_t j = 0; ok && j < feature_idx.size(); ++j) {
            ok = feature_idx[j] < static_cast<int>(cells.size()) &&
                 parse_number(cells[feature_idx[j]], sample.features[j]);
        }
        if (!ok) {
            ++table.dropped_rows;
            continue;
        }
        table.rows.push_back(std::move(sample));
    }
    if (table.rows.empty()) throw std::runtime_error("load_csv: no usable rows");

    if (spec.classification) {
        for (const StreamSample& s : table.rows) {
            const int y = static_cast<int>(s.label);
            if (static_cast<double>(y) != s.label || y < 0 || y >= spec.classes)
                throw std::runtime_error("load_csv: classification label outside [0, C)");
        }
    } else {
        double lo = table.rows.front().label, hi = lo;
        for (const StreamSample& s : table.rows) {
            lo = std::min(lo, s.label);
            hi = std::max(hi, s.label);
        }
        table.label_min = lo;
        table.label_max = hi;
        const double range = hi - lo;
        for (StreamSample& s : table.rows)
            s.label = range > 0.0 ? (s.label - lo) / range : 0.0;
    }

    if (spec.standardize_features) {
        const int n = table.feature_dim;
        table.feature_mean.assign(n, 0.0);
        table.feature_std.assign(n, 0.0);
        for (const StreamSample& s : table.rows)
            for (int j = 0; j < n; ++j) table.feature_mean[j] += s.features[j];
        for (double& m : table.feature_mean) m /= static_cast<double>(table.rows.size());
        for (const StreamSample& s : table.rows)
            for (int j = 0; j < n; ++j) {
                const double d = s.features[j] - table.feature_mean[j];
                table.feature_std[j] += d * d;
            }
        for (double& v : table.feature_std)
            v = std::sqrt(v / static_cast<double>(table.rows.size()));
        for (StreamSample& s : table.rows)
            for (int j = 0; j < n; ++j) {
                const double sd = table.feature_std[j];
                s.features[j] = sd > 0.0 ? (s.features[j] - table.feature_mean[j]) / sd : 0.0;
            }
    }
    return table;
}

ClientStreams replicate_and_partition(const SampleTable& table, int clients, int64_t steps,
                                      RngStream& rng) {
    if (clients < 1 || steps < 1)
        throw std::invalid_argument("replicate_and_partition: K and T must be >= 1");
    if (table.rows.empty()) throw std::invalid_argument("replicate_and_partition: empty table");

    const int64_t total = static_cast<int64_t>(clients) * steps;
    const int64_t n = static_cast<int64_t>(table.rows.size());

    // Tile to at least K*T entries, truncate to exactly K*T.
    std::vector<int64_t> order(total);
    for (int64_t i = 0; i < total; ++i) order[i] = i % n;
    // Fisher-Yates with the provided shuffle stream.
    for (int64_t i = total - 1; i > 0; --i) {
        const int64_t j = static_cast<int64_t>(bounded(rng, static_cast<uint64_t>(i + 1)));
        std::swap(order[i], order[j]);
    }

    ClientStreams streams(clients, steps, table.feature_dim);
    for (int k = 0; k < clients; ++k)
        for (int64_t t = 1; t <= steps; ++t)
            streams.at(k, t) = table.rows[order[static_cast<int64_t>(k) * steps + (t - 1)]];
    return streams;
}

ClientStreams synthetic_stream(const DatasetSpec& spec, int clients, int64_t steps,
                               uint64_t seed) {
    spec.validate();
    if (clients < 1 || steps < 1)
        throw std::invalid_argument("synthetic_stream: K and T must be >= 1");
    const int n = spec.feature_dim;

    if (!spec.classification) {
        // Shared weights at norm 0.25 plus per-client shifts at norm
        // 0.25 * heterogeneity: labels stay in [0,1] without clipping for
        // heterogeneity <= 1, and clients disagree exactly when the knob > 0.
        RngStream truth(seed, StreamPurpose::TrueModel, 0, 0);
        std::vector<double> w_true = normal_vector(truth, n);
        scale_to_norm(w_true, 0.25);

        ClientStreams streams(clients, steps, n);
        for (int k = 0; k < clients; ++k) {
            RngStream shift(seed, StreamPurpose::TrueModel, static_cast<uint64_t>(k) + 1, 0);
            std::vector<double> w_k = normal_vector(shift, n);
            scale_to_norm(w_k, 0.25 * spec.heterogeneity);
            for (int i = 0; i < n; ++i) w_k[i] += w_true[i];

            for (int64_t t = 1; t <= steps; ++t) {
                RngStream rng(seed, StreamPurpose::DataGen, static_cast<uint64_t>(k),
                              static_cast<uint64_t>(t));
                StreamSample& s = streams.at(k, t);
                s.features = normal_vector(rng, n);
                scale_to_norm(s.features, 1.0);
                double y = 0.5 + dot(s.features, w_k);
                if (spec.noise > 0.0) y += spec.noise * rng.normal();
                s.label = std::clamp(y, 0.0, 1.0);
            }
        }
        return streams;
    }

    // Class-separable streams: unit-sphere centers scaled apart, a per-client
    // feature shift proportional to the knob, and isotropic in-class noise.
    const int C = spec.classes;
    std::vector<std::vector<double>> centers(C);
    for (int c = 0; c < C; ++c) {
        RngStream truth(seed, StreamPurpose::TrueModel, 0, static_cast<uint64_t>(c) + 1);
        centers[c] = normal_vector(truth, n);
        scale_to_norm(centers[c], 2.0);
    }

    ClientStreams streams(clients, steps, n);
    for (int k = 0; k < clients; ++k) {
        RngStream shift(seed, StreamPurpose::TrueModel, static_cast<uint64_t>(k) + 1, 0);
        std::vector<double> delta = normal_vector(shift, n);
        scale_to_norm(delta, 0.5 * spec.heterogeneity);

        for (int64_t t = 1; t <= steps; ++t) {
            RngStream rng(seed, StreamPurpose::DataGen, static_cast<uint64_t>(k),
                          static_cast<uint64_t>(t));
            const int y = static_cast<int>(bounded(rng, static_cast<uint64_t>(C)));
            StreamSample& s = streams.at(k, t);
            s.features.resize(n);
            for (int i = 0; i < n; ++i)
                s.features[i] = centers[y][i] + delta[i] + 0.3 * rng.normal();
            s.label = static_cast<double>(y);
        }
    }
    return streams;
}

ClientStreams make_streams(const DatasetSpec& spec, int clients, int64_t steps, uint64_t seed,
                           SampleTable* table_out) {
    if (spec.synthetic_source()) {
        if (table_out) *table_out = SampleTable{};
        return synthetic_stream(spec, clients, steps, seed);
    }
    SampleTable table = load_csv(spec);
    RngStream rng(seed, StreamPurpose::DataShuffle);
    ClientStreams streams = replicate_and_partition(table, clients, steps, rng);
    if (table_out) {
        table.rows.clear();  // metadata only
        *table_out = std::move(table);
    }
    return streams;
}

}  // namespace ofl

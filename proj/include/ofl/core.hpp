// Shared domain types, time indexing, and RNG-stream management.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ofl {

// D-dimensional real model parameters. Gradients, updates, and hindsight
// optima all live in this type; every vector exchanged within a run shares D.
using ParameterVector = std::vector<double>;

// One (features, label) pair delivered to a client at a time step.
// Regression labels are normalized to [0,1]; classification labels carry a
// class index.
struct StreamSample {
    std::vector<double> features;
    double label = 0.0;
};

// Index of the global model in force at step t under transmission period L:
// floor((t-1)/L)*L + 1. Throws std::invalid_argument for t < 1 or L < 1.
int64_t psi(int64_t t, int64_t period);

// t is a transmission step (t mod L == 0, the set [T]_L).
bool is_transmission_step(int64_t t, int64_t period);

// A fresh global model is in force at t (t == 1 or t-1 is a transmission
// step), i.e. the client restarts its local recursion from the broadcast.
bool is_period_start(int64_t t, int64_t period);

// Step counter plus transmission period, so protocol code can ask the three
// questions above without carrying L separately.
struct TimeIndex {
    int64_t t = 1;
    int64_t period = 1;

    int64_t in_force() const { return psi(t, period); }
    bool transmission() const { return is_transmission_step(t, period); }
    bool period_start() const { return is_period_start(t, period); }
};

// Throws std::runtime_error naming `what` if any entry is NaN or infinite.
void ensure_finite(const ParameterVector& v, const char* what);

double dot(const ParameterVector& a, const ParameterVector& b);
double squared_norm(const ParameterVector& v);
double norm(const ParameterVector& v);
// y += a * x
void axpy(double a, const ParameterVector& x, ParameterVector& y);
void scale(ParameterVector& v, double a);

enum class StreamPurpose : uint64_t {
    Subsample = 1,
    Quantize = 2,
    DataShuffle = 3,
    ModelInit = 4,
    DataGen = 5,
    TrueModel = 6,
};

// Counter-based generator: the whole state is a pure function of
// (seed, purpose, client, step), so per-client draws are identical under any
// execution order or thread count. Core mixer is the splitmix64 finalizer.
class RngStream {
public:
    RngStream(uint64_t seed, StreamPurpose purpose, uint64_t client = 0, uint64_t step = 0);

    uint64_t next_u64();
    // Uniform in [0, 1), 53-bit resolution.
    double next_double();
    double uniform(double lo, double hi);
    bool bernoulli(double p);
    // Standard normal via Box-Muller (two uniforms per call).
    double normal();

private:
    uint64_t state_;
};

}  // namespace ofl

#include "ofl/core.hpp"

#include <cmath>
#include <numbers>

namespace ofl {

int64_t psi(int64_t t, int64_t period) {
    if (t < 1) throw std::invalid_argument("psi: time step must be >= 1, got " + std::to_string(t));
    if (period < 1)
        throw std::invalid_argument("psi: period must be >= 1, got " + std::to_string(period));
    return (t - 1) / period * period + 1;
}

bool is_transmission_step(int64_t t, int64_t period) {
    if (t < 1 || period < 1) throw std::invalid_argument("is_transmission_step: t and L must be >= 1");
    return t % period == 0;
}

bool is_period_start(int64_t t, int64_t period) {
    if (t == 1) return true;
    return is_transmission_step(t - 1, period);
}

void ensure_finite(const ParameterVector& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x))
            throw std::runtime_error(std::string(what) + ": non-finite entry encountered");
    }
}

double dot(const ParameterVector& a, const ParameterVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(const ParameterVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double norm(const ParameterVector& v) { return std::sqrt(squared_norm(v)); }

void axpy(double a, const ParameterVector& x, ParameterVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(ParameterVector& v, double a) {
    for (double& x : v) x *= a;
}

namespace {

// splitmix64 finalizer (public-domain constants).
uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

}  // namespace

RngStream::RngStream(uint64_t seed, StreamPurpose purpose, uint64_t client, uint64_t step) {
    uint64_t h = 0x243F6A8885A308D3ull ^ seed;
    h = mix64(h + kGamma * (static_cast<uint64_t>(purpose) + 1));
    h = mix64(h + kGamma * (client + 1));
    h = mix64(h + kGamma * (step + 1));
    state_ = h;
}

uint64_t RngStream::next_u64() {
    state_ += kGamma;
    return mix64(state_);
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

bool RngStream::bernoulli(double p) { return next_double() < p; }

double RngStream::normal() {
    // 1 - U keeps the log argument in (0, 1].
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ofl

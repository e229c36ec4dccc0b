// Benchmark comparing the serial reference path against the OpenMP client
// loop on the same workload, verifying bit-identical results.
#include <chrono>
#include <cstring>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ofl/sim.hpp"

namespace {

ofl::RunConfig workload() {
    ofl::RunConfig cfg;
    cfg.dataset.synthetic = ofl::SyntheticKind::SeparableClasses;
    cfg.dataset.classification = true;
    cfg.dataset.classes = 4;
    cfg.dataset.feature_dim = 16;
    cfg.dataset.heterogeneity = 0.5;
    cfg.model.family = ofl::ModelFamily::MlpClassifier;
    cfg.model.input_dim = 16;
    cfg.model.hidden = 32;
    cfg.model.classes = 4;
    cfg.method.variant = ofl::Method::OFedIQ;
    cfg.method.period = 2;
    cfg.method.participation = {0.5};
    cfg.method.quantizer = ofl::QuantizerSpec{7, 8, 1};
    cfg.method.eta = 0.01;
    cfg.seed = 42;
    cfg.K = 256;
    cfg.T = 150;
    cfg.metric_cadence = 50;
    return cfg;
}

double run_timed(const ofl::RunConfig& cfg, const ofl::ClientStreams& streams,
                 ofl::RunResult& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = ofl::run(cfg, streams);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

bool identical(const ofl::ParameterVector& a, const ofl::ParameterVector& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main() {
    ofl::RunConfig cfg = workload();
    const ofl::ClientStreams streams =
        ofl::make_streams(cfg.dataset, cfg.K, cfg.T, cfg.seed);

    std::cout << "workload: K=" << cfg.K << " T=" << cfg.T
              << " D=" << cfg.model.param_count() << " method=ofediq(L=2, p=0.5, s=7, b=8)\n";

    cfg.threads = 1;
    ofl::RunResult serial;
    const double t_serial = run_timed(cfg, streams, serial);
    std::cout << "serial reference: " << t_serial << " s\n";

#ifdef _OPENMP
    const int hw = omp_get_max_threads();
#else
    const int hw = 1;
#endif
    int worst_mismatch = 0;
    for (int threads : {2, 4, hw}) {
        if (threads <= 1 || threads > hw) continue;
        cfg.threads = threads;
        ofl::RunResult parallel;
        const double t_par = run_timed(cfg, streams, parallel);
        const bool same = identical(serial.final_w, parallel.final_w) &&
                          serial.cum_loss == parallel.cum_loss &&
                          serial.cum_bits == parallel.cum_bits;
        if (!same) ++worst_mismatch;
        std::cout << "omp threads=" << threads << ": " << t_par << " s  speedup x"
                  << t_serial / t_par << (same ? "  (bit-identical)" : "  MISMATCH") << "\n";
    }

    if (worst_mismatch > 0) {
        std::cout << "FAIL: parallel runs diverged from the serial reference\n";
        return 1;
    }
    std::cout << "all parallel runs match the serial reference bit-exactly\n";
    return 0;
}

#include "rxai/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace rxai {

namespace {

double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

CostProfile count_cost(Method method, const Model& model, const SplitModel& split,
                       const Tensor& input, MaskKernel kernel) {
    CamCost cost;
    (void)generate_map(method, model, split, input, 0, kernel, &cost);
    CostProfile p;
    p.method = method_name(method);
    p.full_forwards = cost.full_forwards;
    p.head_forwards = cost.head_forwards;
    p.backward_passes = cost.backward_passes;
    p.images = 1;
    return p;
}

CostProfile time_method(Method method, const Model& model, const SplitModel& split,
                        std::span<const Tensor> inputs, int warmup, MaskKernel kernel,
                        int class_index) {
    if (inputs.empty()) throw std::invalid_argument("time_method: need at least one input");
    using clock = std::chrono::steady_clock;

    CamCost cost;
    for (int i = 0; i < warmup; ++i)
        (void)generate_map(method, model, split, inputs[static_cast<size_t>(i) % inputs.size()],
                           class_index, kernel);

    std::vector<double> ms;
    ms.reserve(inputs.size());
    for (const Tensor& input : inputs) {
        const auto t0 = clock::now();
        (void)generate_map(method, model, split, input, class_index, kernel, &cost);
        const auto t1 = clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    CostProfile p;
    p.method = method_name(method);
    p.full_forwards = cost.full_forwards;
    p.head_forwards = cost.head_forwards;
    p.backward_passes = cost.backward_passes;
    p.images = static_cast<int>(inputs.size());
    double sum = 0.0;
    for (double v : ms) sum += v;
    p.wall_ms_mean = sum / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    p.wall_ms_p50 = percentile(ms, 0.50);
    p.wall_ms_p95 = percentile(ms, 0.95);
    return p;
}

std::string format_bench_table(std::span<const CostProfile> profiles) {
    if (profiles.empty()) throw std::invalid_argument("bench table: no profiles");
    double fastest = profiles[0].wall_ms_mean;
    for (const CostProfile& p : profiles) fastest = std::min(fastest, p.wall_ms_mean);

    std::string s;
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %-20s %-10s %-10s %-8s %-8s\n", "Method",
                  "Execution Time (ms)", "FPS", "Ratio", "p50", "p95");
    s += line;
    for (const CostProfile& p : profiles) {
        const double fps = p.wall_ms_mean > 0.0 ? 1000.0 / p.wall_ms_mean : 0.0;
        char ratio[32];
        if (p.wall_ms_mean <= fastest) {
            std::snprintf(ratio, sizeof(ratio), "-");
        } else {
            std::snprintf(ratio, sizeof(ratio), "%.2fx", p.wall_ms_mean / fastest);
        }
        std::snprintf(line, sizeof(line), "%-12s %-20.3f %-10.2f %-10s %-8.3f %-8.3f\n",
                      p.method.c_str(), p.wall_ms_mean, fps, ratio, p.wall_ms_p50, p.wall_ms_p95);
        s += line;
    }
    return s;
}

std::string bench_csv(std::span<const CostProfile> profiles) {
    if (profiles.empty()) throw std::invalid_argument("bench csv: no profiles");
    double fastest = profiles[0].wall_ms_mean;
    for (const CostProfile& p : profiles) fastest = std::min(fastest, p.wall_ms_mean);
    std::string s = "# rxai-bench/1\n"
                    "method,images,full_forwards,head_forwards,backward_passes,"
                    "wall_ms_mean,wall_ms_p50,wall_ms_p95,fps,ratio\n";
    char line[256];
    for (const CostProfile& p : profiles) {
        const double fps = p.wall_ms_mean > 0.0 ? 1000.0 / p.wall_ms_mean : 0.0;
        const double ratio = fastest > 0.0 ? p.wall_ms_mean / fastest : 0.0;
        std::snprintf(line, sizeof(line), "%s,%d,%ld,%ld,%ld,%.6f,%.6f,%.6f,%.4f,%.4f\n",
                      p.method.c_str(), p.images, p.full_forwards, p.head_forwards,
                      p.backward_passes, p.wall_ms_mean, p.wall_ms_p50, p.wall_ms_p95, fps, ratio);
        s += line;
    }
    return s;
}

} // namespace rxai

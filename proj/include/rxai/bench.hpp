#pragma once

#include "rxai/model.hpp"
#include "rxai/saliency.hpp"

#include <span>
#include <string>
#include <vector>

namespace rxai {

/// Cost accounting for one method: instrumented pass counts plus wall-clock
/// statistics over single-image invocations.
struct CostProfile {
    std::string method;
    long full_forwards = 0;
    long head_forwards = 0;
    long backward_passes = 0;
    double wall_ms_mean = 0.0;
    double wall_ms_p50 = 0.0;
    double wall_ms_p95 = 0.0;
    int images = 0;
};

/// Runs the method once with instrumented counters; no timing.
CostProfile count_cost(Method method, const Model& model, const SplitModel& split,
                       const Tensor& input, MaskKernel kernel = MaskKernel::Dirac);

/// Times one single-image invocation per input, sequentially on the calling
/// thread. The first `warmup` inputs are run but excluded from statistics.
/// Timing does not touch the computation itself, so results are identical
/// with or without it.
CostProfile time_method(Method method, const Model& model, const SplitModel& split,
                        std::span<const Tensor> inputs, int warmup = 5,
                        MaskKernel kernel = MaskKernel::Dirac, int class_index = 0);

/// Aligned table with Execution Time (ms), FPS (= 1000/ms) and Ratio against
/// the fastest method ("-" for the fastest row).
std::string format_bench_table(std::span<const CostProfile> profiles);
std::string bench_csv(std::span<const CostProfile> profiles);

} // namespace rxai

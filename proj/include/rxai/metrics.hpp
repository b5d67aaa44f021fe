#pragma once

#include "rxai/model.hpp"
#include "rxai/saliency.hpp"
#include "rxai/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace rxai {

/// 100 * mean_i max(0, y_i - o_i) / y_i, the class-score drop (in percent)
/// when inputs are masked by their own saliency maps.
double average_drop(std::span<const double> orig_scores, std::span<const double> masked_scores);

/// 100 * fraction of samples whose masked score exceeds the original.
double average_increase(std::span<const double> orig_scores, std::span<const double> masked_scores);

/// Normalized L1 mass: mean of the map values. Lower is a more focused map.
double complexity(const SaliencyMap& map);

/// |Pearson correlation| of the two flattened maps; 0 if either is constant.
double coherency(const SaliencyMap& map_original, const SaliencyMap& map_on_masked);

/// Harmonic mean 3 / (1/coherency + 1/(1-complexity) + 1/(1-avg_drop)).
/// avg_drop is a fraction here, not a percentage. Degenerate inputs
/// (coherency <= 0, complexity >= 1 or avg_drop >= 1) give 0.
double adcc(double avg_drop, double coherency, double complexity);

struct CurvePoint {
    double fraction = 0.0; // of pixels removed / revealed
    double score = 0.0;    // softmax probability of the class
};

double trapezoid_auc(std::span<const CurvePoint> curve);

/// Box blur with border-aware normalization, applied `passes` times per
/// channel. Used as the insertion baseline.
Tensor box_blur(const Tensor& chw, int kernel, int passes);

/// RISE-style deletion curve: zero the top-s still-present pixels per step in
/// descending saliency order (s = ceil(pixels/100)), scoring after each step.
/// `saliency` must already be at input spatial size. The curve is defined at
/// fractions 0 and 1 exactly.
std::vector<CurvePoint> deletion_curve(const Model& model, const Tensor& input,
                                       const Tensor& saliency, int class_index);
double deletion_auc(const Model& model, const Tensor& input, const Tensor& saliency,
                    int class_index);

/// Insertion: start from a triple box blur (kernel 11) of the input and
/// reveal original pixels in descending saliency order on the same schedule.
std::vector<CurvePoint> insertion_curve(const Model& model, const Tensor& input,
                                        const Tensor& saliency, int class_index);
double insertion_auc(const Model& model, const Tensor& input, const Tensor& saliency,
                     int class_index);

struct ImageMetrics {
    std::string id;
    int class_index = 0;
    double drop_pct = 0.0;
    bool increase = false;
    double deletion = 0.0;
    double insertion = 0.0;
    double coherency = 0.0;
    double complexity = 0.0;
    double adcc = 0.0;
};

/// Per-image rows plus dataset means, column order mirroring the usual
/// Drop / Inc / Del / Ins / Coher / Compl / ADCC layout.
struct MetricReport {
    std::string method;
    std::string kernel;
    std::vector<ImageMetrics> rows;
    int failures = 0;
    std::vector<std::string> failure_messages;

    double mean_drop_pct = 0.0;
    double increase_pct = 0.0;
    double mean_deletion = 0.0;
    double mean_insertion = 0.0;
    double mean_coherency = 0.0;
    double mean_complexity = 0.0;
    double mean_adcc = 0.0;

    void finalize();
};

struct EvalSample {
    std::string id;
    Tensor input; // model-input tensor (already preprocessed)
    int class_index = 0;
};

/// Runs the full metric pipeline for one method over a dataset. Per-image
/// failures are recorded and skipped rather than aborting the run. `threads`
/// 0 means one worker per core, capped by the RXAI_THREADS environment
/// variable; rows are merged in dataset order regardless of scheduling.
MetricReport evaluate_method(const Model& model, const SplitModel& split,
                             std::span<const EvalSample> dataset, Method method,
                             MaskKernel kernel = MaskKernel::Dirac, int threads = 0);

/// CSV (schema rxai-eval/1): one row per image plus an aggregate row.
void write_report_csv(const MetricReport& report, const std::string& path);
std::string report_summary_text(const MetricReport& report);

} // namespace rxai

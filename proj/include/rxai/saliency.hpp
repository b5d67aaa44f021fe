#pragma once

#include "rxai/model.hpp"
#include "rxai/tensor.hpp"

#include <string>
#include <vector>

namespace rxai {

enum class MaskKernel { Dirac, Gaussian3x3 };

const char* mask_kernel_name(MaskKernel kernel);
MaskKernel mask_kernel_from_name(const std::string& name);

/// HxW mask activating one feature position. Dirac: a single 1. Gaussian3x3:
/// a 3x3 stamp [[.25,.5,.25],[.5,1,.5],[.25,.5,.25]] centered at the
/// position, clipped at the borders (center amplitude 1, matching Dirac).
struct SpatialMask {
    int u = 0;
    int v = 0;
    Tensor values; // {H, W}
    MaskKernel kernel = MaskKernel::Dirac;
};

/// One mask per position, row-major order; exactly N = H*W masks.
std::vector<SpatialMask> generate_spatial_masks(int height, int width, MaskKernel kernel);

/// Min-max normalized HxW map. A degenerate source (max == min) yields an
/// all-zero map with the flag set instead of NaNs.
struct SaliencyMap {
    Tensor values; // {H, W}, all in [0, 1]
    std::string method;
    int class_index = -1; // -1 for class-agnostic maps
    int split_index = -1;
    bool degenerate = false;
};

SaliencyMap normalize_map(const Tensor& raw);

/// Bilinear (half-pixel centers) upsample of the map to target size. The
/// target must be at least as large as the map; same size is an exact copy.
Tensor upsample_map(const SaliencyMap& map, int target_h, int target_w);

/// Per-position class scores y_c^n, row-major over feature positions.
struct ClassScores {
    VecXf values; // length N = H*W, each in (0, 1)
};

/// Forward-pass bookkeeping. A "full" forward starts from an image and runs
/// the whole network; a "head" forward runs g only, from a feature map.
struct CamCost {
    long full_forwards = 0;
    long head_forwards = 0;
    long backward_passes = 0;
};

/// One instrumented full pass: feature map at the split plus final logits
/// (softmax peeled) and class probabilities.
struct FullPass {
    Tensor feature;
    VecXf logits;
    VecXf probs;
};

FullPass run_full(const SplitModel& split, const Tensor& input, CamCost* cost = nullptr);

/// Head-only pass: pre-softmax logits of g(feature).
VecXf head_logits(const SplitModel& split, const Tensor& feature, CamCost* cost = nullptr);

/// Whole-model pre-softmax logits / probabilities for an input image.
VecXf model_logits(const Model& model, const Tensor& input, CamCost* cost = nullptr);
VecXf model_probs(const Model& model, const Tensor& input, CamCost* cost = nullptr);

int argmax_class(const VecXf& scores);

/// The y_c vector of Eq. style softmax(g(f(I) (.) M^n))_c: one full pass for
/// the feature map, then the N masked maps pushed through the head as one
/// batch. Cost: 1 full + N head forwards.
ClassScores recipro_scores(const SplitModel& split, const Tensor& input, int class_index,
                           MaskKernel kernel = MaskKernel::Dirac, CamCost* cost = nullptr);

/// Gradient-free positional saliency: min-max normalized recipro_scores
/// reshaped to HxW.
SaliencyMap recipro_cam(const SplitModel& split, const Tensor& input, int class_index,
                        MaskKernel kernel = MaskKernel::Dirac, CamCost* cost = nullptr);

/// Classic CAM. Requires the model head to be exactly
/// {global_avg_pool, linear} with an optional trailing softmax.
SaliencyMap cam(const Model& model, const Tensor& input, int class_index, CamCost* cost = nullptr);

/// ReLU(sum_k alpha_k A^k) with alpha_k the spatial mean of d logit / d A^k.
SaliencyMap grad_cam(const SplitModel& split, const Tensor& input, int class_index,
                     CamCost* cost = nullptr);

/// Channel-wise activation masking of the input image; weights are a softmax
/// over the class logits of the masked forwards. Cost: K+1 full forwards.
SaliencyMap score_cam(const Model& model, const SplitModel& split, const Tensor& input,
                      int class_index, CamCost* cost = nullptr);

/// Per-channel ablation slopes (y - y_k) / y. Cost: 1 full + K+1 head.
SaliencyMap ablation_cam(const SplitModel& split, const Tensor& input, int class_index,
                         CamCost* cost = nullptr);

/// Adversarial baseline: all ones except a single zero at (0,0).
SaliencyMap fake_cam(int height, int width);

enum class Method { Recipro, Cam, Grad, Score, Ablation, Fake };

const char* method_name(Method method);
Method method_from_name(const std::string& name);
std::vector<Method> parse_method_list(const std::string& comma_separated);

/// Uniform dispatcher used by the metric loop, the benchmark harness and the
/// CLI.
SaliencyMap generate_map(Method method, const Model& model, const SplitModel& split,
                         const Tensor& input, int class_index,
                         MaskKernel kernel = MaskKernel::Dirac, CamCost* cost = nullptr);

} // namespace rxai

#pragma once

// Seeded random (head, feature) pairs for gradient verification, shared by
// the unit suite and the acceptance suite.
//
// The layer stack is piecewise linear, so central differences are exact up
// to rounding unless the +/- epsilon probes land in different linear regions
// (a relu sign or maxpool argmax flips). Elements whose probes provably cross
// such a kink are excluded: the derivative does not exist there and no finite
// difference can measure it. Exclusions are counted and reported.

#include "oracle_ref.hpp"
#include "rxai/layers.hpp"
#include "rxai/prng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rxai::test {

struct GradCheckPair {
    std::vector<LayerSpec> head;
    Tensor feature;
    int class_index = 0;
};

inline void fill_uniform_pm1(Tensor& t, SplitMix64& rng) {
    for (int64_t i = 0; i < t.size(); ++i) t.data[i] = rng.next_symmetric(1.0f);
}

inline GradCheckPair make_grad_pair(uint64_t seed) {
    SplitMix64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
    const int k = 2 + static_cast<int>(rng.next() % 4);
    const int h = 2 + static_cast<int>(rng.next() % 4);
    const int w = 2 + static_cast<int>(rng.next() % 4);
    const int classes = 2 + static_cast<int>(rng.next() % 5);

    GradCheckPair pair;
    pair.feature = Tensor({k, h, w});
    fill_uniform_pm1(pair.feature, rng);

    switch (seed % 5) {
        case 0:
            pair.head = {LayerSpec::global_avg_pool(), LayerSpec::linear(k, classes)};
            break;
        case 1: {
            const int oh = h - 1, ow = w - 1; // avgpool k2 s1
            pair.head = {LayerSpec::avgpool2d(2, 1), LayerSpec::flatten(),
                         LayerSpec::linear(k * oh * ow, classes)};
            break;
        }
        case 2: {
            const int k2 = 2 + static_cast<int>(rng.next() % 3);
            pair.head = {LayerSpec::conv2d(k, k2, 3, 1, 1), LayerSpec::relu(),
                         LayerSpec::global_avg_pool(), LayerSpec::linear(k2, classes)};
            break;
        }
        case 3:
            pair.head = {LayerSpec::maxpool2d(2, 1), LayerSpec::global_avg_pool(),
                         LayerSpec::linear(k, classes)};
            break;
        default:
            pair.head = {LayerSpec::flatten(), LayerSpec::linear(k * h * w, classes),
                         LayerSpec::softmax()};
            break;
    }
    for (LayerSpec& l : pair.head) {
        if (l.weights) fill_uniform_pm1(*l.weights, rng);
        if (l.bias) fill_uniform_pm1(*l.bias, rng);
    }
    pair.class_index = static_cast<int>(rng.next() % static_cast<uint64_t>(classes));
    return pair;
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    int kinked = 0;
    int checked = 0;
};

// Max relative error between backward_head and finite_diff_grad, normalized
// by the largest finite-difference magnitude. Elements where the epsilon
// probes change the activation pattern (verified with the independent
// reference forward) are excluded and counted in `kinked`.
inline GradCheckResult check_gradient_pair(const GradCheckPair& pair, double epsilon = 1e-3,
                                           double tolerance = 1e-4) {
    const std::span<const LayerSpec> head(pair.head.data(), pair.head.size());
    const Gradient bp = backward_head(head, pair.feature, pair.class_index);
    const Gradient fd = finite_diff_grad(head, pair.feature, pair.class_index, epsilon);

    double denom = 1e-9;
    for (int64_t i = 0; i < fd.values.size(); ++i)
        denom = std::max(denom, static_cast<double>(std::abs(fd.values.data[i])));

    GradCheckResult result;
    result.checked = static_cast<int>(fd.values.size());
    TensorD probe = pair.feature.cast<double>();
    for (int64_t i = 0; i < fd.values.size(); ++i) {
        const double err =
            std::abs(static_cast<double>(bp.values.data[i]) - static_cast<double>(fd.values.data[i])) /
            denom;
        if (err >= tolerance) {
            // excuse only provable kink crossings
            Pattern up, down;
            const double saved = probe.data[i];
            probe.data[i] = saved + epsilon;
            (void)ref_chain(head, probe, &up);
            probe.data[i] = saved - epsilon;
            (void)ref_chain(head, probe, &down);
            probe.data[i] = saved;
            if (up != down) {
                result.kinked += 1;
                continue;
            }
        }
        result.max_rel_err = std::max(result.max_rel_err, err);
    }
    return result;
}

} // namespace rxai::test

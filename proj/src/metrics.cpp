#include "rxai/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace rxai {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_lengths(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        fail("score vectors differ in length: " + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

double average_drop(std::span<const double> orig_scores, std::span<const double> masked_scores) {
    check_lengths(orig_scores, masked_scores);
    if (orig_scores.empty()) fail("average_drop: empty score vectors");
    double acc = 0.0;
    for (size_t i = 0; i < orig_scores.size(); ++i) {
        const double y = orig_scores[i];
        if (y <= 0.0) fail("average_drop: original score " + std::to_string(y) + " is not positive");
        acc += std::max(0.0, y - masked_scores[i]) / y;
    }
    return 100.0 * acc / static_cast<double>(orig_scores.size());
}

double average_increase(std::span<const double> orig_scores,
                        std::span<const double> masked_scores) {
    check_lengths(orig_scores, masked_scores);
    if (orig_scores.empty()) fail("average_increase: empty score vectors");
    int64_t hits = 0;
    for (size_t i = 0; i < orig_scores.size(); ++i)
        if (masked_scores[i] > orig_scores[i]) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(orig_scores.size());
}

double complexity(const SaliencyMap& map) {
    const float lo = map.values.data.minCoeff();
    const float hi = map.values.data.maxCoeff();
    if (lo < 0.0f || hi > 1.0f)
        fail("complexity: map values outside [0,1] (min " + std::to_string(lo) + ", max " +
             std::to_string(hi) + ")");
    double acc = 0.0;
    for (int64_t i = 0; i < map.values.size(); ++i) acc += static_cast<double>(map.values.data[i]);
    return acc / static_cast<double>(map.values.size());
}

double coherency(const SaliencyMap& map_original, const SaliencyMap& map_on_masked) {
    const Tensor& a = map_original.values;
    const Tensor& b = map_on_masked.values;
    if (!a.same_shape(b))
        fail("coherency: map shapes differ, " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const int64_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        ma += static_cast<double>(a.data[i]);
        mb += static_cast<double>(b.data[i]);
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double da = static_cast<double>(a.data[i]) - ma;
        const double db = static_cast<double>(b.data[i]) - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0; // constant map: correlation undefined
    return std::min(1.0, std::abs(sab) / std::sqrt(saa * sbb));
}

double adcc(double avg_drop, double coherency, double complexity) {
    if (coherency <= 0.0 || complexity >= 1.0 || avg_drop >= 1.0) return 0.0;
    return 3.0 / (1.0 / coherency + 1.0 / (1.0 - complexity) + 1.0 / (1.0 - avg_drop));
}

double trapezoid_auc(std::span<const CurvePoint> curve) {
    double auc = 0.0;
    for (size_t i = 1; i < curve.size(); ++i)
        auc += (curve[i].fraction - curve[i - 1].fraction) * (curve[i].score + curve[i - 1].score) / 2.0;
    return auc;
}

Tensor box_blur(const Tensor& chw, int kernel, int passes) {
    if (chw.rank() != 3) fail("box_blur: expected CxHxW, got " + shape_str(chw.shape));
    if (kernel < 1 || kernel % 2 == 0) fail("box_blur: kernel must be odd and positive");
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    const int r = kernel / 2;
    Tensor cur = chw;
    Tensor tmp(chw.shape);
    for (int pass = 0; pass < passes; ++pass) {
        // horizontal, window clipped at borders and normalized by actual width
        for (int k = 0; k < c; ++k)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
                    double acc = 0.0;
                    for (int i = x0; i <= x1; ++i) acc += static_cast<double>(cur.at(k, y, i));
                    tmp.at(k, y, x) = static_cast<float>(acc / (x1 - x0 + 1));
                }
        // vertical
        for (int k = 0; k < c; ++k)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
                    double acc = 0.0;
                    for (int i = y0; i <= y1; ++i) acc += static_cast<double>(tmp.at(k, i, x));
                    cur.at(k, y, x) = static_cast<float>(acc / (y1 - y0 + 1));
                }
    }
    return cur;
}

namespace {

// Pixel positions in descending saliency order; ties broken by row-major
// index so the schedule is deterministic.
std::vector<int64_t> saliency_order(const Tensor& saliency) {
    std::vector<int64_t> order(static_cast<size_t>(saliency.size()));
    std::iota(order.begin(), order.end(), int64_t{0});
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        return saliency.data[a] > saliency.data[b];
    });
    return order;
}

void check_curve_inputs(const Model& model, const Tensor& input, const Tensor& saliency) {
    if (saliency.rank() != 2 || saliency.dim(0) != input.dim(1) || saliency.dim(1) != input.dim(2))
        fail("saliency map " + shape_str(saliency.shape) + " must match input spatial size " +
             std::to_string(input.dim(1)) + "x" + std::to_string(input.dim(2)) +
             " (upsample it first)");
    if (input.shape != model.input_shape)
        fail("input " + shape_str(input.shape) + " does not match model input " +
             shape_str(model.input_shape));
}

std::vector<CurvePoint> pixel_curve(const Model& model, const Tensor& input,
                                    const Tensor& saliency, int class_index, Tensor start,
                                    const Tensor* reveal_from) {
    const int channels = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int64_t total = static_cast<int64_t>(h) * w;
    const int64_t step = (total + 99) / 100; // ceil(total / 100)
    const auto order = saliency_order(saliency);

    Tensor work = std::move(start);
    std::vector<CurvePoint> curve;
    curve.push_back({0.0, model_probs(model, work)[class_index]});
    int64_t done = 0;
    while (done < total) {
        const int64_t end = std::min(done + step, total);
        for (int64_t i = done; i < end; ++i) {
            const int64_t pos = order[static_cast<size_t>(i)];
            const int y = static_cast<int>(pos / w), x = static_cast<int>(pos % w);
            for (int c = 0; c < channels; ++c)
                work.at(c, y, x) = reveal_from ? reveal_from->at(c, y, x) : 0.0f;
        }
        done = end;
        curve.push_back({static_cast<double>(done) / static_cast<double>(total),
                         model_probs(model, work)[class_index]});
    }
    return curve;
}

} // namespace

std::vector<CurvePoint> deletion_curve(const Model& model, const Tensor& input,
                                       const Tensor& saliency, int class_index) {
    check_curve_inputs(model, input, saliency);
    return pixel_curve(model, input, saliency, class_index, input, nullptr);
}

double deletion_auc(const Model& model, const Tensor& input, const Tensor& saliency,
                    int class_index) {
    const auto curve = deletion_curve(model, input, saliency, class_index);
    return trapezoid_auc(curve);
}

std::vector<CurvePoint> insertion_curve(const Model& model, const Tensor& input,
                                        const Tensor& saliency, int class_index) {
    check_curve_inputs(model, input, saliency);
    Tensor baseline = box_blur(input, 11, 3);
    return pixel_curve(model, input, saliency, class_index, std::move(baseline), &input);
}

double insertion_auc(const Model& model, const Tensor& input, const Tensor& saliency,
                     int class_index) {
    const auto curve = insertion_curve(model, input, saliency, class_index);
    return trapezoid_auc(curve);
}

// ---------------------------------------------------------------------------
// Dataset evaluation.

void MetricReport::finalize() {
    const size_t n = rows.size();
    if (n == 0) return;
    std::vector<double> drops, dels, inss, cohs, compls, adccs;
    int64_t inc = 0;
    for (const ImageMetrics& r : rows) {
        drops.push_back(r.drop_pct);
        dels.push_back(r.deletion);
        inss.push_back(r.insertion);
        cohs.push_back(r.coherency);
        compls.push_back(r.complexity);
        adccs.push_back(r.adcc);
        inc += r.increase ? 1 : 0;
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    mean_drop_pct = mean(drops);
    increase_pct = 100.0 * static_cast<double>(inc) / static_cast<double>(n);
    mean_deletion = mean(dels);
    mean_insertion = mean(inss);
    mean_coherency = mean(cohs);
    mean_complexity = mean(compls);
    mean_adcc = mean(adccs);
}

namespace {

int resolve_thread_count(int requested, size_t jobs) {
    int threads = requested;
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads < 1) threads = 1;
        if (const char* env = std::getenv("RXAI_THREADS")) {
            const int cap = std::atoi(env);
            if (cap >= 1) threads = std::min(threads, cap);
        }
    }
    return std::min<int>(threads, static_cast<int>(jobs) > 0 ? static_cast<int>(jobs) : 1);
}

ImageMetrics evaluate_one(const Model& model, const SplitModel& split, const EvalSample& sample,
                          Method method, MaskKernel kernel) {
    const Tensor& x = sample.input;
    const int c = sample.class_index;
    const int in_h = x.dim(1), in_w = x.dim(2);

    SaliencyMap map = generate_map(method, model, split, x, c, kernel);
    Tensor up = upsample_map(map, in_h, in_w);
    SaliencyMap up_map = map;
    up_map.values = up;

    Tensor masked = hadamard(x, up);
    const double orig = model_probs(model, x)[c];
    const double dropped = model_probs(model, masked)[c];

    SaliencyMap map_on_masked = generate_map(method, model, split, masked, c, kernel);
    SaliencyMap up_map_on_masked = map_on_masked;
    up_map_on_masked.values = upsample_map(map_on_masked, in_h, in_w);

    ImageMetrics r;
    r.id = sample.id;
    r.class_index = c;
    const double orig_arr[] = {orig};
    const double mask_arr[] = {dropped};
    r.drop_pct = average_drop(orig_arr, mask_arr);
    r.increase = dropped > orig;
    r.coherency = coherency(up_map, up_map_on_masked);
    r.complexity = complexity(up_map);
    r.adcc = adcc(r.drop_pct / 100.0, r.coherency, r.complexity);
    r.deletion = deletion_auc(model, x, up, c);
    r.insertion = insertion_auc(model, x, up, c);
    return r;
}

} // namespace

MetricReport evaluate_method(const Model& model, const SplitModel& split,
                             std::span<const EvalSample> dataset, Method method,
                             MaskKernel kernel, int threads) {
    if (dataset.empty()) fail("evaluate_method: empty dataset");
    MetricReport report;
    report.method = method_name(method);
    report.kernel = mask_kernel_name(kernel);

    struct Slot {
        bool ok = false;
        ImageMetrics row;
        std::string error;
    };
    std::vector<Slot> slots(dataset.size());
    std::atomic<size_t> next{0};
    const int workers = resolve_thread_count(threads, dataset.size());

    auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= dataset.size()) return;
            try {
                slots[i].row = evaluate_one(model, split, dataset[i], method, kernel);
                slots[i].ok = true;
            } catch (const std::exception& e) {
                slots[i].error = dataset[i].id + ": " + e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (Slot& s : slots) { // dataset order, independent of completion order
        if (s.ok) {
            report.rows.push_back(std::move(s.row));
        } else {
            report.failures += 1;
            report.failure_messages.push_back(std::move(s.error));
        }
    }
    report.finalize();
    return report;
}

void write_report_csv(const MetricReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write report '" + path + "'");
    out << "# rxai-eval/1 method=" << report.method << " kernel=" << report.kernel << "\n";
    out << "image,class,drop_pct,inc,del_auc,ins_auc,coherency,complexity,adcc\n";
    for (const ImageMetrics& r : report.rows)
        out << r.id << ',' << r.class_index << ',' << fmt(r.drop_pct) << ',' << (r.increase ? 1 : 0)
            << ',' << fmt(r.deletion) << ',' << fmt(r.insertion) << ',' << fmt(r.coherency) << ','
            << fmt(r.complexity) << ',' << fmt(r.adcc) << '\n';
    out << "AGGREGATE," << report.rows.size() << ',' << fmt(report.mean_drop_pct) << ','
        << fmt(report.increase_pct) << ',' << fmt(report.mean_deletion) << ','
        << fmt(report.mean_insertion) << ',' << fmt(report.mean_coherency) << ','
        << fmt(report.mean_complexity) << ',' << fmt(report.mean_adcc) << '\n';
    if (!out) fail("short write on '" + path + "'");
}

std::string report_summary_text(const MetricReport& report) {
    std::string s;
    char line[256];
    std::snprintf(line, sizeof(line), "method %s (kernel %s): %zu images, %d failures\n",
                  report.method.c_str(), report.kernel.c_str(), report.rows.size(),
                  report.failures);
    s += line;
    std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %-8s %-8s %-8s %-8s\n", "Drop", "Inc", "Del",
                  "Ins", "Coher", "Compl", "ADCC");
    s += line;
    std::snprintf(line, sizeof(line), "%-8.2f %-8.2f %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f\n",
                  report.mean_drop_pct, report.increase_pct, report.mean_deletion,
                  report.mean_insertion, report.mean_coherency, report.mean_complexity,
                  report.mean_adcc);
    s += line;
    for (const std::string& msg : report.failure_messages) s += "skipped: " + msg + "\n";
    return s;
}

} // namespace rxai

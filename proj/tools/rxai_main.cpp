// rxai: saliency-map generation, ADCC-style evaluation and benchmarking for
// the bundled CNN inference core. See README.md for the full interface.

#include "rxai/bench.hpp"
#include "rxai/colormap.hpp"
#include "rxai/image.hpp"
#include "rxai/metrics.hpp"
#include "rxai/model.hpp"
#include "rxai/prng.hpp"
#include "rxai/saliency.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string model_path;
    int split = -1; // -1: last valid split point
    std::string out_dir;
};

rxai::SplitModel make_split(const rxai::Model& model, int requested) {
    if (requested >= 0) return rxai::split_model(model, requested);
    const auto points = rxai::valid_split_points(model);
    if (points.empty())
        throw std::runtime_error("model '" + model.name + "' has no valid split point");
    return rxai::split_model(model, points.back());
}

rxai::PreprocessConfig preprocess_for(const rxai::Model& model) {
    if (model.input_shape[1] != model.input_shape[2])
        throw std::runtime_error("model input " + rxai::shape_str(model.input_shape) +
                                 " is not square; preprocessing expects a square input");
    return rxai::PreprocessConfig::for_input(model.input_shape[1]);
}

int parse_class(const std::string& spec, const rxai::VecXf& probs) {
    if (spec == "argmax") return rxai::argmax_class(probs);
    const int c = std::stoi(spec);
    if (c < 0 || c >= static_cast<int>(probs.size()))
        throw std::runtime_error("class index " + spec + " out of range for " +
                                 std::to_string(probs.size()) + " classes");
    return c;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------------------

int cmd_explain(const CommonOpts& common, const std::string& method_name,
                const std::string& kernel_name, const std::string& class_spec,
                const std::string& image_path, uint64_t seed) {
    (void)seed; // generation is fully deterministic; the flag pins the contract
    const rxai::Method method = rxai::method_from_name(method_name);
    const rxai::MaskKernel kernel = rxai::mask_kernel_from_name(kernel_name);
    if (kernel != rxai::MaskKernel::Dirac && method != rxai::Method::Recipro)
        throw std::runtime_error("--kernel is only valid with --method recipro");

    const rxai::Model model = rxai::load_model(common.model_path);
    const rxai::SplitModel split = make_split(model, common.split);
    const rxai::PreprocessConfig cfg = preprocess_for(model);
    const rxai::ImageU8 raw = rxai::load_image(image_path);
    const rxai::Tensor input = rxai::preprocess_image(raw, cfg);

    const rxai::VecXf probs = rxai::model_probs(model, input);
    const int class_index = parse_class(class_spec, probs);
    const int predicted = rxai::argmax_class(probs);

    rxai::SaliencyMap map = rxai::generate_map(method, model, split, input, class_index, kernel);

    fs::create_directories(common.out_dir);
    const std::string base = (fs::path(common.out_dir) /
                              (stem_of(image_path) + "_" + std::string(rxai::method_name(method))))
                                 .string();

    rxai::write_pgm(base + "_map.pgm", map.values.dim(1), map.values.dim(0),
                    rxai::saliency_to_gray(map.values));

    const rxai::Tensor up = rxai::upsample_map(map, model.input_shape[1], model.input_shape[2]);
    const rxai::ImageU8 crop = rxai::preprocess_crop(raw, cfg);
    rxai::write_ppm(base + "_overlay.ppm", rxai::render_overlay(crop, up, 0.5f));

    json info;
    info["method"] = map.method;
    info["kernel"] = rxai::mask_kernel_name(kernel);
    info["class_index"] = class_index;
    info["predicted_class"] = predicted;
    info["softmax_score"] = static_cast<double>(probs[class_index]);
    info["degenerate"] = map.degenerate;
    info["split_index"] = split.split_index;
    info["model"] = model.name;
    info["image"] = fs::path(image_path).filename().string();
    std::ofstream sidecar(base + "_info.json");
    sidecar << info.dump(2) << '\n';
    if (!sidecar) throw std::runtime_error("cannot write '" + base + "_info.json'");

    std::cout << "wrote " << base << "_{map.pgm,overlay.ppm,info.json}\n";
    return 0;
}

// ---------------------------------------------------------------------------

std::map<std::string, int> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label manifest '" + path + "'");
    std::map<std::string, int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("label manifest '" + path + "': bad line '" + line +
                                     "' (want filename,class_index)");
        labels[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
    }
    return labels;
}

int cmd_eval(const CommonOpts& common, const std::string& methods_csv, const std::string& data_dir,
             const std::string& labels_path, const std::string& kernel_name, bool lenient) {
    const auto methods = rxai::parse_method_list(methods_csv);
    const rxai::MaskKernel kernel = rxai::mask_kernel_from_name(kernel_name);
    const rxai::Model model = rxai::load_model(common.model_path);
    const rxai::SplitModel split = make_split(model, common.split);
    const rxai::PreprocessConfig cfg = preprocess_for(model);
    const auto labels = load_labels(labels_path);

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(data_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .ppm images in '" + data_dir + "'");

    int unlabeled = 0;
    std::vector<rxai::EvalSample> dataset;
    for (const std::string& f : files) {
        const std::string name = fs::path(f).filename().string();
        const auto it = labels.find(name);
        if (it == labels.end()) {
            std::cerr << "skipping " << name << ": no label\n";
            ++unlabeled;
            continue;
        }
        rxai::EvalSample s;
        s.id = name;
        s.input = rxai::preprocess_image(rxai::load_image(f), cfg);
        s.class_index = it->second;
        dataset.push_back(std::move(s));
    }
    if (dataset.empty()) throw std::runtime_error("no labeled images in '" + data_dir + "'");

    fs::create_directories(common.out_dir);
    int failures = 0;
    for (const rxai::Method m : methods) {
        rxai::MetricReport report = rxai::evaluate_method(model, split, dataset, m, kernel);
        const std::string base =
            (fs::path(common.out_dir) / std::string(rxai::method_name(m))).string();
        rxai::write_report_csv(report, base + "_report.csv");
        std::string summary = rxai::report_summary_text(report);
        if (unlabeled > 0) summary += "unlabeled images skipped: " + std::to_string(unlabeled) + "\n";
        std::ofstream sf(base + "_summary.txt");
        sf << summary;
        std::cout << summary;
        failures += report.failures;
    }
    const int skipped = failures + unlabeled;
    if (skipped > 0) {
        std::cerr << skipped << " image(s) skipped\n";
        return lenient ? 0 : 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_bench(const CommonOpts& common, const std::string& methods_csv, int n, int warmup,
              uint64_t seed) {
    if (n < 1) throw std::runtime_error("bench: --n must be at least 1");
    if (warmup < 0) throw std::runtime_error("bench: --warmup must be nonnegative");
    const auto methods = rxai::parse_method_list(methods_csv);
    const rxai::Model model = rxai::load_model(common.model_path);
    const rxai::SplitModel split = make_split(model, common.split);

    std::vector<rxai::Tensor> inputs;
    inputs.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        inputs.push_back(rxai::seeded_input(model, seed + static_cast<uint64_t>(i)));

    std::vector<rxai::CostProfile> profiles;
    for (const rxai::Method m : methods)
        profiles.push_back(rxai::time_method(m, model, split, inputs, warmup));

    const std::string table = rxai::format_bench_table(profiles);
    std::cout << table;
    if (!common.out_dir.empty()) {
        fs::create_directories(common.out_dir);
        std::ofstream tf(fs::path(common.out_dir) / "bench.txt");
        tf << table;
        std::ofstream cf(fs::path(common.out_dir) / "bench.csv");
        cf << rxai::bench_csv(profiles);
        if (!tf || !cf) throw std::runtime_error("cannot write bench report");
    }
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_inspect(const std::string& model_path) {
    const rxai::Model model = rxai::load_model(model_path);
    const auto splits = rxai::valid_split_points(model);

    std::cout << "model " << model.name << "  input " << rxai::shape_str(model.input_shape)
              << "  parameters " << model.parameter_count() << "\n";
    std::cout << "idx  kind              output        params   split\n";
    std::vector<int> shape = model.input_shape;
    for (size_t i = 0; i < model.layers.size(); ++i) {
        const rxai::LayerSpec& l = model.layers[i];
        shape = rxai::layer_output_shape(l, shape);
        const int split_here = static_cast<int>(i) + 1;
        const bool ok = std::find(splits.begin(), splits.end(), split_here) != splits.end();
        char line[160];
        std::snprintf(line, sizeof(line), "%-4zu %-17s %-13s %-8lld %s\n", i,
                      rxai::layer_kind_name(l.kind), rxai::shape_str(shape).c_str(),
                      static_cast<long long>(l.parameter_count()),
                      ok ? ("* (--split " + std::to_string(split_here) + ")").c_str() : "");
        std::cout << line;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-free and baseline CAM saliency maps, ADCC metrics and benchmarks"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string method = "recipro", methods = "recipro", kernel = "dirac";
    std::string class_spec = "argmax", image_path, data_dir, labels_path;
    uint64_t seed = 0;
    int n = 100, warmup = 5;
    bool lenient = false;

    auto* explain = app.add_subcommand("explain", "Write saliency map, overlay and sidecar for one image");
    explain->add_option("--model", common.model_path, "model manifest path")->required();
    explain->add_option("--split", common.split, "split layer index (default: last valid)");
    explain->add_option("--method", method, "recipro|cam|grad|score|ablation|fake");
    explain->add_option("--kernel", kernel, "dirac|gauss3 (recipro only)");
    explain->add_option("--class", class_spec, "class index or 'argmax'");
    explain->add_option("--image", image_path, "input image (PPM P6)")->required();
    explain->add_option("--out", common.out_dir, "output directory")->required();
    explain->add_option("--seed", seed, "determinism seed");

    auto* eval = app.add_subcommand("eval", "Run the metric suite over a labeled image directory");
    eval->add_option("--model", common.model_path)->required();
    eval->add_option("--split", common.split);
    eval->add_option("--methods", methods, "comma-separated method list");
    eval->add_option("--kernel", kernel, "dirac|gauss3 (applies to recipro)");
    eval->add_option("--data", data_dir, "directory of .ppm images")->required();
    eval->add_option("--labels", labels_path, "label manifest: filename,class_index")->required();
    eval->add_option("--out", common.out_dir)->required();
    eval->add_flag("--lenient", lenient, "exit 0 even when images were skipped");

    auto* bench = app.add_subcommand("bench", "Time methods on synthetic inputs");
    bench->add_option("--model", common.model_path)->required();
    bench->add_option("--split", common.split);
    bench->add_option("--methods", methods);
    bench->add_option("--n", n, "number of timed inputs");
    bench->add_option("--warmup", warmup, "warmup runs excluded from statistics");
    bench->add_option("--out", common.out_dir, "report directory (optional)");
    bench->add_option("--seed", seed);

    auto* inspect = app.add_subcommand("inspect", "Print the layer table and valid split points");
    inspect->add_option("--model", common.model_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(explain))
            return cmd_explain(common, method, kernel, class_spec, image_path, seed);
        if (app.got_subcommand(eval))
            return cmd_eval(common, methods, data_dir, labels_path, kernel, lenient);
        if (app.got_subcommand(bench)) return cmd_bench(common, methods, n, warmup, seed);
        if (app.got_subcommand(inspect)) return cmd_inspect(common.model_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

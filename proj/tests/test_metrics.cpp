#include "rxai/metrics.hpp"

#include "rxai/image.hpp"
#include "rxai/model.hpp"
#include "rxai/prng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace rxai;

namespace {

// Zero weights: the output is the constant softmax of the bias, whatever the
// input looks like.
Model constant_model(float bias0) {
    Model m;
    m.name = "constant";
    m.input_shape = {3, 32, 32};
    m.layers = {LayerSpec::relu(), LayerSpec::global_avg_pool(), LayerSpec::linear(3, 2)};
    m.layers[2].bias->data[0] = bias0;
    return m;
}

SaliencyMap random_unit_map(int h, int w, uint64_t seed) {
    Tensor raw({h, w});
    SplitMix64 rng(seed);
    for (int64_t i = 0; i < raw.size(); ++i) raw.data[i] = rng.next_unit();
    return normalize_map(raw);
}

} // namespace

TEST_CASE("average drop arithmetic") {
    const double y1[] = {0.8}, o1[] = {0.8};
    CHECK(average_drop(y1, o1) == doctest::Approx(0.0));
    const double o2[] = {0.4};
    CHECK(average_drop(y1, o2) == doctest::Approx(50.0));
    const double y3[] = {0.5, 0.5}, o3[] = {0.75, 0.25};
    CHECK(average_drop(y3, o3) == doctest::Approx(25.0)); // the increase clamps to 0

    const double bad[] = {0.0};
    CHECK_THROWS_AS(average_drop(bad, o1), std::runtime_error);
    CHECK_THROWS_AS(average_drop(y3, o1), std::runtime_error);
}

TEST_CASE("average increase arithmetic") {
    const double y[] = {0.5, 0.5}, same[] = {0.5, 0.5}, mixed[] = {0.75, 0.25},
                 higher[] = {0.9, 0.8};
    CHECK(average_increase(y, same) == doctest::Approx(0.0));
    CHECK(average_increase(y, mixed) == doctest::Approx(50.0));
    CHECK(average_increase(y, higher) == doctest::Approx(100.0));
}

TEST_CASE("complexity is the mean map value") {
    SaliencyMap zeros;
    zeros.values = Tensor({4, 4});
    CHECK(complexity(zeros) == doctest::Approx(0.0));
    SaliencyMap ones;
    ones.values = Tensor::full({4, 4}, 1.0f);
    CHECK(complexity(ones) == doctest::Approx(1.0));
    CHECK(complexity(fake_cam(10, 10)) == doctest::Approx(0.99));

    SaliencyMap bad;
    bad.values = Tensor::full({2, 2}, 1.5f);
    CHECK_THROWS_AS(complexity(bad), std::runtime_error);
}

TEST_CASE("coherency is absolute pearson with a degenerate rule") {
    SaliencyMap a = random_unit_map(5, 5, 3);
    CHECK(coherency(a, a) == doctest::Approx(1.0));

    SaliencyMap inverted = a;
    inverted.values.data = 1.0f - a.values.data;
    CHECK(coherency(a, inverted) == doctest::Approx(1.0)); // |rho| = |-1|

    SaliencyMap flat;
    flat.values = Tensor::full({5, 5}, 0.4f);
    CHECK(coherency(a, flat) == doctest::Approx(0.0));
    CHECK(coherency(flat, a) == doctest::Approx(0.0));

    SaliencyMap other;
    other.values = Tensor({4, 4});
    CHECK_THROWS_AS(coherency(a, other), std::runtime_error);
}

TEST_CASE("adcc reproduces the published component rows") {
    CHECK(adcc(0.1569, 0.9668, 0.3290) == doctest::Approx(0.8084).epsilon(0.0013));
    CHECK(adcc(0.2613, 0.9383, 0.2027) == doctest::Approx(0.8166).epsilon(0.0013));
    CHECK(adcc(0.0, 1.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("adcc degenerates to zero outside its domain") {
    CHECK(adcc(0.5, 0.0, 0.5) == 0.0);
    CHECK(adcc(0.5, 0.9, 1.0) == 0.0);
    CHECK(adcc(1.0, 0.9, 0.5) == 0.0);
}

TEST_CASE("adcc is bounded by its harmonic-mean terms") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const double drop = rng.next_unit();
        const double coher = rng.next_unit();
        const double compl_ = rng.next_unit();
        const double v = adcc(drop, coher, compl_);
        CHECK(v <= 1.0);
        CHECK(v <= 3.0 * coher + 1e-12);
        CHECK(v <= 3.0 * (1.0 - compl_) + 1e-12);
        CHECK(v <= 3.0 * (1.0 - drop) + 1e-12);
    }
}

TEST_CASE("deletion curve of a constant model is flat at p") {
    const Model m = constant_model(0.7f);
    const Tensor input = seeded_input(m, 5);
    const double p = static_cast<double>(model_probs(m, input)[0]);
    const SaliencyMap map = random_unit_map(32, 32, 9);
    const double auc = deletion_auc(m, input, map.values, 0);
    CHECK(auc == doctest::Approx(p).epsilon(1e-6));
    const double ins = insertion_auc(m, input, map.values, 0);
    CHECK(ins == doctest::Approx(p).epsilon(1e-6));
}

TEST_CASE("deletion schedule on 32x32 is 11 px per step, 94 steps, endpoints exact") {
    const Model m = make_reference_model(42, "tiny8");
    const Tensor input = seeded_input(m, 1);
    const SaliencyMap map = random_unit_map(32, 32, 4);
    const auto curve = deletion_curve(m, input, map.values, 3);

    REQUIRE(curve.size() == 95); // start point + ceil(1024/11) = 94 steps
    CHECK(curve.front().fraction == 0.0);
    CHECK(curve.back().fraction == 1.0);
    CHECK(curve[93].fraction == doctest::Approx(1023.0 / 1024.0));

    CHECK(curve.front().score ==
          doctest::Approx(static_cast<double>(model_probs(m, input)[3])).epsilon(1e-9));
    const Tensor all_deleted(m.input_shape);
    CHECK(curve.back().score ==
          doctest::Approx(static_cast<double>(model_probs(m, all_deleted)[3])).epsilon(1e-9));
}

TEST_CASE("insertion ends on the original input exactly") {
    const Model m = make_reference_model(42, "tiny8");
    const Tensor input = seeded_input(m, 8);
    const SaliencyMap map = random_unit_map(32, 32, 6);
    const auto curve = insertion_curve(m, input, map.values, 2);
    // the last step reveals every pixel, bit for bit
    CHECK(curve.back().score == static_cast<double>(model_probs(m, input)[2]));
    // and the start is the blurred baseline
    const Tensor blurred = box_blur(input, 11, 3);
    CHECK(curve.front().score == static_cast<double>(model_probs(m, blurred)[2]));
}

TEST_CASE("curves reject maps at the wrong resolution") {
    const Model m = make_reference_model(42, "tiny8");
    const Tensor input = seeded_input(m, 1);
    const SaliencyMap small = random_unit_map(4, 4, 2);
    CHECK_THROWS_WITH_AS(deletion_auc(m, input, small.values, 0), doctest::Contains("upsample"),
                         std::runtime_error);
}

TEST_CASE("box blur keeps constants and overall mass") {
    Tensor flat = Tensor::full({3, 16, 16}, 0.25f);
    const Tensor out = box_blur(flat, 11, 3);
    CHECK(out.data.minCoeff() == doctest::Approx(0.25f).epsilon(1e-6));
    CHECK(out.data.maxCoeff() == doctest::Approx(0.25f).epsilon(1e-6));
    CHECK_THROWS_AS(box_blur(flat, 4, 1), std::runtime_error);
}

TEST_CASE("fake-cam evaluation separates drop from adcc") {
    const Model m = load_model(test::fixture("tiny8_s42.json"));
    const SplitModel split = split_model(m, 6);
    const PreprocessConfig cfg = PreprocessConfig::for_input(32);

    std::vector<EvalSample> dataset;
    EvalSample s;
    s.id = "img_a.ppm";
    s.input = preprocess_image(load_image(test::fixture("img_a.ppm")), cfg);
    s.class_index = 3;
    dataset.push_back(std::move(s));

    const MetricReport report = evaluate_method(m, split, dataset, Method::Fake);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.failures == 0);
    CHECK(report.mean_drop_pct < 1.0); // gamed metric: nearly no drop
    CHECK(report.mean_adcc < 0.05);    // honest metric: near zero
}

TEST_CASE("evaluate_method rejects empty datasets") {
    const Model m = make_reference_model(42, "tiny8");
    const SplitModel split = split_model(m, 6);
    CHECK_THROWS_AS(evaluate_method(m, split, {}, Method::Fake), std::runtime_error);
}

TEST_CASE("report rows recompute their own adcc") {
    const Model m = make_reference_model(42, "tiny8");
    const SplitModel split = split_model(m, 6);
    std::vector<EvalSample> dataset;
    for (uint64_t s = 0; s < 3; ++s)
        dataset.push_back({"synthetic_" + std::to_string(s), seeded_input(m, s),
                           static_cast<int>(s % 10)});
    const MetricReport report = evaluate_method(m, split, dataset, Method::Recipro);
    REQUIRE(report.rows.size() == 3);
    for (const ImageMetrics& r : report.rows) {
        CHECK(std::abs(r.adcc - adcc(r.drop_pct / 100.0, r.coherency, r.complexity)) < 1e-6);
        CHECK(r.drop_pct >= 0.0);
        CHECK(r.drop_pct <= 100.0);
        bool finite = std::isfinite(r.adcc) && std::isfinite(r.coherency) &&
                      std::isfinite(r.complexity) && std::isfinite(r.deletion) &&
                      std::isfinite(r.insertion);
        CHECK(finite);
    }
}

TEST_CASE("csv report has the versioned schema and an aggregate row") {
    const Model m = make_reference_model(42, "tiny8");
    const SplitModel split = split_model(m, 6);
    std::vector<EvalSample> dataset;
    dataset.push_back({"one", seeded_input(m, 1), 0});
    const MetricReport report = evaluate_method(m, split, dataset, Method::Grad);

    const auto path = (std::filesystem::temp_directory_path() / "rxai_report.csv").string();
    write_report_csv(report, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line.find("# rxai-eval/1") == 0);
    std::getline(in, line);
    CHECK(line == "image,class,drop_pct,inc,del_auc,ins_auc,coherency,complexity,adcc");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2); // one image + AGGREGATE
}

TEST_CASE("threaded evaluation merges rows in dataset order") {
    const Model m = make_reference_model(42, "tiny8");
    const SplitModel split = split_model(m, 6);
    std::vector<EvalSample> dataset;
    for (uint64_t s = 0; s < 6; ++s)
        dataset.push_back({"img" + std::to_string(s), seeded_input(m, s), 1});
    const MetricReport serial = evaluate_method(m, split, dataset, Method::Grad,
                                                MaskKernel::Dirac, 1);
    const MetricReport parallel = evaluate_method(m, split, dataset, Method::Grad,
                                                  MaskKernel::Dirac, 3);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].id == parallel.rows[i].id);
        CHECK(serial.rows[i].adcc == doctest::Approx(parallel.rows[i].adcc).epsilon(1e-12));
    }
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "sinefm/rng.hpp"
#include "sinefm/trainer.hpp"

using namespace sinefm;

namespace {

DatasetSpec small_class_spec(std::uint64_t seed = 1) {
    DatasetSpec spec;
    spec.kind = DatasetKind::SynthClass;
    spec.train_count = 64;
    spec.test_count = 32;
    spec.seed = seed;
    return spec;
}

// Small conv net for fast training tests.
ArchDescriptor mini_arch(bool sinefm) {
    ArchDescriptor desc = parse_descriptor("input 3 16 16\n"
                                           "conv 3 8 3 1 1\n"
                                           "relu\n"
                                           "pool\n"
                                           "conv 8 24 3 1 1\n"
                                           "relu\n"
                                           "gap\n"
                                           "dense 24 4\n");
    if (sinefm) {
        desc = convert_to_sinefm(desc, 8, 3, TransformFamily::Sinusoidal, 77);
    }
    return desc;
}

OptimConfig quick_optim(int epochs) {
    OptimConfig optim;
    optim.epochs = epochs;
    optim.batch = 16;
    optim.lr = 3e-3;
    return optim;
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("synthetic classification dataset is deterministic and balanced") {
    const auto a = make_dataset<float>(small_class_spec());
    const auto b = make_dataset<float>(small_class_spec());
    CHECK(a.train.images->data == b.train.images->data);
    CHECK(a.train.labels == b.train.labels);
    CHECK(a.train.count() == 64);
    CHECK(a.test.count() == 32);
    CHECK(a.train.height() == 16);
    CHECK(a.train.classes == 4);

    int per_class[4] = {};
    for (const auto l : a.train.labels) ++per_class[l];
    for (const int c : per_class) CHECK(c == 16);

    // Disjoint splits: test samples continue the index stream.
    const int chw = 3 * 16 * 16;
    const std::vector<float> first_train(a.train.images->data.begin(),
                                         a.train.images->data.begin() + chw);
    const std::vector<float> first_test(a.test.images->data.begin(),
                                        a.test.images->data.begin() + chw);
    CHECK(first_train != first_test);
}

TEST_CASE("synthetic segmentation dataset has binary masks") {
    DatasetSpec spec;
    spec.kind = DatasetKind::SynthSeg;
    spec.train_count = 8;
    spec.test_count = 4;
    spec.noise = 0.1;
    spec.seed = 3;
    const auto data = make_dataset<float>(spec);
    CHECK(data.train.segmentation);
    CHECK(data.train.height() == 32);
    CHECK(data.train.classes == 2);
    CHECK(data.train.labels.size() == 8u * 32 * 32);
    bool any_fg = false, any_bg = false;
    for (const auto l : data.train.labels) {
        CHECK(l >= 0);
        CHECK(l <= 1);
        any_fg = any_fg || l == 1;
        any_bg = any_bg || l == 0;
    }
    CHECK(any_fg);
    CHECK(any_bg);
}

TEST_CASE("batches copy samples and flips are seeded") {
    const auto data = make_dataset<float>(small_class_spec()).train;
    const Batch<float> plain = make_batch(data, {0, 1}, 0, false);
    const int chw = 3 * 16 * 16;
    for (int i = 0; i < chw; ++i) {
        CHECK(plain.images->data[i] == data.images->data[i]);
    }
    CHECK(plain.labels[0] == data.labels[0]);

    const Batch<float> aug1 = make_batch(data, {0, 1}, 9, true);
    const Batch<float> aug2 = make_batch(data, {0, 1}, 9, true);
    CHECK(aug1.images->data == aug2.images->data);
}

TEST_CASE("zero epochs leaves weights untouched and history empty") {
    const auto data = make_dataset<float>(small_class_spec()).train;
    Model<float> model = build<float>(mini_arch(true), 5);
    const auto before_conv = model.layers[0].params[0]->data;
    const auto before_combine = model.layers[3].params[1]->data;
    const History history = train(model, data, quick_optim(0), 1);
    CHECK(history.epochs.empty());
    CHECK(model.layers[0].params[0]->data == before_conv);
    CHECK(model.layers[3].params[1]->data == before_combine);
}

TEST_CASE("training reduces the loss and never mutates transform specs") {
    const auto data = make_dataset<float>(small_class_spec()).train;
    Model<float> model = build<float>(mini_arch(true), 5);

    std::vector<TransformSpec> specs_before;
    for (const auto& rt : model.layers) {
        if (rt.transform) specs_before.push_back(*rt.transform);
    }
    REQUIRE_FALSE(specs_before.empty());

    const History history = train(model, data, quick_optim(4), 1);
    REQUIRE(history.epochs.size() == 4);
    CHECK(history.epochs.back().loss < history.epochs.front().loss);

    std::vector<TransformSpec> specs_after;
    for (const auto& rt : model.layers) {
        if (rt.transform) specs_after.push_back(*rt.transform);
    }
    CHECK(specs_before == specs_after);

    const std::string csv = history.to_csv();
    CHECK(csv.find("epoch,lr,loss,metric\n") == 0);
}

TEST_CASE("training is reproducible bit-exactly with identical seeds") {
    const auto data = make_dataset<double>(small_class_spec()).train;
    Model<double> a = build<double>(mini_arch(true), 5);
    Model<double> b = build<double>(mini_arch(true), 5);
    const History ha = train(a, data, quick_optim(2), 7);
    const History hb = train(b, data, quick_optim(2), 7);
    CHECK(ha.epochs.back().loss == hb.epochs.back().loss);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        for (std::size_t t = 0; t < a.layers[i].params.size(); ++t) {
            CHECK(a.layers[i].params[t]->data == b.layers[i].params[t]->data);
        }
    }
}

TEST_CASE("exploding updates abort with diagnostics") {
    const auto data = make_dataset<float>(small_class_spec()).train;
    Model<float> model = build<float>(mini_arch(false), 5);
    OptimConfig optim = quick_optim(3);
    optim.algorithm = OptimAlgorithm::SgdMomentum;
    optim.lr = 1e18;
    try {
        train(model, data, optim, 1);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        CHECK(std::string(e.what()).find("layer") != std::string::npos);
    }
}

TEST_CASE("sgd-momentum also trains") {
    const auto data = make_dataset<float>(small_class_spec()).train;
    Model<float> model = build<float>(mini_arch(true), 5);
    OptimConfig optim = quick_optim(3);
    optim.algorithm = OptimAlgorithm::SgdMomentum;
    optim.lr = 0.02;
    const History history = train(model, data, optim, 1);
    CHECK(history.epochs.back().loss < history.epochs.front().loss);
}

TEST_CASE("evaluate is pure and thread-count invariant") {
    const auto split = make_dataset<float>(small_class_spec());
    Model<float> model = build<float>(mini_arch(true), 5);
    const EvalResult a = evaluate(model, split.test);
    const EvalResult b = evaluate(model, split.test);
    CHECK(a.confusion.counts == b.confusion.counts);
    CHECK(a.metrics.oa == b.metrics.oa);
    const EvalResult c = evaluate(model, split.test, 4);
    CHECK(a.confusion.counts == c.confusion.counts);
}

TEST_CASE("ablation table is deterministic and shaped by families x trials") {
    const std::vector<TransformFamily> families = {TransformFamily::Sinusoidal,
                                                   TransformFamily::GaussianRBF};
    DatasetSpec data = small_class_spec();
    data.train_count = 32;
    data.test_count = 16;
    const ArchDescriptor base = mini_arch(false);
    const AblationTable t1 = ablate_families<float>(base, families, data, quick_optim(1), 2, 11);
    const AblationTable t2 = ablate_families<float>(base, families, data, quick_optim(1), 2, 11);
    CHECK(t1.to_csv() == t2.to_csv());
    CHECK(t1.rows.size() == 4);
    CHECK(t1.summary.size() == 4);
    CHECK(t1.to_csv().find("family,trial,metric\n") == 0);
    CHECK_THROWS_AS(
        ablate_families<float>(base, families, data, quick_optim(1), 0, 11), ArgumentError);
}

TEST_CASE("sweep emits one point per value and tracks parameter counts") {
    DatasetSpec data = small_class_spec();
    data.train_count = 32;
    data.test_count = 16;
    const ArchDescriptor base = mini_arch(false);
    const SweepCurve fanout = sweep_hyperparams<float>(SweepAxis::Fanout, {"1", "2"}, base, data,
                                                       quick_optim(1), 13);
    CHECK(fanout.points.size() == 2);

    const SweepCurve cs = sweep_hyperparams<float>(SweepAxis::SeedChannels, {"1", "4", "8"}, base,
                                                   data, quick_optim(1), 13);
    REQUIRE(cs.points.size() == 3);
    CHECK(cs.points[0].params < cs.points[1].params);
    CHECK(cs.points[1].params < cs.points[2].params);

    const SweepCurve omega = sweep_hyperparams<float>(
        SweepAxis::OmegaBounds, {"0:1", "1:2"}, base, data, quick_optim(1), 13);
    const SweepCurve omega2 = sweep_hyperparams<float>(
        SweepAxis::OmegaBounds, {"0:1", "1:2"}, base, data, quick_optim(1), 13);
    CHECK(omega.to_csv() == omega2.to_csv());
    CHECK(omega.to_csv().find("axis,value,metric,params\n") == 0);

    CHECK_THROWS_AS(sweep_hyperparams<float>(SweepAxis::OmegaBounds, {"nonsense"}, base, data,
                                             quick_optim(1), 13),
                    ArgumentError);
    CHECK_THROWS_AS(sweep_hyperparams<float>(SweepAxis::Fanout, {}, base, data, quick_optim(1), 13),
                    ArgumentError);
}

TEST_CASE("image folder datasets load PGM, PPM and PNG rasters") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "sinefm_imgfolder_test";
    fs::create_directories(dir);

    RasterImage rgb;
    rgb.width = 8;
    rgb.height = 8;
    rgb.channels = 3;
    rgb.pixels.resize(8 * 8 * 3);
    RasterImage mask;
    mask.width = 8;
    mask.height = 8;
    mask.channels = 1;
    mask.pixels.resize(8 * 8);
    Xoshiro256ss rng(21);
    for (auto& p : rgb.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
        mask.pixels[i] = static_cast<std::uint8_t>(i % 3);
    }

    write_ppm((dir / "a.ppm").string(), rgb);
    write_pgm((dir / "a.mask.pgm").string(), mask);
    write_png((dir / "b.png").string(), rgb);
    write_png((dir / "b.mask.png").string(), mask);

    RasterImage gray;
    gray.width = 8;
    gray.height = 8;
    gray.channels = 1;
    gray.pixels.assign(64, 128);
    write_pgm((dir / "c.pgm").string(), gray);
    write_pgm((dir / "c.mask.pgm").string(), mask);

    DatasetSpec spec;
    spec.kind = DatasetKind::ImageFolder;
    spec.path = dir.string();
    spec.train_count = 2;
    const auto split = make_dataset<float>(spec);
    CHECK(split.train.count() == 2);
    CHECK(split.test.count() == 1);
    CHECK(split.train.classes == 3);
    CHECK(split.train.segmentation);
    CHECK(split.train.labels[1] == 1);

    // PNG pixel round trip must be exact.
    const RasterImage back = read_raster((dir / "b.png").string());
    CHECK(back.pixels == rgb.pixels);

    fs::remove((dir / "a.mask.pgm"));
    CHECK_THROWS_AS(make_dataset<float>(spec), ValidationError);
    fs::remove_all(dir);
}

} // TEST_SUITE

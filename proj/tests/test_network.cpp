#include <doctest.h>

#include <variant>

#include "sinefm/cost.hpp"
#include "sinefm/network.hpp"
#include "sinefm/rng.hpp"

using namespace sinefm;

namespace {

TensorPtr<float> random_input(Shape s, std::uint64_t seed) {
    Xoshiro256ss rng(seed);
    auto t = make_tensor<float>(s);
    for (auto& v : t->data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

int count_convs(const ArchDescriptor& desc) {
    int n = 0;
    for (const auto& layer : desc.layers) {
        if (std::holds_alternative<ConvSpec>(layer) ||
            std::holds_alternative<SineFMConfig>(layer)) {
            ++n;
        }
    }
    return n;
}

} // namespace

TEST_SUITE("network") {

TEST_CASE("tiny-vgg builds with six conv layers and four logits") {
    const ArchDescriptor desc = tiny_vgg();
    CHECK(count_convs(desc) == 6);
    Model<float> model = build<float>(desc, 1);
    auto logits = predict(model, random_input(Shape{2, 3, 32, 32}, 2));
    CHECK(logits->shape == Shape{2, 4, 1, 1});
}

TEST_CASE("build is deterministic") {
    const ArchDescriptor desc = tiny_vgg();
    Model<float> a = build<float>(desc, 42);
    Model<float> b = build<float>(desc, 42);
    REQUIRE(a.layers.size() == b.layers.size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        REQUIRE(a.layers[i].params.size() == b.layers[i].params.size());
        for (std::size_t t = 0; t < a.layers[i].params.size(); ++t) {
            CHECK(a.layers[i].params[t]->data == b.layers[i].params[t]->data);
        }
    }
    Model<float> c = build<float>(desc, 43);
    CHECK(a.layers[0].params[0]->data != c.layers[0].params[0]->data);
}

TEST_CASE("channel-chain validation names the offending layer") {
    const std::string text = "input 3 16 16\n"
                             "conv 3 8 3 1 1\n"
                             "relu\n"
                             "pool\n"
                             "conv 16 8 3 1 1\n"; // wrong c_in at index 3
    const ArchDescriptor desc = parse_descriptor(text);
    try {
        trace_shapes(desc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("layer 3") != std::string::npos);
    }
}

TEST_CASE("descriptor text round trip is bit-exact") {
    for (const char* name : {"tiny-vgg", "tiny-resnet", "tiny-unet", "resnet50"}) {
        const ArchDescriptor desc = *builtin_arch(name);
        const std::string text = format_descriptor(desc);
        const ArchDescriptor reparsed = parse_descriptor(text);
        CHECK(reparsed == desc);
        CHECK(format_descriptor(reparsed) == text);
    }
    const ArchDescriptor converted = convert_to_sinefm(tiny_vgg(), 16, 5,
                                                       TransformFamily::HermitePoly, 97);
    const std::string text = format_descriptor(converted);
    CHECK(parse_descriptor(text) == converted);
}

TEST_CASE("descriptor parser accepts comments and rejects junk") {
    const ArchDescriptor desc = parse_descriptor("# a comment\n"
                                                 "input 3 8 8\n"
                                                 "\n"
                                                 "conv 3 4 3 1 1\n"
                                                 "# trailing comment\n");
    CHECK(desc.layers.size() == 1);
    CHECK_THROWS_AS(parse_descriptor("input 3 8 8\nwarp 1 2\n"), FormatError);
    CHECK_THROWS_AS(parse_descriptor("conv 3 4 3 1 1\n"), FormatError); // no input header
    CHECK_THROWS_AS(parse_descriptor("input 3 8 8\nsinefm 3 8 2 3 1 1 3 fourier 9\n"),
                    FormatError);
}

TEST_CASE("conversion is shape-transparent at every layer boundary") {
    for (const char* name : {"tiny-vgg", "tiny-resnet", "tiny-unet"}) {
        const ArchDescriptor original = *builtin_arch(name);
        const ArchDescriptor converted = convert_to_sinefm(original, 16, 5,
                                                           TransformFamily::Sinusoidal, 7);
        const auto a = trace_shapes(original, 2);
        const auto b = trace_shapes(converted, 2);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == b[i]);
        }
    }
}

TEST_CASE("conversion is idempotent and leaves small convs standard") {
    const ArchDescriptor once = convert_to_sinefm(tiny_unet(), 16, 5,
                                                  TransformFamily::Sinusoidal, 7);
    const ArchDescriptor twice = convert_to_sinefm(once, 16, 5, TransformFamily::Sinusoidal, 7);
    CHECK(once == twice);

    // tiny-unet's first conv is 3->16: c_out <= c_s leaves it untouched.
    CHECK(std::holds_alternative<ConvSpec>(once.layers[0]));
    // 16->32 is converted.
    CHECK(std::holds_alternative<SineFMConfig>(once.layers[3]));
}

TEST_CASE("per-layer conversion seeds are unique substreams of the master") {
    const ArchDescriptor converted = convert_to_sinefm(tiny_vgg(), 16, 5,
                                                       TransformFamily::Sinusoidal, 1234);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < converted.layers.size(); ++i) {
        if (const auto* s = std::get_if<SineFMConfig>(&converted.layers[i])) {
            CHECK(s->seed == substream(1234, i));
            seeds.push_back(s->seed);
        }
    }
    REQUIRE(seeds.size() == 6);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (std::size_t j = i + 1; j < seeds.size(); ++j) {
            CHECK(seeds[i] != seeds[j]);
        }
    }
}

TEST_CASE("duplicate sinefm seeds fail validation") {
    ArchDescriptor desc;
    desc.c = 3;
    desc.h = 8;
    desc.w = 8;
    SineFMConfig a;
    a.c_in = 3;
    a.c_out = 8;
    a.c_s = 2;
    a.fanout = 2;
    a.seed = 5;
    SineFMConfig b = a;
    b.c_in = 8;
    desc.layers.emplace_back(a);
    desc.layers.emplace_back(b);
    CHECK_THROWS_AS(trace_shapes(desc), ValidationError);
}

TEST_CASE("converted tiny-resnet uses far fewer learnable parameters") {
    const ArchDescriptor original = tiny_resnet();
    const ArchDescriptor converted = convert_to_sinefm(original, 16, 5,
                                                       TransformFamily::Sinusoidal, 3);
    const auto orig_cost = model_cost(original, 32, 32);
    const auto conv_cost = model_cost(converted, 32, 32);
    CHECK(conv_cost.total_params * 3 < orig_cost.total_params);
}

TEST_CASE("predict shapes and determinism") {
    Model<float> unet = build<float>(tiny_unet(), 9);
    auto map = predict(unet, random_input(Shape{1, 3, 32, 32}, 10));
    CHECK(map->shape == Shape{1, 2, 32, 32});

    Model<float> vgg = build<float>(convert_to_sinefm(tiny_vgg(), 16, 5,
                                                      TransformFamily::Sinusoidal, 11),
                                    12);
    auto x = random_input(Shape{2, 3, 32, 32}, 13);
    auto y1 = predict(vgg, x);
    auto y2 = predict(vgg, x);
    CHECK(y1->data == y2->data);

    CHECK_THROWS_AS(predict(vgg, random_input(Shape{1, 3, 16, 16}, 14)), DimensionError);
}

TEST_CASE("residual blocks require matching shapes") {
    const std::string bad = "input 3 8 8\n"
                            "resbegin\n"
                            "conv 3 8 3 1 1\n"
                            "resend\n";
    CHECK_THROWS_AS(trace_shapes(parse_descriptor(bad)), ValidationError);

    const std::string dangling = "input 3 8 8\nresbegin\nconv 3 3 3 1 1\n";
    CHECK_THROWS_AS(trace_shapes(parse_descriptor(dangling)), ValidationError);

    const std::string stray = "input 3 8 8\nresend\n";
    CHECK_THROWS_AS(trace_shapes(parse_descriptor(stray)), ValidationError);
}

TEST_CASE("residual projection runs and changes shape") {
    const std::string text = "input 3 8 8\n"
                             "conv 3 4 3 1 1\n"
                             "resbegin proj 8 2\n"
                             "conv 4 8 3 2 1\n"
                             "resend\n";
    const ArchDescriptor desc = parse_descriptor(text);
    const auto shapes = trace_shapes(desc);
    CHECK(shapes.back() == Shape{1, 8, 4, 4});
    Model<float> model = build<float>(desc, 21);
    auto y = predict(model, random_input(Shape{1, 3, 8, 8}, 22));
    CHECK(y->shape == Shape{1, 8, 4, 4});
    CHECK(format_descriptor(parse_descriptor(text)) == format_descriptor(desc));
}

TEST_CASE("resnet50 descriptor matches the reference parameter count") {
    const ArchDescriptor desc = resnet50();
    const auto cost = model_cost(desc, 224, 224);
    // torchvision resnet50: 25.557M parameters.
    CHECK(cost.total_params > 25000000);
    CHECK(cost.total_params < 26000000);
}

TEST_CASE("builtin arch lookup") {
    CHECK(builtin_arch("tiny-vgg").has_value());
    CHECK_FALSE(builtin_arch("mega-vgg").has_value());
}

} // TEST_SUITE

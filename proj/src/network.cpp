#include "sinefm/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sinefm/ops.hpp"
#include "sinefm/rng.hpp"

namespace sinefm {

namespace {

[[noreturn]] void layer_error(std::size_t index, const std::string& message) {
    throw ValidationError("layer " + std::to_string(index) + ": " + message);
}

int conv_out_extent(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

} // namespace

ArchDescriptor parse_descriptor(const std::string& text) {
    ArchDescriptor desc;
    bool have_input = false;
    std::istringstream stream(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok[0] == '#') continue;
        auto want_int = [&](const char* what) {
            long long v;
            if (!(ls >> v)) {
                throw FormatError("line " + std::to_string(lineno) + ": missing " + what);
            }
            return static_cast<int>(v);
        };
        if (tok == "input") {
            desc.c = want_int("channels");
            desc.h = want_int("height");
            desc.w = want_int("width");
            have_input = true;
        } else if (tok == "conv") {
            ConvSpec s;
            s.c_in = want_int("c_in");
            s.c_out = want_int("c_out");
            s.kernel = want_int("kernel");
            s.stride = want_int("stride");
            s.pad = want_int("pad");
            desc.layers.emplace_back(s);
        } else if (tok == "sinefm") {
            SineFMConfig s;
            s.c_in = want_int("c_in");
            s.c_out = want_int("c_out");
            s.c_s = want_int("c_s");
            s.kernel = want_int("kernel");
            s.stride = want_int("stride");
            s.padding = want_int("pad");
            s.fanout = want_int("fanout");
            std::string fam;
            if (!(ls >> fam)) {
                throw FormatError("line " + std::to_string(lineno) + ": missing family");
            }
            const auto family = family_from_name(fam);
            if (!family) {
                throw FormatError("line " + std::to_string(lineno) + ": unknown family '" + fam +
                                  "'");
            }
            s.family = *family;
            unsigned long long seed;
            if (!(ls >> seed)) {
                throw FormatError("line " + std::to_string(lineno) + ": missing seed");
            }
            s.seed = seed;
            desc.layers.emplace_back(s);
        } else if (tok == "pool") {
            desc.layers.emplace_back(PoolSpec{});
        } else if (tok == "up") {
            desc.layers.emplace_back(UpsampleSpec{});
        } else if (tok == "relu") {
            desc.layers.emplace_back(ReluSpec{});
        } else if (tok == "gap") {
            desc.layers.emplace_back(GapSpec{});
        } else if (tok == "dense") {
            DenseSpec s;
            s.in = want_int("in");
            s.classes = want_int("classes");
            desc.layers.emplace_back(s);
        } else if (tok == "seghead") {
            SegHeadSpec s;
            s.in = want_int("in");
            s.classes = want_int("classes");
            desc.layers.emplace_back(s);
        } else if (tok == "resbegin") {
            ResBeginSpec s;
            std::string proj;
            if (ls >> proj) {
                if (proj != "proj") {
                    throw FormatError("line " + std::to_string(lineno) +
                                      ": expected 'proj' after resbegin, got '" + proj + "'");
                }
                s.projection = true;
                s.c_out = want_int("proj c_out");
                s.stride = want_int("proj stride");
            }
            desc.layers.emplace_back(s);
        } else if (tok == "resend") {
            desc.layers.emplace_back(ResEndSpec{});
        } else {
            throw FormatError("line " + std::to_string(lineno) + ": unknown layer '" + tok + "'");
        }
    }
    if (!have_input) {
        throw FormatError("descriptor is missing the 'input C H W' header line");
    }
    return desc;
}

std::string format_descriptor(const ArchDescriptor& desc) {
    std::ostringstream out;
    out << "input " << desc.c << " " << desc.h << " " << desc.w << "\n";
    for (const auto& layer : desc.layers) {
        std::visit(
            [&out](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, ConvSpec>) {
                    out << "conv " << s.c_in << " " << s.c_out << " " << s.kernel << " "
                        << s.stride << " " << s.pad << "\n";
                } else if constexpr (std::is_same_v<S, SineFMConfig>) {
                    out << "sinefm " << s.c_in << " " << s.c_out << " " << s.c_s << " " << s.kernel
                        << " " << s.stride << " " << s.padding << " " << s.fanout << " "
                        << family_name(s.family) << " " << s.seed << "\n";
                } else if constexpr (std::is_same_v<S, DenseSpec>) {
                    out << "dense " << s.in << " " << s.classes << "\n";
                } else if constexpr (std::is_same_v<S, SegHeadSpec>) {
                    out << "seghead " << s.in << " " << s.classes << "\n";
                } else if constexpr (std::is_same_v<S, ResBeginSpec>) {
                    if (s.projection) {
                        out << "resbegin proj " << s.c_out << " " << s.stride << "\n";
                    } else {
                        out << "resbegin\n";
                    }
                } else if constexpr (std::is_same_v<S, PoolSpec>) {
                    out << "pool\n";
                } else if constexpr (std::is_same_v<S, UpsampleSpec>) {
                    out << "up\n";
                } else if constexpr (std::is_same_v<S, ReluSpec>) {
                    out << "relu\n";
                } else if constexpr (std::is_same_v<S, GapSpec>) {
                    out << "gap\n";
                } else {
                    out << "resend\n";
                }
            },
            layer);
    }
    return out.str();
}

ArchDescriptor load_descriptor(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open descriptor file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_descriptor(buf.str());
}

void save_descriptor(const ArchDescriptor& desc, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write descriptor file: " + path);
    }
    out << format_descriptor(desc);
}

std::vector<Shape> trace_shapes(const ArchDescriptor& desc, int n) {
    if (desc.c < 1 || desc.h < 1 || desc.w < 1) {
        throw ValidationError("descriptor input shape must be positive, got input " +
                              std::to_string(desc.c) + " " + std::to_string(desc.h) + " " +
                              std::to_string(desc.w));
    }
    std::vector<Shape> shapes;
    shapes.reserve(desc.layers.size());
    Shape cur{n, desc.c, desc.h, desc.w};
    std::vector<std::pair<std::size_t, Shape>> res_stack; // (resbegin index, shortcut shape)
    std::vector<std::uint64_t> seen_seeds;
    for (std::size_t i = 0; i < desc.layers.size(); ++i) {
        const LayerSpec& layer = desc.layers[i];
        if (const auto* s = std::get_if<ConvSpec>(&layer)) {
            if (s->c_in != cur.c) {
                layer_error(i, "conv expects " + std::to_string(s->c_in) + " input channels, chain has " +
                                   std::to_string(cur.c));
            }
            const int ho = conv_out_extent(cur.h, s->kernel, s->stride, s->pad);
            const int wo = conv_out_extent(cur.w, s->kernel, s->stride, s->pad);
            if (ho < 1 || wo < 1) layer_error(i, "conv output would be empty");
            cur = Shape{n, s->c_out, ho, wo};
        } else if (const auto* s = std::get_if<SineFMConfig>(&layer)) {
            if (s->c_in != cur.c) {
                layer_error(i, "sinefm expects " + std::to_string(s->c_in) +
                                   " input channels, chain has " + std::to_string(cur.c));
            }
            if (s->c_s < 1 || s->c_s > s->c_out) layer_error(i, "sinefm requires 1 <= c_s <= c_out");
            if (s->fanout < 1) layer_error(i, "sinefm requires fanout >= 1");
            if (s->kernel % 2 == 0) layer_error(i, "sinefm kernel must be odd");
            for (const std::uint64_t seen : seen_seeds) {
                if (seen == s->seed) layer_error(i, "duplicate sinefm layer seed");
            }
            seen_seeds.push_back(s->seed);
            const int ho = conv_out_extent(cur.h, s->kernel, s->stride, s->padding);
            const int wo = conv_out_extent(cur.w, s->kernel, s->stride, s->padding);
            if (ho < 1 || wo < 1) layer_error(i, "sinefm output would be empty");
            cur = Shape{n, s->c_out, ho, wo};
        } else if (std::holds_alternative<PoolSpec>(layer)) {
            if (cur.h < 2 || cur.w < 2) layer_error(i, "pool needs spatial extents >= 2");
            cur.h /= 2;
            cur.w /= 2;
        } else if (std::holds_alternative<UpsampleSpec>(layer)) {
            cur.h *= 2;
            cur.w *= 2;
        } else if (std::holds_alternative<ReluSpec>(layer)) {
            // shape unchanged
        } else if (std::holds_alternative<GapSpec>(layer)) {
            cur.h = 1;
            cur.w = 1;
        } else if (const auto* s = std::get_if<DenseSpec>(&layer)) {
            if (cur.h != 1 || cur.w != 1) layer_error(i, "dense requires 1x1 spatial input (use gap)");
            if (s->in != cur.c) {
                layer_error(i, "dense expects " + std::to_string(s->in) + " inputs, chain has " +
                                   std::to_string(cur.c));
            }
            cur = Shape{n, s->classes, 1, 1};
        } else if (const auto* s = std::get_if<SegHeadSpec>(&layer)) {
            if (s->in != cur.c) {
                layer_error(i, "seghead expects " + std::to_string(s->in) + " inputs, chain has " +
                                   std::to_string(cur.c));
            }
            cur.c = s->classes;
        } else if (const auto* s = std::get_if<ResBeginSpec>(&layer)) {
            Shape shortcut = cur;
            if (s->projection) {
                if (s->stride < 1) layer_error(i, "projection stride must be positive");
                shortcut.c = s->c_out;
                shortcut.h = (cur.h - 1) / s->stride + 1;
                shortcut.w = (cur.w - 1) / s->stride + 1;
            }
            res_stack.emplace_back(i, shortcut);
        } else if (std::holds_alternative<ResEndSpec>(layer)) {
            if (res_stack.empty()) layer_error(i, "resend without matching resbegin");
            const Shape shortcut = res_stack.back().second;
            res_stack.pop_back();
            if (!(shortcut == cur)) {
                layer_error(i, "residual shapes differ: main " + to_string(cur) + " vs shortcut " +
                                   to_string(shortcut));
            }
        }
        shapes.push_back(cur);
    }
    if (!res_stack.empty()) {
        layer_error(res_stack.back().first, "resbegin without matching resend");
    }
    return shapes;
}

ArchDescriptor tiny_vgg(int classes, int h, int w) {
    ArchDescriptor d;
    d.c = 3;
    d.h = h;
    d.w = w;
    auto stage = [&d](int c_in, int c_out) {
        d.layers.emplace_back(ConvSpec{c_in, c_out, 3, 1, 1});
        d.layers.emplace_back(ReluSpec{});
        d.layers.emplace_back(ConvSpec{c_out, c_out, 3, 1, 1});
        d.layers.emplace_back(ReluSpec{});
        d.layers.emplace_back(PoolSpec{});
    };
    stage(3, 32);
    stage(32, 64);
    stage(64, 128);
    d.layers.emplace_back(GapSpec{});
    d.layers.emplace_back(DenseSpec{128, classes});
    return d;
}

ArchDescriptor tiny_resnet(int classes, int h, int w) {
    ArchDescriptor d;
    d.c = 3;
    d.h = h;
    d.w = w;
    auto res_stage = [&d](int c) {
        d.layers.emplace_back(ResBeginSpec{});
        d.layers.emplace_back(ConvSpec{c, c, 3, 1, 1});
        d.layers.emplace_back(ReluSpec{});
        d.layers.emplace_back(ConvSpec{c, c, 3, 1, 1});
        d.layers.emplace_back(ResEndSpec{});
        d.layers.emplace_back(ReluSpec{});
    };
    d.layers.emplace_back(ConvSpec{3, 32, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(ConvSpec{32, 64, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    res_stage(64);
    d.layers.emplace_back(PoolSpec{});
    d.layers.emplace_back(ConvSpec{64, 128, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    res_stage(128);
    d.layers.emplace_back(PoolSpec{});
    d.layers.emplace_back(GapSpec{});
    d.layers.emplace_back(DenseSpec{128, classes});
    return d;
}

ArchDescriptor tiny_unet(int classes, int h, int w) {
    ArchDescriptor d;
    d.c = 3;
    d.h = h;
    d.w = w;
    d.layers.emplace_back(ConvSpec{3, 16, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(PoolSpec{});
    d.layers.emplace_back(ConvSpec{16, 32, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(PoolSpec{});
    d.layers.emplace_back(ConvSpec{32, 64, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(UpsampleSpec{});
    d.layers.emplace_back(ConvSpec{64, 32, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(UpsampleSpec{});
    d.layers.emplace_back(ConvSpec{32, 16, 3, 1, 1});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(SegHeadSpec{16, classes});
    return d;
}

ArchDescriptor resnet50(int classes, int h, int w) {
    ArchDescriptor d;
    d.c = 3;
    d.h = h;
    d.w = w;
    d.layers.emplace_back(ConvSpec{3, 64, 7, 2, 3});
    d.layers.emplace_back(ReluSpec{});
    d.layers.emplace_back(PoolSpec{});
    int c_in = 64;
    const int stage_width[4] = {64, 128, 256, 512};
    const int stage_blocks[4] = {3, 4, 6, 3};
    for (int stage = 0; stage < 4; ++stage) {
        const int width = stage_width[stage];
        const int c_out = width * 4;
        for (int block = 0; block < stage_blocks[stage]; ++block) {
            const int stride = (stage > 0 && block == 0) ? 2 : 1;
            if (block == 0) {
                d.layers.emplace_back(ResBeginSpec{true, c_out, stride});
            } else {
                d.layers.emplace_back(ResBeginSpec{});
            }
            d.layers.emplace_back(ConvSpec{c_in, width, 1, 1, 0});
            d.layers.emplace_back(ReluSpec{});
            d.layers.emplace_back(ConvSpec{width, width, 3, stride, 1});
            d.layers.emplace_back(ReluSpec{});
            d.layers.emplace_back(ConvSpec{width, c_out, 1, 1, 0});
            d.layers.emplace_back(ResEndSpec{});
            d.layers.emplace_back(ReluSpec{});
            c_in = c_out;
        }
    }
    d.layers.emplace_back(GapSpec{});
    d.layers.emplace_back(DenseSpec{2048, classes});
    return d;
}

std::optional<ArchDescriptor> builtin_arch(const std::string& name, int h, int w, int classes) {
    if (name == "tiny-vgg") {
        return tiny_vgg(classes > 0 ? classes : 4, h > 0 ? h : 32, w > 0 ? w : 32);
    }
    if (name == "tiny-resnet") {
        return tiny_resnet(classes > 0 ? classes : 4, h > 0 ? h : 32, w > 0 ? w : 32);
    }
    if (name == "tiny-unet") {
        return tiny_unet(classes > 0 ? classes : 2, h > 0 ? h : 32, w > 0 ? w : 32);
    }
    if (name == "resnet50") {
        return resnet50(classes > 0 ? classes : 1000, h > 0 ? h : 224, w > 0 ? w : 224);
    }
    return std::nullopt;
}

ArchDescriptor convert_to_sinefm(const ArchDescriptor& desc, int c_s, int k,
                                 TransformFamily family, std::uint64_t seed,
                                 const TransformBounds& bounds) {
    ArchDescriptor out = desc;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        const auto* conv = std::get_if<ConvSpec>(&out.layers[i]);
        if (!conv || conv->c_out <= c_s) continue;
        SineFMConfig cfg;
        cfg.c_in = conv->c_in;
        cfg.c_out = conv->c_out;
        cfg.c_s = std::min(c_s, conv->c_out);
        cfg.kernel = conv->kernel;
        cfg.stride = conv->stride;
        cfg.padding = conv->pad;
        cfg.fanout = k;
        cfg.family = family;
        cfg.seed = substream(seed, i);
        cfg.bounds = bounds;
        out.layers[i] = cfg;
    }
    return out;
}

ArchDescriptor standardize(const ArchDescriptor& desc) {
    ArchDescriptor out = desc;
    for (auto& layer : out.layers) {
        if (const auto* s = std::get_if<SineFMConfig>(&layer)) {
            layer = ConvSpec{s->c_in, s->c_out, s->kernel, s->stride, s->padding};
        }
    }
    return out;
}

template <typename T>
Model<T> build(const ArchDescriptor& desc, std::uint64_t seed) {
    trace_shapes(desc); // full validation first
    Model<T> model;
    model.descriptor = desc;
    model.seed = seed;
    model.layers.resize(desc.layers.size());
    int chain_c = desc.c;
    for (std::size_t i = 0; i < desc.layers.size(); ++i) {
        Xoshiro256ss rng(substream(seed, i));
        LayerRuntime<T>& rt = model.layers[i];
        if (const auto* s = std::get_if<ConvSpec>(&desc.layers[i])) {
            auto w = make_tensor<T>(Shape{s->c_out, s->c_in, s->kernel, s->kernel});
            const double bound = std::sqrt(1.0 / (static_cast<double>(s->c_in) * s->kernel * s->kernel));
            for (auto& v : w->data) v = static_cast<T>(rng.uniform(-bound, bound));
            rt.params.push_back(w);
            chain_c = s->c_out;
        } else if (const auto* s = std::get_if<SineFMConfig>(&desc.layers[i])) {
            auto layer = SineFMLayer<T>::make(*s, rng);
            rt.params.push_back(layer.seed_filters);
            if (layer.combine) {
                rt.params.push_back(layer.combine);
                rt.transform = layer.transform;
            }
            chain_c = s->c_out;
        } else if (const auto* s = std::get_if<DenseSpec>(&desc.layers[i])) {
            auto w = make_tensor<T>(Shape{s->classes, s->in, 1, 1});
            const double bound = std::sqrt(1.0 / static_cast<double>(s->in));
            for (auto& v : w->data) v = static_cast<T>(rng.uniform(-bound, bound));
            auto b = make_tensor<T>(Shape{1, s->classes, 1, 1}); // zero-initialized
            rt.params.push_back(w);
            rt.params.push_back(b);
            chain_c = s->classes;
        } else if (const auto* s = std::get_if<SegHeadSpec>(&desc.layers[i])) {
            auto w = make_tensor<T>(Shape{s->classes, s->in, 1, 1});
            const double bound = std::sqrt(1.0 / static_cast<double>(s->in));
            for (auto& v : w->data) v = static_cast<T>(rng.uniform(-bound, bound));
            auto b = make_tensor<T>(Shape{1, s->classes, 1, 1});
            rt.params.push_back(w);
            rt.params.push_back(b);
            chain_c = s->classes;
        } else if (const auto* s = std::get_if<ResBeginSpec>(&desc.layers[i])) {
            if (s->projection) {
                auto w = make_tensor<T>(Shape{s->c_out, chain_c, 1, 1});
                const double bound = std::sqrt(1.0 / static_cast<double>(chain_c));
                for (auto& v : w->data) v = static_cast<T>(rng.uniform(-bound, bound));
                rt.params.push_back(w);
            }
        }
    }
    return model;
}

template <typename T>
TensorPtr<T> Model<T>::forward(ComputationRecord<T>* rec, const TensorPtr<T>& x) const {
    if (x->shape.c != descriptor.c || x->shape.h != descriptor.h || x->shape.w != descriptor.w) {
        throw DimensionError("model expects input [N, " + std::to_string(descriptor.c) + ", " +
                             std::to_string(descriptor.h) + ", " + std::to_string(descriptor.w) +
                             "], got " + to_string(x->shape));
    }
    TensorPtr<T> cur = x;
    std::vector<TensorPtr<T>> res_stack;
    for (std::size_t i = 0; i < descriptor.layers.size(); ++i) {
        const LayerSpec& spec = descriptor.layers[i];
        const LayerRuntime<T>& rt = layers[i];
        if (const auto* s = std::get_if<ConvSpec>(&spec)) {
            cur = conv2d(rec, cur, rt.params[0], s->stride, s->pad);
        } else if (const auto* s = std::get_if<SineFMConfig>(&spec)) {
            SineFMLayer<T> layer;
            layer.config = *s;
            layer.seed_filters = rt.params[0];
            if (rt.params.size() > 1) {
                layer.combine = rt.params[1];
                layer.transform = *rt.transform;
            }
            cur = layer.forward(rec, cur);
        } else if (std::holds_alternative<PoolSpec>(spec)) {
            cur = maxpool2(rec, cur);
        } else if (std::holds_alternative<UpsampleSpec>(spec)) {
            cur = upsample_nearest2(rec, cur);
        } else if (std::holds_alternative<ReluSpec>(spec)) {
            cur = relu(rec, cur);
        } else if (std::holds_alternative<GapSpec>(spec)) {
            cur = global_avg_pool(rec, cur);
        } else if (std::holds_alternative<DenseSpec>(spec) ||
                   std::holds_alternative<SegHeadSpec>(spec)) {
            cur = bias_add(rec, conv2d(rec, cur, rt.params[0], 1, 0), rt.params[1]);
        } else if (const auto* s = std::get_if<ResBeginSpec>(&spec)) {
            if (s->projection) {
                res_stack.push_back(conv2d(rec, cur, rt.params[0], s->stride, 0));
            } else {
                res_stack.push_back(cur);
            }
        } else {
            cur = add(rec, cur, res_stack.back());
            res_stack.pop_back();
        }
    }
    return cur;
}

template <typename T>
std::vector<TensorPtr<T>> Model<T>::parameters() const {
    std::vector<TensorPtr<T>> out;
    for (const auto& rt : layers) {
        out.insert(out.end(), rt.params.begin(), rt.params.end());
    }
    return out;
}

template <typename T>
std::int64_t Model<T>::parameter_count() const {
    std::int64_t total = 0;
    for (const auto& p : parameters()) {
        total += p->shape.numel();
    }
    return total;
}

template <typename T>
TensorPtr<T> predict(const Model<T>& model, const TensorPtr<T>& x) {
    return model.forward(nullptr, x);
}

template Model<float> build<float>(const ArchDescriptor&, std::uint64_t);
template Model<double> build<double>(const ArchDescriptor&, std::uint64_t);
template class Model<float>;
template class Model<double>;
template TensorPtr<float> predict<float>(const Model<float>&, const TensorPtr<float>&);
template TensorPtr<double> predict<double>(const Model<double>&, const TensorPtr<double>&);

} // namespace sinefm

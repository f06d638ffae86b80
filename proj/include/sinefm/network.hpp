#pragma once

// Architecture descriptors, the line-oriented text format, reference
// backbones, standard<->SineFM conversion, and the runtime Model.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sinefm/layer.hpp"
#include "sinefm/tensor.hpp"

namespace sinefm {

struct ConvSpec {
    int c_in = 0, c_out = 0, kernel = 3, stride = 1, pad = 1;
    bool operator==(const ConvSpec&) const = default;
};
struct PoolSpec {
    bool operator==(const PoolSpec&) const = default;
};
struct UpsampleSpec {
    bool operator==(const UpsampleSpec&) const = default;
};
struct ReluSpec {
    bool operator==(const ReluSpec&) const = default;
};
struct GapSpec {
    bool operator==(const GapSpec&) const = default;
};
struct DenseSpec {
    int in = 0, classes = 0;
    bool operator==(const DenseSpec&) const = default;
};
struct SegHeadSpec {
    int in = 0, classes = 0;
    bool operator==(const SegHeadSpec&) const = default;
};
// Identity shortcut unless projection is set; a projection is a learnable
// 1x1 conv (c_in from the chain) applied to the saved input.
struct ResBeginSpec {
    bool projection = false;
    int c_out = 0, stride = 1;
    bool operator==(const ResBeginSpec&) const = default;
};
struct ResEndSpec {
    bool operator==(const ResEndSpec&) const = default;
};

using LayerSpec = std::variant<ConvSpec, SineFMConfig, PoolSpec, UpsampleSpec, ReluSpec, GapSpec,
                               DenseSpec, SegHeadSpec, ResBeginSpec, ResEndSpec>;

struct ArchDescriptor {
    int c = 0, h = 0, w = 0; // input shape
    std::vector<LayerSpec> layers;
    bool operator==(const ArchDescriptor&) const = default;
};

// Text format: header `input C H W`, one layer per line, `#` comments.
ArchDescriptor parse_descriptor(const std::string& text);
std::string format_descriptor(const ArchDescriptor& desc);
ArchDescriptor load_descriptor(const std::string& path);
void save_descriptor(const ArchDescriptor& desc, const std::string& path);

// Validates the channel chain and returns each layer's output shape for
// batch size n. Throws ValidationError naming the offending layer index.
std::vector<Shape> trace_shapes(const ArchDescriptor& desc, int n = 1);

// Reference desk-scale backbones.
ArchDescriptor tiny_vgg(int classes = 4, int h = 32, int w = 32);
ArchDescriptor tiny_resnet(int classes = 4, int h = 32, int w = 32);
ArchDescriptor tiny_unet(int classes = 2, int h = 32, int w = 32);
ArchDescriptor resnet50(int classes = 1000, int h = 224, int w = 224);
// Resolves a builtin name; returns nullopt for unknown names.
std::optional<ArchDescriptor> builtin_arch(const std::string& name, int h = 0, int w = 0,
                                           int classes = 0);

// Replace every standard conv with c_out > c_s by a SineFM spec with the
// same geometry; per-layer seeds come from splitmix64 substreams of `seed`.
// Idempotent; heads and convs with c_out <= c_s stay untouched.
ArchDescriptor convert_to_sinefm(const ArchDescriptor& desc, int c_s = 16, int k = 5,
                                 TransformFamily family = TransformFamily::Sinusoidal,
                                 std::uint64_t seed = 0, const TransformBounds& bounds = {});

// Inverse of conversion for cost/size comparisons: every SineFM spec
// becomes a standard conv of equal geometry.
ArchDescriptor standardize(const ArchDescriptor& desc);

template <typename T>
struct LayerRuntime {
    std::vector<TensorPtr<T>> params;         // learnable tensors, fixed order per kind
    std::optional<TransformSpec> transform;   // SineFM layers only
};

template <typename T>
class Model {
public:
    ArchDescriptor descriptor;
    std::uint64_t seed = 0;
    std::vector<LayerRuntime<T>> layers;

    TensorPtr<T> forward(ComputationRecord<T>* rec, const TensorPtr<T>& x) const;
    std::vector<TensorPtr<T>> parameters() const;
    std::int64_t parameter_count() const;
};

// Instantiates learnable weights from the seeded PRNG (fan-in-scaled
// uniform) and derives SineFM transforms from their per-layer seeds.
template <typename T>
Model<T> build(const ArchDescriptor& desc, std::uint64_t seed);

template <typename T>
TensorPtr<T> predict(const Model<T>& model, const TensorPtr<T>& x);

} // namespace sinefm

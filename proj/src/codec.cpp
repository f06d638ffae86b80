#include "sinefm/codec.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sinefm {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'M', '1'};

enum LayerTag : std::uint8_t {
    kTagConv = 0,
    kTagSineFM = 1,
    kTagPool = 2,
    kTagUp = 3,
    kTagRelu = 4,
    kTagGap = 5,
    kTagDense = 6,
    kTagSegHead = 7,
    kTagResBegin = 8,
    kTagResEnd = 9,
    kTagResBeginProj = 10,
};

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return bytes_.size() - offset_; }

    void need(std::size_t n, const char* what) const {
        if (offset_ + n > bytes_.size()) {
            throw FormatError(std::string("truncated SeedPack: need ") + std::to_string(n) +
                              " bytes for " + what + " at offset " + std::to_string(offset_));
        }
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[offset_++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(bytes_[offset_++]) << (8 * i);
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_++]) << (8 * i);
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), n);
        offset_ += n;
        return s;
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t offset_ = 0;
};

// Learnable float counts per layer, in serialization order.
std::vector<std::int64_t> tensor_float_counts(const LayerSpec& spec, int chain_c) {
    if (const auto* s = std::get_if<ConvSpec>(&spec)) {
        return {static_cast<std::int64_t>(s->c_out) * s->c_in * s->kernel * s->kernel};
    }
    if (const auto* s = std::get_if<SineFMConfig>(&spec)) {
        const ChannelPlan plan = channel_plan(s->c_out, s->c_s, s->fanout);
        std::vector<std::int64_t> counts = {
            static_cast<std::int64_t>(s->c_s) * s->c_in * s->kernel * s->kernel};
        if (plan.combine_out > 0) {
            counts.push_back(static_cast<std::int64_t>(plan.combine_out) * plan.combine_in);
        }
        return counts;
    }
    if (const auto* s = std::get_if<DenseSpec>(&spec)) {
        return {static_cast<std::int64_t>(s->classes) * s->in, s->classes};
    }
    if (const auto* s = std::get_if<SegHeadSpec>(&spec)) {
        return {static_cast<std::int64_t>(s->classes) * s->in, s->classes};
    }
    if (const auto* s = std::get_if<ResBeginSpec>(&spec)) {
        if (s->projection) {
            return {static_cast<std::int64_t>(s->c_out) * chain_c};
        }
    }
    return {};
}

std::uint8_t layer_tag(const LayerSpec& spec) {
    if (std::holds_alternative<ConvSpec>(spec)) return kTagConv;
    if (std::holds_alternative<SineFMConfig>(spec)) return kTagSineFM;
    if (std::holds_alternative<PoolSpec>(spec)) return kTagPool;
    if (std::holds_alternative<UpsampleSpec>(spec)) return kTagUp;
    if (std::holds_alternative<ReluSpec>(spec)) return kTagRelu;
    if (std::holds_alternative<GapSpec>(spec)) return kTagGap;
    if (std::holds_alternative<DenseSpec>(spec)) return kTagDense;
    if (std::holds_alternative<SegHeadSpec>(spec)) return kTagSegHead;
    if (const auto* s = std::get_if<ResBeginSpec>(&spec)) {
        return s->projection ? kTagResBeginProj : kTagResBegin;
    }
    return kTagResEnd;
}

const char* tag_name(std::uint8_t tag) {
    static const char* names[] = {"conv", "sinefm",   "pool",    "up",     "relu",         "gap",
                                  "dense", "seghead", "resbegin", "resend", "resbegin-proj"};
    return tag <= kTagResBeginProj ? names[tag] : "unknown";
}

// Channel count entering each layer, needed to size projection weights.
std::vector<int> chain_channels(const ArchDescriptor& desc) {
    std::vector<int> chain(desc.layers.size());
    int c = desc.c;
    for (std::size_t i = 0; i < desc.layers.size(); ++i) {
        chain[i] = c;
        if (const auto* s = std::get_if<ConvSpec>(&desc.layers[i])) c = s->c_out;
        else if (const auto* s = std::get_if<SineFMConfig>(&desc.layers[i])) c = s->c_out;
        else if (const auto* s = std::get_if<DenseSpec>(&desc.layers[i])) c = s->classes;
        else if (const auto* s = std::get_if<SegHeadSpec>(&desc.layers[i])) c = s->classes;
    }
    return chain;
}

} // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= data[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

template <typename T>
std::vector<std::uint8_t> pack(const Model<T>& model) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kSeedPackVersion);
    const std::string desc_text = format_descriptor(model.descriptor);
    put_u32(out, static_cast<std::uint32_t>(desc_text.size()));
    out.insert(out.end(), desc_text.begin(), desc_text.end());

    for (std::size_t i = 0; i < model.descriptor.layers.size(); ++i) {
        const LayerSpec& spec = model.descriptor.layers[i];
        const LayerRuntime<T>& rt = model.layers[i];
        put_u8(out, layer_tag(spec));
        for (const auto& tensor : rt.params) {
            for (const T v : tensor->data) {
                put_f32(out, static_cast<float>(v));
            }
        }
        if (const auto* s = std::get_if<SineFMConfig>(&spec)) {
            put_u64(out, s->seed);
            put_u8(out, static_cast<std::uint8_t>(s->family));
        }
    }
    put_u64(out, fnv1a64(out.data(), out.size()));
    return out;
}

template <typename T>
Model<T> unpack(const std::vector<std::uint8_t>& bytes) {
    Reader reader(bytes);
    reader.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("bad SeedPack magic");
    }
    if (bytes.size() < 14) {
        throw FormatError("truncated SeedPack: shorter than header plus checksum");
    }
    const std::size_t checksum_offset = bytes.size() - 8;
    const std::uint64_t computed = fnv1a64(bytes.data(), checksum_offset);
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) {
        stored |= static_cast<std::uint64_t>(bytes[checksum_offset + i]) << (8 * i);
    }
    if (stored != computed) {
        std::ostringstream msg;
        msg << "SeedPack checksum mismatch at byte offset " << checksum_offset << ": stored 0x"
            << std::hex << stored << ", computed 0x" << computed;
        throw CorruptionError(msg.str());
    }

    reader.text(4, "magic");
    const std::uint16_t version = reader.u16("version");
    if (version != kSeedPackVersion) {
        throw VersionError("unsupported SeedPack version " + std::to_string(version));
    }
    const std::uint32_t desc_len = reader.u32("descriptor length");
    const std::string desc_text = reader.text(desc_len, "descriptor");
    const ArchDescriptor desc = parse_descriptor(desc_text);
    trace_shapes(desc);

    // Weights are overwritten below; the build seed only shapes the tensors.
    Model<T> model = build<T>(desc, 0);
    const std::vector<int> chain = chain_channels(desc);
    for (std::size_t i = 0; i < desc.layers.size(); ++i) {
        const LayerSpec& spec = desc.layers[i];
        const std::uint8_t tag = reader.u8("layer tag");
        if (tag != layer_tag(spec)) {
            throw FormatError("layer " + std::to_string(i) + " tag " + std::to_string(tag) +
                              " does not match descriptor kind '" +
                              std::to_string(layer_tag(spec)) + "'");
        }
        LayerRuntime<T>& rt = model.layers[i];
        const auto counts = tensor_float_counts(spec, chain[i]);
        if (counts.size() != rt.params.size()) {
            throw FormatError("layer " + std::to_string(i) + " parameter tensor count mismatch");
        }
        for (std::size_t t = 0; t < counts.size(); ++t) {
            for (std::int64_t j = 0; j < counts[t]; ++j) {
                rt.params[t]->data[j] = static_cast<T>(reader.f32("weights"));
            }
        }
        if (const auto* s = std::get_if<SineFMConfig>(&spec)) {
            const std::uint64_t stored_seed = reader.u64("transform seed");
            const std::uint8_t family = reader.u8("family tag");
            if (family >= kFamilyCount) {
                throw VersionError("unknown transform family tag " + std::to_string(family));
            }
            if (stored_seed != s->seed ||
                family != static_cast<std::uint8_t>(s->family)) {
                throw FormatError("layer " + std::to_string(i) +
                                  " transform seed/family disagrees with descriptor");
            }
            // Hyperparameters re-derived from the seed, never from the wire.
            if (rt.transform) {
                const ChannelPlan plan = channel_plan(s->c_out, s->c_s, s->fanout);
                rt.transform = sample_hyperparams(s->seed, s->family, plan.combine_in, s->bounds);
            }
        }
    }
    if (reader.remaining() != 8) {
        throw FormatError("SeedPack has " + std::to_string(reader.remaining() - 8) +
                          " unexpected trailing bytes before checksum");
    }
    return model;
}

template <typename T>
void save_pack(const Model<T>& model, const std::string& path) {
    const auto bytes = pack(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write SeedPack file: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
Model<T> load_pack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open SeedPack file: " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return unpack<T>(bytes);
}

std::int64_t pack_size_bytes(const ArchDescriptor& desc) {
    std::int64_t total = 4 + 2 + 4; // magic, version, descriptor length
    total += static_cast<std::int64_t>(format_descriptor(desc).size());
    const std::vector<int> chain = chain_channels(desc);
    for (std::size_t i = 0; i < desc.layers.size(); ++i) {
        total += 1; // kind tag
        for (const std::int64_t n : tensor_float_counts(desc.layers[i], chain[i])) {
            total += 4 * n;
        }
        if (std::holds_alternative<SineFMConfig>(desc.layers[i])) {
            total += 8 + 1; // transform seed + family tag
        }
    }
    return total + 8; // checksum
}

SizeReport size_report(const ArchDescriptor& desc) {
    SizeReport report;
    report.sinefm_bytes = pack_size_bytes(desc);
    report.full_conv_bytes = pack_size_bytes(standardize(desc));
    report.ratio = static_cast<double>(report.full_conv_bytes) /
                   static_cast<double>(report.sinefm_bytes);
    return report;
}

std::string hex_dump(const std::vector<std::uint8_t>& bytes) {
    std::ostringstream out;
    out << "size " << bytes.size() << " bytes\n";
    out << std::hex;
    out << "0x0000 magic\n";
    out << "0x0004 version\n";
    if (bytes.size() < 10) return out.str();
    std::uint32_t desc_len = 0;
    for (int i = 0; i < 4; ++i) desc_len |= static_cast<std::uint32_t>(bytes[6 + i]) << (8 * i);
    out << "0x" << 6 << " descriptor length (" << std::dec << desc_len << " bytes)\n" << std::hex;
    std::size_t offset = 10;
    out << "0x" << offset << " descriptor text\n";
    offset += desc_len;
    if (offset + 8 <= bytes.size()) {
        std::string desc_text(reinterpret_cast<const char*>(bytes.data() + 10), desc_len);
        try {
            const ArchDescriptor desc = parse_descriptor(desc_text);
            const std::vector<int> chain = chain_channels(desc);
            for (std::size_t i = 0; i < desc.layers.size(); ++i) {
                out << "0x" << offset << " layer " << std::dec << i << std::hex << " ("
                    << tag_name(layer_tag(desc.layers[i])) << ")\n";
                offset += 1;
                for (const std::int64_t n : tensor_float_counts(desc.layers[i], chain[i])) {
                    offset += 4 * static_cast<std::size_t>(n);
                }
                if (std::holds_alternative<SineFMConfig>(desc.layers[i])) {
                    offset += 9;
                }
            }
        } catch (const Error&) {
            out << "(descriptor unparsable; skipping layer sections)\n";
        }
    }
    if (bytes.size() >= 8) {
        out << "0x" << bytes.size() - 8 << " checksum\n";
    }
    return out.str();
}

template std::vector<std::uint8_t> pack<float>(const Model<float>&);
template std::vector<std::uint8_t> pack<double>(const Model<double>&);
template Model<float> unpack<float>(const std::vector<std::uint8_t>&);
template Model<double> unpack<double>(const std::vector<std::uint8_t>&);
template void save_pack<float>(const Model<float>&, const std::string&);
template void save_pack<double>(const Model<double>&, const std::string&);
template Model<float> load_pack<float>(const std::string&);
template Model<double> load_pack<double>(const std::string&);

} // namespace sinefm

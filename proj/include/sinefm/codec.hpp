#pragma once

// SeedPack: the compact model-transmission payload. Little-endian byte
// layout: "SFM1" magic, u16 version, length-prefixed descriptor text,
// per-layer records (kind tag, learnable weights as f32; SineFM layers
// additionally carry their transform seed and family tag), and a trailing
// 64-bit FNV-1a checksum. Transform hyperparameters never appear on the
// wire; they are re-derived from the seeds.

#include <cstdint>
#include <string>
#include <vector>

#include "sinefm/network.hpp"

namespace sinefm {

inline constexpr std::uint16_t kSeedPackVersion = 1;

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len);

template <typename T>
std::vector<std::uint8_t> pack(const Model<T>& model);

template <typename T>
Model<T> unpack(const std::vector<std::uint8_t>& bytes);

template <typename T>
void save_pack(const Model<T>& model, const std::string& path);

template <typename T>
Model<T> load_pack(const std::string& path);

struct SizeReport {
    std::int64_t sinefm_bytes = 0;
    std::int64_t full_conv_bytes = 0;
    double ratio = 0.0; // full_conv_bytes / sinefm_bytes
};

// Exact byte counts of the descriptor's pack versus the same descriptor
// with every SineFM layer replaced by a standard conv.
SizeReport size_report(const ArchDescriptor& desc);

// Predicted pack size in bytes for a descriptor (layout arithmetic only).
std::int64_t pack_size_bytes(const ArchDescriptor& desc);

// Debug view: section offsets and sizes, one line per section.
std::string hex_dump(const std::vector<std::uint8_t>& bytes);

} // namespace sinefm

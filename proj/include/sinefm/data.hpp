#pragma once

// Synthetic desk-scale datasets plus an image-folder loader (PNG and
// PGM/PPM rasters with one integer-label mask per image). Generation is a
// pure function of the spec's seed; train/test splits are disjoint by index.

#include <cstdint>
#include <string>
#include <vector>

#include "sinefm/tensor.hpp"

namespace sinefm {

enum class DatasetKind {
    SynthClass, // 4 pattern classes, 16x16, 3 channels
    SynthSeg,   // random rectangles on background, 2 classes, 32x32
    ImageFolder,
};

struct DatasetSpec {
    DatasetKind kind = DatasetKind::SynthClass;
    int train_count = 512;
    int test_count = 128;
    double noise = 0.2;
    std::uint64_t seed = 0;
    std::string path; // image-folder only
};

DatasetKind dataset_kind_from_name(const std::string& name);
const char* dataset_kind_name(DatasetKind kind);

template <typename T>
struct Dataset {
    TensorPtr<T> images;               // [count, C, H, W]
    std::vector<std::int32_t> labels;  // per sample, or per pixel for segmentation
    bool segmentation = false;
    int classes = 0;

    int count() const { return images ? images->shape.n : 0; }
    int height() const { return images ? images->shape.h : 0; }
    int width() const { return images ? images->shape.w : 0; }
};

template <typename T>
struct DatasetPair {
    Dataset<T> train;
    Dataset<T> test;
};

template <typename T>
DatasetPair<T> make_dataset(const DatasetSpec& spec);

// Copies the selected samples into a fresh batch; optional seeded
// horizontal/vertical flip augmentation (masks flip with their images).
template <typename T>
struct Batch {
    TensorPtr<T> images;
    std::vector<std::int32_t> labels;
};

template <typename T>
Batch<T> make_batch(const Dataset<T>& data, const std::vector<int>& indices,
                    std::uint64_t flip_seed = 0, bool augment = false);

// Raster IO used by the image-folder loader (8-bit grayscale or RGB).
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 0; // 1 or 3
    std::vector<std::uint8_t> pixels; // row-major, interleaved
};

RasterImage read_raster(const std::string& path);
void write_pgm(const std::string& path, const RasterImage& img);
void write_ppm(const std::string& path, const RasterImage& img);
void write_png(const std::string& path, const RasterImage& img);

} // namespace sinefm

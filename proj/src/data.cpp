#include "sinefm/data.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <png.h>

#include "sinefm/rng.hpp"

namespace sinefm {

namespace fs = std::filesystem;

DatasetKind dataset_kind_from_name(const std::string& name) {
    if (name == "synth-class") return DatasetKind::SynthClass;
    if (name == "synth-seg") return DatasetKind::SynthSeg;
    if (name == "image-folder") return DatasetKind::ImageFolder;
    throw ArgumentError("unknown dataset kind '" + name + "'");
}

const char* dataset_kind_name(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::SynthClass: return "synth-class";
    case DatasetKind::SynthSeg: return "synth-seg";
    case DatasetKind::ImageFolder: return "image-folder";
    }
    return "?";
}

namespace {

constexpr int kClassSide = 16;
constexpr int kSegSide = 32;

// Four pattern classes: horizontal stripes, vertical stripes, checkerboard,
// solid. Sample index selects the class round-robin so splits stay balanced;
// indices are globally unique, making train/test disjoint by construction.
template <typename T>
void render_class_sample(Xoshiro256ss& rng, int cls, double noise, T* dst) {
    const int phase = static_cast<int>(rng.uniform_int(0, 3));
    const double solid_level = rng.uniform(0.3, 0.7);
    for (int y = 0; y < kClassSide; ++y) {
        for (int x = 0; x < kClassSide; ++x) {
            int bit = 0;
            switch (cls) {
            case 0: bit = ((y + phase) / 2) % 2; break;
            case 1: bit = ((x + phase) / 2) % 2; break;
            case 2: bit = (((y + phase) / 2) % 2) ^ (((x + phase) / 2) % 2); break;
            default: bit = -1; break;
            }
            const double base = bit < 0 ? solid_level : 0.15 + 0.7 * bit;
            for (int c = 0; c < 3; ++c) {
                dst[(static_cast<std::size_t>(c) * kClassSide + y) * kClassSide + x] =
                    static_cast<T>(base + noise * rng.normal());
            }
        }
    }
}

// Bright rectangles on a dark background; mask 1 inside rectangles.
template <typename T>
void render_seg_sample(Xoshiro256ss& rng, double noise, T* dst, std::int32_t* mask) {
    for (int i = 0; i < kSegSide * kSegSide; ++i) mask[i] = 0;
    const int rects = static_cast<int>(rng.uniform_int(1, 3));
    std::vector<int> boxes; // y0, y1, x0, x1 per rectangle
    for (int r = 0; r < rects; ++r) {
        const int height = static_cast<int>(rng.uniform_int(6, 14));
        const int width = static_cast<int>(rng.uniform_int(6, 14));
        const int y0 = static_cast<int>(rng.uniform_int(0, kSegSide - height));
        const int x0 = static_cast<int>(rng.uniform_int(0, kSegSide - width));
        boxes.insert(boxes.end(), {y0, y0 + height, x0, x0 + width});
    }
    for (int y = 0; y < kSegSide; ++y) {
        for (int x = 0; x < kSegSide; ++x) {
            bool inside = false;
            for (std::size_t b = 0; b < boxes.size(); b += 4) {
                if (y >= boxes[b] && y < boxes[b + 1] && x >= boxes[b + 2] && x < boxes[b + 3]) {
                    inside = true;
                    break;
                }
            }
            if (inside) mask[y * kSegSide + x] = 1;
            const double base = inside ? 0.85 : 0.2;
            for (int c = 0; c < 3; ++c) {
                dst[(static_cast<std::size_t>(c) * kSegSide + y) * kSegSide + x] =
                    static_cast<T>(base + noise * rng.normal());
            }
        }
    }
}

template <typename T>
Dataset<T> make_synth_split(const DatasetSpec& spec, int first_index, int count) {
    Dataset<T> data;
    const bool seg = spec.kind == DatasetKind::SynthSeg;
    const int side = seg ? kSegSide : kClassSide;
    data.segmentation = seg;
    data.classes = seg ? 2 : 4;
    data.images = make_tensor<T>(Shape{count, 3, side, side});
    data.labels.resize(seg ? static_cast<std::size_t>(count) * side * side : count);
    for (int i = 0; i < count; ++i) {
        const int index = first_index + i;
        Xoshiro256ss rng(substream(spec.seed, static_cast<std::uint64_t>(index)));
        T* dst = data.images->data.data() + static_cast<std::size_t>(i) * 3 * side * side;
        if (seg) {
            render_seg_sample(rng, spec.noise, dst,
                              data.labels.data() + static_cast<std::size_t>(i) * side * side);
        } else {
            const int cls = index % 4;
            render_class_sample(rng, cls, spec.noise, dst);
            data.labels[i] = cls;
        }
    }
    return data;
}

bool has_suffix(const std::string& name, const std::string& suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

RasterImage read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open raster file: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5" && magic != "P3" && magic != "P6") {
        throw FormatError("unsupported PNM magic '" + magic + "' in " + path);
    }
    auto next_value = [&in, &path]() {
        // Skip whitespace and '#' comments.
        for (;;) {
            int ch = in.peek();
            if (ch == '#') {
                std::string comment;
                std::getline(in, comment);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
        }
        long v;
        if (!(in >> v)) throw FormatError("truncated PNM header in " + path);
        return v;
    };
    RasterImage img;
    img.width = static_cast<int>(next_value());
    img.height = static_cast<int>(next_value());
    const long maxval = next_value();
    if (maxval <= 0 || maxval > 255) {
        throw FormatError("unsupported PNM maxval in " + path);
    }
    img.channels = (magic == "P3" || magic == "P6") ? 3 : 1;
    const std::size_t count =
        static_cast<std::size_t>(img.width) * img.height * img.channels;
    img.pixels.resize(count);
    if (magic == "P5" || magic == "P6") {
        in.get(); // single whitespace after maxval
        in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count) {
            throw FormatError("truncated PNM pixel data in " + path);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long v;
            if (!(in >> v)) throw FormatError("truncated PNM pixel data in " + path);
            img.pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    return img;
}

RasterImage read_png_file(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw FormatError("cannot open raster file: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("libpng initialization failed for " + path);
    }
    RasterImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("libpng failed to decode " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("unsupported PNG channel count in " + path);
    }
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) {
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    }
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

template <typename T>
Dataset<T> dataset_from_rasters(const std::vector<std::pair<RasterImage, RasterImage>>& pairs) {
    if (pairs.empty()) {
        throw ValidationError("image folder contains no image/mask pairs");
    }
    const int h = pairs.front().first.height;
    const int w = pairs.front().first.width;
    Dataset<T> data;
    data.segmentation = true;
    data.images = make_tensor<T>(Shape{static_cast<int>(pairs.size()), 3, h, w});
    data.labels.resize(pairs.size() * static_cast<std::size_t>(h) * w);
    std::int32_t max_label = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const RasterImage& img = pairs[i].first;
        const RasterImage& mask = pairs[i].second;
        if (img.height != h || img.width != w || mask.height != h || mask.width != w) {
            throw ValidationError("image folder rasters must share one size");
        }
        if (mask.channels != 1) {
            throw ValidationError("masks must be single-channel integer rasters");
        }
        T* dst = data.images->data.data() + static_cast<std::size_t>(i) * 3 * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const int src_c = img.channels == 3 ? c : 0;
                    dst[(static_cast<std::size_t>(c) * h + y) * w + x] = static_cast<T>(
                        img.pixels[(static_cast<std::size_t>(y) * w + x) * img.channels + src_c] /
                        255.0);
                }
            }
        }
        std::int32_t* lbl = data.labels.data() + i * static_cast<std::size_t>(h) * w;
        for (int p = 0; p < h * w; ++p) {
            lbl[p] = mask.pixels[p];
            max_label = std::max(max_label, lbl[p]);
        }
    }
    data.classes = max_label + 1;
    return data;
}

template <typename T>
DatasetPair<T> load_image_folder(const DatasetSpec& spec) {
    std::map<std::string, fs::path> images, masks;
    for (const auto& entry : fs::directory_iterator(spec.path)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const std::string stem = entry.path().stem().string();
        if (!has_suffix(name, ".png") && !has_suffix(name, ".pgm") && !has_suffix(name, ".ppm")) {
            continue;
        }
        if (has_suffix(stem, ".mask")) {
            masks[stem.substr(0, stem.size() - 5)] = entry.path();
        } else {
            images[stem] = entry.path();
        }
    }
    std::vector<std::pair<RasterImage, RasterImage>> pairs;
    for (const auto& [stem, img_path] : images) {
        const auto mask_it = masks.find(stem);
        if (mask_it == masks.end()) {
            throw ValidationError("image '" + stem + "' has no '" + stem + ".mask.*' raster");
        }
        pairs.emplace_back(read_raster(img_path.string()), read_raster(mask_it->second.string()));
    }
    Dataset<T> all = dataset_from_rasters<T>(pairs);
    int train_count = spec.train_count > 0
                          ? std::min<int>(spec.train_count, all.count())
                          : std::max(1, all.count() * 4 / 5);
    if (train_count >= all.count() && all.count() > 1) train_count = all.count() - 1;

    auto slice = [&all](int first, int count) {
        Dataset<T> out;
        out.segmentation = true;
        out.classes = all.classes;
        const int chw = 3 * all.height() * all.width();
        const int hw = all.height() * all.width();
        out.images = make_tensor<T>(Shape{count, 3, all.height(), all.width()});
        std::copy_n(all.images->data.begin() + static_cast<std::size_t>(first) * chw,
                    static_cast<std::size_t>(count) * chw, out.images->data.begin());
        out.labels.assign(all.labels.begin() + static_cast<std::size_t>(first) * hw,
                          all.labels.begin() + static_cast<std::size_t>(first + count) * hw);
        return out;
    };
    DatasetPair<T> split;
    split.train = slice(0, train_count);
    split.test = slice(train_count, all.count() - train_count);
    return split;
}

} // namespace

RasterImage read_raster(const std::string& path) {
    if (has_suffix(path, ".png")) return read_png_file(path);
    return read_pnm(path);
}

void write_pgm(const std::string& path, const RasterImage& img) {
    if (img.channels != 1) throw ArgumentError("write_pgm expects a single-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write raster file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

void write_ppm(const std::string& path, const RasterImage& img) {
    if (img.channels != 3) throw ArgumentError("write_ppm expects a 3-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write raster file: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

void write_png(const std::string& path, const RasterImage& img) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw FormatError("cannot write raster file: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw FormatError("libpng initialization failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw FormatError("libpng failed to encode " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) {
        rows[y] = const_cast<png_bytep>(img.pixels.data() +
                                        static_cast<std::size_t>(y) * img.width * img.channels);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

template <typename T>
DatasetPair<T> make_dataset(const DatasetSpec& spec) {
    if (spec.kind == DatasetKind::ImageFolder) {
        return load_image_folder<T>(spec);
    }
    if (spec.train_count < 0 || spec.test_count < 0) {
        throw ArgumentError("dataset counts must be nonnegative");
    }
    DatasetPair<T> split;
    split.train = make_synth_split<T>(spec, 0, spec.train_count);
    split.test = make_synth_split<T>(spec, spec.train_count, spec.test_count);
    return split;
}

template <typename T>
Batch<T> make_batch(const Dataset<T>& data, const std::vector<int>& indices,
                    std::uint64_t flip_seed, bool augment) {
    const int c = data.images->shape.c;
    const int h = data.height();
    const int w = data.width();
    const int chw = c * h * w;
    const int hw = h * w;
    Batch<T> batch;
    batch.images = make_tensor<T>(Shape{static_cast<int>(indices.size()), c, h, w});
    batch.labels.resize(data.segmentation ? indices.size() * static_cast<std::size_t>(hw)
                                          : indices.size());
    Xoshiro256ss rng(flip_seed);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int src = indices[i];
        const bool flip_h = augment && rng.next_double() < 0.5;
        const bool flip_v = augment && rng.next_double() < 0.5;
        const T* src_img = data.images->data.data() + static_cast<std::size_t>(src) * chw;
        T* dst_img = batch.images->data.data() + i * chw;
        for (int ch = 0; ch < c; ++ch) {
            for (int y = 0; y < h; ++y) {
                const int sy = flip_v ? h - 1 - y : y;
                for (int x = 0; x < w; ++x) {
                    const int sx = flip_h ? w - 1 - x : x;
                    dst_img[(static_cast<std::size_t>(ch) * h + y) * w + x] =
                        src_img[(static_cast<std::size_t>(ch) * h + sy) * w + sx];
                }
            }
        }
        if (data.segmentation) {
            const std::int32_t* src_lbl = data.labels.data() + static_cast<std::size_t>(src) * hw;
            std::int32_t* dst_lbl = batch.labels.data() + i * static_cast<std::size_t>(hw);
            for (int y = 0; y < h; ++y) {
                const int sy = flip_v ? h - 1 - y : y;
                for (int x = 0; x < w; ++x) {
                    const int sx = flip_h ? w - 1 - x : x;
                    dst_lbl[y * w + x] = src_lbl[sy * w + sx];
                }
            }
        } else {
            batch.labels[i] = data.labels[src];
        }
    }
    return batch;
}

template DatasetPair<float> make_dataset<float>(const DatasetSpec&);
template DatasetPair<double> make_dataset<double>(const DatasetSpec&);
template Batch<float> make_batch<float>(const Dataset<float>&, const std::vector<int>&,
                                        std::uint64_t, bool);
template Batch<double> make_batch<double>(const Dataset<double>&, const std::vector<int>&,
                                          std::uint64_t, bool);

} // namespace sinefm

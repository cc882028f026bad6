#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "semcom/errors.hpp"

namespace semcom {

// Parsed IDX image/label pair; pixels scaled to [0,1] by division by 255.
struct IdxData {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;  // count * rows * cols, row-major per image
    std::vector<int> labels;     // count
};

namespace detail {

inline std::uint32_t read_be_u32(std::ifstream& f, const std::string& path,
                                 const char* what) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw IngestionError(path + ": truncated while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

// Load the published IDX format: big-endian headers, magic 0x00000803 for
// images and 0x00000801 for labels. Image and label counts must agree.
inline IdxData load_idx(const std::string& images_path, const std::string& labels_path) {
    IdxData out;

    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IngestionError(images_path + ": cannot open images file");
    const std::uint32_t img_magic = detail::read_be_u32(imgs, images_path, "magic");
    if (img_magic != 0x00000803u)
        throw IngestionError(images_path + ": bad images magic (expected 0x00000803)");
    out.count = detail::read_be_u32(imgs, images_path, "image count");
    out.rows = detail::read_be_u32(imgs, images_path, "row count");
    out.cols = detail::read_be_u32(imgs, images_path, "column count");
    const std::size_t n_pix = out.count * out.rows * out.cols;
    std::vector<unsigned char> raw(n_pix);
    if (!imgs.read(reinterpret_cast<char*>(raw.data()),
                   static_cast<std::streamsize>(n_pix)))
        throw IngestionError(images_path + ": truncated pixel data");
    out.pixels.resize(n_pix);
    for (std::size_t i = 0; i < n_pix; ++i)
        out.pixels[i] = static_cast<double>(raw[i]) / 255.0;

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw IngestionError(labels_path + ": cannot open labels file");
    const std::uint32_t lab_magic = detail::read_be_u32(labs, labels_path, "magic");
    if (lab_magic != 0x00000801u)
        throw IngestionError(labels_path + ": bad labels magic (expected 0x00000801)");
    const std::size_t lab_count = detail::read_be_u32(labs, labels_path, "label count");
    if (lab_count != out.count)
        throw IngestionError(labels_path + ": label count " + std::to_string(lab_count) +
                             " does not match image count " + std::to_string(out.count));
    std::vector<unsigned char> lraw(lab_count);
    if (!labs.read(reinterpret_cast<char*>(lraw.data()),
                   static_cast<std::streamsize>(lab_count)))
        throw IngestionError(labels_path + ": truncated label data");
    out.labels.resize(lab_count);
    for (std::size_t i = 0; i < lab_count; ++i) out.labels[i] = lraw[i];

    return out;
}

}  // namespace semcom

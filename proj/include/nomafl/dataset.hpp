#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nomafl/fl_core.hpp"
#include "nomafl/rng.hpp"

namespace nomafl::data {

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// Reads an IDX image file (magic 2051, big-endian n/rows/cols, unsigned
/// bytes) as an n x (rows*cols) matrix scaled to [0, 1].
fl::Matrix read_idx_images(const std::filesystem::path& path);

/// Reads an IDX label file (magic 2049, big-endian n, unsigned bytes).
std::vector<int> read_idx_labels(const std::filesystem::path& path);

/// Writes IDX files; used for fixtures and exporting synthetic sets.
void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

fl::Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                     int classes = 10);

struct BlobSpec {
    int classes = 10;
    int dim = 32;
    std::size_t per_class = 100;
    double separation = 1.0;  // std-dev of class means per coordinate
    double noise = 1.0;       // std-dev of samples around their mean
};

/// Gaussian-blob classification set. Class means depend only on `seed`;
/// `sample_stream` selects an independent draw of samples (train vs test).
/// Samples are grouped by class, `per_class` each.
fl::Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed, std::uint64_t sample_stream);

/// Equal-size uniform random split: sizes differ by at most one and the
/// parts cover `data` exactly once.
std::vector<fl::Dataset> partition(const fl::Dataset& data, std::size_t parts, RngStream& rng);

/// `count` rows drawn without replacement, kept in original order. Returns
/// everything when count is 0 or not smaller than the set.
fl::Dataset random_subset(const fl::Dataset& data, std::size_t count, RngStream& rng);

}  // namespace nomafl::data

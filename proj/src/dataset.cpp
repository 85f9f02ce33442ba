#include "nomafl/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include "nomafl/errors.hpp"

namespace nomafl::data {

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw DatasetError("IDX: truncated header in " + path.string());
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b.data(), 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("IDX: cannot open " + path.string());
    }
    return in;
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::size_t bytes,
                                       const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(bytes);
    if (bytes > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
        throw DatasetError("IDX: payload shorter than header claims in " + path.string());
    }
    return buf;
}

}  // namespace

fl::Matrix read_idx_images(const std::filesystem::path& path) {
    auto in = open_binary(path);
    const std::uint32_t magic = read_be32(in, path);
    if (magic != kIdxImageMagic) {
        throw DatasetError("IDX: bad image magic " + std::to_string(magic) + " in " + path.string());
    }
    const std::uint32_t n = read_be32(in, path);
    const std::uint32_t rows = read_be32(in, path);
    const std::uint32_t cols = read_be32(in, path);
    const std::size_t dim = std::size_t{rows} * cols;
    const auto pixels = read_payload(in, std::size_t{n} * dim, path);
    fl::Matrix out(n, static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        out.data()[i] = static_cast<double>(pixels[i]) / 255.0;
    }
    return out;
}

std::vector<int> read_idx_labels(const std::filesystem::path& path) {
    auto in = open_binary(path);
    const std::uint32_t magic = read_be32(in, path);
    if (magic != kIdxLabelMagic) {
        throw DatasetError("IDX: bad label magic " + std::to_string(magic) + " in " + path.string());
    }
    const std::uint32_t n = read_be32(in, path);
    const auto bytes = read_payload(in, n, path);
    return {bytes.begin(), bytes.end()};
}

void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
    if (pixels.size() != std::size_t{count} * rows * cols) {
        throw DatasetError("IDX: pixel buffer does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    write_be32(out, kIdxImageMagic);
    write_be32(out, count);
    write_be32(out, rows);
    write_be32(out, cols);
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) {
        throw DatasetError("IDX: failed writing " + path.string());
    }
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (!out) {
        throw DatasetError("IDX: failed writing " + path.string());
    }
}

fl::Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                     int classes) {
    fl::Dataset d;
    d.features = read_idx_images(images);
    d.labels = read_idx_labels(labels);
    d.classes = classes;
    if (d.labels.size() != static_cast<std::size_t>(d.features.rows())) {
        throw DatasetError("IDX: " + std::to_string(d.features.rows()) + " images but " +
                           std::to_string(d.labels.size()) + " labels");
    }
    for (int y : d.labels) {
        if (y < 0 || y >= classes) {
            throw DatasetError("IDX: label " + std::to_string(y) + " outside [0, classes)");
        }
    }
    return d;
}

fl::Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed, std::uint64_t sample_stream) {
    if (spec.classes < 2 || spec.dim < 1 || spec.per_class == 0) {
        throw DatasetError("blobs: need classes >= 2, dim >= 1, per_class >= 1");
    }
    auto mean_rng = RngStream::derive(seed, "blob-means");
    fl::Matrix means(spec.classes, spec.dim);
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        means.data()[i] = mean_rng.normal(0.0, spec.separation);
    }
    auto rng = RngStream::derive(seed, "blob-samples", sample_stream);
    fl::Dataset d;
    d.classes = spec.classes;
    const auto n = static_cast<Eigen::Index>(spec.per_class * static_cast<std::size_t>(spec.classes));
    d.features.resize(n, spec.dim);
    d.labels.reserve(static_cast<std::size_t>(n));
    Eigen::Index row = 0;
    for (int c = 0; c < spec.classes; ++c) {
        for (std::size_t i = 0; i < spec.per_class; ++i, ++row) {
            for (int j = 0; j < spec.dim; ++j) {
                d.features(row, j) = means(c, j) + rng.normal(0.0, spec.noise);
            }
            d.labels.push_back(c);
        }
    }
    return d;
}

std::vector<fl::Dataset> partition(const fl::Dataset& data, std::size_t parts, RngStream& rng) {
    if (parts == 0) {
        throw InvalidArgument("partition: need at least one part");
    }
    if (data.size() < parts) {
        throw DatasetError("partition: fewer samples than devices");
    }
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    std::vector<fl::Dataset> out;
    out.reserve(parts);
    const std::size_t base = data.size() / parts;
    const std::size_t extra = data.size() % parts;
    std::size_t at = 0;
    for (std::size_t k = 0; k < parts; ++k) {
        const std::size_t len = base + (k < extra ? 1 : 0);
        out.push_back(data.subset(std::span(idx).subspan(at, len)));
        at += len;
    }
    return out;
}

fl::Dataset random_subset(const fl::Dataset& data, std::size_t count, RngStream& rng) {
    if (count == 0 || count >= data.size()) {
        return data;
    }
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return data.subset(idx);
}

}  // namespace nomafl::data

#pragma once

#include "dured/complex_image.hpp"
#include "dured/optimizer.hpp"
#include "dured/sampling.hpp"
#include "dured/unrolled.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dured {
namespace io {

/// CIMG1: one text header line "CIMG1 <height> <width> c64le", then
/// row-major interleaved little-endian doubles (re, im). Round trips are
/// bit-exact. All writers in this module write to a temp file in the target
/// directory and rename into place.
void write_image(const std::filesystem::path& path, const ComplexImage& img);
ComplexImage read_image(const std::filesystem::path& path);

/// MASK1: header "MASK1 <h> <w> <mu> <alpha> <seed> <2d|1d> <p_min>", then
/// one 0/1 byte per location followed by the little-endian double weights.
void write_mask(const std::filesystem::path& path, const MaskDraw& draw);
MaskDraw read_mask(const std::filesystem::path& path);

/// DNET1: header carrying the architecture and the scalars lambda/beta,
/// then the net tensors in declaration order; optionally the optimizer
/// moments (over the full flat parameter vector) and the epoch counter.
struct Checkpoint {
    DuredConfig cfg;
    DuredParams params;
    std::optional<AdamState> adam;
    int epoch = 0;
};
void write_weights(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_weights(const std::filesystem::path& path);

/// Magnitude image linearly scaled to 8 bits, written as binary PGM (P5).
void export_viewable(const ComplexImage& img, const std::filesystem::path& path);

/// Locale-independent shortest-exact formatting (round-trips doubles).
std::string fmt_double(double v);

/// Comma-separated report: header row, one record per line, '.' decimal
/// separator. Content is buffered and atomically renamed on close().
class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void close();
    ~CsvWriter();

private:
    std::filesystem::path path_;
    std::string buf_;
    std::size_t columns_;
    bool closed_ = false;
};

/// Writes `data` to path via temp-file-then-rename.
void write_atomic(const std::filesystem::path& path, const std::string& data);

} // namespace io
} // namespace dured

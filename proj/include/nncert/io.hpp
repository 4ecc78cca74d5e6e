#pragma once

#include <zlib.h>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nncert/dataset.hpp"
#include "nncert/error.hpp"

namespace nncert {

struct LabeledImages {
  std::vector<Image> images;
  std::vector<LabelId> labels;
};

namespace detail {

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
    throw Error(ErrorCode::io_error, path + ": cannot initialise gzip decoder");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      const auto offset = zs.total_in;
      inflateEnd(&zs);
      throw Error(ErrorCode::truncated_file,
                  path + ": corrupt or truncated gzip stream at compressed offset " +
                      std::to_string(offset));
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

/// Whole file contents; gzip members are inflated transparently.
inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes, path);
  return bytes;
}

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                               const std::string& path) {
  if (offset + 4 > bytes.size())
    throw Error(ErrorCode::truncated_file,
                path + ": header ends at offset " + std::to_string(bytes.size()) +
                    ", expected 4 bytes at offset " + std::to_string(offset));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// MNIST IDX image/label pair. Raw labels 0..9 become LabelId 1..10.
inline LabeledImages load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_file_bytes(images_path);
  const auto lab = detail::read_file_bytes(labels_path);

  const auto img_magic = detail::read_be32(img, 0, images_path);
  if (img_magic != kIdxImageMagic)
    throw Error(ErrorCode::bad_magic, images_path + ": magic " + detail::hex32(img_magic) +
                                          " at offset 0, expected " + detail::hex32(kIdxImageMagic));
  const auto lab_magic = detail::read_be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelMagic)
    throw Error(ErrorCode::bad_magic, labels_path + ": magic " + detail::hex32(lab_magic) +
                                          " at offset 0, expected " + detail::hex32(kIdxLabelMagic));

  const std::size_t n_images = detail::read_be32(img, 4, images_path);
  const std::size_t rows = detail::read_be32(img, 8, images_path);
  const std::size_t cols = detail::read_be32(img, 12, images_path);
  const std::size_t n_labels = detail::read_be32(lab, 4, labels_path);
  if (n_images != n_labels)
    throw Error(ErrorCode::count_mismatch,
                labels_path + ": label count " + std::to_string(n_labels) +
                    " at offset 4 does not match image count " + std::to_string(n_images) +
                    " in " + images_path);

  const std::size_t plane = rows * cols;
  if (img.size() < 16 + n_images * plane)
    throw Error(ErrorCode::truncated_file,
                images_path + ": file ends at offset " + std::to_string(img.size()) + ", expected " +
                    std::to_string(16 + n_images * plane) + " bytes");
  if (lab.size() < 8 + n_labels)
    throw Error(ErrorCode::truncated_file,
                labels_path + ": file ends at offset " + std::to_string(lab.size()) + ", expected " +
                    std::to_string(8 + n_labels) + " bytes");

  LabeledImages out;
  out.images.reserve(n_images);
  out.labels.reserve(n_images);
  for (std::size_t i = 0; i < n_images; ++i) {
    Image im(static_cast<int>(cols), static_cast<int>(rows), 1);
    const auto* src = img.data() + 16 + i * plane;
    std::copy(src, src + plane, im.pixels.begin());
    out.images.push_back(std::move(im));
    out.labels.push_back(LabelId{lab[8 + i] + 1});
  }
  return out;
}

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// CIFAR-10 binary batches: one label byte followed by the R, G and B planes.
inline LabeledImages load_cifar10(std::span<const std::string> batch_paths) {
  LabeledImages out;
  for (const auto& path : batch_paths) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() % kCifarRecordBytes != 0)
      throw Error(ErrorCode::truncated_file,
                  path + ": length " + std::to_string(bytes.size()) +
                      " is not a multiple of 3073; last record starts at offset " +
                      std::to_string(bytes.size() / kCifarRecordBytes * kCifarRecordBytes));
    const std::size_t n = bytes.size() / kCifarRecordBytes;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t offset = i * kCifarRecordBytes;
      const int raw = bytes[offset];
      if (raw > 9)
        throw Error(ErrorCode::label_out_of_range,
                    path + ": label byte " + std::to_string(raw) + " at offset " + std::to_string(offset));
      Image im(32, 32, 3);
      std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(offset + 1),
                bytes.begin() + static_cast<std::ptrdiff_t>(offset + kCifarRecordBytes), im.pixels.begin());
      out.images.push_back(std::move(im));
      out.labels.push_back(LabelId{raw + 1});
    }
  }
  return out;
}

namespace detail {

inline std::string csv_where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

}  // namespace detail

/// Parses `label,f1,...,fd` rows. Blank lines are ignored; the dimension is
/// fixed by the first row.
inline Dataset parse_feature_csv(std::istream& in, int num_classes, const std::string& source = "<csv>") {
  std::optional<Dataset> out;
  std::string line;
  std::vector<double> row;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    row.clear();
    int label = 0;
    std::size_t field = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view tok(line.data() + pos, (comma == std::string::npos ? line.size() : comma) - pos);
      const char* first = tok.data();
      const char* last = tok.data() + tok.size();
      if (field == 0) {
        auto [p, ec] = std::from_chars(first, last, label);
        if (ec != std::errc{} || p != last || tok.empty())
          throw Error(ErrorCode::non_numeric_field,
                      detail::csv_where(source, line_no) + ": label field '" + std::string(tok) + "'");
      } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || p != last || tok.empty())
          throw Error(ErrorCode::non_numeric_field, detail::csv_where(source, line_no) + ": field " +
                                                        std::to_string(field + 1) + " '" + std::string(tok) + "'");
        row.push_back(v);
      }
      ++field;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (label < 1 || label > num_classes)
      throw Error(ErrorCode::label_out_of_range, detail::csv_where(source, line_no) + ": label " +
                                                     std::to_string(label) + " outside 1.." +
                                                     std::to_string(num_classes));
    if (!out) out.emplace(row.size(), num_classes);
    if (row.size() != out->dim())
      throw Error(ErrorCode::ragged_row, detail::csv_where(source, line_no) + ": " +
                                             std::to_string(row.size()) + " features, expected " +
                                             std::to_string(out->dim()));
    out->push_back(row, LabelId{label});
  }
  if (!out) out.emplace(0, num_classes);
  return std::move(*out);
}

inline Dataset load_feature_csv(const std::string& path, int num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, path + ": cannot open file");
  return parse_feature_csv(in, num_classes, path);
}

/// Shortest round-trip representation of `v`.
inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, p);
}

inline void write_feature_csv(std::ostream& os, const Dataset& d) {
  std::string line;
  for (std::size_t i = 0; i < d.size(); ++i) {
    line.clear();
    line += std::to_string(d.label(i).value);
    for (double v : d.features(i)) {
      line += ',';
      append_double(line, v);
    }
    line += '\n';
    os.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

inline void save_feature_csv(const std::string& path, const Dataset& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, path + ": cannot open for writing");
  write_feature_csv(os, d);
  if (!os) throw Error(ErrorCode::io_error, path + ": write failed");
}

}  // namespace nncert

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nncert/error.hpp"

namespace nncert {

/// Class label in 1..c. Labels are ranked by value; the larger value wins ties.
struct LabelId {
  int value = 1;

  friend constexpr auto operator<=>(LabelId, LabelId) = default;
};

/// 8-bit image, channel-planar and row-major within each plane.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int channel, int row, int col) {
    return pixels[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  std::uint8_t at(int channel, int row, int col) const {
    return pixels[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }

  bool valid() const {
    return width > 0 && height > 0 && (channels == 1 || channels == 3) &&
           pixels.size() == static_cast<std::size_t>(width) * height * channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Owning labeled feature vector.
struct Example {
  std::vector<double> features;
  LabelId label;

  friend bool operator==(const Example& a, const Example& b) {
    if (a.label != b.label || a.features.size() != b.features.size()) return false;
    for (std::size_t j = 0; j < a.features.size(); ++j) {
      if (std::bit_cast<std::uint64_t>(a.features[j]) !=
          std::bit_cast<std::uint64_t>(b.features[j]))
        return false;
    }
    return true;
  }
};

/// Multiset of examples with a fixed dimension, stored as one row-major block
/// so distance scans stay contiguous. Duplicates are allowed.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, int num_classes) : dim_(dim), num_classes_(num_classes) {
    if (num_classes < 1) throw Error(ErrorCode::invalid_argument, "num_classes must be >= 1");
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return dim_; }
  int num_classes() const { return num_classes_; }

  std::span<const double> features(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  LabelId label(std::size_t i) const { return labels_[i]; }
  Example example(std::size_t i) const {
    auto f = features(i);
    return {{f.begin(), f.end()}, labels_[i]};
  }

  void reserve(std::size_t n) {
    values_.reserve(n * dim_);
    labels_.reserve(n);
  }

  void push_back(std::span<const double> features, LabelId label) {
    if (features.size() != dim_)
      throw Error(ErrorCode::dimension_mismatch,
                  "example has dimension " + std::to_string(features.size()) +
                      ", dataset has " + std::to_string(dim_));
    if (label.value < 1 || label.value > num_classes_)
      throw Error(ErrorCode::label_out_of_range,
                  "label " + std::to_string(label.value) + " outside 1.." +
                      std::to_string(num_classes_));
    for (double v : features) {
      if (!std::isfinite(v)) throw Error(ErrorCode::non_numeric_field, "non-finite feature value");
    }
    values_.insert(values_.end(), features.begin(), features.end());
    labels_.push_back(label);
  }
  void push_back(const Example& e) { push_back(e.features, e.label); }

  /// Rows selected by `indices`, in that order.
  Dataset select(std::span<const std::size_t> indices) const {
    Dataset out(dim_, num_classes_);
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(features(i), labels_[i]);
    return out;
  }

 private:
  std::size_t dim_ = 0;
  int num_classes_ = 1;
  std::vector<double> values_;
  std::vector<LabelId> labels_;
};

/// Test examples share the representation; the label is the ground truth.
using TestSet = Dataset;

namespace detail {

// Bit-exact sort key for multiset operations.
inline std::vector<std::uint64_t> example_key(const Dataset& d, std::size_t i) {
  std::vector<std::uint64_t> key;
  key.reserve(d.dim() + 1);
  key.push_back(static_cast<std::uint64_t>(d.label(i).value));
  for (double v : d.features(i)) key.push_back(std::bit_cast<std::uint64_t>(v));
  return key;
}

inline std::vector<std::vector<std::uint64_t>> sorted_keys(const Dataset& d) {
  std::vector<std::vector<std::uint64_t>> keys;
  keys.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) keys.push_back(example_key(d, i));
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace detail

/// Size of the multiset intersection, matching examples bit-exactly.
inline std::size_t multiset_intersection_size(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::dimension_mismatch, "datasets have dimensions " +
                                                   std::to_string(a.dim()) + " and " +
                                                   std::to_string(b.dim()));
  const auto ka = detail::sorted_keys(a);
  const auto kb = detail::sorted_keys(b);
  std::size_t common = 0;
  auto ia = ka.begin();
  auto ib = kb.begin();
  while (ia != ka.end() && ib != kb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return common;
}

/// Minimal number of modified, added or removed examples turning `clean` into
/// `poisoned`: max(|D*|, |D|) - |D* ∩ D|.
inline std::size_t poisoning_size(const Dataset& clean, const Dataset& poisoned) {
  if (clean.num_classes() != poisoned.num_classes())
    throw Error(ErrorCode::dimension_mismatch, "datasets disagree on the number of classes");
  const std::size_t common = multiset_intersection_size(clean, poisoned);
  return std::max(clean.size(), poisoned.size()) - common;
}

inline bool multiset_equal(const Dataset& a, const Dataset& b) {
  return a.size() == b.size() && a.dim() == b.dim() && detail::sorted_keys(a) == detail::sorted_keys(b);
}

/// Sets the bottom-right `square_side` x `square_side` block of every channel
/// to `intensity`.
inline Image embed_trigger(const Image& image, int square_side, int intensity = 255) {
  if (square_side < 0 || square_side > std::min(image.width, image.height))
    throw Error(ErrorCode::trigger_too_large,
                "trigger side " + std::to_string(square_side) + " exceeds image " +
                    std::to_string(image.width) + "x" + std::to_string(image.height));
  if (intensity < 0 || intensity > 255)
    throw Error(ErrorCode::invalid_argument,
                "trigger intensity " + std::to_string(intensity) + " outside 0..255");
  Image out = image;
  for (int ch = 0; ch < out.channels; ++ch)
    for (int row = out.height - square_side; row < out.height; ++row)
      for (int col = out.width - square_side; col < out.width; ++col)
        out.at(ch, row, col) = static_cast<std::uint8_t>(intensity);
  return out;
}

/// Backdoored copies of the test images. Labels stay with the caller's
/// sequence untouched, so the true label of example i is still labels[i].
inline std::vector<Image> make_backdoor_testset(std::span<const Image> images, int square_side,
                                                int intensity = 255) {
  std::vector<Image> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(embed_trigger(img, square_side, intensity));
  return out;
}

}  // namespace nncert

// Copyright 2026 The TSNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dataset readers (MNIST IDX, CIFAR-10 binary batches) and the TSNN model
// container.
//
// TSNN layout, all integers little-endian:
//
//   "TSNN" | u16 version | u32 input_rank | u32 dim[input_rank]
//   | u32 layer_count | layer_count x { u8 kind, u8 padding, u32 kernel,
//                                       u32 out, u32 stride }
//   | layer_count x { u32 rows, u32 cols, f32 weights[rows*cols] }
//   | u32 crc32 of every preceding byte

#ifndef TSNN_DATA_IO_HPP_
#define TSNN_DATA_IO_HPP_

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tsnn/network_spec.hpp"
#include "tsnn/tensor.hpp"

namespace tsnn {

enum class LoadErrorKind { kIo, kBadMagic, kTruncated, kCountMismatch, kBadLabel, kChecksum, kVersion, kFormat };

class LoadError : public std::runtime_error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  LoadErrorKind kind() const { return kind_; }

 private:
  LoadErrorKind kind_;
};

enum class Split { kTrain, kTest };

struct Dataset {
  Shape sample_shape;          // (C, H, W)
  std::vector<float> images;   // N * C * H * W, values in [0, 1]
  std::vector<int> labels;
  int classes = 10;
  Split split = Split::kTrain;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_size() const { return NumElements(sample_shape); }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(images).subspan(i * sample_size(), sample_size());
  }

  Dataset Subset(std::size_t begin, std::size_t count) const {
    Require(begin + count <= size(), "Dataset::Subset: range out of bounds");
    Dataset d;
    d.sample_shape = sample_shape;
    d.classes = classes;
    d.split = split;
    d.images.assign(images.begin() + static_cast<std::ptrdiff_t>(begin * sample_size()),
                    images.begin() + static_cast<std::ptrdiff_t>((begin + count) * sample_size()));
    d.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return d;
  }
};

namespace detail {

inline std::vector<std::uint8_t> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::uint32_t BigEndian32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

}  // namespace detail

// MNIST IDX pair: images magic 2051 (u8, N x 28 x 28), labels magic 2049.
inline Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        Split split = Split::kTrain) {
  const auto img = detail::ReadFile(images_path);
  const auto lab = detail::ReadFile(labels_path);
  if (img.size() < 16) throw LoadError(LoadErrorKind::kTruncated, "truncated IDX header: " + images_path.string());
  if (lab.size() < 8) throw LoadError(LoadErrorKind::kTruncated, "truncated IDX header: " + labels_path.string());
  if (detail::BigEndian32(img, 0) != 2051)
    throw LoadError(LoadErrorKind::kBadMagic, "bad magic in image file " + images_path.string());
  if (detail::BigEndian32(lab, 0) != 2049)
    throw LoadError(LoadErrorKind::kBadMagic, "bad magic in label file " + labels_path.string());
  const std::size_t n = detail::BigEndian32(img, 4);
  const std::size_t rows = detail::BigEndian32(img, 8);
  const std::size_t cols = detail::BigEndian32(img, 12);
  const std::size_t n_labels = detail::BigEndian32(lab, 4);
  if (n != n_labels)
    throw LoadError(LoadErrorKind::kCountMismatch, "image/label count mismatch: " + std::to_string(n) + " vs " +
                                                       std::to_string(n_labels));
  if (img.size() - 16 < n * rows * cols)
    throw LoadError(LoadErrorKind::kTruncated, "truncated image data: " + images_path.string());
  if (lab.size() - 8 < n) throw LoadError(LoadErrorKind::kTruncated, "truncated label data: " + labels_path.string());

  Dataset d;
  d.split = split;
  d.sample_shape = {1, rows, cols};
  d.images.resize(n * rows * cols);
  for (std::size_t i = 0; i < d.images.size(); ++i) d.images[i] = static_cast<float>(img[16 + i]) / 255.0f;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lab[8 + i] > 9) throw LoadError(LoadErrorKind::kBadLabel, "label > 9 in " + labels_path.string());
    d.labels[i] = lab[8 + i];
  }
  return d;
}

// Standard file names inside an MNIST directory.
inline Dataset LoadMnistDir(const std::filesystem::path& dir, Split split) {
  const bool train = split == Split::kTrain;
  return load_idx(dir / (train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte"),
                  dir / (train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte"), split);
}

// CIFAR-10 binary batches: 3073-byte records (label, 3x32x32 channel-major).
inline Dataset load_cifar_bin(const std::vector<std::filesystem::path>& paths, Split split = Split::kTrain) {
  constexpr std::size_t kRecord = 3073, kPixels = 3072;
  Dataset d;
  d.split = split;
  d.sample_shape = {3, 32, 32};
  for (const auto& p : paths) {
    const auto bytes = detail::ReadFile(p);
    if (bytes.size() % kRecord != 0)
      throw LoadError(LoadErrorKind::kTruncated, "CIFAR batch size is not a multiple of 3073: " + p.string());
    const std::size_t n = bytes.size() / kRecord;
    d.images.reserve(d.images.size() + n * kPixels);
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint8_t label = bytes[r * kRecord];
      if (label > 9) throw LoadError(LoadErrorKind::kBadLabel, "CIFAR label > 9 in " + p.string());
      d.labels.push_back(label);
      for (std::size_t i = 0; i < kPixels; ++i)
        d.images.push_back(static_cast<float>(bytes[r * kRecord + 1 + i]) / 255.0f);
    }
  }
  return d;
}

// Optional CIFAR-style augmentation applied to one (C, H, W) image.
struct Augmentation {
  bool flip = false;
  int crop_pad = 0;     // random crop after zero-padding by this many pixels
  bool whiten = false;  // per-image standardization, rescaled back into [0, 1]
};

inline std::vector<float> AugmentImage(std::span<const float> image, const Shape& shape, const Augmentation& aug,
                                       std::mt19937_64& rng) {
  const std::size_t c = shape[0], h = shape[1], w = shape[2];
  std::vector<float> out(image.begin(), image.end());
  if (aug.crop_pad > 0) {
    std::uniform_int_distribution<int> shift(-aug.crop_pad, aug.crop_pad);
    const int dy = shift(rng), dx = shift(rng);
    std::vector<float> moved(out.size(), 0.0f);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const long sy = static_cast<long>(y) + dy, sx = static_cast<long>(x) + dx;
          if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
          moved[(ch * h + y) * w + x] = out[(ch * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)];
        }
    out.swap(moved);
  }
  if (aug.flip && std::bernoulli_distribution(0.5)(rng)) {
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y) std::reverse(out.begin() + static_cast<std::ptrdiff_t>((ch * h + y) * w),
                                                       out.begin() + static_cast<std::ptrdiff_t>((ch * h + y + 1) * w));
  }
  if (aug.whiten) {
    double mean = 0.0, sq = 0.0;
    for (float v : out) mean += v;
    mean /= static_cast<double>(out.size());
    for (float v : out) sq += (v - mean) * (v - mean);
    const double sd = std::max(std::sqrt(sq / static_cast<double>(out.size())), 1.0 / std::sqrt(double(out.size())));
    // Map +-3 standard deviations onto [0, 1] so the result stays encodable.
    for (float& v : out) v = static_cast<float>(std::clamp(0.5 + (v - mean) / (6.0 * sd), 0.0, 1.0));
  }
  return out;
}

// ---- Model container ------------------------------------------------------

inline constexpr std::uint16_t kModelVersion = 1;

struct Model {
  NetworkSpec spec;
  WeightStore weights;
};

namespace detail {

class ByteWriter {
 public:
  void U8(std::uint8_t v) { bytes_.push_back(v); }
  void U16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F32(float f) { U32(std::bit_cast<std::uint32_t>(f)); }
  void Raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t U8() { return Take(1)[0]; }
  std::uint16_t U16() {
    auto s = Take(2);
    return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
  }
  std::uint32_t U32() {
    auto s = Take(4);
    return std::uint32_t{s[0]} | (std::uint32_t{s[1]} << 8) | (std::uint32_t{s[2]} << 16) | (std::uint32_t{s[3]} << 24);
  }
  float F32() { return std::bit_cast<float>(U32()); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> Take(std::size_t n) {
    if (pos_ + n > b_.size()) throw LoadError(LoadErrorKind::kTruncated, "model file truncated");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

inline std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace detail

inline std::vector<std::uint8_t> SerializeModel(const NetworkSpec& spec, const WeightStore& weights) {
  weights.CheckAgainst(spec);
  detail::ByteWriter w;
  w.Raw("TSNN", 4);
  w.U16(kModelVersion);
  w.U32(static_cast<std::uint32_t>(spec.input.size()));
  for (auto d : spec.input) w.U32(static_cast<std::uint32_t>(d));
  w.U32(static_cast<std::uint32_t>(spec.layers.size()));
  for (const auto& l : spec.layers) {
    w.U8(static_cast<std::uint8_t>(l.kind));
    w.U8(static_cast<std::uint8_t>(l.padding));
    w.U32(l.kernel);
    w.U32(l.out);
    w.U32(l.stride);
  }
  for (const auto& m : weights.layers) {
    w.U32(static_cast<std::uint32_t>(m.rows));
    w.U32(static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) w.F32(static_cast<float>(v));
  }
  w.U32(detail::Crc32(w.bytes()));
  return std::move(w.bytes());
}

inline Model DeserializeModel(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 4 + 4 + 4) throw LoadError(LoadErrorKind::kTruncated, "model file too short");
  if (std::memcmp(bytes.data(), "TSNN", 4) != 0) throw LoadError(LoadErrorKind::kBadMagic, "not a TSNN model file");
  const auto body = bytes.first(bytes.size() - 4);
  detail::ByteReader tail(bytes.last(4));
  if (tail.U32() != detail::Crc32(body)) throw LoadError(LoadErrorKind::kChecksum, "model checksum mismatch");

  detail::ByteReader r(body.subspan(4));
  const std::uint16_t version = r.U16();
  if (version == 0 || version > kModelVersion)
    throw LoadError(LoadErrorKind::kVersion, "unsupported model version " + std::to_string(version));
  Model model;
  const std::uint32_t rank = r.U32();
  if (rank > 8) throw LoadError(LoadErrorKind::kFormat, "implausible input rank");
  for (std::uint32_t i = 0; i < rank; ++i) model.spec.input.push_back(r.U32());
  const std::uint32_t n_layers = r.U32();
  if (static_cast<std::size_t>(n_layers) * 14 > r.remaining())
    throw LoadError(LoadErrorKind::kTruncated, "model file truncated in layer table");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint8_t kind = r.U8(), pad = r.U8();
    if (kind > 2 || pad > 1) throw LoadError(LoadErrorKind::kFormat, "unknown layer kind or padding");
    l.kind = static_cast<LayerKind>(kind);
    l.padding = static_cast<Padding>(pad);
    l.kernel = r.U32();
    l.out = r.U32();
    l.stride = r.U32();
    model.spec.layers.push_back(l);
  }
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::size_t rows = r.U32(), cols = r.U32();
    if (rows * cols * 4 > r.remaining()) throw LoadError(LoadErrorKind::kTruncated, "model file truncated in weights");
    Matrix m(rows, cols);
    for (double& v : m.data) v = r.F32();
    model.weights.layers.push_back(std::move(m));
  }
  if (r.remaining() != 0) throw LoadError(LoadErrorKind::kFormat, "trailing bytes in model file");
  try {
    model.weights.CheckAgainst(model.spec);
  } catch (const ContractViolation& e) {
    throw LoadError(LoadErrorKind::kFormat, std::string("inconsistent model: ") + e.what());
  }
  return model;
}

inline void save_model(const NetworkSpec& spec, const WeightStore& weights, const std::filesystem::path& path) {
  const auto bytes = SerializeModel(spec, weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError(LoadErrorKind::kIo, "write failed for " + path.string());
}

inline Model load_model(const std::filesystem::path& path) { return DeserializeModel(detail::ReadFile(path)); }

// Rounds every weight to float32, the precision of the model file.
inline WeightStore RoundToFileFloat(WeightStore w) {
  for (auto& m : w.layers)
    for (double& v : m.data) v = static_cast<float>(v);
  return w;
}

}  // namespace tsnn

#endif  // TSNN_DATA_IO_HPP_

// Copyright 2026 The csagg Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csagg/random.hpp"

namespace csagg::fl {

// Dense row-major dataset with integer class labels in [0, classes).
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int classes = 0;
  std::vector<double> features;  // rows * cols
  std::vector<int> labels;       // rows

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * cols, cols);
  }
};

namespace detail {

inline double uniform_unit(RandomSource& rng) {
  // 53 random bits mapped to (0, 1]; never zero, safe under log.
  return static_cast<double>((rng.next_u64() >> 11) + 1) * 0x1.0p-53;
}

inline double gaussian(RandomSource& rng) {
  const double u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

// Synthetic Gaussian blobs: one spherical unit-variance cluster per class,
// centers drawn from N(0, separation^2 I), samples assigned round-robin so
// class counts differ by at most one.
inline Dataset make_blobs(std::size_t samples, std::size_t dim, int classes,
                          double separation, RandomSource& rng) {
  if (samples == 0 || dim == 0 || classes < 2)
    throw std::invalid_argument("make_blobs: need samples, dim, classes >= 2");
  std::vector<double> centers(static_cast<std::size_t>(classes) * dim);
  for (double& c : centers) c = separation * detail::gaussian(rng);
  Dataset d;
  d.rows = samples;
  d.cols = dim;
  d.classes = classes;
  d.features.resize(samples * dim);
  d.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(classes));
    d.labels[i] = y;
    for (std::size_t j = 0; j < dim; ++j)
      d.features[i * dim + j] =
          centers[static_cast<std::size_t>(y) * dim + j] + detail::gaussian(rng);
  }
  return d;
}

inline Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.rows = idx.size();
  out.cols = d.cols;
  out.classes = d.classes;
  out.features.reserve(idx.size() * d.cols);
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= d.rows) throw std::out_of_range("take_rows: index out of range");
    out.features.insert(out.features.end(),
                        d.features.begin() + static_cast<std::ptrdiff_t>(i * d.cols),
                        d.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * d.cols));
    out.labels.push_back(d.labels[i]);
  }
  return out;
}

// Uniformly shuffles row indices and deals them into equal shards, one per
// client; the remainder rows are dropped so every shard has the same size.
inline std::vector<Dataset> partition_iid(const Dataset& d, int clients,
                                          RandomSource& rng) {
  if (clients < 1) throw std::invalid_argument("partition_iid: clients >= 1");
  const std::size_t shard = d.rows / static_cast<std::size_t>(clients);
  if (shard == 0) throw std::invalid_argument("partition_iid: too few rows");
  std::vector<std::size_t> idx(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) idx[i] = i;
  for (std::size_t i = d.rows - 1; i > 0; --i) {
    const std::size_t j = uniform_below(rng, static_cast<std::uint64_t>(i) + 1);
    std::swap(idx[i], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<Dataset> shards;
  shards.reserve(static_cast<std::size_t>(clients));
  for (int c = 0; c < clients; ++c) {
    std::vector<std::size_t> rows(idx.begin() + static_cast<std::ptrdiff_t>(shard * c),
                                  idx.begin() + static_cast<std::ptrdiff_t>(shard * (c + 1)));
    shards.push_back(take_rows(d, rows));
  }
  return shards;
}

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("truncated IDX header: " + path);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace detail

// IDX image file (magic 2051): unsigned bytes scaled to [0, 1].
inline Dataset load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (detail::read_u32_be(in, path) != 2051u)
    throw std::runtime_error("bad IDX image magic: " + path);
  const std::uint32_t count = detail::read_u32_be(in, path);
  const std::uint32_t rows = detail::read_u32_be(in, path);
  const std::uint32_t cols = detail::read_u32_be(in, path);
  const std::size_t pixels =
      static_cast<std::size_t>(count) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(pixels)))
    throw std::runtime_error("truncated IDX image data: " + path);
  Dataset d;
  d.rows = count;
  d.cols = static_cast<std::size_t>(rows) * cols;
  d.features.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i)
    d.features[i] = static_cast<double>(raw[i]) / 255.0;
  d.labels.assign(count, 0);
  return d;
}

// IDX label file (magic 2049); also sets the class count to max label + 1.
inline void load_idx_labels(const std::string& path, Dataset& d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (detail::read_u32_be(in, path) != 2049u)
    throw std::runtime_error("bad IDX label magic: " + path);
  const std::uint32_t count = detail::read_u32_be(in, path);
  if (count != d.rows)
    throw std::runtime_error("IDX label count does not match images: " + path);
  std::vector<unsigned char> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(count)))
    throw std::runtime_error("truncated IDX label data: " + path);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    d.labels[i] = raw[i];
    if (d.labels[i] > max_label) max_label = d.labels[i];
  }
  d.classes = max_label + 1;
}

}  // namespace csagg::fl

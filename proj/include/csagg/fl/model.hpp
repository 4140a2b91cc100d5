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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "csagg/fl/dataset.hpp"
#include "csagg/random.hpp"

namespace csagg::fl {

// Softmax classifier over a flat parameter vector. With hidden == 0 the
// model is multinomial logistic regression; otherwise one tanh hidden layer.
// Layout: [W1 (hidden x input), b1, W2 (classes x hidden), b2], or
// [W (classes x input), b] in the linear case, all row-major.
struct Model {
  std::size_t input = 0;
  int classes = 0;
  std::size_t hidden = 0;

  Model(std::size_t input_dim, int class_count, std::size_t hidden_units = 0)
      : input(input_dim), classes(class_count), hidden(hidden_units) {
    if (input == 0 || classes < 2)
      throw std::invalid_argument("Model: need input dim and classes >= 2");
  }

  std::size_t dim() const {
    const std::size_t k = static_cast<std::size_t>(classes);
    if (hidden == 0) return k * input + k;
    return hidden * input + hidden + k * hidden + k;
  }

  std::vector<double> init_params(RandomSource& rng, double scale = 0.1) const {
    std::vector<double> p(dim());
    for (double& v : p) v = scale * detail::gaussian(rng);
    return p;
  }
};

namespace detail {

inline void softmax_in_place(std::vector<double>& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// Class probabilities for one example; scratch holds the hidden activations
// when the model has a hidden layer.
inline std::vector<double> class_probs(const Model& m,
                                       std::span<const double> params,
                                       std::span<const double> x,
                                       std::vector<double>* hidden_out) {
  const std::size_t k = static_cast<std::size_t>(m.classes);
  std::vector<double> z(k, 0.0);
  if (m.hidden == 0) {
    for (std::size_t c = 0; c < k; ++c) {
      double acc = params[k * m.input + c];
      const double* w = params.data() + c * m.input;
      for (std::size_t j = 0; j < m.input; ++j) acc += w[j] * x[j];
      z[c] = acc;
    }
  } else {
    std::vector<double> h(m.hidden);
    const double* w1 = params.data();
    const double* b1 = w1 + m.hidden * m.input;
    const double* w2 = b1 + m.hidden;
    const double* b2 = w2 + k * m.hidden;
    for (std::size_t u = 0; u < m.hidden; ++u) {
      double acc = b1[u];
      const double* w = w1 + u * m.input;
      for (std::size_t j = 0; j < m.input; ++j) acc += w[j] * x[j];
      h[u] = std::tanh(acc);
    }
    for (std::size_t c = 0; c < k; ++c) {
      double acc = b2[c];
      const double* w = w2 + c * m.hidden;
      for (std::size_t u = 0; u < m.hidden; ++u) acc += w[u] * h[u];
      z[c] = acc;
    }
    if (hidden_out) *hidden_out = std::move(h);
  }
  softmax_in_place(z);
  return z;
}

}  // namespace detail

// Mean cross-entropy loss over the given rows.
inline double loss(const Model& m, std::span<const double> params,
                   const Dataset& d, std::span<const std::size_t> rows) {
  if (params.size() != m.dim()) throw std::invalid_argument("loss: bad params");
  double total = 0.0;
  for (std::size_t i : rows) {
    const std::vector<double> p =
        detail::class_probs(m, params, d.row(i), nullptr);
    total += -std::log(std::max(p[static_cast<std::size_t>(d.labels[i])], 1e-300));
  }
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

inline double loss(const Model& m, std::span<const double> params,
                   const Dataset& d) {
  std::vector<std::size_t> rows(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) rows[i] = i;
  return loss(m, params, d, rows);
}

// Mean cross-entropy gradient over the given rows, same layout as params.
inline std::vector<double> gradient(const Model& m,
                                    std::span<const double> params,
                                    const Dataset& d,
                                    std::span<const std::size_t> rows) {
  if (params.size() != m.dim())
    throw std::invalid_argument("gradient: bad params");
  const std::size_t k = static_cast<std::size_t>(m.classes);
  std::vector<double> g(m.dim(), 0.0);
  std::vector<double> h;
  for (std::size_t i : rows) {
    const std::span<const double> x = d.row(i);
    std::vector<double> p = detail::class_probs(m, params, x, &h);
    p[static_cast<std::size_t>(d.labels[i])] -= 1.0;  // dL/dz
    if (m.hidden == 0) {
      for (std::size_t c = 0; c < k; ++c) {
        double* gw = g.data() + c * m.input;
        for (std::size_t j = 0; j < m.input; ++j) gw[j] += p[c] * x[j];
        g[k * m.input + c] += p[c];
      }
    } else {
      const double* w2 = params.data() + m.hidden * m.input + m.hidden;
      double* gw1 = g.data();
      double* gb1 = gw1 + m.hidden * m.input;
      double* gw2 = gb1 + m.hidden;
      double* gb2 = gw2 + k * m.hidden;
      for (std::size_t c = 0; c < k; ++c) {
        double* gw = gw2 + c * m.hidden;
        for (std::size_t u = 0; u < m.hidden; ++u) gw[u] += p[c] * h[u];
        gb2[c] += p[c];
      }
      for (std::size_t u = 0; u < m.hidden; ++u) {
        double dh = 0.0;
        for (std::size_t c = 0; c < k; ++c) dh += w2[c * m.hidden + u] * p[c];
        const double dz = dh * (1.0 - h[u] * h[u]);
        double* gw = gw1 + u * m.input;
        for (std::size_t j = 0; j < m.input; ++j) gw[j] += dz * x[j];
        gb1[u] += dz;
      }
    }
  }
  if (!rows.empty()) {
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& v : g) v *= inv;
  }
  return g;
}

// Fraction of rows whose argmax probability matches the label.
inline double accuracy(const Model& m, std::span<const double> params,
                       const Dataset& d) {
  if (d.rows == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.rows; ++i) {
    const std::vector<double> p =
        detail::class_probs(m, params, d.row(i), nullptr);
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[best]) best = c;
    if (static_cast<int>(best) == d.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(d.rows);
}

}  // namespace csagg::fl

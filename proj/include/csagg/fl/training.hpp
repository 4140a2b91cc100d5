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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "csagg/coder.hpp"
#include "csagg/fl/dataset.hpp"
#include "csagg/fl/model.hpp"
#include "csagg/random.hpp"
#include "csagg/secure_aggregation.hpp"
#include "csagg/transport.hpp"

namespace csagg::fl {

struct SgdConfig {
  int local_steps = 10;       // E
  std::size_t batch_size = 50;  // 0 means full batch
  double lr = 0.1;
  double momentum = 0.0;
};

enum class AggMethod { kFedAvg, kCompressed };

struct FederatedConfig {
  int clients = 5;
  int servers = 2;
  AggMethod method = AggMethod::kCompressed;
  UnionStrategy strategy = UnionStrategy::kPartialSecure;
  int q = 1;
  FixedPointParams fp{};
  double rho = 0.1;
  int rounds = 40;
  SgdConfig sgd{};
  std::uint64_t seed = 1;
  int threads = 1;
  std::size_t eval_cap = 0;  // rows of train data used for the loss metric; 0 = all
};

// E steps of mini-batch SGD from params; returns the parameter delta.
// Batches are sampled uniformly with replacement, or the whole shard in
// order when batch_size is 0 or at least the shard size.
inline std::vector<double> local_train(const Model& model,
                                       std::span<const double> params,
                                       const Dataset& shard,
                                       const SgdConfig& sgd,
                                       RandomSource& rng) {
  if (sgd.local_steps < 1)
    throw std::invalid_argument("local_train: need at least one step");
  if (shard.rows == 0) throw std::invalid_argument("local_train: empty shard");
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> velocity(theta.size(), 0.0);
  const bool full_batch =
      sgd.batch_size == 0 || sgd.batch_size >= shard.rows;
  std::vector<std::size_t> batch(full_batch ? shard.rows : sgd.batch_size);
  if (full_batch)
    for (std::size_t i = 0; i < shard.rows; ++i) batch[i] = i;
  for (int step = 0; step < sgd.local_steps; ++step) {
    if (!full_batch)
      for (std::size_t& b : batch)
        b = static_cast<std::size_t>(uniform_below(rng, shard.rows));
    const std::vector<double> g = gradient(model, theta, shard, batch);
    for (double v : g)
      if (!std::isfinite(v))
        throw std::runtime_error("local_train: non-finite gradient at step " +
                                 std::to_string(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      velocity[i] = sgd.momentum * velocity[i] + g[i];
      theta[i] -= sgd.lr * velocity[i];
    }
  }
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= params[i];
  return theta;
}

namespace detail {

inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n =
      std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

struct RoundMetrics {
  int round = 0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  std::uint64_t bits = 0;
};

struct TrainResult {
  std::vector<RoundMetrics> metrics;
  std::vector<double> params;
};

struct FederatedState {
  std::vector<double> params;
  std::vector<Dataset> shards;
  std::vector<std::vector<double>> residuals;  // one accumulator per client
};

inline FederatedState init_state(const Model& model, const Dataset& train,
                                 const FederatedConfig& cfg,
                                 DeterministicRng& master) {
  FederatedState st;
  auto part_rng = master.fork(stream_salt(0, 1, 0, 0));
  st.shards = partition_iid(train, cfg.clients, *part_rng);
  auto init_rng = master.fork(stream_salt(0, 2, 0, 0));
  st.params = model.init_params(*init_rng);
  st.residuals.assign(static_cast<std::size_t>(cfg.clients),
                      std::vector<double>(model.dim(), 0.0));
  return st;
}

// One aggregation round: local training on every shard, then either the
// plain FedAvg mean (32-bit floats both ways) or EC coding plus the
// compressed secure aggregation. Every client applies the same broadcast
// result, so a single parameter vector represents them all.
inline std::uint64_t federated_round(const Model& model, FederatedState& st,
                                     const FederatedConfig& cfg, int round,
                                     DeterministicRng& master) {
  const std::size_t c = static_cast<std::size_t>(cfg.clients);
  const std::size_t dim = model.dim();
  std::vector<std::vector<double>> deltas(c);
  detail::parallel_for(c, cfg.threads, [&](std::size_t i) {
    auto rng = master.fork(
        stream_salt(static_cast<std::uint64_t>(round), 3, 0, i + 1));
    deltas[i] = local_train(model, st.params, st.shards[i], cfg.sgd, *rng);
  });

  std::vector<double> update(dim, 0.0);
  std::uint64_t bits = 0;
  if (cfg.method == AggMethod::kFedAvg) {
    for (const auto& d : deltas)
      for (std::size_t j = 0; j < dim; ++j) update[j] += d[j];
    for (double& v : update) v /= static_cast<double>(c);
    bits = 2ull * c * 32ull * dim;
  } else {
    std::vector<TopBinaryUpdate> codes(c);
    detail::parallel_for(c, cfg.threads, [&](std::size_t i) {
      EcStepResult ec = ec_step(deltas[i], st.residuals[i], cfg.rho);
      codes[i] = std::move(ec.code);
      st.residuals[i] = std::move(ec.residual);
    });
    AggConfig acfg;
    acfg.clients = cfg.clients;
    acfg.servers = cfg.servers;
    acfg.strategy = cfg.strategy;
    acfg.q = cfg.q;
    acfg.fp = cfg.fp;
    acfg.threads = cfg.threads;
    Fabric fabric(cfg.clients, cfg.servers);
    auto proto_rng = master.fork(
        stream_salt(static_cast<std::uint64_t>(round), 4, 0, 0));
    AggregationResult agg =
        compressed_secure_agg_on(fabric, codes, acfg, round, *proto_rng);
    update = std::move(agg.update);
    bits = fabric.transcript().total_bits();
  }
  for (std::size_t j = 0; j < dim; ++j) st.params[j] += update[j];
  return bits;
}

inline TrainResult run_training(const Model& model, const Dataset& train,
                                const Dataset& test,
                                const FederatedConfig& cfg) {
  if (cfg.rounds < 1) throw std::invalid_argument("run_training: rounds >= 1");
  DeterministicRng master(cfg.seed);
  FederatedState st = init_state(model, train, cfg, master);
  std::vector<std::size_t> eval_rows(
      cfg.eval_cap == 0 ? train.rows : std::min(cfg.eval_cap, train.rows));
  for (std::size_t i = 0; i < eval_rows.size(); ++i) eval_rows[i] = i;

  TrainResult out;
  out.metrics.reserve(static_cast<std::size_t>(cfg.rounds));
  for (int r = 0; r < cfg.rounds; ++r) {
    const std::uint64_t bits = federated_round(model, st, cfg, r, master);
    RoundMetrics m;
    m.round = r;
    m.train_loss = loss(model, st.params, train, eval_rows);
    m.test_acc = accuracy(model, st.params, test);
    m.bits = bits;
    out.metrics.push_back(m);
  }
  out.params = std::move(st.params);
  return out;
}

// Comma-separated metric rows in a fixed format, one line per round.
inline void write_metrics_csv(std::ostream& os,
                              const std::vector<RoundMetrics>& metrics) {
  os << "round,train_loss,test_acc,bits_this_round\n";
  char line[128];
  for (const RoundMetrics& m : metrics) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.4f,%llu\n", m.round,
                  m.train_loss, m.test_acc,
                  static_cast<unsigned long long>(m.bits));
    os << line;
  }
}

}  // namespace csagg::fl

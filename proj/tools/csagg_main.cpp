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

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csagg/coder.hpp"
#include "csagg/cost_model.hpp"
#include "csagg/fl/dataset.hpp"
#include "csagg/fl/model.hpp"
#include "csagg/fl/training.hpp"
#include "csagg/random.hpp"
#include "csagg/secure_aggregation.hpp"
#include "csagg/stats.hpp"
#include "csagg/transport.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kToleranceFailure = 1;
constexpr int kUsageError = 2;

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// ---- simulate ----

struct SimulateArgs {
  int clients = 5;
  int servers = 2;
  std::uint64_t dim = 1000;
  double rho = 0.1;
  csagg::UnionStrategy strategy = csagg::UnionStrategy::kPartialSecure;
  int q = 1;
  int frac_bits = 16;
  int word_bits = 32;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string transcript_path;
  std::string report_path;
};

int cmd_simulate(const SimulateArgs& a) {
  csagg::AggConfig cfg;
  cfg.clients = a.clients;
  cfg.servers = a.servers;
  cfg.strategy = a.strategy;
  cfg.q = a.q;
  cfg.fp = csagg::FixedPointParams{a.frac_bits, a.word_bits};
  cfg.threads = a.threads;
  csagg::validate(cfg);

  csagg::DeterministicRng master(a.seed);
  std::vector<csagg::TopBinaryUpdate> codes;
  codes.reserve(static_cast<std::size_t>(a.clients));
  for (int i = 0; i < a.clients; ++i) {
    auto rng = master.fork(csagg::stream_salt(0, 9, 0, i + 1));
    std::vector<double> update(a.dim);
    for (double& v : update) v = csagg::fl::detail::gaussian(*rng);
    std::vector<double> residual(a.dim, 0.0);
    codes.push_back(csagg::ec_step(update, residual, a.rho).code);
  }

  csagg::Fabric fabric(a.clients, a.servers);
  auto proto_rng = master.fork(csagg::stream_salt(0, 4, 0, 0));
  const csagg::AggregationResult result =
      csagg::compressed_secure_agg_on(fabric, codes, cfg, 0, *proto_rng);

  const csagg::cost::ReconcileReport report = csagg::cost::reconcile(
      fabric.transcript(), a.strategy, a.clients, a.servers, a.dim,
      a.strategy == csagg::UnionStrategy::kNoUnion ? a.dim
                                                   : result.support.size(),
      a.q, a.word_bits);

  std::ostringstream text;
  const char* names[] = {"none", "secure", "partial", "plaintext"};
  text << "strategy " << names[static_cast<int>(a.strategy)] << " clients "
       << a.clients << " servers " << a.servers << " dim " << a.dim << " rho "
       << format("%.4f", a.rho) << " seed " << a.seed << "\n";
  text << "union size " << result.support.size() << "\n";
  text << format("factor sum %.6f\n", result.factor_sum);
  text << "total bits " << fabric.transcript().total_bits() << "\n";
  for (const auto& e : report.entries)
    text << "tag " << csagg::tag_name(e.tag) << " analytic " << e.analytic_bits
         << " measured " << e.measured_bits << (e.matches() ? " ok" : " MISMATCH")
         << "\n";
  text << (report.exact ? "reconcile exact\n" : "reconcile MISMATCH\n");

  std::cout << text.str();
  if (!a.report_path.empty()) write_text_file(a.report_path, text.str());
  if (!a.transcript_path.empty()) {
    std::ostringstream log;
    fabric.transcript().write_log(log);
    write_text_file(a.transcript_path, log.str());
  }
  return report.exact ? kOk : kToleranceFailure;
}

// ---- verify-costs ----

struct VerifyArgs {
  std::string table = "all";
  int row = 0;  // 1-based; 0 = all rows
  std::string csv_path;
};

int cmd_verify_costs(const VerifyArgs& a) {
  struct Block {
    const char* name;
    const std::vector<csagg::cost::ReferenceRow>* rows;
  };
  std::vector<Block> blocks;
  if (a.table == "mnist" || a.table == "all")
    blocks.push_back({"mnist", &csagg::cost::mnist_reference_table()});
  if (a.table == "cifar" || a.table == "all")
    blocks.push_back({"cifar", &csagg::cost::cifar_reference_table()});
  if (a.row != 0 && blocks.size() != 1)
    throw std::invalid_argument("--row needs --table mnist or --table cifar");

  std::ostringstream csv;
  csv << "table,row,label,local_steps,computed,reference,delta_pct,unit,status\n";
  bool all_ok = true;
  for (const Block& b : blocks) {
    std::cout << "table " << b.name << "\n";
    for (std::size_t i = 0; i < b.rows->size(); ++i) {
      if (a.row != 0 && static_cast<std::size_t>(a.row) != i + 1) continue;
      const csagg::cost::ReferenceRow& row = (*b.rows)[i];
      const double computed = row.gb ? csagg::cost::total_gb(row.scenario)
                                     : csagg::cost::total_mb(row.scenario);
      const double delta_pct =
          (computed - row.reference) / row.reference * 100.0;
      const bool ok = csagg::cost::row_within_tolerance(row);
      all_ok = all_ok && ok;
      std::cout << format("row %2zu %-26s E=%-3d computed=%10.2f reference=%10.2f "
                          "delta=%+7.3f%% unit=%s %s\n",
                          i + 1, row.label.c_str(), row.local_steps, computed,
                          row.reference, delta_pct, row.gb ? "GB" : "MB",
                          ok ? "ok" : "FAIL");
      csv << b.name << ',' << i + 1 << ',' << row.label << ','
          << row.local_steps << ','
          << format("%.6f,%.2f,%.6f,", computed, row.reference, delta_pct)
          << (row.gb ? "GB" : "MB") << ',' << (ok ? "ok" : "FAIL") << "\n";
    }
  }
  if (a.row != 0 && a.row > static_cast<int>(blocks.front().rows->size()))
    throw std::invalid_argument("--row out of range");
  if (!a.csv_path.empty()) write_text_file(a.csv_path, csv.str());
  std::cout << (all_ok ? "all rows within tolerance\n"
                       : "TOLERANCE EXCEEDED\n");
  return all_ok ? kOk : kToleranceFailure;
}

// ---- analyze-union ----

struct AnalyzeArgs {
  std::uint64_t dim = 61706;
  std::uint64_t topk = 6170;
  int clients = 5;
  int q = 1;
  int trials = 100;
  std::uint64_t seed = 1;
};

int cmd_analyze_union(const AnalyzeArgs& a) {
  if (a.topk > a.dim) throw std::invalid_argument("--topk must be <= --dim");
  const double model_efn =
      csagg::expected_false_negatives(a.dim, a.topk, a.clients, a.q);
  const double exact_efn =
      csagg::expected_false_negatives_exact(a.dim, a.topk, a.clients, a.q);
  const double model_alone = csagg::prob_alone(a.dim, a.topk, a.clients, a.q);
  std::cout << "dim " << a.dim << " topk " << a.topk << " clients " << a.clients
            << " q " << a.q << " trials " << a.trials << "\n";
  std::cout << format("false negatives, independence model: %.2f\n", model_efn);
  std::cout << format("false negatives, exact mask law:     %.2f\n", exact_efn);
  std::cout << format("alone probability, independence model: %.4f\n",
                      model_alone);
  if (a.trials <= 0 || a.topk == 0) {
    std::cout << "monte carlo skipped\n";
    return kOk;
  }

  csagg::DeterministicRng master(a.seed);
  const std::uint64_t mask_range = (std::uint64_t{1} << a.q) - 1;
  const csagg::Modulus m = csagg::Modulus::pow2(a.q);
  std::vector<std::uint32_t> pool(a.dim);
  std::vector<std::uint32_t> holders(a.dim);
  std::vector<double> fn_per_trial;
  std::uint64_t alone_hits = 0;
  std::uint64_t alone_total = 0;
  for (int t = 0; t < a.trials; ++t) {
    auto rng = master.fork(csagg::stream_salt(t, 6, 0, 0));
    std::fill(holders.begin(), holders.end(), 0u);
    std::vector<std::uint32_t> first_client;
    for (int c = 0; c < a.clients; ++c) {
      for (std::uint64_t i = 0; i < a.dim; ++i)
        pool[i] = static_cast<std::uint32_t>(i);
      for (std::uint64_t i = 0; i < a.topk; ++i) {
        const std::uint64_t j = i + csagg::uniform_below(*rng, a.dim - i);
        std::swap(pool[i], pool[j]);
      }
      for (std::uint64_t i = 0; i < a.topk; ++i) ++holders[pool[i]];
      if (c == 0)
        first_client.assign(pool.begin(),
                            pool.begin() + static_cast<std::ptrdiff_t>(a.topk));
    }
    std::uint64_t misses = 0;
    std::vector<std::uint8_t> missed(a.dim, 0);
    for (std::uint64_t i = 0; i < a.dim; ++i) {
      if (holders[i] < 2) continue;
      std::uint64_t sum = 0;
      for (std::uint32_t h = 0; h < holders[i]; ++h)
        sum = m.add(sum, 1 + csagg::uniform_below(*rng, mask_range));
      if (sum == 0) {
        ++misses;
        missed[i] = 1;
      }
    }
    fn_per_trial.push_back(static_cast<double>(misses));
    for (std::uint32_t idx : first_client) {
      ++alone_total;
      if (!missed[idx]) ++alone_hits;
    }
  }
  const double fn_mean = csagg::stats::mean(fn_per_trial);
  double var = 0.0;
  for (double v : fn_per_trial) var += (v - fn_mean) * (v - fn_mean);
  var /= std::max<std::size_t>(1, fn_per_trial.size() - 1);
  const double half = 2.5758293035489004 *
                      std::sqrt(var / static_cast<double>(fn_per_trial.size()));
  std::cout << format(
      "monte carlo false negatives: mean %.2f ci99 [%.2f, %.2f]\n", fn_mean,
      fn_mean - half, fn_mean + half);
  const double alone_rate =
      static_cast<double>(alone_hits) / static_cast<double>(alone_total);
  const csagg::stats::Interval ci =
      csagg::stats::binomial_interval(alone_total, alone_rate);
  std::cout << format(
      "monte carlo alone probability: %.4f ci99 [%.4f, %.4f]\n", alone_rate,
      ci.lo / static_cast<double>(alone_total),
      ci.hi / static_cast<double>(alone_total));
  return kOk;
}

// ---- train ----

struct TrainArgs {
  csagg::fl::FederatedConfig cfg;
  std::string method = "compressed";
  std::size_t samples = 2500;
  std::size_t input_dim = 10;
  int classes = 2;
  double separation = 2.0;
  double test_fraction = 0.2;
  std::size_t hidden = 0;
  std::string images, labels, test_images, test_labels;
  std::string metrics_path;
  bool paired = false;
};

int cmd_train(TrainArgs& a) {
  using csagg::fl::Dataset;
  Dataset train, test;
  if (!a.images.empty() || !a.labels.empty() || !a.test_images.empty() ||
      !a.test_labels.empty()) {
    if (a.images.empty() || a.labels.empty() || a.test_images.empty() ||
        a.test_labels.empty())
      throw std::invalid_argument(
          "IDX mode needs --images, --labels, --test-images, --test-labels");
    train = csagg::fl::load_idx_images(a.images);
    csagg::fl::load_idx_labels(a.labels, train);
    test = csagg::fl::load_idx_images(a.test_images);
    csagg::fl::load_idx_labels(a.test_labels, test);
    test.classes = train.classes;
  } else {
    csagg::DeterministicRng master(a.cfg.seed);
    auto data_rng = master.fork(csagg::stream_salt(0, 8, 0, 0));
    const Dataset all = csagg::fl::make_blobs(a.samples, a.input_dim,
                                              a.classes, a.separation,
                                              *data_rng);
    const std::size_t test_rows =
        static_cast<std::size_t>(a.test_fraction * static_cast<double>(all.rows));
    if (test_rows == 0 || test_rows >= all.rows)
      throw std::invalid_argument("--test-fraction leaves no train or test rows");
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < all.rows - test_rows; ++i) train_idx.push_back(i);
    for (std::size_t i = all.rows - test_rows; i < all.rows; ++i)
      test_idx.push_back(i);
    train = csagg::fl::take_rows(all, train_idx);
    test = csagg::fl::take_rows(all, test_idx);
  }

  const csagg::fl::Model model(train.cols, train.classes, a.hidden);
  a.cfg.method = a.method == "fedavg" ? csagg::fl::AggMethod::kFedAvg
                                      : csagg::fl::AggMethod::kCompressed;

  const csagg::fl::TrainResult primary =
      csagg::fl::run_training(model, train, test, a.cfg);
  auto summarize = [&](const char* name, const csagg::fl::TrainResult& r) {
    std::uint64_t bits = 0;
    for (const auto& mrow : r.metrics) bits += mrow.bits;
    std::cout << format(
        "method %s final_train_loss %.6f final_test_acc %.4f total_bits %llu\n",
        name, r.metrics.back().train_loss, r.metrics.back().test_acc,
        static_cast<unsigned long long>(bits));
  };
  summarize(a.method.c_str(), primary);

  if (a.paired) {
    csagg::fl::FederatedConfig ref_cfg = a.cfg;
    ref_cfg.method = a.cfg.method == csagg::fl::AggMethod::kFedAvg
                         ? csagg::fl::AggMethod::kCompressed
                         : csagg::fl::AggMethod::kFedAvg;
    const csagg::fl::TrainResult ref =
        csagg::fl::run_training(model, train, test, ref_cfg);
    summarize(ref_cfg.method == csagg::fl::AggMethod::kFedAvg ? "fedavg"
                                                              : "compressed",
              ref);
    std::cout << format("paired_acc_gap %.4f\n",
                        std::fabs(primary.metrics.back().test_acc -
                                  ref.metrics.back().test_acc));
    if (!a.metrics_path.empty()) {
      std::ostringstream os;
      csagg::fl::write_metrics_csv(os, ref.metrics);
      write_text_file(a.metrics_path + ".ref", os.str());
    }
  }

  if (!a.metrics_path.empty()) {
    std::ostringstream os;
    csagg::fl::write_metrics_csv(os, primary.metrics);
    write_text_file(a.metrics_path, os.str());
  } else if (!a.paired) {
    csagg::fl::write_metrics_csv(std::cout, primary.metrics);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed secure aggregation simulator"};
  app.require_subcommand(1);

  const std::map<std::string, csagg::UnionStrategy> strategy_names{
      {"none", csagg::UnionStrategy::kNoUnion},
      {"secure", csagg::UnionStrategy::kSecure},
      {"partial", csagg::UnionStrategy::kPartialSecure},
      {"plaintext", csagg::UnionStrategy::kPlaintext}};

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run one aggregation round and reconcile its ledger");
  simulate->add_option("--clients", sim.clients)->check(CLI::PositiveNumber);
  simulate->add_option("--servers", sim.servers)->check(CLI::Range(2, 64));
  simulate->add_option("--dim", sim.dim)->check(CLI::PositiveNumber);
  simulate->add_option("--rho", sim.rho)->check(CLI::Range(1e-9, 1.0));
  simulate->add_option("--strategy", sim.strategy)
      ->transform(CLI::CheckedTransformer(strategy_names, CLI::ignore_case));
  simulate->add_option("--q", sim.q)->check(CLI::Range(1, 63));
  simulate->add_option("--frac-bits", sim.frac_bits)->check(CLI::Range(1, 63));
  simulate->add_option("--lambda", sim.word_bits)->check(CLI::Range(2, 64));
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--threads", sim.threads)->check(CLI::Range(1, 256));
  simulate->add_option("--transcript", sim.transcript_path);
  simulate->add_option("--report", sim.report_path);

  VerifyArgs ver;
  CLI::App* verify = app.add_subcommand(
      "verify-costs", "Reproduce the reference communication cost tables");
  verify->add_option("--table", ver.table)
      ->check(CLI::IsMember({"mnist", "cifar", "all"}));
  verify->add_option("--row", ver.row)->check(CLI::PositiveNumber);
  verify->add_option("--csv", ver.csv_path);

  AnalyzeArgs an;
  CLI::App* analyze = app.add_subcommand(
      "analyze-union", "Secure union false-negative analytics and Monte Carlo");
  analyze->add_option("--dim", an.dim)->check(CLI::PositiveNumber);
  analyze->add_option("--topk", an.topk);
  analyze->add_option("--clients", an.clients)->check(CLI::PositiveNumber);
  analyze->add_option("--q", an.q)->check(CLI::Range(1, 63));
  analyze->add_option("--trials", an.trials);
  analyze->add_option("--seed", an.seed);

  TrainArgs tr;
  CLI::App* train = app.add_subcommand(
      "train", "Federated training on synthetic blobs or IDX data");
  train->add_option("--clients", tr.cfg.clients)->check(CLI::PositiveNumber);
  train->add_option("--servers", tr.cfg.servers)->check(CLI::Range(2, 64));
  train->add_option("--method", tr.method)
      ->check(CLI::IsMember({"compressed", "fedavg"}));
  train->add_option("--strategy", tr.cfg.strategy)
      ->transform(CLI::CheckedTransformer(strategy_names, CLI::ignore_case));
  train->add_option("--q", tr.cfg.q)->check(CLI::Range(1, 63));
  train->add_option("--rho", tr.cfg.rho)->check(CLI::Range(1e-9, 1.0));
  train->add_option("--rounds", tr.cfg.rounds)->check(CLI::PositiveNumber);
  train->add_option("--local-steps", tr.cfg.sgd.local_steps)
      ->check(CLI::PositiveNumber);
  train->add_option("--batch", tr.cfg.sgd.batch_size);
  train->add_option("--lr", tr.cfg.sgd.lr);
  train->add_option("--momentum", tr.cfg.sgd.momentum)
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--seed", tr.cfg.seed);
  train->add_option("--threads", tr.cfg.threads)->check(CLI::Range(1, 256));
  train->add_option("--eval-cap", tr.cfg.eval_cap);
  train->add_option("--samples", tr.samples)->check(CLI::PositiveNumber);
  train->add_option("--input-dim", tr.input_dim)->check(CLI::PositiveNumber);
  train->add_option("--classes", tr.classes)->check(CLI::Range(2, 1000));
  train->add_option("--separation", tr.separation);
  train->add_option("--test-fraction", tr.test_fraction)
      ->check(CLI::Range(0.01, 0.99));
  train->add_option("--hidden", tr.hidden);
  train->add_option("--images", tr.images);
  train->add_option("--labels", tr.labels);
  train->add_option("--test-images", tr.test_images);
  train->add_option("--test-labels", tr.test_labels);
  train->add_option("--metrics", tr.metrics_path);
  train->add_flag("--paired", tr.paired);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (verify->parsed()) return cmd_verify_costs(ver);
    if (analyze->parsed()) return cmd_analyze_union(an);
    return cmd_train(tr);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kToleranceFailure;
  }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "chunkfb/ad/optim.hpp"
#include "chunkfb/random.hpp"
#include "chunkfb/seq2seq/model.hpp"

namespace chunkfb::seq2seq {

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0;
  double mean_loss = 0;  // per sentence, with dropout active
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Batches of example indices for one epoch. Indices are shuffled, cut into
/// pools of 20 batches, each pool is sorted by source length and split, and
/// the batch order is shuffled again.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::span<const WeightedExample> data,
                                                           int batch_size, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  const std::size_t bs = static_cast<std::size_t>(batch_size);
  const std::size_t pool = bs * 20;
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += pool) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + pool));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return data[a].source.size() < data[b].source.size();
    });
    for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(std::min<std::size_t>(bs, last - it))) {
      batches.emplace_back(it, it + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bs, last - it)));
    }
  }
  rng.shuffle(batches);
  return batches;
}

/// SGD over sentence-averaged weighted losses. Every random choice (batch
/// order, dropout) comes from `seed`.
template <typename Scalar>
std::vector<EpochLog> train(Seq2Seq<Scalar>& model, std::span<const WeightedExample> data,
                            const ScheduleConfig& schedule, std::uint64_t seed,
                            const EpochCallback& on_epoch = {}) {
  if (schedule.epochs < 0) throw Error("train: negative epoch count");
  if (schedule.epochs > 0 && data.empty()) throw Error("train: no training data");
  if (schedule.batch_size < 1) throw Error("train: batch size must be >= 1");

  Rng order_rng(seed);
  Rng dropout_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<EpochLog> log;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr =
        ad::lr_schedule(epoch, schedule.base_lr, schedule.decay_start, schedule.floor, schedule.decay);
    const auto batches = epoch_batches(data, schedule.batch_size, order_rng);
    double total = 0;
    for (std::size_t k = 0; k < batches.size(); ++k) {
      std::vector<WeightedExample> batch;
      batch.reserve(batches[k].size());
      for (std::size_t i : batches[k]) batch.push_back(data[i]);

      ad::Tape<Scalar> tape;
      const auto p = model.bind(tape, true);
      std::vector<Tensor<Scalar>> grads;
      double value = 0;
      try {
        const auto loss = model.batch_loss(tape, p, batch, &dropout_rng);
        const auto mean = ad::scale(loss.total, Scalar(1) / static_cast<Scalar>(batch.size()));
        value = static_cast<double>(loss.total.value()(0, 0));
        tape.backward(mean);
        grads.reserve(p.vars.size());
        for (const auto& v : p.vars) grads.push_back(tape.grad(v));
      } catch (const Error& e) {
        throw Error("train: epoch " + std::to_string(epoch + 1) + " batch " + std::to_string(k + 1) +
                    ": " + e.what());
      }
      if (!std::isfinite(value) || !std::isfinite(ad::global_norm(grads))) {
        throw Error("train: loss diverged at epoch " + std::to_string(epoch + 1) + " batch " +
                    std::to_string(k + 1));
      }
      ad::sgd_update(model.params().values, grads, lr, schedule.clip);
      total += value;
    }
    EpochLog entry{epoch + 1, lr, total / static_cast<double>(data.size())};
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return log;
}

}  // namespace chunkfb::seq2seq

#include "mmner/train.hpp"

#include <cmath>
#include <numeric>

#include "mmner/error.hpp"

namespace mmner {

TrainResult train_model(Model& model, std::span<const Example> train,
                        std::span<const Example> dev, Optimizer& optimizer,
                        const TrainOptions& options, const LogFn& log) {
  TrainResult result;
  Rng rng(options.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int64_t epoch = 1; epoch <= options.epochs; ++epoch) {
    if (options.shuffle) {
      // Fisher-Yates with the run RNG; deterministic under a fixed seed
      for (size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
      }
    }
    double loss_sum = 0.0;
    size_t processed = 0;
    while (processed < order.size()) {
      const size_t batch = std::min<size_t>(static_cast<size_t>(options.batch_size),
                                            order.size() - processed);
      optimizer.zero_grad();
      for (size_t b = 0; b < batch; ++b) {
        const Example& example = train[order[processed + b]];
        Tensor loss = model.loss(example, /*training=*/true, rng);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NumericError("train: non-finite loss " + std::to_string(value) + " at epoch " +
                             std::to_string(epoch) + ", example '" + example.id + "'");
        }
        loss_sum += value;
        backward(mul_scalar(loss, 1.0 / static_cast<double>(batch)));
      }
      optimizer.step();
      processed += batch;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(train.size());
    entry.dev_f1 = evaluate_model(model, dev).overall.f1;
    result.epochs.push_back(entry);
    if (log) {
      log("epoch " + std::to_string(epoch) + " loss " + std::to_string(entry.mean_loss) +
          " dev_f1 " + std::to_string(entry.dev_f1));
    }
    if (options.stop_at_f1 >= 0.0 && entry.dev_f1 >= options.stop_at_f1) {
      break;
    }
  }
  return result;
}

EvalReport evaluate_model(Model& model, std::span<const Example> examples) {
  std::vector<std::vector<std::string>> gold;
  std::vector<std::vector<std::string>> pred;
  gold.reserve(examples.size());
  pred.reserve(examples.size());
  for (const Example& example : examples) {
    gold.push_back(example.tags);
    pred.push_back(model.predict(example));
  }
  return evaluate(gold, pred);
}

}  // namespace mmner

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmner/metrics.hpp"
#include "mmner/model.hpp"
#include "mmner/optim.hpp"

namespace mmner {

struct TrainOptions {
  int64_t epochs = 10;
  int64_t batch_size = 8;
  uint64_t seed = 0;
  bool shuffle = true;
  double stop_at_f1 = -1.0;  // early stop once dev span-F1 reaches this; <0 disables
};

struct EpochLog {
  int64_t epoch = 0;
  double mean_loss = 0.0;
  double dev_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
};

/// Mini-batch training: per-example losses are scaled by 1/batch and
/// accumulated before each optimizer step. Aborts with NumericError on a
/// non-finite loss. dev may alias train.
TrainResult train_model(Model& model, std::span<const Example> train,
                        std::span<const Example> dev, Optimizer& optimizer,
                        const TrainOptions& options, const LogFn& log = {});

/// Span-F1 of the model's predictions against the gold tags.
EvalReport evaluate_model(Model& model, std::span<const Example> examples);

}  // namespace mmner

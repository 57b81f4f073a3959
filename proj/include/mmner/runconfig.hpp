#pragma once

#include <string>
#include <vector>

#include "mmner/model.hpp"
#include "mmner/seqdata.hpp"

namespace mmner {

/// One training/evaluation run, as assembled from CLI flags, an optional
/// key=value config file, and the MMNER_DATA_ROOT environment variable.
struct RunConfig {
  std::string model = "cwi";
  bool use_crf = true;  // msb head selector; cwi always ends in a CRF
  bool mask_illegal = false;
  bool no_regularizers = false;
  bool target_highest = false;

  std::string corpus;
  std::string dev_corpus;
  std::string sidecar;
  std::string glove;
  std::string fasttext;
  std::string vocab;
  std::string checkpoint;
  std::string input;
  std::string output;

  int64_t glove_dim = 200;
  int64_t fasttext_dim = 300;
  int64_t epochs = 10;
  double learning_rate = 8e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int64_t batch_size = 8;
  uint64_t seed = 0;
  double stop_at_f1 = -1.0;
  bool force = false;
  bool lenient = false;

  std::string data_root;  // from MMNER_DATA_ROOT when unset

  /// Relative paths resolve against data_root when one is configured.
  std::string resolve(const std::string& path) const;
};

/// key=value config file ('#' comments, keys named like the long CLI flags
/// without the dashes). Values never override keys in `cli_set`.
void apply_config_file(const std::string& path,
                       const std::function<bool(const std::string&)>& cli_set,
                       RunConfig& config);

struct LoadedCorpus {
  std::vector<Example> examples;
};

/// Reads the corpus at `path` (TMN when a sidecar is configured, CoNLL
/// otherwise).
LoadedCorpus load_corpus(const RunConfig& config, const std::string& path, const LogFn& log);

/// Embedding tables / subword vocab for the selected model family.
ModelResources load_resources(const RunConfig& config);

/// Architecture config derived from the run flags; image_classes must be
/// collected from the training corpus by the caller for cwi models.
ModelConfig make_model_config(const RunConfig& config, const ModelResources& resources);

/// Sorted unique image-class labels of a corpus.
std::vector<std::string> collect_image_classes(const std::vector<Example>& examples);

}  // namespace mmner

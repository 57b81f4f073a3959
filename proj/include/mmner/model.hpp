#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmner/cwi.hpp"
#include "mmner/msb.hpp"
#include "mmner/optim.hpp"
#include "mmner/seqdata.hpp"

namespace mmner {

enum class ModelKind { cwi = 0, cwi_attn = 1, msb_tiny = 2, msb_small = 3 };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Everything that determines parameter shapes and semantics. The hash over
/// the canonical form is recorded in checkpoints; eval refuses a mismatch
/// unless forced.
struct ModelConfig {
  ModelKind kind = ModelKind::cwi;
  CwiConfig cwi;
  MsbConfig msb;
  bool mask_illegal = false;
  uint64_t seed = 0;
  std::vector<std::string> image_classes;  // cwi image-class vocabulary
  uint64_t subword_vocab_hash = 0;         // msb vocabulary content hash

  bool is_msb() const { return kind == ModelKind::msb_tiny || kind == ModelKind::msb_small; }
  std::string canonical() const;
  uint64_t hash() const;
};

/// Runtime inputs a model needs besides its parameters.
struct ModelResources {
  std::shared_ptr<const EmbeddingTable> glove;
  std::shared_ptr<const EmbeddingTable> fasttext;
  std::shared_ptr<const SubwordVocab> vocab;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual Tensor loss(const Example& example, bool training, Rng& rng) = 0;
  virtual std::vector<std::string> predict(const Example& example) = 0;
  virtual std::vector<NamedParam> parameters() = 0;
  virtual const ModelConfig& config() const = 0;
};

std::unique_ptr<Model> build_model(const ModelConfig& config, const ModelResources& resources);

/// Writes the binary checkpoint plus a `<path>.json` sidecar holding the
/// model config (and the cwi image-class vocabulary).
void save_model(const std::string& path, Model& model);

/// Rebuilds the model from the sidecar config and loads the checkpoint.
/// When `force` is false the stored config hash must match.
std::unique_ptr<Model> load_model(const std::string& path, const ModelResources& resources,
                                  bool force = false);

/// Config stored alongside a checkpoint, without constructing the model.
ModelConfig load_model_config(const std::string& path);

}  // namespace mmner

#include "mmner/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmner/checkpoint.hpp"
#include "mmner/error.hpp"
#include "mmner/tagscheme.hpp"

namespace mmner {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cwi:
      return "cwi";
    case ModelKind::cwi_attn:
      return "cwi-attn";
    case ModelKind::msb_tiny:
      return "msb-tiny";
    case ModelKind::msb_small:
      return "msb-small";
  }
  throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "cwi") {
    return ModelKind::cwi;
  }
  if (name == "cwi-attn") {
    return ModelKind::cwi_attn;
  }
  if (name == "msb-tiny") {
    return ModelKind::msb_tiny;
  }
  if (name == "msb-small") {
    return ModelKind::msb_small;
  }
  throw ConfigError("unknown model '" + name + "' (expected cwi, cwi-attn, msb-tiny, msb-small)");
}

namespace {

json config_to_json(const ModelConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["mask_illegal"] = c.mask_illegal;
  j["seed"] = c.seed;
  json cwi;
  cwi["max_words"] = c.cwi.max_words;
  cwi["max_chars"] = c.cwi.max_chars;
  cwi["char_emb"] = c.cwi.char_emb;
  json conv = json::array();
  for (const auto& spec : c.cwi.conv) {
    conv.push_back({spec.kernel, spec.channels});
  }
  cwi["conv"] = conv;
  cwi["pool"] = c.cwi.pool;
  cwi["glove_dim"] = c.cwi.glove_dim;
  cwi["fasttext_dim"] = c.cwi.fasttext_dim;
  cwi["word_lstm"] = c.cwi.word_lstm;
  cwi["image_emb"] = c.cwi.image_emb;
  cwi["image_lstm"] = c.cwi.image_lstm;
  cwi["fusion_lstm"] = c.cwi.fusion_lstm;
  cwi["drop_rate"] = c.cwi.drop_rate;
  cwi["target_rate"] = c.cwi.target_rate;
  cwi["target_highest"] = c.cwi.target_highest;
  cwi["sine_relu_eps"] = c.cwi.sine_relu_eps;
  cwi["groups"] = c.cwi.groups;
  cwi["use_attention"] = c.cwi.use_attention;
  cwi["attention_dim"] = c.cwi.attention_dim;
  cwi["no_regularizers"] = c.cwi.no_regularizers;
  j["cwi"] = cwi;
  json msb;
  msb["hidden"] = c.msb.hidden;
  msb["heads"] = c.msb.heads;
  msb["layers"] = c.msb.layers;
  msb["vocab_size"] = c.msb.vocab_size;
  msb["max_positions"] = c.msb.max_positions;
  msb["ffn"] = c.msb.ffn;
  msb["use_crf"] = c.msb.use_crf;
  j["msb"] = msb;
  j["image_classes"] = c.image_classes;
  j["subword_vocab_hash"] = c.subword_vocab_hash;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.kind = model_kind_from_string(j.at("kind").get<std::string>());
  c.mask_illegal = j.at("mask_illegal").get<bool>();
  c.seed = j.at("seed").get<uint64_t>();
  const json& cwi = j.at("cwi");
  c.cwi.max_words = cwi.at("max_words").get<int64_t>();
  c.cwi.max_chars = cwi.at("max_chars").get<int64_t>();
  c.cwi.char_emb = cwi.at("char_emb").get<int64_t>();
  c.cwi.conv.clear();
  for (const auto& spec : cwi.at("conv")) {
    c.cwi.conv.push_back({spec.at(0).get<int64_t>(), spec.at(1).get<int64_t>()});
  }
  c.cwi.pool = cwi.at("pool").get<int64_t>();
  c.cwi.glove_dim = cwi.at("glove_dim").get<int64_t>();
  c.cwi.fasttext_dim = cwi.at("fasttext_dim").get<int64_t>();
  c.cwi.word_lstm = cwi.at("word_lstm").get<int64_t>();
  c.cwi.image_emb = cwi.at("image_emb").get<int64_t>();
  c.cwi.image_lstm = cwi.at("image_lstm").get<int64_t>();
  c.cwi.fusion_lstm = cwi.at("fusion_lstm").get<int64_t>();
  c.cwi.drop_rate = cwi.at("drop_rate").get<double>();
  c.cwi.target_rate = cwi.at("target_rate").get<double>();
  c.cwi.target_highest = cwi.at("target_highest").get<bool>();
  c.cwi.sine_relu_eps = cwi.at("sine_relu_eps").get<double>();
  c.cwi.groups = cwi.at("groups").get<int64_t>();
  c.cwi.use_attention = cwi.at("use_attention").get<bool>();
  c.cwi.attention_dim = cwi.at("attention_dim").get<int64_t>();
  c.cwi.no_regularizers = cwi.at("no_regularizers").get<bool>();
  const json& msb = j.at("msb");
  c.msb.hidden = msb.at("hidden").get<int64_t>();
  c.msb.heads = msb.at("heads").get<int64_t>();
  c.msb.layers = msb.at("layers").get<int64_t>();
  c.msb.vocab_size = msb.at("vocab_size").get<int64_t>();
  c.msb.max_positions = msb.at("max_positions").get<int64_t>();
  c.msb.ffn = msb.at("ffn").get<int64_t>();
  c.msb.use_crf = msb.at("use_crf").get<bool>();
  c.image_classes = j.at("image_classes").get<std::vector<std::string>>();
  c.subword_vocab_hash = j.at("subword_vocab_hash").get<uint64_t>();
  return c;
}

class CwiWrapper final : public Model {
 public:
  CwiWrapper(ModelConfig config, const ModelResources& resources)
      : config_(std::move(config)),
        model_(config_.cwi, config_.image_classes, config_.seed) {
    model_.set_embeddings(resources.glove, resources.fasttext);
  }

  Tensor loss(const Example& example, bool training, Rng& rng) override {
    return model_.loss(example, training, rng);
  }

  std::vector<std::string> predict(const Example& example) override {
    std::vector<std::string> out;
    for (int tag : model_.predict(example, config_.mask_illegal)) {
      out.emplace_back(TagScheme::label_of(tag));
    }
    return out;
  }

  std::vector<NamedParam> parameters() override { return model_.parameters(); }
  const ModelConfig& config() const override { return config_; }
  CwiModel& impl() { return model_; }

 private:
  ModelConfig config_;
  CwiModel model_;
};

class MsbWrapper final : public Model {
 public:
  MsbWrapper(ModelConfig config, const ModelResources& resources)
      : config_(std::move(config)), model_(config_.msb, resources.vocab, config_.seed) {}

  Tensor loss(const Example& example, bool training, Rng& rng) override {
    (void)training;
    (void)rng;
    return model_.loss(example);
  }

  std::vector<std::string> predict(const Example& example) override {
    std::vector<std::string> out;
    for (int tag : model_.predict(example, config_.mask_illegal)) {
      out.emplace_back(TagScheme::label_of(tag));
    }
    return out;
  }

  std::vector<NamedParam> parameters() override { return model_.parameters(); }
  const ModelConfig& config() const override { return config_; }
  MsbModel& impl() { return model_; }

 private:
  ModelConfig config_;
  MsbModel model_;
};

}  // namespace

std::string ModelConfig::canonical() const {
  json j = config_to_json(*this);
  // seed influences initialization, not the architecture contract
  j.erase("seed");
  return j.dump();
}

uint64_t ModelConfig::hash() const { return fnv1a(canonical()); }

std::unique_ptr<Model> build_model(const ModelConfig& config, const ModelResources& resources) {
  ModelConfig c = config;
  switch (c.kind) {
    case ModelKind::cwi:
      c.cwi.use_attention = false;
      return std::make_unique<CwiWrapper>(std::move(c), resources);
    case ModelKind::cwi_attn:
      c.cwi.use_attention = true;
      return std::make_unique<CwiWrapper>(std::move(c), resources);
    case ModelKind::msb_tiny: {
      const MsbConfig base = MsbConfig::tiny();
      c.msb.hidden = base.hidden;
      c.msb.heads = base.heads;
      c.msb.layers = base.layers;
      if (resources.vocab) {
        c.msb.vocab_size = static_cast<int64_t>(resources.vocab->size());
      }
      return std::make_unique<MsbWrapper>(std::move(c), resources);
    }
    case ModelKind::msb_small: {
      const MsbConfig base = MsbConfig::small();
      c.msb.hidden = base.hidden;
      c.msb.heads = base.heads;
      c.msb.layers = base.layers;
      if (resources.vocab) {
        c.msb.vocab_size = static_cast<int64_t>(resources.vocab->size());
      }
      return std::make_unique<MsbWrapper>(std::move(c), resources);
    }
  }
  throw ConfigError("build_model: unknown kind");
}

void save_model(const std::string& path, Model& model) {
  CheckpointHeader header;
  header.model_kind = static_cast<uint32_t>(model.config().kind);
  header.config_hash = model.config().hash();
  save_checkpoint(path, header, model.parameters());
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) {
    throw IoError("cannot write " + path + ".json");
  }
  side << config_to_json(model.config()).dump(2) << '\n';
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) {
    throw IoError("cannot open " + path + ".json");
  }
  json j;
  try {
    side >> j;
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError("malformed config sidecar " + path + ".json: " + e.what());
  }
}

std::unique_ptr<Model> load_model(const std::string& path, const ModelResources& resources,
                                  bool force) {
  const ModelConfig config = load_model_config(path);
  std::vector<NamedParam> stored;
  const CheckpointHeader header = load_checkpoint(path, stored);
  if (header.model_kind != static_cast<uint32_t>(config.kind)) {
    throw IoError("checkpoint " + path + ": model kind disagrees with its sidecar config");
  }
  if (!force && header.config_hash != config.hash()) {
    throw IoError("checkpoint " + path + ": config hash mismatch (use force to override)");
  }
  if (!force && (config.kind == ModelKind::msb_tiny || config.kind == ModelKind::msb_small) &&
      resources.vocab && resources.vocab->content_hash() != config.subword_vocab_hash) {
    throw IoError("checkpoint " + path +
                  ": subword vocabulary differs from the one used at training time");
  }
  auto model = build_model(config, resources);
  if (!force && model->config().hash() != header.config_hash) {
    throw IoError("checkpoint " + path +
                  ": rebuilt config hash differs (resources changed; use force to override)");
  }
  auto params = model->parameters();
  assign_params(stored, params);
  return model;
}

}  // namespace mmner

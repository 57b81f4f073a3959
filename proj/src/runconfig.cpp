#include "mmner/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "mmner/error.hpp"

namespace mmner {

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw ConfigError("config file: key '" + key + "' expects a boolean, got '" + value + "'");
}

std::string trim(const std::string& s) {
  const size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return {};
  }
  const size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void apply_config_file(const std::string& path,
                       const std::function<bool(const std::string&)>& cli_set,
                       RunConfig& config) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path);
  }
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto str = [](std::string& field) {
    return Setter([&field](const std::string&, const std::string& v) { field = v; });
  };
  auto i64 = [](int64_t& field) {
    return Setter([&field](const std::string& key, const std::string& v) {
      try {
        field = std::stoll(v);
      } catch (const std::exception&) {
        throw ConfigError("config file: key '" + key + "' expects an integer, got '" + v + "'");
      }
    });
  };
  auto f64 = [](double& field) {
    return Setter([&field](const std::string& key, const std::string& v) {
      try {
        field = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError("config file: key '" + key + "' expects a number, got '" + v + "'");
      }
    });
  };
  auto boolean = [](bool& field) {
    return Setter([&field](const std::string& key, const std::string& v) {
      field = parse_bool(v, key);
    });
  };
  const std::map<std::string, Setter> setters = {
      {"model", str(config.model)},
      {"use-crf", boolean(config.use_crf)},
      {"mask-illegal", boolean(config.mask_illegal)},
      {"no-regularizers", boolean(config.no_regularizers)},
      {"target-highest", boolean(config.target_highest)},
      {"corpus", str(config.corpus)},
      {"dev", str(config.dev_corpus)},
      {"sidecar", str(config.sidecar)},
      {"glove", str(config.glove)},
      {"fasttext", str(config.fasttext)},
      {"glove-dim", i64(config.glove_dim)},
      {"fasttext-dim", i64(config.fasttext_dim)},
      {"vocab", str(config.vocab)},
      {"checkpoint", str(config.checkpoint)},
      {"input", str(config.input)},
      {"output", str(config.output)},
      {"epochs", i64(config.epochs)},
      {"learning-rate", f64(config.learning_rate)},
      {"adam-beta1", f64(config.adam_beta1)},
      {"adam-beta2", f64(config.adam_beta2)},
      {"adam-eps", f64(config.adam_eps)},
      {"batch-size", i64(config.batch_size)},
      {"stop-at-f1", f64(config.stop_at_f1)},
      {"force", boolean(config.force)},
      {"lenient", boolean(config.lenient)},
      {"data-root", str(config.data_root)},
  };
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file line " + std::to_string(line_no) +
                        ": expected key=value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "seed") {
      if (!cli_set("--seed")) {
        try {
          config.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw ConfigError("config file: key 'seed' expects an integer, got '" + value + "'");
        }
      }
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("config file line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
    if (!cli_set("--" + key)) {
      it->second(key, value);
    }
  }
}

std::string RunConfig::resolve(const std::string& path) const {
  if (path.empty() || data_root.empty() || path.front() == '/') {
    return path;
  }
  if (data_root.back() == '/') {
    return data_root + path;
  }
  return data_root + "/" + path;
}

LoadedCorpus load_corpus(const RunConfig& config, const std::string& path, const LogFn& log) {
  const std::string resolved = config.resolve(path);
  std::ifstream in(resolved);
  if (!in) {
    throw IoError("cannot open corpus " + resolved);
  }
  const ParseMode mode = config.lenient ? ParseMode::lenient : ParseMode::strict;
  LoadedCorpus corpus;
  if (!config.sidecar.empty()) {
    const std::string sidecar_path = config.resolve(config.sidecar);
    std::ifstream side(sidecar_path);
    if (!side) {
      throw IoError("cannot open sidecar " + sidecar_path);
    }
    corpus.examples = parse_tmn(in, parse_sidecar(side), mode, log);
  } else {
    corpus.examples = parse_conll(in, mode, log);
  }
  for (const auto& example : corpus.examples) {
    validate_example(example);
  }
  return corpus;
}

ModelResources load_resources(const RunConfig& config) {
  ModelResources resources;
  const ModelKind kind = model_kind_from_string(config.model);
  if (kind == ModelKind::cwi || kind == ModelKind::cwi_attn) {
    if (config.glove.empty() || config.fasttext.empty()) {
      throw ConfigError("cwi models need --glove and --fasttext embedding files");
    }
    auto load = [&](const std::string& path, int64_t dim) {
      const std::string resolved = config.resolve(path);
      std::ifstream in(resolved);
      if (!in) {
        throw IoError("cannot open embeddings " + resolved);
      }
      return std::make_shared<EmbeddingTable>(
          load_embeddings(in, static_cast<int>(dim), config.seed));
    };
    resources.glove = load(config.glove, config.glove_dim);
    resources.fasttext = load(config.fasttext, config.fasttext_dim);
  } else {
    if (config.vocab.empty()) {
      throw ConfigError("msb models need a --vocab subword vocabulary file");
    }
    resources.vocab =
        std::make_shared<SubwordVocab>(SubwordVocab::from_file(config.resolve(config.vocab)));
  }
  return resources;
}

ModelConfig make_model_config(const RunConfig& config, const ModelResources& resources) {
  ModelConfig mc;
  mc.kind = model_kind_from_string(config.model);
  mc.mask_illegal = config.mask_illegal;
  mc.seed = config.seed;
  mc.cwi.glove_dim = config.glove_dim;
  mc.cwi.fasttext_dim = config.fasttext_dim;
  mc.cwi.no_regularizers = config.no_regularizers;
  mc.cwi.target_highest = config.target_highest;
  mc.msb.use_crf = config.use_crf;
  if (resources.vocab) {
    mc.msb.vocab_size = static_cast<int64_t>(resources.vocab->size());
    mc.subword_vocab_hash = resources.vocab->content_hash();
  }
  return mc;
}

std::vector<std::string> collect_image_classes(const std::vector<Example>& examples) {
  std::set<std::string> classes;
  for (const auto& example : examples) {
    for (const auto& word : example.image_words) {
      classes.insert(word.label);
    }
  }
  return {classes.begin(), classes.end()};
}

}  // namespace mmner

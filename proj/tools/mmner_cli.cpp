#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mmner/error.hpp"
#include "mmner/metrics.hpp"
#include "mmner/model.hpp"
#include "mmner/runconfig.hpp"
#include "mmner/train.hpp"
#include "mmner/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerification = 3;

void add_common_options(CLI::App* cmd, mmner::RunConfig& config) {
  cmd->add_option("--model", config.model, "cwi | cwi-attn | msb-tiny | msb-small");
  cmd->add_flag("--use-crf,!--no-crf", config.use_crf, "CRF head for msb models (default on)");
  cmd->add_flag("--mask-illegal", config.mask_illegal,
                "penalize BIO2-illegal transitions at decode time");
  cmd->add_flag("--no-regularizers", config.no_regularizers,
                "replace the TD+SineRelu+GN stack with identity");
  cmd->add_flag("--target-highest", config.target_highest,
                "targeted dropout drops highest-magnitude units");
  cmd->add_option("--corpus", config.corpus, "training/evaluation corpus");
  cmd->add_option("--dev", config.dev_corpus, "development corpus (defaults to --corpus)");
  cmd->add_option("--sidecar", config.sidecar, "image descriptor sidecar TSV");
  cmd->add_option("--glove", config.glove, "GloVe-style embedding text file");
  cmd->add_option("--fasttext", config.fasttext, "fastText-style embedding text file");
  cmd->add_option("--glove-dim", config.glove_dim, "GloVe vector size (default 200)");
  cmd->add_option("--fasttext-dim", config.fasttext_dim, "fastText vector size (default 300)");
  cmd->add_option("--vocab", config.vocab, "subword vocabulary, one token per line");
  cmd->add_option("--checkpoint", config.checkpoint, "checkpoint path");
  cmd->add_option("--epochs", config.epochs, "training epochs (default 10)");
  cmd->add_option("--learning-rate", config.learning_rate, "optimizer step size (default 8e-5)");
  cmd->add_option("--adam-beta1", config.adam_beta1, "Adam first-moment decay (default 0.9)");
  cmd->add_option("--adam-beta2", config.adam_beta2, "Adam second-moment decay (default 0.999)");
  cmd->add_option("--adam-eps", config.adam_eps, "Adam denominator epsilon (default 1e-8)");
  cmd->add_option("--batch-size", config.batch_size, "examples per optimizer step (default 8)");
  cmd->add_option("--seed", config.seed, "run seed (default 0)");
  cmd->add_option("--stop-at-f1", config.stop_at_f1,
                  "stop early once dev span-F1 reaches this value");
  cmd->add_flag("--force", config.force, "skip checkpoint config-hash validation");
  cmd->add_flag("--lenient", config.lenient, "repair BIO2 violations instead of failing");
  cmd->add_option("--data-root", config.data_root,
                  "prefix for relative data paths (or MMNER_DATA_ROOT)");
}

void apply_env(mmner::RunConfig& config) {
  if (config.data_root.empty()) {
    if (const char* root = std::getenv("MMNER_DATA_ROOT")) {
      config.data_root = root;
    }
  }
}

std::string hash_hex(uint64_t h) {
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

mmner::LogFn stderr_log() {
  return [](const std::string& msg) { std::cerr << "[mmner] " << msg << '\n'; };
}

int cmd_train(mmner::RunConfig& config) {
  using namespace mmner;
  if (config.corpus.empty() || config.checkpoint.empty()) {
    std::cerr << "train: --corpus and --checkpoint are required\n";
    return kExitUsage;
  }
  const LogFn log = stderr_log();
  LoadedCorpus train_corpus = load_corpus(config, config.corpus, log);
  if (train_corpus.examples.empty()) {
    throw ContractError("train: corpus " + config.corpus + " holds no examples");
  }
  LoadedCorpus dev_corpus = config.dev_corpus.empty()
                                ? train_corpus
                                : load_corpus(config, config.dev_corpus, log);
  ModelResources resources = load_resources(config);
  ModelConfig mc = make_model_config(config, resources);
  if (mc.kind == ModelKind::cwi || mc.kind == ModelKind::cwi_attn) {
    mc.image_classes = collect_image_classes(train_corpus.examples);
  }
  auto model = build_model(mc, resources);

  std::cout << "seed=" << config.seed << " config_hash=" << hash_hex(model->config().hash())
            << " model=" << config.model << " examples=" << train_corpus.examples.size() << '\n';
  const CorpusStats stats = corpus_stats(train_corpus.examples);
  std::cout << "corpus sentences=" << stats.sentences << " tokens=" << stats.tokens
            << " entities=" << stats.total_entities << '\n';

  OptimizerState state;
  state.kind = OptimizerState::Kind::adam;
  state.learning_rate = config.learning_rate;
  state.beta1 = config.adam_beta1;
  state.beta2 = config.adam_beta2;
  state.eps = config.adam_eps;
  Optimizer optimizer(model->parameters(), state);

  TrainOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch_size;
  options.seed = config.seed;
  options.stop_at_f1 = config.stop_at_f1;
  const TrainResult result =
      train_model(*model, train_corpus.examples, dev_corpus.examples, optimizer, options);
  for (const auto& epoch : result.epochs) {
    std::ostringstream line;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", epoch.mean_loss);
    line << "epoch=" << epoch.epoch << " loss=" << buf;
    std::snprintf(buf, sizeof(buf), "%.6f", epoch.dev_f1);
    line << " dev_f1=" << buf;
    std::cout << line.str() << '\n';
  }
  save_model(config.resolve(config.checkpoint), *model);
  std::cout << "checkpoint=" << config.resolve(config.checkpoint) << '\n';
  return kExitOk;
}

int cmd_eval(mmner::RunConfig& config) {
  using namespace mmner;
  if (config.corpus.empty() || config.checkpoint.empty()) {
    std::cerr << "eval: --corpus and --checkpoint are required\n";
    return kExitUsage;
  }
  const std::string ckpt = config.resolve(config.checkpoint);
  const ModelConfig stored = load_model_config(ckpt);
  config.model = to_string(stored.kind);
  ModelResources resources = load_resources(config);
  auto model = load_model(ckpt, resources, config.force);
  const LogFn log = stderr_log();
  LoadedCorpus corpus = load_corpus(config, config.corpus, log);
  const EvalReport report = evaluate_model(*model, corpus.examples);
  std::cout << report_format(report);
  std::cout << report_kv(report);
  return kExitOk;
}

int cmd_tag(mmner::RunConfig& config) {
  using namespace mmner;
  if (config.checkpoint.empty()) {
    std::cerr << "tag: --checkpoint is required\n";
    return kExitUsage;
  }
  const std::string ckpt = config.resolve(config.checkpoint);
  const ModelConfig stored = load_model_config(ckpt);
  config.model = to_string(stored.kind);
  ModelResources resources = load_resources(config);
  auto model = load_model(ckpt, resources, config.force);

  Sidecar sidecar;
  if (!config.sidecar.empty()) {
    std::ifstream side(config.resolve(config.sidecar));
    if (!side) {
      throw IoError("cannot open sidecar " + config.resolve(config.sidecar));
    }
    sidecar = parse_sidecar(side);
  }

  std::istream* in = &std::cin;
  std::ifstream file;
  if (!config.input.empty() && config.input != "-") {
    file.open(config.resolve(config.input));
    if (!file) {
      throw IoError("cannot open input " + config.resolve(config.input));
    }
    in = &file;
  }
  std::ostream* out = &std::cout;
  std::ofstream out_file;
  if (!config.output.empty() && config.output != "-") {
    out_file.open(config.resolve(config.output));
    if (!out_file) {
      throw IoError("cannot open output " + config.resolve(config.output));
    }
    out = &out_file;
  }

  std::string line;
  size_t line_no = 0;
  bool first = true;
  while (std::getline(*in, line)) {
    ++line_no;
    std::string id;
    std::string text = line;
    if (!config.sidecar.empty()) {
      const size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ParseError("tag input line " + std::to_string(line_no) +
                         ": expected 'id<TAB>text' with a sidecar");
      }
      id = line.substr(0, tab);
      text = line.substr(tab + 1);
    }
    Example example;
    example.id = id.empty() ? "line" + std::to_string(line_no) : id;
    example.tokens = preprocess_text(text);
    if (example.tokens.empty()) {
      continue;
    }
    example.tags.assign(example.tokens.size(), "O");
    if (!id.empty()) {
      auto it = sidecar.find(id);
      if (it != sidecar.end()) {
        example.image_words = it->second;
      }
    }
    const auto tags = model->predict(example);
    if (!first) {
      *out << '\n';
    }
    first = false;
    for (size_t t = 0; t < example.tokens.size(); ++t) {
      *out << example.tokens[t] << '\t' << tags[t] << '\n';
    }
  }
  return kExitOk;
}

int cmd_verify(bool corrupt) {
  using namespace mmner;
  if (!corrupt && std::getenv("MMNER_CORRUPT_GRADIENT")) {
    corrupt = true;
  }
  const auto results = run_verification(corrupt);
  std::cout << format_verification(results);
  for (const auto& r : results) {
    if (!r.pass) {
      return kExitVerification;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal named entity recognition toolkit"};
  app.require_subcommand(1);

  mmner::RunConfig config;
  std::string config_file;
  bool corrupt_gradient = false;

  CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common_options(train, config);
  train->add_option("--config", config_file, "key=value config file");
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a tagged corpus");
  add_common_options(eval, config);
  eval->add_option("--config", config_file, "key=value config file");
  CLI::App* tag = app.add_subcommand("tag", "tag raw sentences");
  add_common_options(tag, config);
  tag->add_option("--config", config_file, "key=value config file");
  tag->add_option("--input", config.input, "sentences, one per line ('-' for stdin)");
  tag->add_option("--output", config.output, "destination ('-' for stdout)");
  CLI::App* verify = app.add_subcommand("verify", "run the gradient/oracle verification suite");
  verify->add_flag("--corrupt-gradient", corrupt_gradient,
                   "negative control: corrupt analytic gradients, expect failure")
      ->group("");  // test hook, hidden from help

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config_file.empty()) {
      CLI::App* active = train->parsed() ? train : (eval->parsed() ? eval : tag);
      mmner::apply_config_file(
          config_file, [active](const std::string& name) { return active->count(name) > 0; },
          config);
    }
  } catch (const mmner::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }

  apply_env(config);
  try {
    if (train->parsed()) {
      return cmd_train(config);
    }
    if (eval->parsed()) {
      return cmd_eval(config);
    }
    if (tag->parsed()) {
      return cmd_tag(config);
    }
    if (verify->parsed()) {
      return cmd_verify(corrupt_gradient);
    }
  } catch (const mmner::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

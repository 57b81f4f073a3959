// Acceptance suite: one test case per release criterion, each printing a
// single PASS/FAIL (or SKIP) line. Run via ctest or directly.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mmner/crf.hpp"
#include "mmner/cwi.hpp"
#include "mmner/error.hpp"
#include "mmner/layers.hpp"
#include "mmner/metrics.hpp"
#include "mmner/model.hpp"
#include "mmner/msb.hpp"
#include "mmner/runconfig.hpp"
#include "mmner/tagscheme.hpp"
#include "mmner/train.hpp"
#include "mmner/verify.hpp"
#include "mmner/wordpiece.hpp"
#include "testutil.hpp"

using namespace mmner;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const std::string& criterion, bool pass, const std::string& detail) {
  std::printf("[%s] %s: %s\n", criterion.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

Tensor random_projection_loss(const Tensor& out, uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, Tensor::uniform(out.shape(), -1.0, 1.0, rng)));
}

CwiConfig miniature_cwi_config() {
  CwiConfig config;
  config.max_words = 3;
  config.max_chars = 4;
  config.char_emb = 3;
  config.conv = {{2, 2}, {3, 3}, {4, 4}, {4, 4}, {3, 3}, {2, 2}};
  config.glove_dim = 4;
  config.fasttext_dim = 3;
  config.word_lstm = 3;
  config.image_emb = 3;
  config.image_lstm = 3;
  config.fusion_lstm = 4;
  config.groups = 2;
  config.attention_dim = 5;
  return config;
}

LoadedCorpus bundled_corpus() {
  RunConfig rc;
  rc.sidecar = testutil::data_path("synth_sidecar.tsv");
  return load_corpus(rc, testutil::data_path("synth_train.tmn"), {});
}

struct TrainEvalOutput {
  std::string report;
  std::string log;
  double best_f1 = 0.0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  int64_t epochs_used = 0;
};

TrainEvalOutput run_train_eval(const std::string& model_name, int64_t epochs, double lr,
                               double stop_at_f1, uint64_t seed) {
  RunConfig rc;
  rc.model = model_name;
  rc.sidecar = testutil::data_path("synth_sidecar.tsv");
  rc.glove = testutil::data_path("glove.synth.200d.txt");
  rc.fasttext = testutil::data_path("fasttext.synth.300d.txt");
  rc.vocab = testutil::data_path("vocab_1k.txt");
  rc.seed = seed;
  LoadedCorpus corpus = bundled_corpus();
  ModelResources resources = load_resources(rc);
  ModelConfig mc = make_model_config(rc, resources);
  if (mc.kind == ModelKind::cwi || mc.kind == ModelKind::cwi_attn) {
    mc.image_classes = collect_image_classes(corpus.examples);
  }
  auto model = build_model(mc, resources);

  OptimizerState state;
  state.kind = OptimizerState::Kind::adam;
  state.learning_rate = lr;
  Optimizer optimizer(model->parameters(), state);
  TrainOptions options;
  options.epochs = epochs;
  options.batch_size = 8;
  options.seed = seed;
  options.stop_at_f1 = stop_at_f1;
  const TrainResult result =
      train_model(*model, corpus.examples, corpus.examples, optimizer, options);

  TrainEvalOutput out;
  std::ostringstream log;
  for (const auto& epoch : result.epochs) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "epoch=%lld loss=%.12f dev_f1=%.12f\n",
                  static_cast<long long>(epoch.epoch), epoch.mean_loss, epoch.dev_f1);
    log << buf;
    out.best_f1 = std::max(out.best_f1, epoch.dev_f1);
    if (epoch.epoch == 1) {
      out.first_loss = epoch.mean_loss;
    }
    out.last_loss = epoch.mean_loss;
  }
  out.log = log.str();
  out.epochs_used = static_cast<int64_t>(result.epochs.size());
  out.report = report_format(evaluate_model(*model, corpus.examples)) +
               report_kv(evaluate_model(*model, corpus.examples));
  return out;
}

}  // namespace

TEST_CASE("criterion 1: gradient correctness across layers and stacks") {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kSeeds = 20;
  double worst = 0.0;
  std::string worst_layer = "none";
  auto track = [&](const std::string& layer, double err) {
    if (err > worst) {
      worst = err;
      worst_layer = layer;
    }
  };

  for (int seed = 0; seed < kSeeds; ++seed) {
    const uint64_t s = static_cast<uint64_t>(seed);
    {
      Rng rng(10'000 + s);
      Tensor x = Tensor::uniform({6, 3}, -1, 1, rng, true);
      Tensor k = Tensor::uniform({3, 3, 4}, -1, 1, rng, true);
      Tensor leaves[] = {x, k};
      track("conv1d", gradcheck::finite_difference_error(
                          [&] { return random_projection_loss(conv1d(x, k, Padding::same), s); },
                          leaves));
    }
    {
      Rng rng(11'000 + s);
      Tensor x = Tensor::uniform({7, 3}, -1, 1, rng, true);
      Tensor leaves[] = {x};
      track("maxpool1d", gradcheck::finite_difference_error(
                             [&] { return random_projection_loss(maxpool1d(x, 2), s); }, leaves));
    }
    {
      Rng rng(12'000 + s);
      LstmParams params = make_lstm(3, 4, rng);
      Tensor x = Tensor::uniform({1, 3}, -1, 1, rng, true);
      Tensor h = Tensor::uniform({1, 4}, -1, 1, rng, true);
      Tensor c = Tensor::uniform({1, 4}, -1, 1, rng, true);
      std::vector<Tensor> leaves = {x, h, c};
      for (auto& p : params.named("l")) {
        leaves.push_back(p.tensor);
      }
      track("lstm_step", gradcheck::finite_difference_error(
                             [&] {
                               auto [h_t, c_t] = lstm_step(x, h, c, params);
                               return add(random_projection_loss(h_t, s),
                                          random_projection_loss(c_t, s + 1));
                             },
                             leaves));
    }
    {
      Rng rng(13'000 + s);
      LstmParams fwd = make_lstm(3, 2, rng);
      LstmParams bwd = make_lstm(3, 2, rng);
      std::vector<Tensor> xs;
      for (int t = 0; t < 4; ++t) {
        xs.push_back(Tensor::uniform({1, 3}, -1, 1, rng, true));
      }
      std::vector<Tensor> leaves = xs;
      for (auto& p : fwd.named("f")) {
        leaves.push_back(p.tensor);
      }
      for (auto& p : bwd.named("b")) {
        leaves.push_back(p.tensor);
      }
      track("bilstm", gradcheck::finite_difference_error(
                          [&] {
                            const auto hs = bilstm(xs, fwd, bwd);
                            Tensor acc;
                            for (size_t t = 0; t < hs.size(); ++t) {
                              Tensor piece = random_projection_loss(hs[t], s + t);
                              acc = acc.defined() ? add(acc, piece) : piece;
                            }
                            return acc;
                          },
                          leaves));
    }
    {
      Rng rng(14'000 + s);
      Tensor x = Tensor::uniform({4, 4}, -2, 2, rng, true);
      Tensor leaves[] = {x};
      track("sine_relu",
            gradcheck::finite_difference_error(
                [&] { return random_projection_loss(sine_relu(x, 0.0025), s); }, leaves));
    }
    {
      Rng rng(15'000 + s);
      Tensor x = Tensor::uniform({5, 8}, -2, 2, rng, true);
      Tensor gamma = Tensor::uniform({1, 8}, 0.5, 1.5, rng, true);
      Tensor beta = Tensor::uniform({1, 8}, -0.5, 0.5, rng, true);
      Tensor leaves[] = {x, gamma, beta};
      track("group_norm",
            gradcheck::finite_difference_error(
                [&] { return random_projection_loss(group_norm(x, 4, gamma, beta), s); },
                leaves));
    }
    {
      Rng rng(16'000 + s);
      AttentionParams params = make_attention(4, rng);
      std::vector<Tensor> hs;
      for (int i = 0; i < 3; ++i) {
        hs.push_back(Tensor::uniform({1, 4}, -1, 1, rng, true));
      }
      std::vector<Tensor> leaves = hs;
      leaves.push_back(params.W_w);
      leaves.push_back(params.b_w);
      track("modality_attention",
            gradcheck::finite_difference_error(
                [&] { return random_projection_loss(modality_attention(hs, params), s); },
                leaves));
    }
    {
      Rng rng(17'000 + s);
      Tensor q = Tensor::uniform({4, 3}, -1, 1, rng, true);
      Tensor k = Tensor::uniform({5, 3}, -1, 1, rng, true);
      Tensor v = Tensor::uniform({5, 2}, -1, 1, rng, true);
      const std::vector<int> mask = {1, 1, 1, 1, 0};
      Tensor leaves[] = {q, k, v};
      track("scaled_dot_product_attention",
            gradcheck::finite_difference_error(
                [&] {
                  return random_projection_loss(
                      scaled_dot_product_attention(q, k, v, mask).output, s);
                },
                leaves));
    }
    {
      Rng rng(18'000 + s);
      const int64_t n = 1 + static_cast<int64_t>(rng.uniform_int(5));
      Tensor emissions = Tensor::uniform({n, 9}, -1.5, 1.5, rng, true);
      CrfParams params = testutil::random_crf(rng);
      std::vector<int> tags;
      for (int64_t t = 0; t < n; ++t) {
        tags.push_back(static_cast<int>(rng.uniform_int(9)));
      }
      Tensor leaves[] = {emissions, params.transitions, params.start, params.stop};
      track("crf_log_likelihood",
            gradcheck::finite_difference_error(
                [&] { return crf_log_likelihood(emissions, tags, params); }, leaves));
    }
    {
      CwiModel model(miniature_cwi_config(), {"cat", "dog"}, 19'000 + s);
      model.set_embeddings(std::make_shared<EmbeddingTable>(4, 1),
                           std::make_shared<EmbeddingTable>(3, 2));
      Example ex;
      ex.id = "mini";
      ex.tokens = {"ab", "cd", "ef"};
      ex.tags = {"B-PER", "O", "B-LOC"};
      ex.image_words = {{"cat", 0.5}, {"dog", 0.3}};
      auto named = model.parameters();
      std::vector<Tensor> leaves;
      for (auto& p : named) {
        leaves.push_back(p.tensor);
      }
      gradcheck::Options options;
      options.sample_entries = 2;
      options.sample_seed = s;
      track("cwi_miniature", gradcheck::finite_difference_error(
                                 [&] {
                                   Rng rng(0);
                                   return model.loss(ex, false, rng);
                                 },
                                 leaves, options));
    }
    {
      MsbConfig config;
      config.hidden = 16;
      config.heads = 2;
      config.layers = 2;
      config.max_positions = 32;
      config.use_crf = true;
      auto vocab = std::make_shared<SubwordVocab>(testutil::mini_vocab());
      MsbModel model(config, vocab, 20'000 + s);
      Example ex;
      ex.id = "mini";
      ex.tokens = {"the", "cat", "runs"};
      ex.tags = {"O", "B-PER", "O"};
      ex.image_words = {{"dog", 0.4}};
      auto named = model.parameters();
      std::vector<Tensor> leaves;
      for (auto& p : named) {
        leaves.push_back(p.tensor);
      }
      gradcheck::Options options;
      options.sample_entries = 2;
      options.sample_seed = s;
      track("msb_miniature", gradcheck::finite_difference_error(
                                 [&] { return model.loss(ex); }, leaves, options));
    }
  }

  const double elapsed = seconds_since(start);
  const bool pass = worst < 1e-4 && elapsed < 180.0;
  std::ostringstream detail;
  detail << "worst rel err " << worst << " (" << worst_layer << "), " << kSeeds
         << " seeds/layer, " << elapsed << "s";
  report("C01 gradient-correctness", pass, detail.str());
  CHECK(worst < 1e-4);
  CHECK(elapsed < 180.0);
}

TEST_CASE("criterion 2: crf exactness against enumeration") {
  double worst_z = 0.0;
  size_t path_mismatches = 0;
  for (uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(31'000 + trial);
    const int64_t n = 1 + static_cast<int64_t>(rng.uniform_int(6));
    Tensor emissions = Tensor::uniform({n, 9}, -3, 3, rng);
    CrfParams params = testutil::random_crf(rng, 1.5);
    worst_z = std::max(worst_z, std::fabs(crf_log_partition(emissions, params) -
                                          testutil::enumerate_log_partition(emissions, params)));
    if (viterbi_decode(emissions, params).first !=
        testutil::enumerate_best_path(emissions, params).first) {
      ++path_mismatches;
    }
  }
  const bool pass = worst_z < 1e-8 && path_mismatches == 0;
  std::ostringstream detail;
  detail << "max |dlogZ| " << worst_z << ", path mismatches " << path_mismatches << "/200";
  report("C02 crf-exactness", pass, detail.str());
  CHECK(worst_z < 1e-8);
  CHECK(path_mismatches == 0);
}

TEST_CASE("criterion 3: metric oracle") {
  size_t disagreements = 0;
  for (uint64_t trial = 0; trial < 500; ++trial) {
    Rng rng(32'000 + trial);
    std::vector<std::vector<std::string>> gold, pred;
    const size_t sentences = 1 + rng.uniform_int(6);
    for (size_t sent = 0; sent < sentences; ++sent) {
      const size_t len = 1 + rng.uniform_int(12);
      gold.push_back(testutil::random_legal_tags(len, rng));
      pred.push_back(testutil::random_any_tags(len, rng));
    }
    const EvalReport rep = evaluate(gold, pred);
    const auto recount = testutil::recount_spans(gold, pred);
    if (rep.overall.tp != recount.tp || rep.overall.gold != recount.gold ||
        rep.overall.predicted != recount.predicted) {
      ++disagreements;
    }
  }
  const EvalReport hand = evaluate({{"B-PER", "I-PER", "O"}}, {{"B-PER", "O", "O"}});
  const bool hand_ok = hand.overall.precision == 0.0 && hand.overall.recall == 0.0;
  const bool pass = disagreements == 0 && hand_ok;
  std::ostringstream detail;
  detail << disagreements << "/500 disagreements; hand example P=" << hand.overall.precision
         << " R=" << hand.overall.recall;
  report("C03 metric-oracle", pass, detail.str());
  CHECK(disagreements == 0);
  CHECK(hand_ok);
}

TEST_CASE("criterion 4: sine_relu analytic values") {
  const double eps = 0.0025;
  const bool one_exact = sine_relu(Tensor::scalar(1.0), eps).item() == 1.0;
  const double at_zero = sine_relu(Tensor::scalar(0.0), eps).item();
  const bool zero_ok = std::fabs(at_zero - (-eps)) < 1e-18;
  double worst_grad = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(33'000 + seed);
    const double x0 = rng.uniform(-4.0, -0.05);
    Tensor x = Tensor::leaf({1}, {x0}, true);
    backward(sine_relu(x, eps));
    const double h = 1e-6;
    const double fd = (eps * (std::sin(x0 + h) - std::cos(x0 + h)) -
                       eps * (std::sin(x0 - h) - std::cos(x0 - h))) /
                      (2 * h);
    worst_grad = std::max(worst_grad, std::fabs(x.grad()[0] - fd));
    const double analytic = eps * (std::cos(x0) + std::sin(x0));
    worst_grad = std::max(worst_grad, std::fabs(x.grad()[0] - analytic));
  }
  const bool pass = one_exact && zero_ok && worst_grad < 1e-6;
  std::ostringstream detail;
  detail << "f(1)=" << sine_relu(Tensor::scalar(1.0), eps).item() << ", f(0)=" << at_zero
         << ", worst grad dev " << worst_grad;
  report("C04 sine-relu-values", pass, detail.str());
  CHECK(one_exact);
  CHECK(zero_ok);
  CHECK(worst_grad < 1e-6);
}

TEST_CASE("criterion 5: configuration fidelity") {
  bool pass = true;
  std::ostringstream detail;

  auto vocab = std::make_shared<SubwordVocab>(testutil::mini_vocab());
  MsbConfig tiny_cfg = MsbConfig::tiny();
  MsbConfig small_cfg = MsbConfig::small();
  pass = pass && tiny_cfg.hidden == 128 && tiny_cfg.heads == 2 && tiny_cfg.layers == 2;
  pass = pass && small_cfg.hidden == 512 && small_cfg.heads == 8 && small_cfg.layers == 4;
  // constructed models carry those dimensions in their parameter shapes
  MsbModel tiny(tiny_cfg, vocab, 0);
  MsbModel small(small_cfg, vocab, 0);
  size_t tiny_layers = 0, small_layers = 0;
  for (const auto& p : tiny.parameters()) {
    if (p.name == "layer0.attn.w_q") {
      pass = pass && p.tensor.shape() == Shape{128, 128};
    }
    if (p.name.rfind("layer", 0) == 0 && p.name.find(".attn.w_q") != std::string::npos) {
      ++tiny_layers;
    }
  }
  for (const auto& p : small.parameters()) {
    if (p.name == "layer0.attn.w_q") {
      pass = pass && p.tensor.shape() == Shape{512, 512};
    }
    if (p.name.rfind("layer", 0) == 0 && p.name.find(".attn.w_q") != std::string::npos) {
      ++small_layers;
    }
  }
  pass = pass && tiny_layers == 2 && small_layers == 4;

  CwiConfig cwi;
  pass = pass && cwi.word_emb_dim() == 500 && cwi.glove_dim == 200 && cwi.fasttext_dim == 300;
  pass = pass && cwi.image_emb == 50 && cwi.image_lstm == 50;
  pass = pass && cwi.fusion_lstm == 100;
  CwiModel cwi_model(cwi, {"cat"}, 0);
  cwi_model.set_embeddings(std::make_shared<EmbeddingTable>(200, 1),
                           std::make_shared<EmbeddingTable>(300, 2));
  bool found_fusion = false, found_crf = false, found_head = false, found_image = false;
  for (const auto& p : cwi_model.parameters()) {
    if (p.name == "fusion.lstm_fwd.U_f") {
      found_fusion = true;
      pass = pass && p.tensor.shape() == Shape{100, 100};
    }
    if (p.name == "crf.transitions") {
      found_crf = true;
      pass = pass && p.tensor.shape() == Shape{9, 9};
    }
    if (p.name == "head.weight") {
      found_head = true;
      pass = pass && p.tensor.shape() == Shape{200, 9};
    }
    if (p.name == "image.lstm.W_f") {
      found_image = true;
      pass = pass && p.tensor.shape() == Shape{50, 50};
    }
  }
  pass = pass && found_fusion && found_crf && found_head && found_image;
  pass = pass && cwi.char_feature_width() == 640;
  pass = pass && TagScheme::kNumTags == 9;

  detail << "tiny 128/2/2, small 512/8/4, word emb 200+300=500, image 50, fusion 100+100, "
            "crf classes 9, F_c "
         << cwi.char_feature_width();
  report("C05 configuration-fidelity", pass, detail.str());
  CHECK(pass);
}

TEST_CASE("criterion 6: overfit smoke tests on the bundled corpus") {
  {
    const auto start = std::chrono::steady_clock::now();
    const TrainEvalOutput cwi = run_train_eval("cwi", 50, 2e-3, 0.95, 0);
    const double elapsed = seconds_since(start);
    const bool loss_fell = cwi.last_loss < cwi.first_loss;
    const bool pass = cwi.best_f1 >= 0.95 && elapsed < 240.0 && loss_fell;
    std::ostringstream detail;
    detail << "cwi train span-F1 " << cwi.best_f1 << " after " << cwi.epochs_used
           << " epochs, loss " << cwi.first_loss << " -> " << cwi.last_loss << ", "
           << elapsed << "s";
    report("C06a overfit-cwi", pass, detail.str());
    CHECK(cwi.best_f1 >= 0.95);
    CHECK(loss_fell);
    CHECK(elapsed < 240.0);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    const TrainEvalOutput msb = run_train_eval("msb-tiny", 50, 1e-3, 0.95, 0);
    const double elapsed = seconds_since(start);
    const bool pass = msb.best_f1 >= 0.95 && elapsed < 240.0;
    std::ostringstream detail;
    detail << "msb-tiny train span-F1 " << msb.best_f1 << " after " << msb.epochs_used
           << " epochs, " << elapsed << "s";
    report("C06b overfit-msb-tiny", pass, detail.str());
    CHECK(msb.best_f1 >= 0.95);
    CHECK(elapsed < 240.0);
  }
}

TEST_CASE("criterion 7: attention normalization") {
  double worst_sum = 0.0;
  double worst_masked = 0.0;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(35'000 + trial);
    AttentionParams params = make_attention(4, rng);
    std::vector<Tensor> hs;
    const size_t n = 2 + rng.uniform_int(3);
    for (size_t i = 0; i < n; ++i) {
      hs.push_back(Tensor::uniform({1, 4}, -2, 2, rng));
    }
    const Tensor alphas = modality_attention_weights(hs, params);
    double total = 0.0;
    for (int64_t i = 0; i < alphas.numel(); ++i) {
      total += alphas.at(i);
    }
    worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
  }
  auto vocab = std::make_shared<SubwordVocab>(testutil::mini_vocab());
  MsbConfig config;
  config.hidden = 16;
  config.heads = 2;
  config.layers = 2;
  config.max_positions = 32;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    MsbModel model(config, vocab, 36'000 + trial);
    Rng rng(trial);
    const size_t len = 3 + rng.uniform_int(6);
    std::vector<int> ids(len), segs(len, 0), mask(len);
    for (size_t i = 0; i < len; ++i) {
      ids[i] = 5 + static_cast<int>(rng.uniform_int(26));
      mask[i] = 1;
    }
    mask[len - 1] = 0;  // one masked key
    model.encode(ids, segs, mask);
    for (const Tensor& w : model.last_attention_weights()) {
      for (int64_t r = 0; r < w.shape()[0]; ++r) {
        double row = 0.0;
        for (int64_t c = 0; c < w.shape()[1]; ++c) {
          row += w.at(r, c);
          if (mask[static_cast<size_t>(c)] == 0) {
            worst_masked = std::max(worst_masked, w.at(r, c));
          }
        }
        worst_sum = std::max(worst_sum, std::fabs(row - 1.0));
      }
    }
  }
  const bool pass = worst_sum < 1e-6 && worst_masked < 1e-6;
  std::ostringstream detail;
  detail << "worst |sum-1| " << worst_sum << ", worst masked weight " << worst_masked;
  report("C07 attention-normalization", pass, detail.str());
  CHECK(worst_sum < 1e-6);
  CHECK(worst_masked < 1e-6);
}

TEST_CASE("criterion 8: top-5 image-word extraction vs full sort") {
  size_t disagreements = 0;
  for (uint64_t trial = 0; trial < 1000; ++trial) {
    Rng rng(37'000 + trial);
    std::vector<double> probs(1000);
    for (auto& p : probs) {
      p = rng.uniform();
    }
    const auto got = topk_indices(probs, 5);
    std::vector<int64_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      if (probs[static_cast<size_t>(a)] != probs[static_cast<size_t>(b)]) {
        return probs[static_cast<size_t>(a)] > probs[static_cast<size_t>(b)];
      }
      return a < b;
    });
    order.resize(5);
    if (got != order) {
      ++disagreements;
    }
  }
  const bool pass = disagreements == 0;
  report("C08 top5-image-words", pass,
         std::to_string(disagreements) + "/1000 disagreements with the full-sort oracle");
  CHECK(disagreements == 0);
}

TEST_CASE("criterion 9: tokenizer round-trip over the bundled vocabulary") {
  const SubwordVocab vocab = SubwordVocab::from_file(testutil::data_path("vocab_1k.txt"));
  size_t words = 0, failures = 0;
  for (const auto& token : vocab.tokens()) {
    if (token.rfind("##", 0) == 0 || token.front() == '[') {
      continue;
    }
    ++words;
    const Tokenized t = tokenize(token, vocab);
    bool ok = true;
    for (int id : t.ids) {
      ok = ok && id != vocab.unk_id();
    }
    const auto round = detokenize(t.ids, vocab);
    ok = ok && round.size() == 1 && round[0] == token;
    failures += ok ? 0 : 1;
  }
  const bool pass = failures == 0 && vocab.size() == 1000;
  std::ostringstream detail;
  detail << words << " in-vocab words, " << failures << " round-trip failures";
  report("C09 tokenizer-round-trip", pass, detail.str());
  CHECK(failures == 0);
  CHECK(vocab.size() == 1000);
}

TEST_CASE("criterion 10: determinism of train+eval") {
  const TrainEvalOutput cwi_a = run_train_eval("cwi", 2, 2e-3, -1.0, 0);
  const TrainEvalOutput cwi_b = run_train_eval("cwi", 2, 2e-3, -1.0, 0);
  const bool cwi_ok = cwi_a.report == cwi_b.report && cwi_a.log == cwi_b.log;
  const TrainEvalOutput msb_a = run_train_eval("msb-tiny", 2, 1e-3, -1.0, 0);
  const TrainEvalOutput msb_b = run_train_eval("msb-tiny", 2, 1e-3, -1.0, 0);
  const bool msb_ok = msb_a.report == msb_b.report && msb_a.log == msb_b.log;
  const bool pass = cwi_ok && msb_ok;
  std::ostringstream detail;
  detail << "cwi " << (cwi_ok ? "bitwise-identical" : "diverged") << ", msb-tiny "
         << (msb_ok ? "bitwise-identical" : "diverged");
  report("C10 determinism", pass, detail.str());
  CHECK(cwi_ok);
  CHECK(msb_ok);
}

TEST_CASE("criterion 11: TMN dataset statistics (conditional)") {
  const char* root = std::getenv("MMNER_TMN_DIR");
  if (!root) {
    report("C11 tmn-statistics", true, "SKIP (set MMNER_TMN_DIR to the real corpus)");
    return;
  }
  auto load_split = [&](std::initializer_list<const char*> names) {
    for (const char* name : names) {
      const std::string path = std::string(root) + "/" + name;
      std::ifstream in(path);
      if (in) {
        return parse_tmn(in, {}, ParseMode::lenient);
      }
    }
    throw IoError("no split file found under " + std::string(root));
  };
  const auto train = load_split({"train.tmn", "train.txt", "train"});
  const auto dev = load_split({"dev.tmn", "dev.txt", "dev", "valid.txt", "valid"});
  const auto test = load_split({"test.tmn", "test.txt", "test"});
  const size_t entities = corpus_stats(train).total_entities +
                          corpus_stats(dev).total_entities +
                          corpus_stats(test).total_entities;
  const bool pass = train.size() == 4000 && dev.size() == 1000 && test.size() == 3257 &&
                    entities == 12784;
  std::ostringstream detail;
  detail << "split " << train.size() << "/" << dev.size() << "/" << test.size()
         << ", entities " << entities << " (expect 4000/1000/3257, 12784)";
  report("C11 tmn-statistics", pass, detail.str());
  CHECK(pass);
}

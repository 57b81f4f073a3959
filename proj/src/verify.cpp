#include "mmner/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mmner/crf.hpp"
#include "mmner/cwi.hpp"
#include "mmner/error.hpp"
#include "mmner/layers.hpp"
#include "mmner/metrics.hpp"
#include "mmner/model.hpp"
#include "mmner/msb.hpp"
#include "mmner/optim.hpp"
#include "mmner/tagscheme.hpp"
#include "mmner/wordpiece.hpp"

namespace mmner {

namespace gradcheck {

double relative_error(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 0.01});
}

double finite_difference_error(const std::function<Tensor()>& loss_fn, std::span<Tensor> leaves,
                               const Options& options) {
  for (auto& leaf : leaves) {
    leaf.zero_grad();
  }
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
  }
  double worst = 0.0;
  Rng rng(options.sample_seed);
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto data = leaves[li].data();
    const int64_t n = static_cast<int64_t>(data.size());
    std::vector<int64_t> entries;
    if (options.sample_entries <= 0 || options.sample_entries >= n) {
      entries.resize(static_cast<size_t>(n));
      std::iota(entries.begin(), entries.end(), 0);
    } else {
      std::set<int64_t> picked;
      while (static_cast<int64_t>(picked.size()) < options.sample_entries) {
        picked.insert(static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n))));
      }
      entries.assign(picked.begin(), picked.end());
    }
    for (int64_t idx : entries) {
      const double orig = data[static_cast<size_t>(idx)];
      data[static_cast<size_t>(idx)] = orig + options.step;
      const double plus = loss_fn().item();
      data[static_cast<size_t>(idx)] = orig - options.step;
      const double minus = loss_fn().item();
      data[static_cast<size_t>(idx)] = orig;
      const double fd = (plus - minus) / (2.0 * options.step);
      const double a = analytic[li][static_cast<size_t>(idx)] + options.corruption;
      worst = std::max(worst, relative_error(a, fd));
    }
  }
  return worst;
}

}  // namespace gradcheck

namespace {

// ---- independent oracles -------------------------------------------------

double brute_force_log_partition(const Tensor& emissions, const CrfParams& params) {
  const int64_t n = emissions.shape()[0];
  const int64_t k = emissions.shape()[1];
  const auto& em = emissions.data();
  const auto& trans = params.transitions.data();
  const auto& start = params.start.data();
  const auto& stop = params.stop.data();
  std::vector<int> path(static_cast<size_t>(n), 0);
  std::vector<double> scores;
  while (true) {
    double s = start[static_cast<size_t>(path[0])] + em[static_cast<size_t>(path[0])];
    for (int64_t t = 1; t < n; ++t) {
      s += trans[static_cast<size_t>(path[static_cast<size_t>(t - 1)] * k +
                                     path[static_cast<size_t>(t)])] +
           em[static_cast<size_t>(t * k + path[static_cast<size_t>(t)])];
    }
    s += stop[static_cast<size_t>(path[static_cast<size_t>(n - 1)])];
    scores.push_back(s);
    int64_t pos = n - 1;
    while (pos >= 0 && ++path[static_cast<size_t>(pos)] == k) {
      path[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) {
      break;
    }
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double acc = 0.0;
  for (double s : scores) {
    acc += std::exp(s - mx);
  }
  return mx + std::log(acc);
}

std::pair<std::vector<int>, double> brute_force_best_path(const Tensor& emissions,
                                                          const CrfParams& params) {
  const int64_t n = emissions.shape()[0];
  const int64_t k = emissions.shape()[1];
  const auto& em = emissions.data();
  const auto& trans = params.transitions.data();
  const auto& start = params.start.data();
  const auto& stop = params.stop.data();
  std::vector<int> path(static_cast<size_t>(n), 0);
  std::vector<int> best_path;
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    double s = start[static_cast<size_t>(path[0])] + em[static_cast<size_t>(path[0])];
    for (int64_t t = 1; t < n; ++t) {
      s += trans[static_cast<size_t>(path[static_cast<size_t>(t - 1)] * k +
                                     path[static_cast<size_t>(t)])] +
           em[static_cast<size_t>(t * k + path[static_cast<size_t>(t)])];
    }
    s += stop[static_cast<size_t>(path[static_cast<size_t>(n - 1)])];
    if (s > best) {
      best = s;
      best_path = path;
    }
    int64_t pos = n - 1;
    while (pos >= 0 && ++path[static_cast<size_t>(pos)] == k) {
      path[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) {
      break;
    }
  }
  return {best_path, best};
}

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double scale = 1.0) {
  return Tensor::uniform(std::move(shape), -scale, scale, rng, requires_grad);
}

// fixed random projection turns a tensor-valued output into a scalar loss
Tensor project_to_scalar(const Tensor& out, Rng& rng) {
  return sum(mul(out, Tensor::uniform(out.shape(), -1.0, 1.0, rng)));
}

std::string mini_vocab_text() {
  std::ostringstream out;
  out << "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n";
  for (char c = 'a'; c <= 'z'; ++c) {
    out << c << '\n';
  }
  for (char c = 'a'; c <= 'z'; ++c) {
    out << "##" << c << '\n';
  }
  out << "cat\ndog\nbird\nthe\nruns\nriver\n##ing\n##er\n";
  return out.str();
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

Example miniature_example() {
  Example example;
  example.id = "mini";
  example.tokens = {"ab", "cd", "ef"};
  example.tags = {"B-PER", "O", "B-LOC"};
  example.image_words = {{"cat", 0.5}, {"dog", 0.3}};
  return example;
}

struct Suite {
  std::vector<CheckResult> results;
  double corruption = 0.0;

  void run(const std::string& name, const std::function<std::string()>& body) {
    CheckResult r;
    r.name = name;
    try {
      r.detail = body();
      r.pass = true;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = e.what();
    }
    results.push_back(std::move(r));
  }

  void expect(bool condition, const std::string& message) {
    if (!condition) {
      throw Error(message);
    }
  }

  std::string fd_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> leaves,
                       int64_t sample_entries = 0, uint64_t seed = 0) {
    gradcheck::Options options;
    options.sample_entries = sample_entries;
    options.sample_seed = seed;
    options.corruption = corruption;
    const double err = gradcheck::finite_difference_error(loss_fn, leaves, options);
    expect(err < options.tolerance,
           "gradient error " + std::to_string(err) + " exceeds 1e-4");
    std::ostringstream out;
    out << "max rel err " << err;
    return out.str();
  }
};

}  // namespace

std::vector<CheckResult> run_verification(bool corrupt_gradient) {
  Suite suite;
  suite.corruption = corrupt_gradient ? 0.05 : 0.0;
  const int seeds_per_check = 3;

  suite.run("fd.elementwise", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(100 + static_cast<uint64_t>(seed));
      Tensor a = random_tensor({4, 5}, rng);
      Tensor b = random_tensor({4, 5}, rng);
      Tensor leaves[] = {a, b};
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            const Tensor expr = add(mul(tanh(a), sigmoid(b)), mul(relu(a), exp(mul_scalar(b, 0.3))));
            return project_to_scalar(expr, prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.matmul_softmax", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(200 + static_cast<uint64_t>(seed));
      Tensor a = random_tensor({3, 4}, rng);
      Tensor b = random_tensor({4, 2}, rng);
      Tensor leaves[] = {a, b};
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            return project_to_scalar(softmax(matmul(a, b), 1), prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.conv1d", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(300 + static_cast<uint64_t>(seed));
      Tensor x = random_tensor({6, 3}, rng);
      Tensor k = random_tensor({3, 3, 4}, rng);
      Tensor leaves[] = {x, k};
      for (const Padding padding : {Padding::same, Padding::valid}) {
        detail = suite.fd_check(
            [&] {
              Rng prng(7);
              return project_to_scalar(conv1d(x, k, padding), prng);
            },
            leaves);
      }
    }
    return detail;
  });

  suite.run("fd.maxpool1d", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(400 + static_cast<uint64_t>(seed));
      Tensor x = random_tensor({7, 3}, rng);
      Tensor leaves[] = {x};
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            return project_to_scalar(maxpool1d(x, 2), prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.sine_relu", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(500 + static_cast<uint64_t>(seed));
      Tensor x = random_tensor({4, 4}, rng);
      Tensor leaves[] = {x};
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            return project_to_scalar(sine_relu(x, 0.0025), prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.group_norm", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(600 + static_cast<uint64_t>(seed));
      Tensor x = random_tensor({5, 8}, rng);
      Tensor gamma = random_tensor({1, 8}, rng);
      Tensor beta = random_tensor({1, 8}, rng);
      Tensor leaves[] = {x, gamma, beta};
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            return project_to_scalar(group_norm(x, 4, gamma, beta), prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.lstm", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(700 + static_cast<uint64_t>(seed));
      LstmParams params = make_lstm(3, 4, rng);
      std::vector<Tensor> xs;
      for (int t = 0; t < 5; ++t) {
        xs.push_back(random_tensor({1, 3}, rng));
      }
      std::vector<Tensor> leaves = xs;
      for (auto& p : params.named("lstm")) {
        leaves.push_back(p.tensor);
      }
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            const auto hs = lstm_run(xs, params);
            Tensor acc;
            for (const auto& h : hs) {
              const Tensor piece = project_to_scalar(h, prng);
              acc = acc.defined() ? add(acc, piece) : piece;
            }
            return acc;
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.bilstm", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(800 + static_cast<uint64_t>(seed));
      LstmParams fwd = make_lstm(3, 2, rng);
      LstmParams bwd = make_lstm(3, 2, rng);
      std::vector<Tensor> xs;
      for (int t = 0; t < 4; ++t) {
        xs.push_back(random_tensor({1, 3}, rng));
      }
      std::vector<Tensor> leaves = xs;
      for (auto& p : fwd.named("f")) {
        leaves.push_back(p.tensor);
      }
      for (auto& p : bwd.named("b")) {
        leaves.push_back(p.tensor);
      }
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            const auto hs = bilstm(xs, fwd, bwd);
            Tensor acc;
            for (const auto& h : hs) {
              const Tensor piece = project_to_scalar(h, prng);
              acc = acc.defined() ? add(acc, piece) : piece;
            }
            return acc;
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.modality_attention", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(900 + static_cast<uint64_t>(seed));
      AttentionParams params = make_attention(4, rng);
      std::vector<Tensor> hs;
      for (int i = 0; i < 3; ++i) {
        hs.push_back(random_tensor({1, 4}, rng));
      }
      std::vector<Tensor> leaves = hs;
      leaves.push_back(params.W_w);
      leaves.push_back(params.b_w);
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            return project_to_scalar(modality_attention(hs, params), prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.scaled_dot_product_attention", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(1000 + static_cast<uint64_t>(seed));
      Tensor q = random_tensor({4, 3}, rng);
      Tensor k = random_tensor({5, 3}, rng);
      Tensor v = random_tensor({5, 2}, rng);
      const std::vector<int> mask = {1, 1, 1, 1, 0};
      Tensor leaves[] = {q, k, v};
      detail = suite.fd_check(
          [&] {
            Rng prng(7);
            return project_to_scalar(scaled_dot_product_attention(q, k, v, mask).output, prng);
          },
          leaves);
    }
    return detail;
  });

  suite.run("fd.crf_log_likelihood", [&] {
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      Rng rng(1100 + static_cast<uint64_t>(seed));
      const int64_t n = 5;
      Tensor emissions = random_tensor({n, TagScheme::kNumTags}, rng);
      CrfParams params = CrfParams::zeros(TagScheme::kNumTags);
      for (auto& v : params.transitions.data()) {
        v = rng.uniform(-1.0, 1.0);
      }
      for (auto& v : params.start.data()) {
        v = rng.uniform(-1.0, 1.0);
      }
      for (auto& v : params.stop.data()) {
        v = rng.uniform(-1.0, 1.0);
      }
      std::vector<int> tags;
      for (int64_t t = 0; t < n; ++t) {
        tags.push_back(static_cast<int>(rng.uniform_int(TagScheme::kNumTags)));
      }
      Tensor leaves[] = {emissions, params.transitions, params.start, params.stop};
      detail = suite.fd_check([&] { return crf_log_likelihood(emissions, tags, params); },
                              leaves);
    }
    return detail;
  });

  suite.run("fd.cwi_miniature", [&] {
    CwiConfig config = miniature_cwi_config();
    auto glove = std::make_shared<EmbeddingTable>(static_cast<int>(config.glove_dim), 11);
    auto fasttext = std::make_shared<EmbeddingTable>(static_cast<int>(config.fasttext_dim), 13);
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      CwiModel model(config, {"cat", "dog"}, 40 + static_cast<uint64_t>(seed));
      model.set_embeddings(glove, fasttext);
      const Example example = miniature_example();
      auto named = model.parameters();
      std::vector<Tensor> leaves;
      for (auto& p : named) {
        leaves.push_back(p.tensor);
      }
      detail = suite.fd_check(
          [&] {
            Rng rng(0);
            return model.loss(example, /*training=*/false, rng);
          },
          leaves, /*sample_entries=*/2, /*seed=*/static_cast<uint64_t>(seed));
    }
    return detail;
  });

  suite.run("fd.msb_miniature", [&] {
    MsbConfig config;
    config.hidden = 16;
    config.heads = 2;
    config.layers = 2;
    config.max_positions = 32;
    config.use_crf = true;
    std::istringstream vocab_stream(mini_vocab_text());
    auto vocab = std::make_shared<SubwordVocab>(SubwordVocab::from_stream(vocab_stream));
    std::string detail;
    for (int seed = 0; seed < seeds_per_check; ++seed) {
      MsbModel model(config, vocab, 50 + static_cast<uint64_t>(seed));
      Example example;
      example.id = "mini";
      example.tokens = {"the", "cat", "runs"};
      example.tags = {"O", "B-PER", "O"};
      example.image_words = {{"dog", 0.4}};
      auto named = model.parameters();
      std::vector<Tensor> leaves;
      for (auto& p : named) {
        leaves.push_back(p.tensor);
      }
      detail = suite.fd_check([&] { return model.loss(example); }, leaves,
                              /*sample_entries=*/2, /*seed=*/static_cast<uint64_t>(seed));
    }
    return detail;
  });

  suite.run("crf.brute_force", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
      Rng rng(2000 + static_cast<uint64_t>(trial));
      const int64_t n = 1 + static_cast<int64_t>(rng.uniform_int(5));
      Tensor emissions = random_tensor({n, TagScheme::kNumTags}, rng, false);
      CrfParams params = CrfParams::zeros(TagScheme::kNumTags);
      for (auto& v : params.transitions.data()) {
        v = rng.uniform(-1.0, 1.0);
      }
      for (auto& v : params.start.data()) {
        v = rng.uniform(-1.0, 1.0);
      }
      for (auto& v : params.stop.data()) {
        v = rng.uniform(-1.0, 1.0);
      }
      const double exact = crf_log_partition(emissions, params);
      const double brute = brute_force_log_partition(emissions, params);
      worst = std::max(worst, std::fabs(exact - brute));
      const auto [path, score] = viterbi_decode(emissions, params);
      const auto [bpath, bscore] = brute_force_best_path(emissions, params);
      suite.expect(path == bpath, "viterbi path disagrees with brute force");
      suite.expect(std::fabs(score - bscore) < 1e-8, "viterbi score disagrees with brute force");
    }
    suite.expect(worst < 1e-8, "logZ error " + std::to_string(worst));
    std::ostringstream out;
    out << "max |dlogZ| " << worst;
    return out.str();
  });

  suite.run("metrics.brute_force", [&] {
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(3000 + static_cast<uint64_t>(trial));
      std::vector<std::vector<std::string>> gold, pred;
      const size_t sentences = 1 + rng.uniform_int(6);
      for (size_t s = 0; s < sentences; ++s) {
        const size_t len = 1 + rng.uniform_int(10);
        std::vector<std::string> g, p;
        int prev = -1;
        for (size_t t = 0; t < len; ++t) {
          int tag;
          do {
            tag = static_cast<int>(rng.uniform_int(TagScheme::kNumTags));
          } while (!TagScheme::transition_legal(prev, tag));
          g.emplace_back(TagScheme::label_of(tag));
          prev = tag;
          p.emplace_back(TagScheme::label_of(
              static_cast<int>(rng.uniform_int(TagScheme::kNumTags))));
        }
        gold.push_back(std::move(g));
        pred.push_back(std::move(p));
      }
      const EvalReport report = evaluate(gold, pred);
      // set-intersection recount
      std::set<std::tuple<size_t, int, int, std::string>> gold_set, pred_set;
      for (size_t s = 0; s < gold.size(); ++s) {
        for (const auto& span : extract_spans(gold[s], true)) {
          gold_set.insert({s, span.start, span.end, span.type});
        }
        for (const auto& span : extract_spans(pred[s], false)) {
          pred_set.insert({s, span.start, span.end, span.type});
        }
      }
      std::vector<std::tuple<size_t, int, int, std::string>> hits;
      std::set_intersection(gold_set.begin(), gold_set.end(), pred_set.begin(), pred_set.end(),
                            std::back_inserter(hits));
      suite.expect(report.overall.tp == hits.size(), "true positives disagree");
      suite.expect(report.overall.gold == gold_set.size(), "gold span count disagrees");
      suite.expect(report.overall.predicted == pred_set.size(), "predicted span count disagrees");
    }
    return std::string("50 random corpora agree");
  });

  suite.run("tokenizer.round_trip", [&] {
    std::istringstream vocab_stream(mini_vocab_text());
    const SubwordVocab vocab = SubwordVocab::from_stream(vocab_stream);
    size_t words = 0;
    for (const auto& token : vocab.tokens()) {
      if (token.rfind("##", 0) == 0 || token.front() == '[') {
        continue;
      }
      const Tokenized t = tokenize(token, vocab);
      for (int id : t.ids) {
        suite.expect(id != vocab.unk_id(), "in-vocab word '" + token + "' hit [UNK]");
      }
      const auto round = detokenize(t.ids, vocab);
      suite.expect(round.size() == 1 && round[0] == token,
                   "round trip failed for '" + token + "'");
      ++words;
    }
    return std::to_string(words) + " words round-trip";
  });

  suite.run("softmax.extended_precision", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng(4000 + static_cast<uint64_t>(trial));
      const int64_t n = 2 + static_cast<int64_t>(rng.uniform_int(9));
      Tensor x = Tensor::uniform({1, n}, -30.0, 30.0, rng);
      const Tensor y = softmax(x, 1);
      long double mx = -1e30L;
      for (double v : x.data()) {
        mx = std::max(mx, static_cast<long double>(v));
      }
      long double denom = 0.0L;
      for (double v : x.data()) {
        denom += std::exp(static_cast<long double>(v) - mx);
      }
      for (int64_t j = 0; j < n; ++j) {
        const long double expect = std::exp(static_cast<long double>(x.at(j)) - mx) / denom;
        worst = std::max(worst, std::fabs(static_cast<double>(expect) - y.at(j)));
      }
    }
    suite.expect(worst < 1e-6, "softmax deviates " + std::to_string(worst));
    std::ostringstream out;
    out << "max deviation " << worst;
    return out.str();
  });

  suite.run("image.top5_full_sort", [&] {
    for (int trial = 0; trial < 100; ++trial) {
      Rng rng(5000 + static_cast<uint64_t>(trial));
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
      suite.expect(got == order, "top-5 selection disagrees with full sort");
    }
    return std::string("100 random vectors agree");
  });

  suite.run("optimizer.adam_closed_form", [&] {
    Tensor param = Tensor::leaf({1}, {0.5}, true);
    OptimizerState state;
    state.kind = OptimizerState::Kind::adam;
    state.learning_rate = 8e-5;
    Optimizer optimizer({{"p", param}}, state);
    const double g = 0.37;
    param.grad()[0] = g;
    optimizer.step();
    const double m_hat = (1.0 - 0.9) * g / (1.0 - 0.9);
    const double v_hat = (1.0 - 0.999) * g * g / (1.0 - 0.999);
    const double expect = 0.5 - 8e-5 * m_hat / (std::sqrt(v_hat) + 1e-8);
    suite.expect(std::fabs(param.data()[0] - expect) < 1e-15,
                 "adam step deviates from the closed form");
    return std::string("single-step update matches");
  });

  return suite.results;
}

std::string format_verification(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  size_t width = 0;
  for (const auto& r : results) {
    width = std::max(width, r.name.size());
  }
  for (const auto& r : results) {
    out << (r.pass ? "PASS  " : "FAIL  ") << r.name;
    for (size_t pad = r.name.size(); pad < width + 2; ++pad) {
      out << ' ';
    }
    out << r.detail << '\n';
  }
  size_t failed = 0;
  for (const auto& r : results) {
    failed += r.pass ? 0 : 1;
  }
  out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed")
      << '\n';
  return out.str();
}

}  // namespace mmner

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mmner/error.hpp"
#include "mmner/seqdata.hpp"
#include "mmner/tagscheme.hpp"
#include "testutil.hpp"

using namespace mmner;

TEST_CASE("tag scheme fixed order and legality") {
  CHECK(TagScheme::kNumTags == 9);
  CHECK(TagScheme::index_of("O") == 0);
  CHECK(TagScheme::index_of("B-PER") == 1);
  CHECK(TagScheme::index_of("I-MISC") == 8);
  CHECK(TagScheme::index_of("B-XYZ") == -1);
  CHECK(TagScheme::entity_type(3) == "LOC");
  // every I-X has its B-X
  for (int i = 0; i < TagScheme::kNumTags; ++i) {
    if (TagScheme::is_inside(i)) {
      bool has_begin = false;
      for (int b = 0; b < TagScheme::kNumTags; ++b) {
        has_begin = has_begin || (TagScheme::is_begin(b) &&
                                  TagScheme::entity_type(b) == TagScheme::entity_type(i));
      }
      CHECK(has_begin);
    }
  }
  CHECK(TagScheme::transition_legal(TagScheme::index_of("B-PER"), TagScheme::index_of("I-PER")));
  CHECK(TagScheme::transition_legal(TagScheme::index_of("I-PER"), TagScheme::index_of("I-PER")));
  CHECK_FALSE(TagScheme::transition_legal(0, TagScheme::index_of("I-PER")));
  CHECK_FALSE(TagScheme::transition_legal(TagScheme::index_of("B-LOC"),
                                          TagScheme::index_of("I-PER")));
  CHECK_FALSE(TagScheme::transition_legal(-1, TagScheme::index_of("I-ORG")));
  CHECK(TagScheme::transition_legal(-1, TagScheme::index_of("B-ORG")));
}

TEST_CASE("extract_spans basics") {
  CHECK(extract_spans(std::vector<std::string>{"B-PER", "I-PER", "O"}) ==
        std::vector<EntitySpan>{{1, 2, "PER"}});
  CHECK(extract_spans(std::vector<std::string>{"O", "O", "O"}).empty());
  CHECK(extract_spans(std::vector<std::string>{"B-LOC"}) ==
        std::vector<EntitySpan>{{1, 1, "LOC"}});
  // adjacent entities
  CHECK(extract_spans(std::vector<std::string>{"B-PER", "B-PER"}) ==
        std::vector<EntitySpan>{{1, 1, "PER"}, {2, 2, "PER"}});
  CHECK_THROWS_AS(extract_spans(std::vector<std::string>{"O", "I-PER"}, true), ContractError);
  // lenient: stray I-X opens a span
  CHECK(extract_spans(std::vector<std::string>{"O", "I-PER"}, false) ==
        std::vector<EntitySpan>{{2, 2, "PER"}});
}

TEST_CASE("extract_spans matches a brute scan and counts B- tags") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const size_t len = 1 + rng.uniform_int(12);
    const auto tags = testutil::random_legal_tags(len, rng);
    const auto spans = extract_spans(tags);

    // brute scan: find every maximal B-X (I-X)* run by direct inspection
    std::vector<EntitySpan> expected;
    size_t i = 0;
    size_t b_count = 0;
    while (i < len) {
      if (tags[i][0] == 'B') {
        ++b_count;
        const std::string type = tags[i].substr(2);
        size_t j = i + 1;
        while (j < len && tags[j] == "I-" + type) {
          ++j;
        }
        expected.push_back({static_cast<int>(i) + 1, static_cast<int>(j), type});
        i = j;
      } else {
        ++i;
      }
    }
    CHECK(spans == expected);
    CHECK(spans.size() == b_count);
  }
}

TEST_CASE("parse_conll basics") {
  std::istringstream in("John B-PER\nruns O\n\n");
  const auto examples = parse_conll(in);
  REQUIRE(examples.size() == 1);
  CHECK(examples[0].tokens == std::vector<std::string>{"John", "runs"});
  CHECK(examples[0].tags == std::vector<std::string>{"B-PER", "O"});
  CHECK(examples[0].image_words.empty());

  std::istringstream empty("");
  CHECK(parse_conll(empty).empty());

  std::istringstream docstart("-DOCSTART- O\n\nJohn B-PER\n\n");
  CHECK(parse_conll(docstart).size() == 1);

  // CoNLL-2003 style extra columns; the tag is the last one
  std::istringstream cols("John NNP I-NP B-PER\n\n");
  CHECK(parse_conll(cols)[0].tags[0] == "B-PER");

  std::istringstream bad("John B-WAT\n\n");
  CHECK_THROWS_WITH_AS(parse_conll(bad), doctest::Contains("line 1"), ParseError);

  std::istringstream illegal("John I-PER\n\n");
  CHECK_THROWS_AS(parse_conll(illegal), ContractError);

  std::istringstream repairable("John I-PER\n\n");
  std::vector<std::string> log;
  const auto fixed = parse_conll(repairable, ParseMode::lenient,
                                 [&](const std::string& m) { log.push_back(m); });
  REQUIRE(fixed.size() == 1);
  CHECK(fixed[0].tags[0] == "B-PER");
  CHECK(log.size() == 1);
}

TEST_CASE("conll round-trips a 50-sentence synthetic corpus") {
  Rng rng(99);
  std::vector<Example> corpus;
  for (int s = 0; s < 50; ++s) {
    Example ex;
    ex.id = "s" + std::to_string(s + 1);
    const size_t len = 1 + rng.uniform_int(10);
    ex.tags = testutil::random_legal_tags(len, rng);
    for (size_t t = 0; t < len; ++t) {
      ex.tokens.push_back("w" + std::to_string(rng.uniform_int(30)));
    }
    corpus.push_back(std::move(ex));
  }
  const std::string text = serialize_conll(corpus);
  std::istringstream in(text);
  const auto parsed = parse_conll(in);
  REQUIRE(parsed.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(parsed[i].tokens == corpus[i].tokens);
    CHECK(parsed[i].tags == corpus[i].tags);
  }
  // parse . serialize . parse is identity
  std::istringstream in2(serialize_conll(parsed));
  CHECK(parse_conll(in2) == parsed);
}

TEST_CASE("sidecar parsing and ordering") {
  std::istringstream side("img1\tballplayer\t0.61\tjersey\t0.20\tbat\t0.05\n");
  const Sidecar sc = parse_sidecar(side);
  REQUIRE(sc.count("img1"));
  const auto& words = sc.at("img1");
  REQUIRE(words.size() == 3);
  CHECK(words[0].label == "ballplayer");
  CHECK(words[0].probability == doctest::Approx(0.61));
  for (size_t i = 1; i < words.size(); ++i) {
    CHECK(words[i - 1].probability >= words[i].probability);
  }

  // descending order imposed even for shuffled input
  std::istringstream shuffled("img2\ta\t0.1\tb\t0.5\tc\t0.2\n");
  const Sidecar sc2 = parse_sidecar(shuffled);
  const auto& w2 = sc2.at("img2");
  CHECK(w2[0].label == "b");
  CHECK(w2[2].label == "a");

  std::istringstream bad_prob("img3\ta\t1.5\n");
  CHECK_THROWS_AS(parse_sidecar(bad_prob), ContractError);
  std::istringstream bad_sum("img4\ta\t0.7\tb\t0.6\n");
  CHECK_THROWS_AS(parse_sidecar(bad_sum), ContractError);
  std::istringstream malformed("img5\ta\n");
  CHECK_THROWS_AS(parse_sidecar(malformed), ParseError);
  std::istringstream too_many("img6\ta\t0.1\tb\t0.1\tc\t0.1\td\t0.1\te\t0.1\tf\t0.1\n");
  CHECK_THROWS_AS(parse_sidecar(too_many), ParseError);
  std::istringstream junk("img7\ta\t0.x1\n");
  CHECK_THROWS_AS(parse_sidecar(junk), ParseError);
}

TEST_CASE("parse_tmn joins sidecars, strict vs lenient") {
  const std::string corpus = "IMGID:7\nJohn B-PER\n\nIMGID:8\nhome O\n\n";
  std::istringstream side_in("7\tcat\t0.9\n");
  const Sidecar side = parse_sidecar(side_in);

  std::istringstream strict_in(corpus);
  CHECK_THROWS_AS(parse_tmn(strict_in, side), ContractError);

  std::istringstream lenient_in(corpus);
  const auto examples = parse_tmn(lenient_in, side, ParseMode::lenient);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].id == "7");
  REQUIRE(examples[0].image_words.size() == 1);
  CHECK(examples[0].image_words[0].label == "cat");
  CHECK(examples[1].image_words.empty());

  for (const auto& ex : examples) {
    validate_example(ex);
  }
}

TEST_CASE("bundled synthetic corpus parses strictly and round-trips") {
  std::ifstream corpus_in(testutil::data_path("synth_train.tmn"));
  REQUIRE(corpus_in.good());
  std::ifstream side_in(testutil::data_path("synth_sidecar.tsv"));
  REQUIRE(side_in.good());
  const Sidecar side = parse_sidecar(side_in);
  const auto examples = parse_tmn(corpus_in, side);
  CHECK(examples.size() == 20);
  for (const auto& ex : examples) {
    validate_example(ex);
    CHECK(ex.image_words.size() >= 3);
  }
  const CorpusStats stats = corpus_stats(examples);
  CHECK(stats.sentences == 20);
  CHECK(stats.total_entities > 20);

  std::istringstream again(serialize_tmn(examples));
  const auto reparsed = parse_tmn(again, side);
  CHECK(reparsed == examples);
}

TEST_CASE("load_embeddings contract") {
  std::istringstream ok("cat 0.1 0.2\n");
  const EmbeddingTable table = load_embeddings(ok, 2, 0);
  CHECK(table.size() == 1);
  CHECK(table.contains("cat"));
  CHECK(table.lookup("cat") == std::vector<double>{0.1, 0.2});

  std::istringstream wrong("cat 0.1 0.2\n");
  CHECK_THROWS_WITH_AS(load_embeddings(wrong, 3, 0), doctest::Contains("line 1"), ParseError);

  std::istringstream dup("cat 1 2\ncat 3 4\n");
  std::vector<std::string> log;
  const EmbeddingTable t2 =
      load_embeddings(dup, 2, 0, [&](const std::string& m) { log.push_back(m); });
  CHECK(t2.lookup("cat") == std::vector<double>{1, 2});
  CHECK(log.size() == 1);
}

TEST_CASE("OOV embeddings are uniform in [-0.25, 0.25] and stable per token and seed") {
  const EmbeddingTable a(8, 42);
  const EmbeddingTable b(8, 42);
  const EmbeddingTable c(8, 43);
  const auto va = a.lookup("unteached");
  CHECK(va == b.lookup("unteached"));
  CHECK(va != c.lookup("unteached"));
  CHECK(va != a.lookup("different"));
  for (double v : va) {
    CHECK(v >= -0.25);
    CHECK(v <= 0.25);
  }
}

TEST_CASE("preprocess_text removes URLs") {
  CHECK(preprocess_text("see https://t.co/x now") == std::vector<std::string>{"see", "now"});
  CHECK(preprocess_text("").empty());
  CHECK(preprocess_text("ftp://a.b/c alone") == std::vector<std::string>{"alone"});
  CHECK(preprocess_text("pre http://x.y post") == std::vector<std::string>{"pre", "post"});

  // property: no output token starts with http
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    for (int w = 0; w < 8; ++w) {
      if (rng.uniform() < 0.3) {
        text += "https://ex" + std::to_string(rng.uniform_int(100)) + ".com/a?b=1 ";
      } else {
        text += "word" + std::to_string(rng.uniform_int(50)) + " ";
      }
    }
    for (const auto& token : preprocess_text(text)) {
      CHECK(token.rfind("http", 0) != 0);
    }
  }
}

TEST_CASE("validate_example enforces the invariants") {
  Example ok;
  ok.id = "x";
  ok.tokens = {"a", "b"};
  ok.tags = {"B-PER", "I-PER"};
  ok.image_words = {{"cat", 0.6}, {"dog", 0.3}};
  validate_example(ok);

  Example empty;
  empty.id = "y";
  CHECK_THROWS_AS(validate_example(empty), ContractError);

  Example mismatch = ok;
  mismatch.tags.pop_back();
  CHECK_THROWS_AS(validate_example(mismatch), ContractError);

  Example illegal = ok;
  illegal.tags = {"O", "I-PER"};
  CHECK_THROWS_AS(validate_example(illegal), ContractError);

  Example heavy = ok;
  heavy.image_words = {{"a", 0.5}, {"b", 0.6}};
  CHECK_THROWS_AS(validate_example(heavy), ContractError);
}

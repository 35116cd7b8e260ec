#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mathcorpus/corpus.hpp"
#include "mathcorpus/tokenizer.hpp"

using namespace mathcorpus;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mathcorpus-test-" + name);
    return p;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

} // namespace

TEST_CASE("whitespace tokenizer counts non-whitespace runs") {
    Tokenizer tok = Tokenizer::whitespace();
    CHECK(tok.count("") == 0);
    CHECK(tok.count("   \t\n") == 0);
    CHECK(tok.count("one") == 1);
    CHECK(tok.count("one two  three") == 3);
    CHECK(tok.count("a\nb\tc d") == 4);
    CHECK(tok.identifier() == "whitespace");
}

TEST_CASE("byte tokenizer counts bytes") {
    Tokenizer tok = Tokenizer::byte_level();
    CHECK(tok.count("") == 0);
    CHECK(tok.count("abcd") == 4);
    CHECK(tok.identifier() == "bytes");
}

TEST_CASE("tokenizer determinism") {
    Tokenizer tok = Tokenizer::whitespace();
    std::string text = "solve for x given 2x + 1 = 7";
    auto first = tok.count(text);
    for (int i = 0; i < 10; ++i) CHECK(tok.count(text) == first);
}

TEST_CASE("bpe tokenizer applies merges from file") {
    auto merges = temp_file("merges.txt");
    write_file(merges, "a b\nab c\n");
    Tokenizer tok = Tokenizer::bpe_from_file(merges.string());
    // "abc" merges a+b then ab+c into one token; "abx" only merges a+b.
    CHECK(tok.count("abc") == 1);
    CHECK(tok.count("abx") == 2);
    CHECK(tok.count("abc abc") == 2);
    CHECK(tok.count("") == 0);
    fs::remove(merges);
}

TEST_CASE("tokenizer spec parsing") {
    CHECK(Tokenizer::from_spec("whitespace").identifier() == "whitespace");
    CHECK(Tokenizer::from_spec("bytes").identifier() == "bytes");
    CHECK(Tokenizer::from_spec("").identifier() == "whitespace");
    CHECK_THROWS(Tokenizer::from_spec("nonsense"));
    CHECK_THROWS(Tokenizer::from_spec("bpe:/no/such/file"));
}

TEST_CASE("concatenation counts are within one token of the parts") {
    Tokenizer tok = Tokenizer::whitespace();
    std::mt19937_64 rng(42);
    const std::string alphabet = "ab cd+= 12\n";
    for (int trial = 0; trial < 1000; ++trial) {
        auto gen = [&](std::size_t n) {
            std::string s;
            for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
            return s;
        };
        std::string t1 = gen(rng() % 40);
        std::string t2 = gen(rng() % 40);
        auto joint = static_cast<long long>(tok.count(t1 + t2));
        auto parts = static_cast<long long>(tok.count(t1) + tok.count(t2));
        CHECK(std::abs(joint - parts) <= 1);
    }
}

TEST_CASE("ingest reads well-formed lines and reports malformed ones") {
    auto path = temp_file("ingest.jsonl");
    write_file(path,
               R"({"id":"a","source":"general","text":"alpha beta"})" "\n"
               R"({"id":"b","text":"gamma"})" "\n"
               R"({"id":"broken","source":"general"})" "\n"
               "not json at all\n"
               R"({"id":"c","source":"math-corpus","text":""})" "\n");
    Tokenizer tok = Tokenizer::whitespace();
    auto result = ingest(path.string(), Source::general, tok);

    REQUIRE(result.documents.size() == 3);
    CHECK(result.documents[0].id == "a");
    CHECK(result.documents[0].token_count == 2);
    CHECK(result.documents[1].source == Source::general); // default source applied
    CHECK(result.documents[2].token_count == 0);          // empty text
    CHECK(result.documents[2].source == Source::math_corpus);

    REQUIRE(result.errors.size() == 2);
    CHECK(result.errors[0].line_number == 3); // missing "text"
    CHECK(result.errors[1].line_number == 4); // unparseable

    CHECK(result.manifest.total_documents() == 3);
    CHECK(result.manifest.token_totals.at("general") == 3);
    fs::remove(path);
}

TEST_CASE("ingest rejects duplicate ids") {
    auto path = temp_file("ingest-dup.jsonl");
    write_file(path,
               R"({"id":"a","source":"general","text":"one"})" "\n"
               R"({"id":"a","source":"general","text":"two"})" "\n");
    auto result = ingest(path.string(), Source::general, Tokenizer::whitespace());
    CHECK(result.documents.size() == 1);
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].line_number == 2);
    fs::remove(path);
}

TEST_CASE("missing id becomes a stable content hash") {
    Tokenizer tok = Tokenizer::whitespace();
    auto d1 = document_from_json(json::parse(R"({"source":"general","text":"same text"})"), tok);
    auto d2 = document_from_json(json::parse(R"({"source":"general","text":"same text"})"), tok);
    auto d3 = document_from_json(json::parse(R"({"source":"general","text":"other text"})"), tok);
    CHECK(d1.id == d2.id);
    CHECK(d1.id != d3.id);
    CHECK(d1.id.rfind("doc-", 0) == 0);
}

TEST_CASE("document round-trip is a fixed point") {
    auto path = temp_file("roundtrip.jsonl");
    Tokenizer tok = Tokenizer::whitespace();
    std::vector<Document> docs;
    Document d;
    d.id = "x1";
    d.source = Source::problem_solving;
    d.text = "line one\nline two";
    d.token_count = tok.count(d.text);
    d.metadata["origin"] = "unit";
    docs.push_back(d);

    write_documents(path.string(), docs);
    auto back = read_documents(path.string(), tok);
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == docs[0].id);
    CHECK(back[0].source == docs[0].source);
    CHECK(back[0].text == docs[0].text);
    CHECK(back[0].token_count == docs[0].token_count);
    CHECK(back[0].metadata == docs[0].metadata);

    // second serialization is byte-identical
    auto path2 = temp_file("roundtrip2.jsonl");
    write_documents(path2.string(), back);
    std::ifstream f1(path), f2(path2);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("manifest totals are recomputable") {
    Tokenizer tok = Tokenizer::whitespace();
    std::vector<Document> docs;
    for (int i = 0; i < 5; ++i) {
        Document d;
        d.id = "d" + std::to_string(i);
        d.source = i % 2 ? Source::general : Source::math_corpus;
        d.text = "w w w";
        d.token_count = tok.count(d.text);
        docs.push_back(d);
    }
    auto m = build_manifest(docs, tok);
    CHECK(m.total_documents() == 5);
    CHECK(m.total_tokens() == 15);
    auto m2 = CorpusManifest::from_json(m.to_json());
    CHECK(m2.doc_counts == m.doc_counts);
    CHECK(m2.token_totals == m.token_totals);
}

TEST_CASE("problem records round-trip") {
    auto path = temp_file("problems.jsonl");
    ProblemRecord p;
    p.id = "p1";
    p.question = "What is 2+2?";
    p.solution = "Step 1: add. Step 2: report 4.";
    p.final_answer = "4";
    p.steps = {"add", "report 4"};
    p.knowledge_tags = {"middle-school"};
    write_problems(path.string(), {p});
    auto back = read_problems(path.string());
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == "p1");
    CHECK(back[0].steps == p.steps);
    CHECK(back[0].knowledge_tags == p.knowledge_tags);
    fs::remove(path);
}

TEST_CASE("eval items require a reference answer") {
    auto path = temp_file("eval.jsonl");
    write_file(path, R"({"dataset":"GSM8K","question":"q","reference_answer":""})" "\n");
    CHECK_THROWS(read_eval_items(path.string()));
    write_file(path, R"({"dataset":"GSM8K","question":"q","reference_answer":"7"})" "\n");
    auto items = read_eval_items(path.string());
    REQUIRE(items.size() == 1);
    CHECK(items[0].dataset == EvalDataset::GSM8K);
    fs::remove(path);
}

TEST_CASE("source and dataset names round-trip") {
    for (auto s : all_sources()) CHECK(source_from_string(to_string(s)) == s);
    for (auto d : all_eval_datasets()) CHECK(eval_dataset_from_string(to_string(d)) == d);
    CHECK_THROWS(source_from_string("bogus"));
    CHECK_THROWS(eval_dataset_from_string("bogus"));
}

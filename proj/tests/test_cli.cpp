// End-to-end checks of the command-line binary: exit codes, file outputs,
// and determinism, driven through std::system.
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mathcorpus-cli-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string raw_corpus_jsonl() {
    std::string s;
    for (int i = 0; i < 5; ++i) {
        json j{{"text", "document number " + std::to_string(i) + " with some words"}};
        s += j.dump() + "\n";
    }
    return s;
}

std::string seeds_jsonl() {
    std::string s;
    for (int i = 0; i < 4; ++i) {
        json j{{"id", "seed-" + std::to_string(i)},
               {"question", "What is " + std::to_string(i) + " + " + std::to_string(i) + "?"},
               {"solution", "Step 1: add. Step 2: report."},
               {"final_answer", std::to_string(2 * i)},
               {"steps", {"add the numbers", "report the sum"}}};
        s += j.dump() + "\n";
    }
    return s;
}

} // namespace

TEST_CASE("ingest writes documents and a manifest") {
    TempDir d;
    write_file(d.file("raw.jsonl"), raw_corpus_jsonl());
    int rc = run("ingest --in " + d.file("raw.jsonl") + " --source general --out " +
                 d.file("docs.jsonl") + " --manifest " + d.file("manifest.json"));
    CHECK(rc == 0);
    REQUIRE(fs::exists(d.file("docs.jsonl")));
    auto manifest = json::parse(read_file(d.file("manifest.json")));
    CHECK(manifest["doc_counts"]["general"] == 5);
}

TEST_CASE("dry run validates without writing") {
    TempDir d;
    write_file(d.file("raw.jsonl"), raw_corpus_jsonl());
    int rc = run("--dry-run ingest --in " + d.file("raw.jsonl") + " --source general --out " +
                 d.file("docs.jsonl"));
    CHECK(rc == 0);
    CHECK_FALSE(fs::exists(d.file("docs.jsonl")));
}

TEST_CASE("missing input path is a usage error") {
    TempDir d;
    int rc = run("--dry-run ingest --in " + d.file("no-such.jsonl") +
                 " --source general --out " + d.file("docs.jsonl"));
    CHECK(rc == 2);
}

TEST_CASE("missing required flag is a usage error") {
    CHECK(run("ingest --source general") == 2);
    CHECK(run("no-such-subcommand") == 2);
}

TEST_CASE("unknown config key is a configuration error") {
    TempDir d;
    write_file(d.file("cfg.conf"), "seed=1\nnot_a_real_key=5\n");
    write_file(d.file("raw.jsonl"), raw_corpus_jsonl());
    int rc = run("--config " + d.file("cfg.conf") + " ingest --in " + d.file("raw.jsonl") +
                 " --source general --out " + d.file("docs.jsonl"));
    CHECK(rc == 2);
}

TEST_CASE("dedup and decontaminate round trip through files") {
    TempDir d;
    write_file(d.file("raw.jsonl"), raw_corpus_jsonl());
    REQUIRE(run("ingest --in " + d.file("raw.jsonl") + " --source math-corpus --out " +
                d.file("docs.jsonl")) == 0);
    REQUIRE(run("dedup --in " + d.file("docs.jsonl") + " --out " + d.file("deduped.jsonl") +
                " --report " + d.file("dedup.json")) == 0);
    auto report = json::parse(read_file(d.file("dedup.json")));
    CHECK(report["input_documents"] == 5);
    CHECK(report["surviving_documents"] == 5); // nothing near 2048 shared bytes

    write_file(d.file("eval.jsonl"),
               json{{"dataset", "GSM8K"}, {"question", "q"}, {"reference_answer", "1"}}.dump() + "\n");
    REQUIRE(run("decontaminate --in " + d.file("deduped.jsonl") + " --eval " + d.file("eval.jsonl") +
                " --out " + d.file("clean.jsonl") + " --report " + d.file("decon.json")) == 0);
    CHECK(fs::exists(d.file("clean.jsonl")));
}

TEST_CASE("plan-mix consumes a spec file") {
    TempDir d;
    write_file(d.file("spec.conf"),
               "general_budget=48.3e9\nmath_corpus_budget=7.5e9\nproblem_budget=7.2e9\n"
               "general_ratio=4\nmath_ratio=6\ncorpus_ratio=3\nproblem_ratio=7\n"
               "steps=25000\nbatch_size=1024\ncontext_length=4096\n");
    REQUIRE(run("plan-mix --spec " + d.file("spec.conf") + " --out " + d.file("plan.json")) == 0);
    auto plan = json::parse(read_file(d.file("plan.json")));
    CHECK(plan["steps_to_consume"]["math-corpus"] == 9935);
}

TEST_CASE("bucket splits problems into difficulty files") {
    TempDir d;
    write_file(d.file("problems.jsonl"), seeds_jsonl());
    REQUIRE(run("bucket --in " + d.file("problems.jsonl") + " --out-prefix " + d.file("bucket-") +
                " --report " + d.file("buckets.json")) == 0);
    CHECK(fs::exists(d.file("bucket-easy.jsonl"))); // all seeds have 2 steps
}

TEST_CASE("synthesize retro is deterministic for a fixed seed") {
    TempDir d;
    write_file(d.file("seeds.jsonl"), seeds_jsonl());
    auto cmd = [&](const std::string& n) {
        return "--seed 9 synthesize --method retrospective-enhancement --seeds " +
               d.file("seeds.jsonl") + " --out " + d.file(n + ".jsonl") + " --stats " +
               d.file(n + ".json");
    };
    REQUIRE(run(cmd("a")) == 0);
    REQUIRE(run(cmd("b")) == 0);
    CHECK(read_file(d.file("a.jsonl")) == read_file(d.file("b.jsonl")));
    CHECK(read_file(d.file("a.json")) == read_file(d.file("b.json")));
    auto stats = json::parse(read_file(d.file("a.json")));
    CHECK(stats["accepted"] == 4);
    CHECK(stats["requests_used"] == 0);
}

TEST_CASE("synthesize over a replay gateway") {
    TempDir d;
    write_file(d.file("seeds.jsonl"), seeds_jsonl());
    std::string transcripts;
    for (int i = 0; i < 4; ++i) {
        json j{{"key", "response-diversification:seed-" + std::to_string(i) + ":teacher"},
               {"response", "<response>accept</response>\nSolution2: the answer is " +
                                std::to_string(2 * i) + "."}};
        transcripts += j.dump() + "\n";
    }
    write_file(d.file("transcripts.jsonl"), transcripts);
    REQUIRE(run("synthesize --method response-diversification --seeds " + d.file("seeds.jsonl") +
                " --gateway replay:" + d.file("transcripts.jsonl") + " --out " +
                d.file("syn.jsonl") + " --stats " + d.file("stats.json")) == 0);
    auto stats = json::parse(read_file(d.file("stats.json")));
    CHECK(stats["accepted"] == 4);
    CHECK(stats["produced_records"] == 4);

    // gateway-requiring method without a gateway is a usage error
    CHECK(run("synthesize --method query-expansion --seeds " + d.file("seeds.jsonl") + " --out " +
              d.file("x.jsonl") + " --stats " + d.file("x.json")) == 2);
    // unreadable replay transcript is a runtime failure
    CHECK(run("synthesize --method query-expansion --seeds " + d.file("seeds.jsonl") +
              " --gateway replay:" + d.file("absent.jsonl") + " --out " + d.file("x.jsonl") +
              " --stats " + d.file("x.json")) == 1);
}

TEST_CASE("evaluate then report computes the printed average") {
    TempDir d;
    std::string items;
    items += json{{"dataset", "GSM8K"}, {"question", "2+2?"}, {"reference_answer", "4"}}.dump() + "\n";
    items += json{{"dataset", "GSM8K"}, {"question", "3+3?"}, {"reference_answer", "6"}}.dump() + "\n";
    write_file(d.file("items.jsonl"), items);
    std::string transcripts;
    transcripts += json{{"key", "eval:GSM8K:0:zero"}, {"response", "the answer is 4"}}.dump() + "\n";
    transcripts += json{{"key", "eval:GSM8K:1:zero"}, {"response", "the answer is 7"}}.dump() + "\n";
    write_file(d.file("model.jsonl"), transcripts);

    REQUIRE(run("evaluate --items " + d.file("items.jsonl") + " --mode zero --gateway replay:" +
                d.file("model.jsonl") + " --out " + d.file("verdicts.jsonl")) == 0);
    std::string verdicts = read_file(d.file("verdicts.jsonl"));
    CHECK(verdicts.find("\"correct\"") != std::string::npos);
    CHECK(verdicts.find("\"incorrect\"") != std::string::npos);

    std::string cmd = std::string(CLI_PATH) + " report --verdicts " + d.file("verdicts.jsonl") +
                      " --out " + d.file("report.json") + " > " + d.file("stdout.txt") +
                      " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(read_file(d.file("stdout.txt")).find("Average: 50.00") != std::string::npos);
    auto report = json::parse(read_file(d.file("report.json")));
    CHECK(report["average"] == "50.00");
}

TEST_CASE("report from structured scores with a baseline diff") {
    TempDir d;
    write_file(d.file("base.json"),
               json{{"GSM8K", 28.20}, {"MATH", 9.48}, {"GAOKAO", 8.09}, {"ZHONGKAO", 30.68}}.dump());
    REQUIRE(run("report --scores " + d.file("base.json") + " --out " + d.file("base-report.json")) == 0);

    write_file(d.file("test.json"),
               json{{"GSM8K", 22.67}, {"MATH", 16.36}, {"GAOKAO", 10.21}, {"ZHONGKAO", 52.28}}.dump());
    REQUIRE(run("report --scores " + d.file("test.json") + " --baseline " +
                d.file("base-report.json") + " --out " + d.file("report.json")) == 0);
    auto report = json::parse(read_file(d.file("report.json")));
    CHECK(report["delta_vs_baseline"]["MATH"] == "+6.88");
    CHECK(report["delta_vs_baseline"]["average"] == "+6.27");

    // exactly one of --verdicts / --scores
    CHECK(run("report --out " + d.file("r.json")) == 2);
    // malformed verdict line is a runtime failure
    write_file(d.file("bad.jsonl"), "this is not json\n");
    CHECK(run("report --verdicts " + d.file("bad.jsonl") + " --out " + d.file("r.json")) == 1);
}

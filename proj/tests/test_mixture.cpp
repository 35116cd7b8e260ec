#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mathcorpus/mixture.hpp"

using namespace mathcorpus;

namespace {

MixtureSpec test2_spec() {
    MixtureSpec spec;
    spec.general_budget = 48.3e9;
    spec.math_corpus_budget = 7.5e9;
    spec.problem_budget = 7.2e9;
    spec.general_ratio = 4;
    spec.math_ratio = 6;
    spec.corpus_ratio = 3;
    spec.problem_ratio = 7;
    spec.steps = 25000;
    spec.batch_size = 1024;
    spec.context_length = 4096;
    return spec;
}

std::vector<Document> make_corpus(const std::string& prefix, std::size_t n, std::size_t tokens_each,
                                  Source src) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        Document d;
        d.id = prefix + std::to_string(i);
        d.source = src;
        d.token_count = tokens_each;
        docs.push_back(d);
    }
    return docs;
}

} // namespace

TEST_CASE("25k-step plan consumes the 7.5B corpus about 2.5 times") {
    auto plan = plan_mixture(test2_spec());
    // independently derived: 25000 * 1024 * 4096 = 104.8576e9
    CHECK(plan.total_tokens == Catch::Approx(104.8576e9));
    // math-corpus target: total * 0.6 * 0.3 = 18.874368e9
    CHECK(plan.target_tokens.at("math-corpus") == Catch::Approx(18.874368e9));
    CHECK(plan.epochs.at("math-corpus") == Catch::Approx(18.874368e9 / 7.5e9).epsilon(1e-9));
    CHECK(plan.epochs.at("math-corpus") > 2.0);
    CHECK(plan.epochs.at("math-corpus") < 3.0);
    // consumed within the first 10k steps
    CHECK(plan.steps_to_consume.at("math-corpus") <= 10000);
    // ceil(7.5e9 / (1024 * 4096 * 0.18)) = ceil(9934.107...) = 9935
    CHECK(plan.steps_to_consume.at("math-corpus") == 9935);
}

TEST_CASE("10k-step plan covers the corpus exactly once") {
    auto spec = test2_spec();
    spec.steps = 10000;
    auto plan = plan_mixture(spec);
    CHECK(plan.target_tokens.at("math-corpus") == Catch::Approx(7.5497472e9));
    CHECK(plan.target_tokens.at("math-corpus") >= 7.5e9);
}

TEST_CASE("targets conserve the total token count") {
    auto plan = plan_mixture(test2_spec());
    double sum = 0;
    for (auto& [name, t] : plan.target_tokens) sum += t;
    double batch_tokens = 1024.0 * 4096.0;
    CHECK(std::abs(sum - plan.total_tokens) <= batch_tokens);
}

TEST_CASE("zero-share sources draw nothing") {
    auto spec = test2_spec();
    spec.general_ratio = 10;
    spec.math_ratio = 0;
    auto plan = plan_mixture(spec);
    CHECK(plan.target_tokens.count("math-corpus") == 0);
    CHECK(plan.target_tokens.count("problem-solving") == 0);
    CHECK(plan.target_tokens.at("general") == Catch::Approx(plan.total_tokens));
}

TEST_CASE("positive share with zero budget is an error") {
    auto spec = test2_spec();
    spec.general_budget = 0;
    CHECK_THROWS(plan_mixture(spec));
}

TEST_CASE("invalid geometry is rejected") {
    auto spec = test2_spec();
    spec.steps = 0;
    CHECK_THROWS(plan_mixture(spec));
    spec = test2_spec();
    spec.validation_fraction = 1.5;
    CHECK_THROWS(plan_mixture(spec));
}

TEST_CASE("excess epochs produce a warning") {
    auto spec = test2_spec();
    spec.math_corpus_budget = 1e9; // would need ~19 epochs
    auto plan = plan_mixture(spec);
    CHECK_FALSE(plan.warnings.empty());
}

TEST_CASE("single-source schedule is a seeded permutation repeated per epoch") {
    MixtureSpec spec;
    spec.general_budget = 1000;
    spec.general_ratio = 1;
    spec.math_ratio = 0;
    spec.steps = 4;
    spec.batch_size = 1;
    spec.context_length = 50;
    spec.validation_fraction = 0.05;
    spec.seed = 3;
    auto plan = plan_mixture(spec);
    std::map<Source, std::vector<Document>> corpora{
        {Source::general, make_corpus("g", 10, 10, Source::general)}};
    auto m = realize_schedule(plan, spec, corpora);
    // 200 tokens over 10-token docs (minus holdout) -> 20 draws across 4 steps
    REQUIRE_FALSE(m.entries.empty());
    // Find the first full pass and check the second pass reuses no id before
    // the epoch boundary (sampling without replacement).
    std::size_t train_size = 10 - m.validation_holdout.at("general").size();
    std::set<std::string> first_pass;
    for (std::size_t i = 0; i < std::min(train_size, m.entries.size()); ++i) {
        CHECK(first_pass.insert(m.entries[i].doc_id).second); // no repeats within an epoch
    }
}

TEST_CASE("identical seeds give identical manifests") {
    auto spec = test2_spec();
    spec.steps = 20;
    spec.batch_size = 2;
    spec.context_length = 64;
    spec.general_budget = 1e5;
    spec.math_corpus_budget = 1e5;
    spec.problem_budget = 1e5;
    spec.seed = 77;
    auto plan = plan_mixture(spec);
    std::map<Source, std::vector<Document>> corpora{
        {Source::general, make_corpus("g", 50, 13, Source::general)},
        {Source::math_corpus, make_corpus("m", 50, 13, Source::math_corpus)},
        {Source::problem_solving, make_corpus("p", 50, 13, Source::problem_solving)}};
    auto m1 = realize_schedule(plan, spec, corpora);
    auto m2 = realize_schedule(plan, spec, corpora);
    REQUIRE(m1.entries.size() == m2.entries.size());
    for (std::size_t i = 0; i < m1.entries.size(); ++i) {
        CHECK(m1.entries[i].doc_id == m2.entries[i].doc_id);
        CHECK(m1.entries[i].step == m2.entries[i].step);
    }
    CHECK(m1.validation_holdout == m2.validation_holdout);

    spec.seed = 78;
    auto m3 = realize_schedule(plan, spec, corpora);
    bool any_diff = m3.entries.size() != m1.entries.size();
    for (std::size_t i = 0; !any_diff && i < m1.entries.size(); ++i) {
        any_diff = m1.entries[i].doc_id != m3.entries[i].doc_id;
    }
    CHECK(any_diff);
}

TEST_CASE("two equal-ratio sources stay within 0.5% of 1:1") {
    MixtureSpec spec;
    spec.general_budget = 1e6;
    spec.math_corpus_budget = 1e6;
    spec.general_ratio = 5;
    spec.math_ratio = 5;
    spec.corpus_ratio = 1;
    spec.problem_ratio = 0;
    spec.steps = 500;
    spec.batch_size = 4;
    spec.context_length = 128;
    spec.seed = 11;
    auto plan = plan_mixture(spec);
    std::map<Source, std::vector<Document>> corpora{
        {Source::general, make_corpus("g", 200, 17, Source::general)},
        {Source::math_corpus, make_corpus("m", 200, 23, Source::math_corpus)}};
    auto m = realize_schedule(plan, spec, corpora);
    double g = m.realized_tokens.at("general");
    double mt = m.realized_tokens.at("math-corpus");
    CHECK(std::abs(g / (g + mt) - 0.5) < 0.005);
}

TEST_CASE("validation holdout is close to the configured fraction") {
    MixtureSpec spec;
    spec.general_budget = 1e5;
    spec.general_ratio = 1;
    spec.math_ratio = 0;
    spec.steps = 10;
    spec.batch_size = 1;
    spec.context_length = 100;
    spec.validation_fraction = 0.05;
    spec.seed = 5;
    auto plan = plan_mixture(spec);
    auto corpus = make_corpus("g", 1000, 10, Source::general);
    std::map<Source, std::vector<Document>> corpora{{Source::general, corpus}};
    auto m = realize_schedule(plan, spec, corpora);
    double held = static_cast<double>(m.validation_holdout.at("general").size()) * 10.0;
    CHECK(held >= 0.05 * 10000.0);
    CHECK(held <= 0.06 * 10000.0);
}

TEST_CASE("active source with an empty corpus is an error") {
    auto spec = test2_spec();
    auto plan = plan_mixture(spec);
    std::map<Source, std::vector<Document>> corpora{
        {Source::general, make_corpus("g", 5, 10, Source::general)}};
    CHECK_THROWS(realize_schedule(plan, spec, corpora));
}

TEST_CASE("sample_fraction identity and bounds") {
    auto docs = make_corpus("d", 100, 10, Source::problem_solving);
    CHECK(sample_fraction(docs, 1.0, 1).size() == 100);
    CHECK_THROWS(sample_fraction(docs, 0.0, 1));
    CHECK_THROWS(sample_fraction(docs, 1.5, 1));
}

TEST_CASE("one percent of a 7.2B-token corpus samples about 0.072B tokens") {
    // stand-in corpus: 7200 docs of 1e6 tokens each = 7.2e9 tokens
    auto docs = make_corpus("p", 7200, 1000000, Source::problem_solving);
    auto sampled = sample_fraction(docs, 0.01, 42);
    double total = 0;
    for (auto& d : sampled) total += static_cast<double>(d.token_count);
    CHECK(std::abs(total - 0.072e9) <= 0.01 * 0.072e9);
}

TEST_CASE("fraction samples land within one percent across sizes") {
    std::mt19937_64 rng(21);
    std::vector<Document> docs;
    double total = 0;
    for (int i = 0; i < 2000; ++i) {
        Document d;
        d.id = "v" + std::to_string(i);
        d.token_count = 50 + rng() % 500;
        total += static_cast<double>(d.token_count);
        docs.push_back(d);
    }
    for (double f : {0.10, 0.20, 0.50}) {
        auto s = sample_fraction(docs, f, 9);
        double got = 0;
        for (auto& d : s) got += static_cast<double>(d.token_count);
        CHECK(std::abs(got - f * total) <= 0.01 * f * total);
    }
    // determinism
    auto a = sample_fraction(docs, 0.2, 9);
    auto b = sample_fraction(docs, 0.2, 9);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
}

// mathcorpus: one binary, one subcommand per pipeline stage.
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mathcorpus/config.hpp"
#include "mathcorpus/corpus.hpp"
#include "mathcorpus/difficulty.hpp"
#include "mathcorpus/evalharness.hpp"
#include "mathcorpus/gateway_http.hpp"
#include "mathcorpus/mixture.hpp"
#include "mathcorpus/overlap.hpp"
#include "mathcorpus/synthesis.hpp"
#include "mathcorpus/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mathcorpus;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t jobs = 1;
    bool jobs_set = false;
    bool dry_run = false;

    PipelineConfig config;

    void finish() {
        if (!config_path.empty()) {
            config = PipelineConfig::load(config_path);
            config.validate();
        }
        if (!seed_set && config.has("seed")) seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
        if (!jobs_set && config.has("jobs")) jobs = static_cast<std::size_t>(config.get_int("jobs", 1));
        if (jobs == 0) throw UsageError("--jobs must be positive");
    }

    Tokenizer tokenizer() const { return Tokenizer::from_spec(config.get("tokenizer", "whitespace")); }
};

void require_input(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("input path does not exist: " + path);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

OverlapParams overlap_params(const GlobalOpts& g) {
    OverlapParams p;
    p.shingle_width = static_cast<std::size_t>(g.config.get_int("shingle_bytes", 16));
    p.permutation_count = static_cast<std::size_t>(g.config.get_int("permutations", 128));
    p.band_count = static_cast<std::size_t>(g.config.get_int("bands", 16));
    p.rows_per_band = static_cast<std::size_t>(g.config.get_int("rows_per_band", 8));
    p.dedup_threshold_bytes = static_cast<std::size_t>(g.config.get_int("dedup_threshold_bytes", 2048));
    p.decontam_threshold_bytes = static_cast<std::size_t>(g.config.get_int("decontam_threshold_bytes", 100));
    p.seed = g.seed;
    return p;
}

// ---- subcommands ----

int cmd_ingest(const GlobalOpts& g, const std::string& in, const std::string& source,
               const std::string& out, const std::string& manifest_path) {
    require_input(in);
    auto tok = g.tokenizer();
    Source src = source_from_string(source);
    if (g.dry_run) return 0;
    auto result = ingest(in, src, tok);
    for (auto& e : result.errors) {
        std::cerr << "warning: " << in << ":" << e.line_number << ": " << e.message << "\n";
    }
    write_documents(out, result.documents);
    if (!manifest_path.empty()) write_json(manifest_path, result.manifest.to_json());
    std::cerr << "ingested " << result.documents.size() << " documents, "
              << result.errors.size() << " malformed lines skipped\n";
    return 0;
}

int cmd_dedup(const GlobalOpts& g, const std::string& in, const std::string& out,
              const std::string& report_path, long long threshold, long long perms) {
    require_input(in);
    auto params = overlap_params(g);
    if (threshold > 0) params.dedup_threshold_bytes = static_cast<std::size_t>(threshold);
    if (perms > 0) {
        params.permutation_count = static_cast<std::size_t>(perms);
        params.rows_per_band = params.permutation_count / params.band_count;
    }
    params.validate();
    if (g.dry_run) return 0;
    auto docs = read_documents(in, g.tokenizer());
    auto [survivors, report] = deduplicate(docs, params, g.jobs);
    write_documents(out, survivors);
    write_json(report_path, report.to_json());
    std::cerr << "dedup: " << report.input_documents << " in, " << report.surviving_documents
              << " out, " << report.removed.size() << " removed\n";
    return 0;
}

int cmd_decontaminate(const GlobalOpts& g, const std::string& in,
                      const std::vector<std::string>& eval_paths, const std::string& out,
                      const std::string& report_path, long long threshold) {
    require_input(in);
    for (auto& p : eval_paths) require_input(p);
    auto params = overlap_params(g);
    if (threshold > 0) params.decontam_threshold_bytes = static_cast<std::size_t>(threshold);
    params.validate();
    if (g.dry_run) return 0;
    auto docs = read_documents(in, g.tokenizer());
    std::vector<EvalItem> items;
    for (auto& p : eval_paths) {
        auto more = read_eval_items(p);
        items.insert(items.end(), more.begin(), more.end());
    }
    auto [survivors, report] = decontaminate(docs, items, params, g.jobs);
    if (!report.warning.empty()) std::cerr << "warning: " << report.warning << "\n";
    write_documents(out, survivors);
    write_json(report_path, report.to_json());
    std::cerr << "decontaminate: " << report.input_documents << " in, "
              << report.surviving_documents << " out\n";
    return 0;
}

MixtureSpec mixture_spec_from_config(const PipelineConfig& cfg, std::uint64_t seed) {
    MixtureSpec spec;
    spec.general_budget = cfg.get_double("general_budget", 0);
    spec.math_corpus_budget = cfg.get_double("math_corpus_budget", 0);
    spec.problem_budget = cfg.get_double("problem_budget", 0);
    spec.synthetic_budget = cfg.get_double("synthetic_budget", 0);
    spec.general_ratio = cfg.get_double("general_ratio", 4);
    spec.math_ratio = cfg.get_double("math_ratio", 6);
    spec.corpus_ratio = cfg.get_double("corpus_ratio", 3);
    spec.problem_ratio = cfg.get_double("problem_ratio", 7);
    spec.steps = static_cast<std::uint64_t>(cfg.get_int("steps", 0));
    spec.batch_size = static_cast<std::uint64_t>(cfg.get_int("batch_size", 0));
    spec.context_length = static_cast<std::uint64_t>(cfg.get_int("context_length", 0));
    spec.validation_fraction = cfg.get_double("validation_fraction", 0.05);
    spec.max_epochs = cfg.get_double("max_epochs", spec.max_epochs);
    spec.seed = cfg.has("seed") ? static_cast<std::uint64_t>(cfg.get_int("seed", 0)) : seed;
    return spec;
}

int cmd_plan_mix(const GlobalOpts& g, const std::string& spec_path, const std::string& out) {
    require_input(spec_path);
    auto cfg = PipelineConfig::load(spec_path);
    cfg.validate();
    auto spec = mixture_spec_from_config(cfg, g.seed);
    spec.validate();
    if (g.dry_run) return 0;
    auto plan = plan_mixture(spec);
    for (auto& w : plan.warnings) std::cerr << "warning: " << w << "\n";
    write_json(out, plan.to_json());
    for (auto& [name, e] : plan.epochs) {
        std::cerr << "plan-mix: " << name << " epochs " << e << ", consumed by step "
                  << plan.steps_to_consume.at(name) << "\n";
    }
    return 0;
}

DifficultyRule difficulty_rule(const GlobalOpts& g) {
    DifficultyRule rule;
    // Boundaries are fixed by design; only the counting strategy label varies.
    (void)g;
    rule.validate();
    return rule;
}

int cmd_bucket(const GlobalOpts& g, const std::string& in, const std::string& out_prefix,
               const std::string& report_path) {
    require_input(in);
    auto rule = difficulty_rule(g);
    if (g.dry_run) return 0;
    auto records = read_problems(in);
    auto [buckets, report] = bucket_corpus(records, rule, g.tokenizer());
    for (auto& [name, recs] : buckets) {
        write_problems(out_prefix + name + ".jsonl", recs);
    }
    write_json(report_path, report.to_json());
    return 0;
}

int cmd_split(const GlobalOpts& g, const std::string& in, const std::string& tags_csv,
              const std::string& out_prefix, const std::string& report_path) {
    require_input(in);
    std::vector<TagPartition> partitions;
    std::string cur;
    for (char c : tags_csv + ",") {
        if (c == ',') {
            if (!cur.empty()) partitions.push_back({cur, {cur}});
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (partitions.empty()) throw UsageError("--tags must list at least one tag");
    if (g.dry_run) return 0;
    auto records = read_problems(in);
    auto [parts, report] = split_by_tags(records, partitions, g.tokenizer());
    for (auto& [name, recs] : parts) {
        write_problems(out_prefix + name + ".jsonl", recs);
    }
    if (!report_path.empty()) write_json(report_path, report.to_json());
    return 0;
}

int cmd_synthesize(const GlobalOpts& g, const std::string& method_name, const std::string& seeds_path,
                   const std::string& out, const std::string& stats_path, long long max_requests,
                   long long max_tokens, const std::string& gateway_spec, const std::string& raw_path) {
    require_input(seeds_path);
    auto method = synthesis_method_from_string(method_name);
    std::string gw = gateway_spec.empty() ? g.config.get("gateway") : gateway_spec;
    if (method != SynthesisMethod::retrospective_enhancement && gw.empty()) {
        throw UsageError("method '" + method_name + "' needs --gateway (or a 'gateway' config key)");
    }
    if (g.dry_run) return 0;

    auto seeds = read_problems(seeds_path);
    auto tok = g.tokenizer();
    SynthesisBudget budget;
    budget.max_requests = max_requests > 0 ? static_cast<std::size_t>(max_requests) : 0;
    budget.max_tokens = max_tokens > 0 ? static_cast<std::size_t>(max_tokens) : 0;
    SynthesisConfig cfg;
    cfg.teacher_model = g.config.get("teacher_model", "teacher");
    cfg.student_model = g.config.get("student_model", "student");
    cfg.jobs = g.jobs;
    cfg.seed = g.seed;

    std::shared_ptr<Gateway> gateway;
    if (method != SynthesisMethod::retrospective_enhancement) gateway = make_gateway(gw);

    // Results stream to disk as they are finalized so an interrupted run
    // keeps its partial progress.
    std::ofstream out_stream(out, std::ios::binary);
    if (!out_stream) throw std::runtime_error("cannot open output file: " + out);
    std::ofstream raw_stream;
    if (!raw_path.empty()) {
        raw_stream.open(raw_path, std::ios::binary);
        if (!raw_stream) throw std::runtime_error("cannot open transcript file: " + raw_path);
    }
    auto on_result = [&](const SynthesisResult& r) {
        for (auto d : r.produced) {
            d.token_count = tok.count(d.text);
            out_stream << document_to_json(d).dump() << "\n";
        }
        out_stream.flush();
        if (raw_stream.is_open()) {
            raw_stream << json{{"method", to_string(r.method)},
                               {"seed", r.seed_id},
                               {"accepted", r.accepted},
                               {"reason", r.rejection_reason},
                               {"raw", r.raw}}
                              .dump()
                       << "\n";
            raw_stream.flush();
        }
    };

    auto [results, stats] = synthesize(method, seeds, gateway, budget, cfg, tok, on_result);
    write_json(stats_path, stats.to_json());
    std::cerr << "synthesize: " << stats.accepted << " accepted, " << stats.rejected << " rejected, "
              << stats.failed << " failed, " << stats.produced_records << " records\n";
    return 0;
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::correct: return "correct";
        case Outcome::incorrect: return "incorrect";
        case Outcome::inconclusive_failed: return "inconclusive-failed";
    }
    return "incorrect";
}

Outcome outcome_from_name(const std::string& s) {
    if (s == "correct") return Outcome::correct;
    if (s == "incorrect") return Outcome::incorrect;
    if (s == "inconclusive-failed") return Outcome::inconclusive_failed;
    throw std::runtime_error("unknown verdict outcome: " + s);
}

int cmd_evaluate(const GlobalOpts& g, const std::string& dataset_name, const std::string& items_path,
                 const std::string& mode, const std::string& gateway_spec, const std::string& out,
                 const std::string& comparator_spec, const std::string& ex_gsm8k_path,
                 const std::string& ex_math_path) {
    require_input(items_path);
    if (mode != "zero" && mode != "few" && mode != "both") {
        throw UsageError("--mode must be zero, few, or both");
    }
    std::string gw = gateway_spec.empty() ? g.config.get("gateway") : gateway_spec;
    if (gw.empty()) throw UsageError("evaluate needs --gateway (or a 'gateway' config key)");

    EvalPromptConfig prompt_cfg;
    prompt_cfg.zero_shot_template = g.config.get("zero_shot_template", prompt_cfg.zero_shot_template);
    std::string exg = ex_gsm8k_path.empty() ? g.config.get("exemplars_gsm8k") : ex_gsm8k_path;
    std::string exm = ex_math_path.empty() ? g.config.get("exemplars_math") : ex_math_path;
    if (mode != "zero") {
        if (exg.empty() || exm.empty()) {
            throw UsageError("few-shot evaluation needs --exemplars-gsm8k and --exemplars-math");
        }
        require_input(exg);
        require_input(exm);
    }
    if (g.dry_run) return 0;

    auto all_items = read_eval_items(items_path);
    std::vector<EvalItem> items;
    if (dataset_name.empty()) {
        items = std::move(all_items);
    } else {
        EvalDataset want = eval_dataset_from_string(dataset_name);
        for (auto& it : all_items) {
            if (it.dataset == want) items.push_back(it);
        }
    }
    if (items.empty()) throw std::runtime_error("no evaluation items selected");
    if (mode != "zero") {
        prompt_cfg.exemplars[EvalDataset::GSM8K] = read_exemplars(exg);
        prompt_cfg.exemplars[EvalDataset::MATH] = read_exemplars(exm);
    }

    auto model = make_gateway(gw);
    std::shared_ptr<Gateway> comparator;
    std::string cmp = comparator_spec.empty() ? g.config.get("comparator_gateway") : comparator_spec;
    if (!cmp.empty()) comparator = make_gateway(cmp);

    std::vector<ItemVerdict> verdicts;
    for (const char* m : {"zero", "few"}) {
        if (mode != "both" && mode != m) continue;
        prompt_cfg.mode = std::string(m) == "zero" ? EvalMode::zero_shot : EvalMode::few_shot;
        auto run = evaluate_items(items, prompt_cfg, *model, comparator.get(),
                                  g.config.get("student_model", "model"));
        verdicts.insert(verdicts.end(), run.verdicts.begin(), run.verdicts.end());
        if (run.inconclusive_failed > 0) {
            std::cerr << "warning: " << run.inconclusive_failed
                      << " items inconclusive after comparator failure (" << m << "-shot)\n";
        }
    }

    std::ofstream vout(out, std::ios::binary);
    if (!vout) throw std::runtime_error("cannot open output file: " + out);
    for (auto& v : verdicts) {
        vout << json{{"dataset", to_string(v.dataset)},
                     {"mode", v.mode == EvalMode::zero_shot ? "zero" : "few"},
                     {"outcome", outcome_name(v.verdict.outcome)},
                     {"method", v.verdict.method == VerdictMethod::rule_based ? "rule-based"
                                                                              : "comparator-model"}}
                    .dump()
             << "\n";
    }
    return 0;
}

int cmd_report(const GlobalOpts& g, const std::vector<std::string>& verdict_paths,
               const std::string& scores_path, const std::string& baseline_path,
               const std::string& out) {
    (void)g;
    if (verdict_paths.empty() == scores_path.empty()) {
        throw UsageError("report needs exactly one of --verdicts or --scores");
    }
    for (auto& p : verdict_paths) require_input(p);
    if (!scores_path.empty()) require_input(scores_path);
    if (!baseline_path.empty()) require_input(baseline_path);

    ScoreReport report;
    if (!scores_path.empty()) {
        // {"GSM8K": {"zero": x, "few": y}, ...} or {"GSM8K": chosen, ...}
        std::ifstream in(scores_path);
        json j = json::parse(in);
        for (auto& [name, v] : j.items()) {
            DatasetScore s;
            if (v.is_object()) {
                if (v.contains("zero")) s.zero = v["zero"].get<double>();
                if (v.contains("few")) s.few = v["few"].get<double>();
            } else {
                s.zero = v.get<double>();
            }
            report.scores[eval_dataset_from_string(name)] = s;
        }
    } else {
        std::vector<ItemVerdict> verdicts;
        for (auto& p : verdict_paths) {
            std::ifstream in(p, std::ios::binary);
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty()) continue;
                try {
                    json j = json::parse(line);
                    ItemVerdict v;
                    v.dataset = eval_dataset_from_string(j.at("dataset").get<std::string>());
                    v.mode = j.at("mode").get<std::string>() == "zero" ? EvalMode::zero_shot
                                                                       : EvalMode::few_shot;
                    v.verdict.outcome = outcome_from_name(j.at("outcome").get<std::string>());
                    verdicts.push_back(v);
                } catch (const std::exception& e) {
                    throw std::runtime_error(p + ":" + std::to_string(lineno) + ": " + e.what());
                }
            }
        }
        report = score(verdicts);
    }
    for (auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    json out_json = report.to_json();
    if (!baseline_path.empty()) {
        std::ifstream bin(baseline_path);
        auto base = ScoreReport::from_json(json::parse(bin));
        out_json["delta_vs_baseline"] = delta_report(base, report).to_json();
    }
    if (g.dry_run) return 0;
    write_json(out, out_json);
    std::cout << "Average: " << format_pct(report.average()) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Corpus engineering toolkit: dedup, decontamination, mixture planning, "
                 "difficulty splits, data synthesis, and evaluation scoring."};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "flat key=value configuration file");
    app.add_option("--seed", g.seed, "global random seed")->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--jobs", g.jobs, "worker thread count")->each([&](const std::string&) { g.jobs_set = true; });
    app.add_flag("--dry-run", g.dry_run, "validate inputs and config, write nothing");

    std::string in, out, report_path, manifest_path, source, spec_path, out_prefix, tags_csv;
    std::string method, seeds_path, stats_path, gateway_spec, raw_path;
    std::string dataset_name, items_path, mode = "both", comparator_spec, exg, exm;
    std::string scores_path, baseline_path;
    std::vector<std::string> eval_paths, verdict_paths;
    long long threshold = 0, perms = 0, max_requests = 0, max_tokens = 0;

    auto* c_ingest = app.add_subcommand("ingest", "read raw records into the corpus format");
    c_ingest->add_option("--in", in)->required();
    c_ingest->add_option("--source", source, "general|math-corpus|problem-solving|synthetic")->required();
    c_ingest->add_option("--out", out)->required();
    c_ingest->add_option("--manifest", manifest_path);

    auto* c_dedup = app.add_subcommand("dedup", "remove near-duplicate documents");
    c_dedup->add_option("--in", in)->required();
    c_dedup->add_option("--out", out)->required();
    c_dedup->add_option("--report", report_path)->required();
    c_dedup->add_option("--threshold-bytes", threshold);
    c_dedup->add_option("--perms", perms);

    auto* c_decon = app.add_subcommand("decontaminate", "remove documents overlapping eval items");
    c_decon->add_option("--in", in)->required();
    c_decon->add_option("--eval", eval_paths)->required();
    c_decon->add_option("--out", out)->required();
    c_decon->add_option("--report", report_path)->required();
    c_decon->add_option("--threshold-bytes", threshold);

    auto* c_plan = app.add_subcommand("plan-mix", "token-budget mixture planning");
    c_plan->add_option("--spec", spec_path)->required();
    c_plan->add_option("--out", out)->required();

    auto* c_bucket = app.add_subcommand("bucket", "difficulty bucketing by step count");
    c_bucket->add_option("--in", in)->required();
    c_bucket->add_option("--out-prefix", out_prefix)->required();
    c_bucket->add_option("--report", report_path)->required();

    auto* c_split = app.add_subcommand("split", "partition by knowledge tags");
    c_split->add_option("--in", in)->required();
    c_split->add_option("--tags", tags_csv)->required();
    c_split->add_option("--out-prefix", out_prefix)->required();
    c_split->add_option("--report", report_path);

    auto* c_synth = app.add_subcommand("synthesize", "run one synthesis method over a seed set");
    c_synth->add_option("--method", method)->required();
    c_synth->add_option("--seeds", seeds_path)->required();
    c_synth->add_option("--out", out)->required();
    c_synth->add_option("--stats", stats_path)->required();
    c_synth->add_option("--max-requests", max_requests);
    c_synth->add_option("--max-tokens", max_tokens);
    c_synth->add_option("--gateway", gateway_spec, "endpoint URL or replay:<transcript path>");
    c_synth->add_option("--raw", raw_path, "persist raw transcripts here");

    auto* c_eval = app.add_subcommand("evaluate", "run eval items through a model gateway");
    c_eval->add_option("--dataset", dataset_name, "restrict to one dataset");
    c_eval->add_option("--items", items_path)->required();
    c_eval->add_option("--mode", mode, "zero|few|both");
    c_eval->add_option("--gateway", gateway_spec);
    c_eval->add_option("--out", out)->required();
    c_eval->add_option("--comparator", comparator_spec, "escalation gateway for unparseable answers");
    c_eval->add_option("--exemplars-gsm8k", exg);
    c_eval->add_option("--exemplars-math", exm);

    auto* c_report = app.add_subcommand("report", "score verdicts into the table format");
    c_report->add_option("--verdicts", verdict_paths);
    c_report->add_option("--scores", scores_path, "per-dataset accuracies as a structured file");
    c_report->add_option("--baseline", baseline_path, "prior report to diff against");
    c_report->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        g.finish();
        if (c_ingest->parsed()) return cmd_ingest(g, in, source, out, manifest_path);
        if (c_dedup->parsed()) return cmd_dedup(g, in, out, report_path, threshold, perms);
        if (c_decon->parsed()) return cmd_decontaminate(g, in, eval_paths, out, report_path, threshold);
        if (c_plan->parsed()) return cmd_plan_mix(g, spec_path, out);
        if (c_bucket->parsed()) return cmd_bucket(g, in, out_prefix, report_path);
        if (c_split->parsed()) return cmd_split(g, in, tags_csv, out_prefix, report_path);
        if (c_synth->parsed()) {
            return cmd_synthesize(g, method, seeds_path, out, stats_path, max_requests, max_tokens,
                                  gateway_spec, raw_path);
        }
        if (c_eval->parsed()) {
            return cmd_evaluate(g, dataset_name, items_path, mode, gateway_spec, out, comparator_spec,
                                exg, exm);
        }
        if (c_report->parsed()) return cmd_report(g, verdict_paths, scores_path, baseline_path, out);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

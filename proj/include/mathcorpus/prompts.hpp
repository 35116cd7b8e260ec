#pragma once

#include <stdexcept>
#include <string>

#include "mathcorpus/corpus.hpp"
#include "mathcorpus/gateway.hpp"

namespace mathcorpus {

enum class SynthesisMethod {
    response_diversification,
    query_expansion,
    retrospective_enhancement,
    tutorship_amplification,
};

inline std::string to_string(SynthesisMethod m) {
    switch (m) {
        case SynthesisMethod::response_diversification: return "response-diversification";
        case SynthesisMethod::query_expansion: return "query-expansion";
        case SynthesisMethod::retrospective_enhancement: return "retrospective-enhancement";
        case SynthesisMethod::tutorship_amplification: return "tutorship-amplification";
    }
    return "response-diversification";
}

inline SynthesisMethod synthesis_method_from_string(const std::string& s) {
    if (s == "response-diversification") return SynthesisMethod::response_diversification;
    if (s == "query-expansion") return SynthesisMethod::query_expansion;
    if (s == "retrospective-enhancement") return SynthesisMethod::retrospective_enhancement;
    if (s == "tutorship-amplification") return SynthesisMethod::tutorship_amplification;
    throw std::runtime_error("unknown synthesis method: " + s);
}

enum class PromptRole { student, teacher };

namespace prompts {

inline const char* response_diversification() {
    return "You are a math teacher, please complete the following task using English.\n"
           "\n"
           "Your task is: for the math problem below, in addition to the given solution, "
           "provide two more different solutions.\n"
           "\n"
           "If you can provide two different solutions, start with <response>accept</response>, "
           "then present the additional solutions beginning with 'Solution2:' and 'Solution3:' "
           "respectively.\n"
           "\n"
           "If you believe you cannot offer two different solutions or the solutions provided "
           "might be inaccurate, start with <response>refuse</response>.\n"
           "\n"
           "Please ensure the solutions are correct and distinct. If you doubt the correctness "
           "of your solutions, or if it seems the problem does not allow for multiple solutions, "
           "directly indicate refusal by starting with <response>refuse</response>, and then "
           "explain the reason.";
}

inline const char* query_expansion() {
    return "Your goal is to create different math word questions and their solutions from a "
           "given question and its solution. You should follow these steps:\n"
           "1. Convert the question into a statement and fill in <statement> FILL IN HERE </statement>.\n"
           "2. Create a new question based on the statement and fill in <question> FILL IN HERE </question>.\n"
           "3. Provide a solution to the new question and fill in <solution> FILL IN HERE </solution>.\n"
           "4. Check the solution and report <check>Accept</check> or <check>Refuse</check>. "
           "And then fill the reason in <reason> FILL IN HERE </reason>.\n"
           "5. Repeat the process for a total of 2 questions and solutions.";
}

inline const char* tutorship_amplification() {
    return "As a mathematics teacher, please check the solution to the following math problem.\n"
           "\n"
           "If the solution is correct, please only reply <check>correct</check>.\n"
           "\n"
           "If the solution is incorrect, please first respond with <check>wrong</check>, then "
           "identify the erroneous steps, correct the errors, and continue to provide the "
           "correct solution.\n"
           "\n"
           "Please note that your response must include <check>correct</check> or "
           "<check>wrong</check> at the beginning of the response.";
}

// The student side of tutorship is not templated in the source material;
// a plain solve instruction stands in and is configurable upstream.
inline const char* tutorship_student() {
    return "Please solve the following math problem step by step and state the final answer.";
}

} // namespace prompts

/// Builds the gateway request for one synthesis call. The emitted text is
/// the method's template verbatim with the seed's question/solution in the
/// designated slots.
inline GatewayRequest build_prompt(SynthesisMethod method, const ProblemRecord& seed,
                                   PromptRole role = PromptRole::teacher,
                                   const std::string& student_answer = "") {
    if (seed.question.empty()) throw std::runtime_error("build_prompt: seed has no question");
    GatewayRequest req;
    req.replay_key = to_string(method) + ":" + seed.id + ":" +
                     (role == PromptRole::student ? "student" : "teacher");
    std::string body;
    switch (method) {
        case SynthesisMethod::response_diversification:
            if (seed.solution.empty()) throw std::runtime_error("build_prompt: seed has no solution");
            body = std::string(prompts::response_diversification()) + "\n\nProblem: " + seed.question +
                   "\nSolution: " + seed.solution;
            break;
        case SynthesisMethod::query_expansion:
            if (seed.solution.empty()) throw std::runtime_error("build_prompt: seed has no solution");
            body = std::string(prompts::query_expansion()) + "\n\nQuestion: " + seed.question +
                   "\nSolution: " + seed.solution;
            break;
        case SynthesisMethod::tutorship_amplification:
            if (role == PromptRole::student) {
                body = std::string(prompts::tutorship_student()) + "\n\nProblem: " + seed.question;
            } else {
                if (student_answer.empty()) {
                    throw std::runtime_error("build_prompt: tutorship teacher role needs a student answer");
                }
                body = std::string(prompts::tutorship_amplification()) + "\n\nProblem: " + seed.question +
                       "\nSolution: " + student_answer;
            }
            break;
        case SynthesisMethod::retrospective_enhancement:
            throw std::runtime_error("retrospective enhancement is a local transformation; no prompt");
    }
    req.messages.push_back({"user", body});
    return req;
}

} // namespace mathcorpus

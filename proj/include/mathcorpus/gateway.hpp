#pragma once

#include <chrono>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace mathcorpus {

struct ChatMessage {
    std::string role; // "system", "user", "assistant"
    std::string content;
};

struct GatewayRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 2048;
    // Stable routing key for replay gateways: "<method>:<seed id>:<role>".
    std::string replay_key;

    void validate() const {
        if (messages.empty()) throw std::runtime_error("gateway request: messages must be non-empty");
    }
};

struct GatewayResponse {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::string finish_reason = "stop";
};

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Abstract chat-completion endpoint.
class Gateway {
public:
    virtual ~Gateway() = default;
    virtual GatewayResponse send(const GatewayRequest& request) = 0;
};

/// Replays canned transcripts from a JSONL file of
/// {"key": "...", "response": "..."} records. Part of the test surface;
/// also usable from the CLI via "replay:<path>".
class ReplayGateway : public Gateway {
public:
    explicit ReplayGateway(const std::string& transcript_path) {
        std::ifstream in(transcript_path);
        if (!in) throw GatewayError("replay gateway: cannot open transcript file: " + transcript_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            transcripts_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
        }
    }

    explicit ReplayGateway(std::map<std::string, std::string> transcripts)
        : transcripts_(std::move(transcripts)) {}

    GatewayResponse send(const GatewayRequest& request) override {
        request.validate();
        std::lock_guard<std::mutex> lock(mu_);
        ++requests_;
        auto it = transcripts_.find(request.replay_key);
        if (it == transcripts_.end()) {
            throw GatewayError("replay gateway: no transcript for key '" + request.replay_key + "'");
        }
        GatewayResponse resp;
        resp.text = it->second;
        for (auto& m : request.messages) resp.prompt_tokens += m.content.size() / 4;
        resp.completion_tokens = resp.text.size() / 4;
        return resp;
    }

    std::size_t request_count() const { return requests_; }

private:
    std::map<std::string, std::string> transcripts_;
    std::size_t requests_ = 0;
    std::mutex mu_;
};

/// Retries a flaky gateway with exponential backoff before giving up.
class RetryingGateway : public Gateway {
public:
    RetryingGateway(std::shared_ptr<Gateway> inner, int max_attempts = 3,
                    std::chrono::milliseconds initial_backoff = std::chrono::milliseconds(50))
        : inner_(std::move(inner)), max_attempts_(max_attempts), backoff_(initial_backoff) {}

    GatewayResponse send(const GatewayRequest& request) override {
        auto delay = backoff_;
        for (int attempt = 1;; ++attempt) {
            try {
                return inner_->send(request);
            } catch (const GatewayError&) {
                if (attempt >= max_attempts_) throw;
                std::this_thread::sleep_for(delay);
                delay *= 2;
            }
        }
    }

private:
    std::shared_ptr<Gateway> inner_;
    int max_attempts_;
    std::chrono::milliseconds backoff_;
};

} // namespace mathcorpus

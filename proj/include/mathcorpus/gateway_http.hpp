#pragma once

#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "mathcorpus/gateway.hpp"

namespace mathcorpus {

/// Chat-completion client for an OpenAI-style HTTP endpoint. Credentials
/// come from the MATHCORPUS_GATEWAY_TOKEN environment variable.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(const std::string& base_url, const std::string& path = "/v1/chat/completions")
        : client_(base_url), path_(path) {
        if (const char* tok = std::getenv("MATHCORPUS_GATEWAY_TOKEN")) {
            token_ = tok;
        }
        client_.set_read_timeout(120, 0);
    }

    GatewayResponse send(const GatewayRequest& request) override {
        request.validate();
        nlohmann::json body;
        body["model"] = request.model;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        body["messages"] = nlohmann::json::array();
        for (auto& m : request.messages) {
            body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        }
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        auto res = client_.Post(path_, headers, body.dump(), "application/json");
        if (!res) throw GatewayError("gateway: transport failure");
        if (res->status != 200) {
            throw GatewayError("gateway: HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        auto j = nlohmann::json::parse(res->body);
        GatewayResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            out.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        if (j.at("choices").at(0).contains("finish_reason")) {
            out.finish_reason = j["choices"][0]["finish_reason"].get<std::string>();
        }
        return out;
    }

private:
    httplib::Client client_;
    std::string path_;
    std::string token_;
};

/// "replay:<path>" -> ReplayGateway, anything else -> HttpGateway.
inline std::shared_ptr<Gateway> make_gateway(const std::string& spec) {
    if (spec.rfind("replay:", 0) == 0) {
        return std::make_shared<ReplayGateway>(spec.substr(7));
    }
    return std::make_shared<HttpGateway>(spec);
}

} // namespace mathcorpus

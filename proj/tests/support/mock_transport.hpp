#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "plm/error.hpp"
#include "plm/judge.hpp"

// Scripted transport: a function of the parsed request body. Counts calls and
// can fail the first N attempts.
class ScriptedTransport : public plm::judge::ChatTransport {
public:
    using Script = std::function<std::string(const nlohmann::json&)>;

    explicit ScriptedTransport(Script s, int fail_first = 0, int delay_ms = 0)
        : script_(std::move(s)), fail_left_(fail_first), delay_ms_(delay_ms)
    {
    }

    std::string complete(const std::string& request_json) override
    {
        ++calls;
        if (delay_ms_ > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
        if (fail_left_.fetch_sub(1) > 0)
            throw plm::TransportError("scripted failure");
        const auto body = nlohmann::json::parse(request_json);
        std::lock_guard lk(mu_);
        last_request = body;
        return script_(body);
    }

    std::atomic<int> calls{0};
    nlohmann::json last_request;

private:
    Script script_;
    std::atomic<int> fail_left_;
    int delay_ms_;
    std::mutex mu_;
};

inline plm::judge::EndpointConfig test_endpoint(int max_in_flight = 4)
{
    plm::judge::EndpointConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.model_name = "mock-judge";
    c.max_in_flight = max_in_flight;
    c.max_retries = 2;
    c.backoff_base_ms = 0;
    return c;
}

// Last user message of a request body.
inline std::string user_text(const nlohmann::json& body)
{
    return body["messages"].back()["content"].get<std::string>();
}

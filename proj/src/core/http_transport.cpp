#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "plm/error.hpp"
#include "plm/judge.hpp"

namespace plm::judge {
namespace {

class HttpChatTransport final : public ChatTransport {
public:
    explicit HttpChatTransport(const EndpointConfig& cfg)
    {
        const auto scheme_end = cfg.base_url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("endpoint base_url must include a scheme: " + cfg.base_url);
        const auto path_start = cfg.base_url.find('/', scheme_end + 3);
        origin_ = cfg.base_url.substr(0, path_start);
        path_ = path_start == std::string::npos ? std::string() : cfg.base_url.substr(path_start);
        while (!path_.empty() && path_.back() == '/')
            path_.pop_back();
        path_ += "/chat/completions";
        if (!cfg.api_key_env.empty())
            if (const char* key = std::getenv(cfg.api_key_env.c_str()))
                bearer_ = key;
        timeout_s_ = cfg.timeout_s;
    }

    std::string complete(const std::string& request_json) override
    {
        httplib::Client cli(origin_);
        const auto sec = static_cast<time_t>(timeout_s_);
        const auto usec = static_cast<time_t>((timeout_s_ - static_cast<double>(sec)) * 1e6);
        cli.set_connection_timeout(sec, usec);
        cli.set_read_timeout(sec, usec);
        cli.set_write_timeout(sec, usec);
        httplib::Headers headers;
        if (!bearer_.empty())
            headers.emplace("Authorization", "Bearer " + bearer_);
        auto res = cli.Post(path_, headers, request_json, "application/json");
        if (!res)
            throw TransportError("POST " + origin_ + path_ + ": " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw TransportError("POST " + origin_ + path_ + ": HTTP " + std::to_string(res->status));
        auto body = nlohmann::json::parse(res->body, nullptr, false);
        if (body.is_discarded())
            throw TransportError("response body is not JSON");
        try {
            return body.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw TransportError("response lacks choices[0].message.content");
        }
    }

private:
    std::string origin_;
    std::string path_;
    std::string bearer_;
    double timeout_s_ = 60;
};

} // namespace

std::shared_ptr<ChatTransport> make_http_transport(const EndpointConfig& cfg)
{
    cfg.validate();
    return std::make_shared<HttpChatTransport>(cfg);
}

} // namespace plm::judge

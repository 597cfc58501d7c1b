#pragma once

// Chat-completions mock endpoint for collector tests. Prompts carry an
// "[item|perturbation]" marker the handler parses to decide the reply.

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace test_support {

class MockEndpoint {
  public:
    using Reply = std::function<std::string(const std::string& item, const std::string& pert,
                                            int sample)>;

    explicit MockEndpoint(Reply reply) : reply_(std::move(reply)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            const int current = ++in_flight_;
            int seen = max_in_flight_.load();
            while (seen < current && !max_in_flight_.compare_exchange_weak(seen, current)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(3));
            ++requests_;

            if (auto it = req.headers.find("Authorization"); it != req.headers.end()) {
                last_auth_ = it->second;
            }

            const nlohmann::json body = nlohmann::json::parse(req.body);
            const std::string prompt = body.at("messages").at(0).at("content");
            const int n = body.value("n", 1);
            const auto open = prompt.find('[');
            const auto bar = prompt.find('|');
            const auto close = prompt.find(']');
            const std::string item = prompt.substr(open + 1, bar - open - 1);
            const std::string pert = prompt.substr(bar + 1, close - bar - 1);

            if (fail_cells_ && fail_cells_(item, pert)) {
                res.status = 500;
                --in_flight_;
                return;
            }
            nlohmann::json choices = nlohmann::json::array();
            for (int s = 0; s < n; ++s) {
                choices.push_back(
                    {{"message", {{"role", "assistant"}, {"content", reply_(item, pert, s)}}}});
            }
            res.set_content(nlohmann::json{{"choices", choices}}.dump(), "application/json");
            --in_flight_;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int max_in_flight() const { return max_in_flight_.load(); }
    int requests() const { return requests_.load(); }
    std::string last_auth() const { return last_auth_; }
    void set_fail_cells(std::function<bool(const std::string&, const std::string&)> f) {
        fail_cells_ = std::move(f);
    }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    Reply reply_;
    std::function<bool(const std::string&, const std::string&)> fail_cells_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::atomic<int> requests_{0};
    std::string last_auth_;
};

}  // namespace test_support

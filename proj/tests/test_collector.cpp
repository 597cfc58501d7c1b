#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "capinfer/collector.hpp"
#include "capinfer/ctt.hpp"
#include "capinfer/rng.hpp"
#include "mock_endpoint.hpp"

using namespace capinfer;
using collector::ExtractionRule;
using collector::QuestionType;
using collector::UnparsedFallback;
using test_support::MockEndpoint;

namespace {

namespace fs = std::filesystem;

fs::path fresh_temp_file(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = fs::temp_directory_path() / "capinfer-tests";
    fs::create_directories(dir);
    return dir / (tag + "-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter.fetch_add(1)) + ".jsonl");
}

collector::PromptSet sample_prompts(int perturbations_per_item = 2) {
    collector::PromptSet prompts;
    collector::PromptItem mc;
    mc.item_id = "movie";
    mc.type = QuestionType::MultipleChoice;
    mc.options = {"A", "B", "C", "D"};
    mc.gold = "B";
    collector::PromptItem yn;
    yn.item_id = "causal";
    yn.type = QuestionType::YesNo;
    yn.gold = "yes";
    collector::PromptItem two;
    two.item_id = "fallacy";
    two.type = QuestionType::TwoOption;
    two.options = {"valid", "invalid"};
    two.gold = "invalid";
    for (auto* item : {&mc, &yn, &two}) {
        for (int j = 1; j <= perturbations_per_item; ++j) {
            const std::string pid = "p" + std::to_string(j);
            item->perturbations.push_back(
                {pid, "[" + item->item_id + "|" + pid + "] rephrased question " + pid});
        }
        prompts.items.push_back(*item);
    }
    return prompts;
}

std::string gold_reply(const std::string& item) {
    if (item == "movie") return "The answer is (B).";
    if (item == "causal") return "yes, because the roll was intentional in the relevant sense";
    return "The argument is invalid.";
}

std::string wrong_reply(const std::string& item) {
    if (item == "movie") return "The answer is (C).";
    if (item == "causal") return "no, that does not follow";
    return "This argument is valid.";
}

collector::EndpointConfig endpoint_for(const MockEndpoint& mock, int n = 1, int concurrency = 4) {
    collector::EndpointConfig config;
    config.base_url = mock.base_url();
    config.model = "mock-model";
    config.temperature = 0.9;
    config.samples_per_prompt = n;
    config.max_concurrent_requests = concurrency;
    config.timeout_ms = 5000;
    config.retry = {2, 10};
    return config;
}

}  // namespace

TEST_CASE("answer extraction follows the ordered soft rules") {
    const ExtractionRule mc{QuestionType::MultipleChoice, {"A", "B", "C", "D"}};
    CHECK(collector::extract_answer("The answer is (B).", mc) == "B");
    CHECK(collector::extract_answer("the ANSWER is b", mc) == "B");
    CHECK(collector::extract_answer("I would pick (C) here", mc) == "C");
    CHECK(collector::extract_answer("Answer: D", mc) == "D");
    CHECK(collector::extract_answer("A", mc) == "A");
    CHECK(collector::extract_answer("nothing to see", mc) == collector::kUnparsed);

    const ExtractionRule yn{QuestionType::YesNo, {}};
    CHECK(collector::extract_answer("yes, because it rained", yn) == "yes");
    CHECK(collector::extract_answer("  No.", yn) == "no");
    CHECK(collector::extract_answer("The answer is yes", yn) == "yes");
    CHECK(collector::extract_answer("hard to say", yn) == collector::kUnparsed);

    const ExtractionRule two{QuestionType::TwoOption, {"valid", "invalid"}};
    CHECK(collector::extract_answer("The argument is invalid.", two) == "invalid");
    CHECK(collector::extract_answer("Valid, clearly.", two) == "valid");
    CHECK(collector::extract_answer("I cannot decide", two) == collector::kUnparsed);

    // Deterministic over a fixed raw string.
    for (int i = 0; i < 5; ++i) {
        CHECK(collector::extract_answer("The answer is (B).", mc) == "B");
    }
}

TEST_CASE("two-option extraction prefers the stated answer over echoes") {
    const ExtractionRule two{QuestionType::TwoOption, {"valid", "invalid"}};
    CHECK(collector::extract_answer(
              "The premises mention valid forms, but the answer is invalid", two) == "invalid");
}

TEST_CASE("collect against a perfect endpoint scores every cell") {
    MockEndpoint mock([](const std::string& item, const std::string&, int) {
        return gold_reply(item);
    });
    const auto prompts = sample_prompts(3);
    const auto audit_path = fresh_temp_file("perfect");
    const auto out =
        collector::collect(prompts, endpoint_for(mock, 2), {}, "run-perfect", audit_path);

    CHECK(out.summary.cells_total == 9);
    CHECK(out.summary.cells_collected == 9);
    CHECK(out.summary.cells_failed == 0);
    CHECK(out.summary.unparsed == 0);
    for (const auto& item : out.matrix.items("mock-model")) {
        CHECK(ctt::estimate_item_accuracy(out.matrix, "mock-model", item).theta_hat ==
              doctest::Approx(1.0));
    }

    // Audit completeness: every scored record has a stored raw completion,
    // stamped with the run conditions.
    const auto audit = collector::read_audit_log(audit_path);
    CHECK(audit.size() == out.matrix.records().size());
    std::set<std::string> keys;
    for (const auto& a : audit) {
        CHECK_FALSE(a.raw_text.empty());
        CHECK(a.temperature == 0.9);
        CHECK(a.samples_per_prompt == 2);
        keys.insert(a.item_id + "/" + a.perturbation_id + "/" + std::to_string(a.sample_index));
    }
    for (const auto& r : out.matrix.records()) {
        CHECK(keys.contains(r.item_id + "/" + r.perturbation_id + "/" +
                            std::to_string(r.sample_index)));
    }
}

TEST_CASE("gold on one perturbation and wrong on the other halves the accuracy") {
    MockEndpoint mock([](const std::string& item, const std::string& pert, int) {
        return pert == "p1" ? gold_reply(item) : wrong_reply(item);
    });
    const auto prompts = sample_prompts(2);
    const auto out = collector::collect(prompts, endpoint_for(mock), {}, "run-half",
                                        fresh_temp_file("half"));
    for (const auto& item : out.matrix.items("mock-model")) {
        CHECK(ctt::estimate_item_accuracy(out.matrix, "mock-model", item).theta_hat ==
              doctest::Approx(0.5));
        CHECK(ctt::mad(out.matrix.perturbation_scores("mock-model", item)) ==
              doctest::Approx(0.5));
    }
}

TEST_CASE("unparsed outputs follow the configured fallback") {
    MockEndpoint mock([](const std::string&, const std::string&, int) {
        return std::string("???");
    });
    const auto prompts = sample_prompts(2);

    SUBCASE("mark as incorrect") {
        const auto out = collector::collect(prompts, endpoint_for(mock), {}, "run-unparsed-a",
                                            fresh_temp_file("unparsed"));
        CHECK(out.summary.unparsed == 6);
        for (const auto& r : out.matrix.records()) CHECK(r.correct == 0);
        CHECK(out.matrix.records().size() == 6);
    }
    SUBCASE("mark as unparsed drops the sample") {
        collector::RuleSet rules;
        rules.fallback = UnparsedFallback::MarkUnparsed;
        const auto out = collector::collect(prompts, endpoint_for(mock), rules, "run-unparsed-b",
                                            fresh_temp_file("unparsed"));
        CHECK(out.summary.unparsed == 6);
        CHECK(out.matrix.empty());
    }
}

TEST_CASE("interrupted collections resume to the identical matrix") {
    auto reply = [](const std::string& item, const std::string& pert, int sample) {
        // Deterministic mixed outcomes.
        const auto h = hash_string(item + pert) + static_cast<std::uint64_t>(sample);
        return h % 2 == 0 ? gold_reply(item) : wrong_reply(item);
    };
    const auto prompts = sample_prompts(3);

    // Uninterrupted reference run.
    MockEndpoint clean_mock(reply);
    const auto reference = collector::collect(prompts, endpoint_for(clean_mock, 2), {},
                                              "run-ref", fresh_temp_file("ref"));

    SUBCASE("transport failures on some cells, then a healthy rerun") {
        MockEndpoint flaky(reply);
        flaky.set_fail_cells([](const std::string& item, const std::string& pert) {
            return item == "causal" && pert != "p2";
        });
        const auto audit_path = fresh_temp_file("flaky");
        const auto first =
            collector::collect(prompts, endpoint_for(flaky, 2), {}, "run-flaky", audit_path);
        CHECK(first.summary.cells_failed == 2);
        CHECK(first.summary.failures.size() == 2);

        flaky.set_fail_cells(nullptr);
        const auto second =
            collector::collect(prompts, endpoint_for(flaky, 2), {}, "run-flaky", audit_path);
        CHECK(second.summary.cells_failed == 0);
        CHECK(second.summary.cells_resumed == 7);
        CHECK(second.summary.cells_collected == 2);
        CHECK(second.matrix == reference.matrix);
    }

    SUBCASE("a torn audit log is picked up cleanly") {
        // Single worker: audit lines land in task order, so the truncation
        // below cuts between whole cells plus one torn line.
        MockEndpoint mock(reply);
        const auto audit_path = fresh_temp_file("torn");
        collector::collect(prompts, endpoint_for(mock, 2, 1), {}, "run-torn", audit_path);

        // Keep the first four lines and half of the fifth.
        std::ifstream in(audit_path);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        in.close();
        std::ofstream out(audit_path, std::ios::trunc);
        for (int i = 0; i < 4; ++i) out << lines[i] << "\n";
        out << lines[4].substr(0, lines[4].size() / 2);
        out.close();

        const auto resumed =
            collector::collect(prompts, endpoint_for(mock, 2, 1), {}, "run-torn", audit_path);
        CHECK(resumed.matrix == reference.matrix);
        CHECK(resumed.summary.cells_resumed == 2);
    }
}

TEST_CASE("in-flight requests never exceed the configured ceiling") {
    MockEndpoint mock([](const std::string& item, const std::string&, int) {
        return gold_reply(item);
    });
    collector::PromptSet prompts;
    for (int i = 0; i < 24; ++i) {
        collector::PromptItem item;
        item.item_id = "q" + std::to_string(i);
        item.type = QuestionType::YesNo;
        item.gold = "yes";
        item.perturbations.push_back({"p1", "[q" + std::to_string(i) + "|p1] ok?"});
        prompts.items.push_back(std::move(item));
    }
    const auto out = collector::collect(prompts, endpoint_for(mock, 1, 3), {}, "run-ceiling",
                                        fresh_temp_file("ceiling"));
    CHECK(out.summary.cells_collected == 24);
    CHECK(mock.max_in_flight() <= 3);
    CHECK(mock.max_in_flight() >= 2);  // the pool actually ran concurrently
}

TEST_CASE("bearer auth comes from the configured environment variable") {
    MockEndpoint mock([](const std::string& item, const std::string&, int) {
        return gold_reply(item);
    });
    const auto prompts = sample_prompts(1);
    auto config = endpoint_for(mock);
    config.auth_env = "CAPINFER_TEST_TOKEN";

    SUBCASE("missing variable fails at startup") {
        ::unsetenv("CAPINFER_TEST_TOKEN");
        CHECK_THROWS_AS(
            collector::collect(prompts, config, {}, "run-auth", fresh_temp_file("auth")),
            Error);
        CHECK(mock.requests() == 0);
    }
    SUBCASE("token is forwarded as a bearer header") {
        ::setenv("CAPINFER_TEST_TOKEN", "sk-test-123", 1);
        collector::collect(prompts, config, {}, "run-auth", fresh_temp_file("auth"));
        CHECK(mock.last_auth() == "Bearer sk-test-123");
        ::unsetenv("CAPINFER_TEST_TOKEN");
    }
}

TEST_CASE("rescore rebuilds the matrix from stored raw text") {
    MockEndpoint mock([](const std::string& item, const std::string& pert, int) {
        return pert == "p1" ? gold_reply(item) : wrong_reply(item);
    });
    const auto prompts = sample_prompts(2);
    const auto audit_path = fresh_temp_file("rescore");
    const auto collected =
        collector::collect(prompts, endpoint_for(mock), {}, "run-rescore", audit_path);

    const auto audit = collector::read_audit_log(audit_path);
    const auto rescored = collector::rescore(audit, prompts, {}, "mock-model");
    CHECK(rescored.matrix == collected.matrix);
}

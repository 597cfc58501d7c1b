// capinfer: capability inference from hierarchical benchmark response logs.
//
// Subcommands cover the full pipeline: simulate ground-truth data, score it
// (ctt/bias/mad), attach uncertainty (bootstrap), plan budgets (allocate),
// calibrate item parameters, run the adaptive test (adapt), collect live
// responses from a chat-completions endpoint, and emit static reports.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "capinfer/adaptive.hpp"
#include "capinfer/collector.hpp"
#include "capinfer/core_model.hpp"
#include "capinfer/ctt.hpp"
#include "capinfer/io.hpp"
#include "capinfer/irt.hpp"
#include "capinfer/report.hpp"
#include "capinfer/rng.hpp"
#include "capinfer/synthetic.hpp"
#include "capinfer/version.hpp"

namespace fs = std::filesystem;
using namespace capinfer;

namespace {

struct DistSpec {
    enum class Kind { Const, Uniform, Normal, LogUniform };
    Kind kind = Kind::Const;
    double a = 0.0;
    double b = 0.0;

    double draw(Rng& rng) const {
        switch (kind) {
            case Kind::Const: return a;
            case Kind::Uniform: return rng.uniform(a, b);
            case Kind::Normal: return rng.normal(a, b);
            case Kind::LogUniform: return std::exp(rng.uniform(std::log(a), std::log(b)));
        }
        return a;
    }
};

std::vector<double> split_args(const std::string& text) {
    std::vector<double> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) out.push_back(std::stod(token));
    return out;
}

DistSpec parse_dist(const std::string& text) {
    const auto colon = text.find(':');
    require(colon != std::string::npos, ErrorCode::Usage,
            "distribution must look like kind:args, got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    std::vector<double> args;
    try {
        args = split_args(text.substr(colon + 1));
    } catch (const std::exception&) {
        raise(ErrorCode::Usage, "bad distribution arguments in '" + text + "'");
    }
    DistSpec spec;
    if (kind == "const") {
        require(args.size() == 1, ErrorCode::Usage, "const takes one value");
        spec.kind = DistSpec::Kind::Const;
        spec.a = args[0];
    } else if (kind == "uniform") {
        require(args.size() == 2, ErrorCode::Usage, "uniform takes lo,hi");
        spec.kind = DistSpec::Kind::Uniform;
        spec.a = args[0];
        spec.b = args[1];
    } else if (kind == "normal") {
        require(args.size() == 2, ErrorCode::Usage, "normal takes mean,sd");
        spec.kind = DistSpec::Kind::Normal;
        spec.a = args[0];
        spec.b = args[1];
    } else if (kind == "loguniform") {
        require(args.size() == 2 && args[0] > 0.0, ErrorCode::Usage,
                "loguniform takes positive lo,hi");
        spec.kind = DistSpec::Kind::LogUniform;
        spec.a = args[0];
        spec.b = args[1];
    } else {
        raise(ErrorCode::Usage, "unknown distribution kind '" + kind + "'");
    }
    return spec;
}

synthetic::OffsetDistribution parse_offset_dist(const std::string& text) {
    const auto colon = text.find(':');
    require(colon != std::string::npos, ErrorCode::Usage,
            "offset distribution must look like kind:args, got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const auto args = split_args(text.substr(colon + 1));
    if (kind == "uniform") {
        require(args.size() == 1, ErrorCode::Usage, "uniform offsets take a half-width");
        return synthetic::OffsetDistribution::uniform(args[0]);
    }
    if (kind == "twopoint") {
        require(args.size() == 1, ErrorCode::Usage, "two-point offsets take a half-width");
        return synthetic::OffsetDistribution::two_point(args[0]);
    }
    if (kind == "truncgauss") {
        require(args.size() == 2, ErrorCode::Usage, "truncated gaussian takes sigma,bound");
        return synthetic::OffsetDistribution::truncated_gaussian(args[0], args[1]);
    }
    raise(ErrorCode::Usage, "unknown offset distribution '" + kind + "'");
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& command) {
    if (!seed) {
        raise(ErrorCode::Usage,
              "'" + command + "' is stochastic and needs --seed (or seed in the config file)");
    }
    return *seed;
}

fs::path resolve(const fs::path& workdir, const std::string& path) {
    require(!path.empty(), ErrorCode::Usage, "missing required path");
    const fs::path p(path);
    return p.is_absolute() ? p : workdir / p;
}

// Responder that queries a live endpoint through the collection protocol,
// one item at a time, sharing the resumable audit log.
class LiveResponder : public adaptive::Responder {
  public:
    LiveResponder(collector::PromptSet prompts, collector::EndpointConfig endpoint,
                  collector::RuleSet rules, std::string run_id, fs::path audit)
        : endpoint_(std::move(endpoint)),
          rules_(rules),
          run_id_(std::move(run_id)),
          audit_(std::move(audit)) {
        for (auto& item : prompts.items) items_.emplace(item.item_id, std::move(item));
    }

    std::vector<double> respond(const std::string& item_id, int m) override {
        auto it = items_.find(item_id);
        require(it != items_.end(), ErrorCode::NotFound,
                "prompt set has no item '" + item_id + "'");
        require(static_cast<int>(it->second.perturbations.size()) >= m, ErrorCode::Domain,
                "item '" + item_id + "' has fewer than m perturbations");
        collector::PromptSet single;
        single.items.push_back(it->second);
        single.items[0].perturbations.resize(static_cast<std::size_t>(m));
        const auto out = collector::collect(single, endpoint_, rules_, run_id_, audit_);
        require(out.summary.cells_failed == 0, ErrorCode::Transport,
                "collection failed for item '" + item_id + "'");
        return out.matrix.perturbation_scores(endpoint_.model, item_id);
    }

  private:
    std::map<std::string, collector::PromptItem> items_;
    collector::EndpointConfig endpoint_;
    collector::RuleSet rules_;
    std::string run_id_;
    fs::path audit_;
};

std::string accuracy_table_csv(const std::vector<ctt::ItemAccuracy>& accuracies) {
    std::string out = "item,m,theta_hat\n";
    for (const auto& acc : accuracies) {
        out += acc.item_id + "," + std::to_string(acc.m) + "," + io::format_double(acc.theta_hat) +
               "\n";
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"capability inference for generative-model benchmarks"};
    app.set_version_flag("--version", std::string("capinfer ") + kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string workdir = ".";
    app.add_option("--config", config_path, "key = value run configuration file");
    app.add_option("--workdir", workdir, "base directory for relative paths");

    io::RunConfig cfg;

    // Flag values; only flags the user actually passed override the config.
    std::string opt_log;
    std::string opt_model;
    std::string opt_out;
    std::string opt_truth;
    std::string opt_original;
    std::string opt_items;
    std::uint64_t opt_seed = 0;

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate synthetic response data");
    std::string sim_mode = "ctt";
    int sim_n = 100;
    int sim_models = 1;
    int sim_m = 10;
    int sim_repeats = 1;
    bool sim_dependent = false;
    std::string sim_sdist = "twopoint:0.2";
    std::string sim_acc = "uniform:0.2,0.8";
    std::string sim_theta = "normal:0,1";
    std::string sim_a = "loguniform:0.5,2";
    std::string sim_b = "normal:0,1";
    simulate->add_option("--mode", sim_mode, "ctt or irt")->check(CLI::IsMember({"ctt", "irt"}));
    simulate->add_option("--n-items", sim_n);
    simulate->add_option("--models", sim_models);
    simulate->add_option("--m", sim_m, "perturbations per item");
    simulate->add_option("--repeats", sim_repeats, "samples per perturbation");
    simulate->add_flag("--dependent", sim_dependent, "one shared offset per item");
    simulate->add_option("--s-dist", sim_sdist, "uniform:w | twopoint:w | truncgauss:sigma,bound");
    simulate->add_option("--accuracy-dist", sim_acc, "per-item true accuracy (ctt)");
    simulate->add_option("--theta-dist", sim_theta, "per-model ability (irt)");
    simulate->add_option("--a-dist", sim_a, "item discrimination (irt)");
    simulate->add_option("--b-dist", sim_b, "item difficulty (irt)");
    simulate->add_option("--out", opt_out, "response log path")->required();
    simulate->add_option("--truth", opt_truth, "ground-truth sidecar path");
    auto* sim_seed_opt = simulate->add_option("--seed", opt_seed);

    // ctt
    auto* ctt_cmd = app.add_subcommand("ctt", "per-item accuracies and the dataset mean");
    ctt_cmd->add_option("--log", opt_log)->required();
    ctt_cmd->add_option("--model", opt_model)->required();
    ctt_cmd->add_option("--out", opt_out, "write the per-item table as CSV");

    // bias
    auto* bias_cmd = app.add_subcommand("bias", "systematic bias against original scores");
    bias_cmd->add_option("--log", opt_log)->required();
    bias_cmd->add_option("--original", opt_original, "original-scores JSON")->required();
    bias_cmd->add_option("--model", opt_model)->required();
    bias_cmd->add_option("--out", opt_out, "write the per-item bias table as CSV");

    // mad
    auto* mad_cmd = app.add_subcommand("mad", "perturbation sensitivity report");
    mad_cmd->add_option("--log", opt_log)->required();
    mad_cmd->add_option("--model", opt_model)->required();
    mad_cmd->add_option("--out", opt_out, "write the per-item MAD table as CSV");

    // bootstrap
    auto* boot_cmd = app.add_subcommand("bootstrap", "clustered bootstrap interval");
    int boot_B = 0;
    double boot_alpha = 0.0;
    int boot_threads = 1;
    boot_cmd->add_option("--log", opt_log)->required();
    boot_cmd->add_option("--model", opt_model)->required();
    auto* boot_B_opt = boot_cmd->add_option("--B", boot_B, "bootstrap replicates");
    auto* boot_alpha_opt = boot_cmd->add_option("--alpha", boot_alpha, "interval level");
    boot_cmd->add_option("--threads", boot_threads);
    auto* boot_seed_opt = boot_cmd->add_option("--seed", opt_seed);

    // allocate
    auto* alloc_cmd = app.add_subcommand("allocate", "two-step Neyman budget allocation");
    long alloc_budget = 0;
    int alloc_m0 = 0;
    alloc_cmd->add_option("--pilot", opt_log, "pilot response log")->required();
    alloc_cmd->add_option("--model", opt_model)->required();
    auto* alloc_budget_opt = alloc_cmd->add_option("--budget", alloc_budget);
    auto* alloc_m0_opt = alloc_cmd->add_option("--m0", alloc_m0, "pilot samples per item");
    alloc_cmd->add_option("--out", opt_out, "write the plan as JSON");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "joint item-parameter calibration");
    double cal_tol = 1e-6;
    int cal_iter = 2000;
    cal_cmd->add_option("--log", opt_log)->required();
    cal_cmd->add_option("--out", opt_out, "item-params JSON")->required();
    cal_cmd->add_option("--grad-tol", cal_tol);
    cal_cmd->add_option("--max-iter", cal_iter);

    // adapt
    auto* adapt_cmd = app.add_subcommand("adapt", "latent-ability adaptive test");
    std::string adapt_responder = "replay";
    int adapt_m = 0;
    double adapt_theta = 0.0;
    std::string adapt_sdist = "uniform:0.1";
    std::string adapt_prompts;
    std::string adapt_run_id = "adapt";
    std::string adapt_audit;
    adapt_cmd->add_option("--items", opt_items, "calibrated item-params JSON")->required();
    adapt_cmd->add_option("--responder", adapt_responder)
        ->check(CLI::IsMember({"replay", "synthetic", "live"}));
    auto* adapt_m_opt = adapt_cmd->add_option("--m", adapt_m, "perturbations per item");
    adapt_cmd->add_option("--out", opt_out, "session log path")->required();
    adapt_cmd->add_option("--log", opt_log, "replay response log");
    adapt_cmd->add_option("--model", opt_model, "model id in the replay log");
    adapt_cmd->add_option("--theta", adapt_theta, "true ability for the synthetic responder");
    adapt_cmd->add_option("--s-dist", adapt_sdist, "offsets for the synthetic responder");
    auto* adapt_seed_opt = adapt_cmd->add_option("--seed", opt_seed);
    double adapt_prior_mean = 0.0;
    double adapt_prior_var = 1.0;
    double adapt_se_delta = 1e-4;
    int adapt_max_items = 0;
    double adapt_se_target = 0.0;
    adapt_cmd->add_option("--prior-mean", adapt_prior_mean);
    adapt_cmd->add_option("--prior-variance", adapt_prior_var);
    adapt_cmd->add_option("--se-delta", adapt_se_delta);
    adapt_cmd->add_option("--max-items", adapt_max_items);
    adapt_cmd->add_option("--se-target", adapt_se_target);
    adapt_cmd->add_option("--prompts", adapt_prompts, "prompt set for the live responder");
    adapt_cmd->add_option("--run-id", adapt_run_id);
    adapt_cmd->add_option("--audit", adapt_audit, "audit log for the live responder");

    // shared endpoint flags (collect, rescore, live adapt)
    collector::EndpointConfig endpoint;
    std::string fallback = "incorrect";
    auto add_endpoint_flags = [&](CLI::App* cmd) {
        cmd->add_option("--base-url", endpoint.base_url);
        cmd->add_option("--endpoint-model", endpoint.model, "model name sent to the endpoint");
        cmd->add_option("--temperature", endpoint.temperature);
        cmd->add_option("--n", endpoint.samples_per_prompt, "samples per prompt");
        cmd->add_option("--concurrency", endpoint.max_concurrent_requests);
        cmd->add_option("--timeout-ms", endpoint.timeout_ms);
        cmd->add_option("--retries", endpoint.retry.max_attempts);
        cmd->add_option("--backoff-ms", endpoint.retry.initial_backoff_ms);
        cmd->add_option("--auth-env", endpoint.auth_env);
        cmd->add_option("--fallback", fallback, "unparsed handling: incorrect | unparsed")
            ->check(CLI::IsMember({"incorrect", "unparsed"}));
    };
    add_endpoint_flags(adapt_cmd);

    // collect
    auto* collect_cmd = app.add_subcommand("collect", "query a live endpoint per perturbation");
    std::string collect_prompts;
    std::string collect_run_id;
    std::string collect_audit;
    collect_cmd->add_option("--prompts", collect_prompts)->required();
    collect_cmd->add_option("--run-id", collect_run_id)->required();
    collect_cmd->add_option("--audit", collect_audit)->required();
    collect_cmd->add_option("--out", opt_out, "response log path")->required();
    add_endpoint_flags(collect_cmd);

    // rescore
    auto* rescore_cmd = app.add_subcommand("rescore", "re-apply extraction rules to an audit log");
    rescore_cmd->add_option("--audit", collect_audit)->required();
    rescore_cmd->add_option("--prompts", collect_prompts)->required();
    rescore_cmd->add_option("--model", opt_model, "model id for the rebuilt log")->required();
    rescore_cmd->add_option("--out", opt_out)->required();
    rescore_cmd->add_option("--fallback", fallback)
        ->check(CLI::IsMember({"incorrect", "unparsed"}));

    // report
    auto* report_cmd = app.add_subcommand("report", "static CSV + HTML summary");
    std::string report_dir;
    report_cmd->add_option("--log", opt_log)->required();
    report_cmd->add_option("--out-dir", report_dir)->required();
    auto* report_B_opt = report_cmd->add_option("--B", boot_B);
    auto* report_alpha_opt = report_cmd->add_option("--alpha", boot_alpha);
    auto* report_seed_opt = report_cmd->add_option("--seed", opt_seed);

    CLI11_PARSE(app, argc, argv);

    const fs::path base = fs::path(workdir);
    if (!config_path.empty()) cfg = io::load_run_config(resolve(base, config_path));
    if (*sim_seed_opt || *boot_seed_opt || *adapt_seed_opt || *report_seed_opt) {
        cfg.seed = opt_seed;
    }
    if (*boot_B_opt || *report_B_opt) cfg.bootstrap_B = boot_B;
    if (*boot_alpha_opt || *report_alpha_opt) cfg.alpha = boot_alpha;
    if (*alloc_budget_opt) cfg.budget = alloc_budget;
    if (*alloc_m0_opt) cfg.pilot_m0 = alloc_m0;
    if (*adapt_m_opt) cfg.m = adapt_m;

    if (simulate->parsed()) {
        const auto seed = require_seed(cfg.seed, "simulate");
        synthetic::SyntheticSpec spec;
        spec.n_items = sim_n;
        spec.k_models = sim_models;
        spec.m_perturbations = sim_m;
        spec.repeats_per_perturbation = sim_repeats;
        spec.dependent_mode = sim_dependent;
        spec.s_distribution = parse_offset_dist(sim_sdist);
        spec.seed = seed;
        if (sim_mode == "ctt") {
            const DistSpec acc = parse_dist(sim_acc);
            Rng rng(substream_seed(seed, "truth-accuracy"));
            for (int i = 0; i < sim_n; ++i) {
                spec.item_accuracy.push_back(std::clamp(acc.draw(rng), 0.0, 1.0));
            }
            const auto data = synthetic::generate_ctt(spec);
            io::write_response_log(data.matrix, resolve(base, opt_out));
            if (!opt_truth.empty()) {
                io::write_ctt_truth(data.truth, seed, resolve(base, opt_truth));
            }
            std::cout << "wrote " << data.matrix.size() << " records ("
                      << io::format_double(data.truth.clamped_fraction)
                      << " clamped fraction)\n";
        } else {
            const DistSpec theta = parse_dist(sim_theta);
            const DistSpec a = parse_dist(sim_a);
            const DistSpec b = parse_dist(sim_b);
            Rng rng(substream_seed(seed, "truth-params"));
            for (int i = 0; i < sim_n; ++i) {
                spec.items.push_back({synthetic::item_name(i), a.draw(rng), b.draw(rng)});
            }
            for (int k = 0; k < sim_models; ++k) spec.theta_models.push_back(theta.draw(rng));
            const auto data = synthetic::generate_irt(spec);
            io::write_response_log(data.matrix, resolve(base, opt_out));
            if (!opt_truth.empty()) {
                io::write_irt_truth(data.truth, seed, resolve(base, opt_truth));
            }
            std::cout << "wrote " << data.matrix.size() << " records ("
                      << io::format_double(data.truth.clamped_fraction)
                      << " clamped fraction)\n";
        }
        return 0;
    }

    if (ctt_cmd->parsed()) {
        const auto matrix = io::read_response_log(resolve(base, opt_log));
        const auto accuracies = ctt::estimate_all_accuracies(matrix, opt_model);
        double sum = 0.0;
        for (const auto& acc : accuracies) sum += acc.theta_hat;
        const double overall = sum / static_cast<double>(accuracies.size());
        std::cout << "items " << accuracies.size() << "\n";
        std::cout << "overall " << io::format_double(overall) << "\n";
        if (!opt_out.empty()) {
            io::atomic_write(resolve(base, opt_out), accuracy_table_csv(accuracies));
        }
        return 0;
    }

    if (bias_cmd->parsed()) {
        const auto matrix = io::read_response_log(resolve(base, opt_log));
        const auto original = io::read_original_scores(resolve(base, opt_original));
        const auto report = ctt::estimate_bias(matrix, original, opt_model);
        std::cout << "items " << report.per_item_bias.size() << "\n";
        std::cout << "mean_bias " << io::format_double(report.mean_bias) << "\n";
        if (!opt_out.empty()) {
            std::string csv = "item,original,theta_hat,bias\n";
            for (const auto& [item, bias] : report.per_item_bias) {
                const double orig = report.original_scores.at(item);
                csv += item + "," + io::format_double(orig) + "," +
                       io::format_double(orig - bias) + "," + io::format_double(bias) + "\n";
            }
            io::atomic_write(resolve(base, opt_out), csv);
        }
        return 0;
    }

    if (mad_cmd->parsed()) {
        const auto matrix = io::read_response_log(resolve(base, opt_log));
        const auto report = ctt::sensitivity_report(matrix, opt_model);
        const auto& s = report.summary;
        std::cout << "items " << report.per_item_mad.size() << "\n";
        std::cout << "mad_mean " << io::format_double(s.mean) << "\n";
        std::cout << "mad_quantiles " << io::format_double(s.min) << " "
                  << io::format_double(s.q25) << " " << io::format_double(s.median) << " "
                  << io::format_double(s.q75) << " " << io::format_double(s.max) << "\n";
        if (!opt_out.empty()) {
            std::string csv = "item,mad\n";
            for (const auto& [item, mad] : report.per_item_mad) {
                csv += item + "," + io::format_double(mad) + "\n";
            }
            io::atomic_write(resolve(base, opt_out), csv);
        }
        return 0;
    }

    if (boot_cmd->parsed()) {
        require(cfg.bootstrap_B >= 1, ErrorCode::Usage, "--B must be a positive integer");
        require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorCode::Usage,
                "--alpha must lie in (0,1)");
        const auto seed = require_seed(cfg.seed, "bootstrap");
        const auto matrix = io::read_response_log(resolve(base, opt_log));
        const auto result = ctt::clustered_bootstrap(matrix, opt_model, cfg.bootstrap_B,
                                                     cfg.alpha, seed, boot_threads);
        std::cout << "point " << io::format_double(result.point_estimate) << "\n";
        std::cout << "interval " << io::format_double(result.lower) << " "
                  << io::format_double(result.upper) << "\n";
        std::cout << "B " << result.B << " alpha " << io::format_double(result.alpha) << " seed "
                  << result.seed << "\n";
        return 0;
    }

    if (alloc_cmd->parsed()) {
        const auto pilot = io::read_response_log(resolve(base, opt_log));
        const auto plan = ctt::neyman_allocate(pilot, opt_model, cfg.budget, cfg.pilot_m0);
        long total = 0;
        for (const auto& [_, m] : plan.per_item_m) total += m;
        std::cout << "items " << plan.per_item_m.size() << " total " << total << " budget "
                  << plan.budget << "\n";
        if (!opt_out.empty()) {
            std::string json_text = "{\n  \"pilot_m0\": " + std::to_string(plan.pilot_m0) +
                                    ",\n  \"budget\": " + std::to_string(plan.budget) +
                                    ",\n  \"per_item_m\": {\n";
            bool first = true;
            for (const auto& [item, m] : plan.per_item_m) {
                if (!first) json_text += ",\n";
                json_text += "    \"" + item + "\": " + std::to_string(m);
                first = false;
            }
            json_text += "\n  }\n}\n";
            io::atomic_write(resolve(base, opt_out), json_text);
        }
        return 0;
    }

    if (cal_cmd->parsed()) {
        const auto matrix = io::read_response_log(resolve(base, opt_log));
        const auto input = io::calibration_input_from_matrix(matrix);
        irt::CalibrationConfig config;
        config.gradient_tol = cal_tol;
        config.max_iterations = cal_iter;
        const auto result = irt::calibrate(input, config);
        io::write_item_params(result, resolve(base, opt_out));
        std::cout << "items " << result.items.size() << " models " << result.abilities.size()
                  << "\n";
        std::cout << "objective " << io::format_double(result.final_objective) << " iterations "
                  << result.iterations << " converged " << (result.converged ? "yes" : "no")
                  << "\n";
        return 0;
    }

    if (adapt_cmd->parsed()) {
        const auto params = io::read_item_params(resolve(base, opt_items));
        require(!params.items.empty(), ErrorCode::Schema, "item-params file has no items");
        require(cfg.m >= 1, ErrorCode::Usage, "--m (perturbations per item) must be positive");

        adaptive::StoppingRule rule;
        if (adapt_se_delta > 0.0) rule.se_delta = adapt_se_delta;
        rule.max_items = adapt_max_items > 0
                             ? adapt_max_items
                             : static_cast<int>(std::min<std::size_t>(params.items.size(), 200));
        if (adapt_se_target > 0.0) rule.se_target = adapt_se_target;
        const irt::GaussianPrior prior{adapt_prior_mean, adapt_prior_var};

        std::unique_ptr<adaptive::Responder> responder;
        if (adapt_responder == "replay") {
            require(!opt_log.empty() && !opt_model.empty(), ErrorCode::Usage,
                    "replay needs --log and --model");
            responder = std::make_unique<adaptive::ReplayResponder>(
                io::read_response_log(resolve(base, opt_log)), opt_model);
        } else if (adapt_responder == "synthetic") {
            const auto seed = require_seed(cfg.seed, "adapt --responder synthetic");
            responder = std::make_unique<adaptive::SyntheticResponder>(
                adapt_theta, params.items, parse_offset_dist(adapt_sdist), seed);
        } else {
            require(!adapt_prompts.empty() && !adapt_audit.empty(), ErrorCode::Usage,
                    "live responder needs --prompts and --audit");
            collector::RuleSet rules;
            rules.fallback = fallback == "unparsed"
                                 ? collector::UnparsedFallback::MarkUnparsed
                                 : collector::UnparsedFallback::MarkIncorrect;
            responder = std::make_unique<LiveResponder>(
                io::read_prompt_set(resolve(base, adapt_prompts)), endpoint, rules, adapt_run_id,
                resolve(base, adapt_audit));
        }

        try {
            const auto session =
                adaptive::run_adaptive_test(params.items, *responder, prior, rule, cfg.m);
            io::write_session_log(session, resolve(base, opt_out));
            std::cout << "theta " << io::format_double(session.estimate.theta) << " se "
                      << io::format_double(session.estimate.standard_error) << "\n";
            std::cout << "items_asked " << session.log.size() << " stop "
                      << adaptive::to_string(session.stop_reason) << "\n";
        } catch (const adaptive::SessionAborted& e) {
            adaptive::SessionResult partial;
            partial.log = e.partial_log();
            io::write_session_log(partial, resolve(base, opt_out));
            std::cerr << "capinfer: session aborted: " << e.what() << " (partial log written)\n";
            return 1;
        }
        return 0;
    }

    if (collect_cmd->parsed()) {
        const auto prompts = io::read_prompt_set(resolve(base, collect_prompts));
        collector::RuleSet rules;
        rules.fallback = fallback == "unparsed" ? collector::UnparsedFallback::MarkUnparsed
                                                : collector::UnparsedFallback::MarkIncorrect;
        const auto out = collector::collect(prompts, endpoint, rules, collect_run_id,
                                            resolve(base, collect_audit));
        io::write_response_log(out.matrix, resolve(base, opt_out));
        std::cout << "cells " << out.summary.cells_total << " collected "
                  << out.summary.cells_collected << " resumed " << out.summary.cells_resumed
                  << " failed " << out.summary.cells_failed << "\n";
        std::cout << "samples " << out.summary.samples << " unparsed " << out.summary.unparsed
                  << "\n";
        for (const auto& f : out.summary.failures) std::cout << "failure " << f << "\n";
        return out.summary.cells_failed == 0 ? 0 : 3;
    }

    if (rescore_cmd->parsed()) {
        const auto prompts = io::read_prompt_set(resolve(base, collect_prompts));
        const auto audit = collector::read_audit_log(resolve(base, collect_audit));
        collector::RuleSet rules;
        rules.fallback = fallback == "unparsed" ? collector::UnparsedFallback::MarkUnparsed
                                                : collector::UnparsedFallback::MarkIncorrect;
        const auto out = collector::rescore(audit, prompts, rules, opt_model);
        io::write_response_log(out.matrix, resolve(base, opt_out));
        std::cout << "samples " << out.summary.samples << " unparsed " << out.summary.unparsed
                  << "\n";
        return 0;
    }

    if (report_cmd->parsed()) {
        require(cfg.bootstrap_B >= 1, ErrorCode::Usage, "--B must be a positive integer");
        require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorCode::Usage,
                "--alpha must lie in (0,1)");
        const auto seed = require_seed(cfg.seed, "report");
        const auto matrix = io::read_response_log(resolve(base, opt_log));
        report::ReportInputs inputs;
        cfg.input = opt_log;
        cfg.output_dir = report_dir;
        inputs.resolved_config = io::render_run_config(cfg);
        inputs.seed = std::to_string(seed);
        for (const auto& model : matrix.models()) {
            const auto result = ctt::clustered_bootstrap(matrix, model, cfg.bootstrap_B,
                                                         cfg.alpha, seed);
            const auto sens = ctt::sensitivity_report(matrix, model);
            inputs.leaderboard.push_back({model, result.point_estimate, result.lower,
                                          result.upper,
                                          static_cast<int>(matrix.items(model).size())});
            inputs.sensitivity.push_back({model, sens.summary});
        }
        report::write_report(inputs, resolve(base, report_dir));
        std::cout << "report written to " << report_dir << " for " << inputs.leaderboard.size()
                  << " models\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "capinfer: error: " << e.what() << "\n";
        return e.code() == ErrorCode::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "capinfer: error: " << e.what() << "\n";
        return 1;
    }
}

#include "capinfer/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace capinfer::io {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorCode::Validation, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        require(out.good(), ErrorCode::Validation, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

namespace {

json record_to_json(const ResponseRecord& r) {
    return json{{"model", r.model_id},
                {"item", r.item_id},
                {"perturbation", r.perturbation_id},
                {"sample", r.sample_index},
                {"correct", r.correct}};
}

ResponseRecord record_from_json(const json& j) {
    ResponseRecord r;
    r.model_id = j.at("model").get<std::string>();
    r.item_id = j.at("item").get<std::string>();
    r.perturbation_id = j.at("perturbation").get<std::string>();
    r.sample_index = j.at("sample").get<int>();
    r.correct = j.at("correct").get<int>();
    return r;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

}  // namespace

std::string to_jsonl(const ResponseMatrix& matrix) {
    std::string out;
    for (const auto& r : matrix.records()) {
        out += record_to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

ResponseMatrix from_jsonl(std::istream& in) {
    std::vector<ResponseRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            raise(ErrorCode::Schema,
                  "bad response-log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ResponseMatrix(std::move(records));
}

std::string to_csv(const ResponseMatrix& matrix) {
    std::string out = "model,item,perturbation,sample,correct\n";
    for (const auto& r : matrix.records()) {
        out += csv_escape(r.model_id) + "," + csv_escape(r.item_id) + "," +
               csv_escape(r.perturbation_id) + "," + std::to_string(r.sample_index) + "," +
               std::to_string(r.correct) + "\n";
    }
    return out;
}

ResponseMatrix from_csv(std::istream& in) {
    std::vector<ResponseRecord> records;
    std::string line;
    bool header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            require(line == "model,item,perturbation,sample,correct", ErrorCode::Schema,
                    "unexpected CSV header: " + line);
            header = false;
            continue;
        }
        const auto fields = csv_split(line);
        require(fields.size() == 5, ErrorCode::Schema,
                "CSV line " + std::to_string(line_no) + " has " +
                    std::to_string(fields.size()) + " fields, expected 5");
        ResponseRecord r;
        r.model_id = fields[0];
        r.item_id = fields[1];
        r.perturbation_id = fields[2];
        r.sample_index = std::stoi(fields[3]);
        r.correct = std::stoi(fields[4]);
        records.push_back(std::move(r));
    }
    return ResponseMatrix(std::move(records));
}

void write_response_log(const ResponseMatrix& matrix, const std::filesystem::path& path) {
    atomic_write(path, path.extension() == ".csv" ? to_csv(matrix) : to_jsonl(matrix));
}

ResponseMatrix read_response_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open '" + path.string() + "'");
    return path.extension() == ".csv" ? from_csv(in) : from_jsonl(in);
}

std::map<std::string, double> read_original_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::Schema, "bad original-scores file: " + std::string(e.what()));
    }
    require(j.is_object(), ErrorCode::Schema, "original scores must be a JSON object");
    std::map<std::string, double> out;
    for (const auto& [item, value] : j.items()) {
        const double score = value.get<double>();
        require(score >= 0.0 && score <= 1.0, ErrorCode::Schema,
                "original score for '" + item + "' outside [0,1]");
        out[item] = score;
    }
    return out;
}

void write_original_scores(const std::map<std::string, double>& scores,
                           const std::filesystem::path& path) {
    json j = json::object();
    for (const auto& [item, score] : scores) j[item] = score;
    atomic_write(path, j.dump(2) + "\n");
}

std::string calibration_to_json(const irt::CalibrationResult& result) {
    json items = json::array();
    for (const auto& item : result.items) {
        items.push_back({{"item_id", item.item_id}, {"a", item.a}, {"b", item.b}});
    }
    json abilities = json::object();
    for (const auto& [model, theta] : result.abilities) abilities[model] = theta;
    const json j{{"items", items},
                 {"abilities", abilities},
                 {"meta",
                  {{"objective", result.final_objective},
                   {"iterations", result.iterations},
                   {"converged", result.converged}}}};
    return j.dump(2) + "\n";
}

irt::CalibrationResult calibration_from_json(const std::string& text) {
    irt::CalibrationResult result;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorCode::Schema, "bad item-params JSON: " + std::string(e.what()));
    }
    for (const auto& item : j.at("items")) {
        ItemParams p{item.at("item_id").get<std::string>(), item.at("a").get<double>(),
                     item.at("b").get<double>()};
        validate(p);
        result.items.push_back(std::move(p));
    }
    if (j.contains("abilities")) {
        for (const auto& [model, theta] : j.at("abilities").items()) {
            result.abilities[model] = theta.get<double>();
        }
    }
    if (j.contains("meta")) {
        const auto& meta = j.at("meta");
        result.final_objective = meta.value("objective", 0.0);
        result.iterations = meta.value("iterations", 0);
        result.converged = meta.value("converged", false);
    }
    return result;
}

void write_item_params(const irt::CalibrationResult& result, const std::filesystem::path& path) {
    atomic_write(path, calibration_to_json(result));
}

irt::CalibrationResult read_item_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return calibration_from_json(buffer.str());
}

void write_ctt_truth(const synthetic::CttTruth& truth, std::uint64_t seed,
                     const std::filesystem::path& path) {
    json acc = json::object();
    for (const auto& [item, theta] : truth.item_accuracy) acc[item] = theta;
    const json j{{"kind", "ctt"},
                 {"seed", seed},
                 {"item_accuracy", acc},
                 {"clamped_fraction", truth.clamped_fraction}};
    atomic_write(path, j.dump(2) + "\n");
}

void write_irt_truth(const synthetic::IrtTruth& truth, std::uint64_t seed,
                     const std::filesystem::path& path) {
    json items = json::array();
    for (const auto& item : truth.items) {
        items.push_back({{"item_id", item.item_id}, {"a", item.a}, {"b", item.b}});
    }
    json theta = json::object();
    for (const auto& [model, t] : truth.theta) theta[model] = t;
    const json j{{"kind", "irt"},
                 {"seed", seed},
                 {"items", items},
                 {"theta", theta},
                 {"clamped_fraction", truth.clamped_fraction}};
    atomic_write(path, j.dump(2) + "\n");
}

synthetic::CttTruth read_ctt_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open '" + path.string() + "'");
    json j;
    in >> j;
    require(j.value("kind", "") == "ctt", ErrorCode::Schema, "not a score-scale truth file");
    synthetic::CttTruth truth;
    for (const auto& [item, theta] : j.at("item_accuracy").items()) {
        truth.item_accuracy[item] = theta.get<double>();
    }
    truth.clamped_fraction = j.value("clamped_fraction", 0.0);
    return truth;
}

synthetic::IrtTruth read_irt_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open '" + path.string() + "'");
    json j;
    in >> j;
    require(j.value("kind", "") == "irt", ErrorCode::Schema, "not a latent-ability truth file");
    synthetic::IrtTruth truth;
    for (const auto& item : j.at("items")) {
        truth.items.push_back({item.at("item_id").get<std::string>(), item.at("a").get<double>(),
                               item.at("b").get<double>()});
    }
    for (const auto& [model, t] : j.at("theta").items()) truth.theta[model] = t.get<double>();
    truth.clamped_fraction = j.value("clamped_fraction", 0.0);
    return truth;
}

std::string session_log_to_jsonl(const adaptive::SessionResult& result) {
    std::string out;
    for (const auto& step : result.log) {
        const json j{{"t", step.t},          {"item_id", step.item_id},
                     {"phi", step.phi},      {"theta", step.theta},
                     {"se", step.se},        {"information", step.information}};
        out += j.dump();
        out.push_back('\n');
    }
    const json footer{{"final", true},
                      {"theta", result.estimate.theta},
                      {"se", result.estimate.standard_error},
                      {"theta_one_step", result.theta_one_step},
                      {"items", result.log.size()},
                      {"stop_reason", adaptive::to_string(result.stop_reason)}};
    out += footer.dump();
    out.push_back('\n');
    return out;
}

void write_session_log(const adaptive::SessionResult& result,
                       const std::filesystem::path& path) {
    atomic_write(path, session_log_to_jsonl(result));
}

collector::PromptSet read_prompt_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::Schema, "bad prompt-set file: " + std::string(e.what()));
    }
    collector::PromptSet prompts;
    for (const auto& item : j.at("items")) {
        collector::PromptItem p;
        p.item_id = item.at("item_id").get<std::string>();
        p.type = collector::question_type_from_string(
            item.at("question_type").get<std::string>());
        if (item.contains("options")) {
            for (const auto& o : item.at("options")) p.options.push_back(o.get<std::string>());
        }
        p.gold = item.at("gold").get<std::string>();
        for (const auto& pert : item.at("perturbations")) {
            p.perturbations.push_back({pert.at("perturbation_id").get<std::string>(),
                                       pert.at("prompt").get<std::string>()});
        }
        prompts.items.push_back(std::move(p));
    }
    prompts.validate();
    return prompts;
}

irt::CalibrationInput calibration_input_from_matrix(const ResponseMatrix& matrix) {
    irt::CalibrationInput input;
    input.model_ids = matrix.models();
    require(!input.model_ids.empty(), ErrorCode::Degenerate, "response log is empty");
    input.item_ids = matrix.items(input.model_ids.front());

    input.m = 0;
    input.counts.assign(input.item_ids.size() * input.model_ids.size(), 0);
    for (std::size_t k = 0; k < input.model_ids.size(); ++k) {
        const auto model_items = matrix.items(input.model_ids[k]);
        require(model_items == input.item_ids, ErrorCode::Schema,
                "model '" + input.model_ids[k] + "' covers a different item set");
        for (std::size_t i = 0; i < input.item_ids.size(); ++i) {
            const auto scores =
                matrix.perturbation_scores(input.model_ids[k], input.item_ids[i]);
            if (input.m == 0) input.m = static_cast<int>(scores.size());
            require(static_cast<int>(scores.size()) == input.m, ErrorCode::Schema,
                    "item '" + input.item_ids[i] + "' has " + std::to_string(scores.size()) +
                        " perturbations, expected " + std::to_string(input.m));
            int y = 0;
            for (double s : scores) {
                require(s == 0.0 || s == 1.0, ErrorCode::Schema,
                        "calibration needs binary per-perturbation scores (item '" +
                            input.item_ids[i] + "')");
                y += s == 1.0 ? 1 : 0;
            }
            input.counts[i * input.model_ids.size() + k] = y;
        }
    }
    input.validate();
    return input;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::Validation, "cannot open config '" + path.string() + "'");
    RunConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            const bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            require(blank, ErrorCode::Schema,
                    "config line " + std::to_string(line_no) + " is not 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "input") config.input = value;
            else if (key == "original_scores") config.original_scores = value;
            else if (key == "item_params") config.item_params = value;
            else if (key == "output_dir") config.output_dir = value;
            else if (key == "model") config.model = value;
            else if (key == "bootstrap_B") config.bootstrap_B = std::stoi(value);
            else if (key == "alpha") config.alpha = std::stod(value);
            else if (key == "pilot_m0") config.pilot_m0 = std::stoi(value);
            else if (key == "budget") config.budget = std::stol(value);
            else if (key == "m") config.m = std::stoi(value);
            else if (key == "prior_mean") config.prior_mean = std::stod(value);
            else if (key == "prior_variance") config.prior_variance = std::stod(value);
            else if (key == "se_delta") config.se_delta = std::stod(value);
            else if (key == "max_items") config.max_items = std::stoi(value);
            else if (key == "se_target") config.se_target = std::stod(value);
            else if (key == "tolerance") config.tolerance = std::stod(value);
            else if (key == "max_iterations") config.max_iterations = std::stoi(value);
            else if (key == "seed") config.seed = std::stoull(value);
            else raise(ErrorCode::Schema, "unknown config key '" + key + "'");
        } catch (const std::invalid_argument&) {
            raise(ErrorCode::Schema, "bad value for config key '" + key + "'");
        }
    }
    return config;
}

std::string render_run_config(const RunConfig& c) {
    std::string out;
    auto add = [&out](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    add("input", c.input);
    add("original_scores", c.original_scores);
    add("item_params", c.item_params);
    add("output_dir", c.output_dir);
    add("model", c.model);
    add("bootstrap_B", std::to_string(c.bootstrap_B));
    add("alpha", format_double(c.alpha));
    add("pilot_m0", std::to_string(c.pilot_m0));
    add("budget", std::to_string(c.budget));
    add("m", std::to_string(c.m));
    add("prior_mean", format_double(c.prior_mean));
    add("prior_variance", format_double(c.prior_variance));
    add("se_delta", format_double(c.se_delta));
    add("max_items", std::to_string(c.max_items));
    add("se_target", format_double(c.se_target));
    add("tolerance", format_double(c.tolerance));
    add("max_iterations", std::to_string(c.max_iterations));
    add("seed", c.seed ? std::to_string(*c.seed) : "");
    return out;
}

}  // namespace capinfer::io

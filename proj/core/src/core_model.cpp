#include "capinfer/core_model.hpp"

#include <algorithm>
#include <cmath>

namespace capinfer {

namespace {

bool record_less(const ResponseRecord& a, const ResponseRecord& b) {
    if (a.model_id != b.model_id) return a.model_id < b.model_id;
    if (a.item_id != b.item_id) return a.item_id < b.item_id;
    if (a.perturbation_id != b.perturbation_id) return a.perturbation_id < b.perturbation_id;
    return a.sample_index < b.sample_index;
}

}  // namespace

ResponseMatrix::ResponseMatrix(std::vector<ResponseRecord> records)
    : records_(std::move(records)) {
    for (const auto& r : records_) {
        require(r.correct == 0 || r.correct == 1, ErrorCode::Domain,
                "record score must be 0 or 1 (model=" + r.model_id + " item=" + r.item_id + ")");
        require(r.sample_index >= 0, ErrorCode::Domain, "sample_index must be nonnegative");
        require(!r.model_id.empty() && !r.item_id.empty() && !r.perturbation_id.empty(),
                ErrorCode::Schema, "record identifiers must be non-empty");
    }
    std::sort(records_.begin(), records_.end(), record_less);
    for (std::size_t i = 1; i < records_.size(); ++i) {
        const auto& p = records_[i - 1];
        const auto& r = records_[i];
        require(p.model_id != r.model_id || p.item_id != r.item_id ||
                    p.perturbation_id != r.perturbation_id || p.sample_index != r.sample_index,
                ErrorCode::Schema,
                "duplicate record key (" + r.model_id + ", " + r.item_id + ", " +
                    r.perturbation_id + ", " + std::to_string(r.sample_index) + ")");
    }
    for (const auto& r : records_) {
        auto& cell = index_[r.model_id][r.item_id][r.perturbation_id];
        cell.sum += r.correct;
        cell.count += 1;
    }
}

std::vector<std::string> ResponseMatrix::models() const {
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [model, _] : index_) out.push_back(model);
    return out;
}

const ResponseMatrix::ItemMap& ResponseMatrix::items_of(const std::string& model_id) const {
    auto it = index_.find(model_id);
    require(it != index_.end(), ErrorCode::NotFound, "unknown model '" + model_id + "'");
    return it->second;
}

const ResponseMatrix::PerturbationMap& ResponseMatrix::cell_of(
    const std::string& model_id, const std::string& item_id) const {
    const auto& items = items_of(model_id);
    auto it = items.find(item_id);
    require(it != items.end(), ErrorCode::NotFound,
            "unknown item '" + item_id + "' for model '" + model_id + "'");
    return it->second;
}

std::vector<std::string> ResponseMatrix::items(const std::string& model_id) const {
    const auto& items = items_of(model_id);
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& [item, _] : items) out.push_back(item);
    return out;
}

bool ResponseMatrix::has(const std::string& model_id, const std::string& item_id) const {
    auto it = index_.find(model_id);
    if (it == index_.end()) return false;
    return it->second.contains(item_id);
}

std::vector<double> ResponseMatrix::perturbation_scores(const std::string& model_id,
                                                        const std::string& item_id) const {
    const auto& cell = cell_of(model_id, item_id);
    std::vector<double> out;
    out.reserve(cell.size());
    for (const auto& [_, c] : cell) out.push_back(c.sum / c.count);
    return out;
}

std::vector<std::string> ResponseMatrix::perturbation_ids(const std::string& model_id,
                                                          const std::string& item_id) const {
    const auto& cell = cell_of(model_id, item_id);
    std::vector<std::string> out;
    out.reserve(cell.size());
    for (const auto& [pert, _] : cell) out.push_back(pert);
    return out;
}

void validate(const ItemParams& item) {
    require(std::isfinite(item.a) && item.a > 0.0, ErrorCode::Domain,
            "discrimination must be positive (item '" + item.item_id + "')");
    require(std::isfinite(item.b), ErrorCode::Domain,
            "difficulty must be finite (item '" + item.item_id + "')");
}

double sigmoid(double z) {
    require(std::isfinite(z), ErrorCode::Domain, "sigmoid requires finite input");
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double p_bar(double theta, const ItemParams& item) {
    validate(item);
    return sigmoid(item.a * (theta - item.b));
}

double perturbed_prob(double theta, const ItemParams& item, PerturbationEffect s) {
    require(std::isfinite(s.offset) && std::abs(s.offset) <= 1.0, ErrorCode::Domain,
            "perturbation offset must lie in [-1, 1]");
    const double p = p_bar(theta, item) + s.offset;
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

}  // namespace capinfer

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "capinfer/errors.hpp"

namespace capinfer {

// Probabilities produced by the perturbed response model are clamped into
// [kProbClamp, 1 - kProbClamp]: the additive perturbation offset can push the
// base response probability outside [0, 1], and clamping keeps every
// log-likelihood term finite.
inline constexpr double kProbClamp = 1e-9;

/// One scored sample: model `model_id` answered perturbation `perturbation_id`
/// of item `item_id` for the `sample_index`-th time, correctly or not.
struct ResponseRecord {
    std::string model_id;
    std::string item_id;
    std::string perturbation_id;
    int sample_index = 0;
    int correct = 0;  // 0 or 1

    friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

/// Hierarchical response data: model -> item -> perturbation -> repeat samples.
///
/// Immutable after construction. The per-perturbation score is the mean of the
/// binary repeat samples, so it always lies in [0, 1]. Iteration order is
/// lexicographic on identifiers throughout, which keeps every downstream
/// computation deterministic.
class ResponseMatrix {
  public:
    ResponseMatrix() = default;
    explicit ResponseMatrix(std::vector<ResponseRecord> records);

    // Records in canonical order (model, item, perturbation, sample).
    const std::vector<ResponseRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::vector<std::string> models() const;
    std::vector<std::string> items(const std::string& model_id) const;
    bool has(const std::string& model_id, const std::string& item_id) const;

    /// Per-perturbation scores for one (model, item) cell, ordered by
    /// perturbation id. Throws NotFound for unknown identifiers.
    std::vector<double> perturbation_scores(const std::string& model_id,
                                            const std::string& item_id) const;
    std::vector<std::string> perturbation_ids(const std::string& model_id,
                                              const std::string& item_id) const;

    friend bool operator==(const ResponseMatrix& a, const ResponseMatrix& b) {
        return a.records_ == b.records_;
    }

  private:
    struct Cell {
        double sum = 0.0;
        int count = 0;
    };
    using PerturbationMap = std::map<std::string, Cell>;
    using ItemMap = std::map<std::string, PerturbationMap>;

    const ItemMap& items_of(const std::string& model_id) const;
    const PerturbationMap& cell_of(const std::string& model_id,
                                   const std::string& item_id) const;

    std::vector<ResponseRecord> records_;
    std::map<std::string, ItemMap> index_;
};

/// Two-parameter logistic item: discrimination a > 0, difficulty b.
struct ItemParams {
    std::string item_id;
    double a = 1.0;
    double b = 0.0;
};

void validate(const ItemParams& item);

/// Additive perturbation offset on the probability scale, in [-1, 1].
struct PerturbationEffect {
    double offset = 0.0;
};

struct TrajectoryPoint {
    double theta = 0.0;
    double information = 0.0;
};

/// Point estimate of latent ability with its standard error and the item
/// sequence that produced it. standard_error == 1/sqrt(total information).
struct AbilityEstimate {
    double theta = 0.0;
    double standard_error = 0.0;
    std::vector<std::string> items_administered;
    std::vector<TrajectoryPoint> trajectory;
};

/// Logistic link, 1/(1+e^-z). Throws Domain on non-finite input.
double sigmoid(double z);

/// Marginal response probability sigma(a(theta - b)).
double p_bar(double theta, const ItemParams& item);

/// Perturbed response probability clamp(sigma(a(theta-b)) + s, kProbClamp,
/// 1 - kProbClamp).
double perturbed_prob(double theta, const ItemParams& item, PerturbationEffect s);

}  // namespace capinfer

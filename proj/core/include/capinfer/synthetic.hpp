#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "capinfer/core_model.hpp"
#include "capinfer/irt.hpp"
#include "capinfer/rng.hpp"

namespace capinfer::synthetic {

/// Mean-zero perturbation-offset distribution (uniform, two-point, or
/// truncated gaussian). All options are bounded, hence sub-gaussian. `shift`
/// defaults to zero; a nonzero shift deliberately violates the mean-zero
/// assumption and exists for the identifiability demonstrations, where
/// (theta + c, s - c) must be indistinguishable from (theta, s).
struct OffsetDistribution {
    enum class Kind { Uniform, TwoPoint, TruncatedGaussian };

    Kind kind = Kind::TwoPoint;
    double width = 0.0;  // uniform(-w, w) or two-point {-w, +w}
    double sigma = 0.0;  // truncated gaussian scale
    double bound = 0.0;  // truncation half-width
    double shift = 0.0;

    static OffsetDistribution uniform(double w);
    static OffsetDistribution two_point(double w);
    static OffsetDistribution truncated_gaussian(double sigma, double bound);

    double sample(Rng& rng) const;
    double nominal_sd() const;
    void validate() const;
};

/// Ground-truth parameters for the simulator. theta_models and items drive
/// the latent-ability generator; item_accuracy drives the score-scale
/// generator (one true accuracy per item, single model).
struct SyntheticSpec {
    int n_items = 0;
    int k_models = 1;
    int m_perturbations = 0;
    int repeats_per_perturbation = 1;
    std::vector<double> theta_models;
    std::vector<ItemParams> items;
    std::vector<double> item_accuracy;
    OffsetDistribution s_distribution;
    // One offset draw per item, shared across its "perturbations": reproduces
    // the single-phrasing dependence of a conventional benchmark.
    bool dependent_mode = false;
    std::uint64_t seed = 0;
};

std::string item_name(int index);
std::string model_name(int index);

struct CttTruth {
    std::map<std::string, double> item_accuracy;
    double clamped_fraction = 0.0;
};

struct CttData {
    ResponseMatrix matrix;
    CttTruth truth;
};

/// Score-scale generator: per perturbation j of item i, success probability
/// clamp01(theta_i + s_ij), then repeats_per_perturbation Bernoulli samples.
/// Deterministic given the spec seed; item i uses substream (seed, "ctt", i).
CttData generate_ctt(const SyntheticSpec& spec);

struct IrtTruth {
    std::vector<ItemParams> items;
    std::map<std::string, double> theta;
    double clamped_fraction = 0.0;
};

struct IrtData {
    ResponseMatrix matrix;
    irt::CalibrationInput counts;
    IrtTruth truth;
};

/// Latent-ability generator: per (item i, perturbation j, model k), success
/// probability perturbed_prob(theta_k, item_i, s_ij). Offsets are a property
/// of the prompt, so s_ij is shared across models; substreams are
/// (seed, "irt-offsets", i) for offsets and (seed, "irt-cell", i, k) for
/// outcomes, making generation order-independent across cells.
IrtData generate_irt(const SyntheticSpec& spec);

/// Fast path used by Monte Carlo tests: per-perturbation mean scores for a
/// single item on the score scale, no record materialization. Adds the number
/// of clamped probability draws to *clamped when given.
std::vector<double> draw_item_scores(Rng& rng, double theta_i, const OffsetDistribution& s,
                                     int m, int repeats, bool dependent,
                                     long* clamped = nullptr);

/// Exhaustive grid argmax of the administered-item log-likelihood. Evaluates
/// the likelihood directly (own sigmoid/log path) rather than through the
/// scoring code it is used to check.
double oracle_grid_mle(std::span<const irt::AdministeredItem> items, double lo, double hi,
                       double step);

struct ExactBootstrapDistribution {
    std::vector<double> values;         // ascending support of the replicate mean
    std::vector<double> probabilities;  // exact probabilities, same order
    double lower = 0.0;                 // exact nearest-rank percentile pair
    double upper = 0.0;
};

/// Exact distribution of the clustered-bootstrap replicate mean for n <= 6
/// items, by enumerating all n^n equally likely resamples (grouped as
/// multisets with multinomial weights).
ExactBootstrapDistribution oracle_exhaustive_bootstrap(std::span<const double> per_item_means,
                                                       double alpha);

}  // namespace capinfer::synthetic

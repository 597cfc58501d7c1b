#include "capinfer/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace capinfer::synthetic {

OffsetDistribution OffsetDistribution::uniform(double w) {
    OffsetDistribution d;
    d.kind = Kind::Uniform;
    d.width = w;
    return d;
}

OffsetDistribution OffsetDistribution::two_point(double w) {
    OffsetDistribution d;
    d.kind = Kind::TwoPoint;
    d.width = w;
    return d;
}

OffsetDistribution OffsetDistribution::truncated_gaussian(double sigma, double bound) {
    OffsetDistribution d;
    d.kind = Kind::TruncatedGaussian;
    d.sigma = sigma;
    d.bound = bound;
    return d;
}

void OffsetDistribution::validate() const {
    switch (kind) {
        case Kind::Uniform:
        case Kind::TwoPoint:
            require(width >= 0.0 && width <= 1.0, ErrorCode::Validation,
                    "offset width must be in [0,1]");
            break;
        case Kind::TruncatedGaussian:
            require(sigma >= 0.0, ErrorCode::Validation, "offset sigma must be nonnegative");
            require(bound >= 0.0 && bound <= 1.0, ErrorCode::Validation,
                    "offset truncation bound must be in [0,1]");
            break;
    }
    require(std::abs(shift) <= 1.0, ErrorCode::Validation, "offset shift must be in [-1,1]");
}

double OffsetDistribution::sample(Rng& rng) const {
    double s = 0.0;
    switch (kind) {
        case Kind::Uniform:
            s = rng.uniform(-width, width);
            break;
        case Kind::TwoPoint:
            s = rng.bernoulli(0.5) ? width : -width;
            break;
        case Kind::TruncatedGaussian: {
            if (sigma == 0.0 || bound == 0.0) {
                s = 0.0;
                break;
            }
            do {
                s = rng.normal(0.0, sigma);
            } while (std::abs(s) > bound);
            break;
        }
    }
    return s + shift;
}

double OffsetDistribution::nominal_sd() const {
    switch (kind) {
        case Kind::Uniform: return width / std::sqrt(3.0);
        case Kind::TwoPoint: return width;
        case Kind::TruncatedGaussian: return sigma;
    }
    return 0.0;
}

std::string item_name(int index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "item-%06d", index);
    return buf;
}

std::string model_name(int index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "model-%03d", index);
    return buf;
}

namespace {

double clamp01(double p, long* clamped) {
    if (p < 0.0 || p > 1.0) {
        if (clamped) ++*clamped;
        return std::clamp(p, 0.0, 1.0);
    }
    return p;
}

void validate_common(const SyntheticSpec& spec) {
    require(spec.n_items >= 1, ErrorCode::Validation, "n_items must be positive");
    require(spec.k_models >= 1, ErrorCode::Validation, "k_models must be positive");
    require(spec.m_perturbations >= 1, ErrorCode::Validation, "m_perturbations must be positive");
    require(spec.repeats_per_perturbation >= 1, ErrorCode::Validation,
            "repeats_per_perturbation must be positive");
    spec.s_distribution.validate();
}

}  // namespace

std::vector<double> draw_item_scores(Rng& rng, double theta_i, const OffsetDistribution& s,
                                     int m, int repeats, bool dependent, long* clamped) {
    std::vector<double> scores(static_cast<std::size_t>(m), 0.0);
    const double shared = dependent ? s.sample(rng) : 0.0;
    for (int j = 0; j < m; ++j) {
        const double offset = dependent ? shared : s.sample(rng);
        const double p = clamp01(theta_i + offset, clamped);
        int correct = 0;
        for (int r = 0; r < repeats; ++r) correct += rng.bernoulli(p) ? 1 : 0;
        scores[static_cast<std::size_t>(j)] = static_cast<double>(correct) / repeats;
    }
    return scores;
}

CttData generate_ctt(const SyntheticSpec& spec) {
    validate_common(spec);
    require(static_cast<int>(spec.item_accuracy.size()) == spec.n_items, ErrorCode::Validation,
            "item_accuracy must list one true accuracy per item");
    require(spec.k_models == 1, ErrorCode::Validation,
            "the score-scale generator emits a single model");
    for (double t : spec.item_accuracy) {
        require(t >= 0.0 && t <= 1.0, ErrorCode::Validation, "item accuracy outside [0,1]");
    }

    const std::string model = model_name(0);
    std::vector<ResponseRecord> records;
    records.reserve(static_cast<std::size_t>(spec.n_items) * spec.m_perturbations *
                    spec.repeats_per_perturbation);
    long clamped = 0;
    long draws = 0;
    CttData out;
    for (int i = 0; i < spec.n_items; ++i) {
        Rng rng(substream_seed(spec.seed, "ctt", static_cast<std::uint64_t>(i)));
        const std::string item = item_name(i);
        const double theta_i = spec.item_accuracy[static_cast<std::size_t>(i)];
        const double shared = spec.dependent_mode ? spec.s_distribution.sample(rng) : 0.0;
        for (int j = 0; j < spec.m_perturbations; ++j) {
            const double offset =
                spec.dependent_mode ? shared : spec.s_distribution.sample(rng);
            const double p = clamp01(theta_i + offset, &clamped);
            ++draws;
            char pert[24];
            std::snprintf(pert, sizeof(pert), "pert-%04d", j);
            for (int r = 0; r < spec.repeats_per_perturbation; ++r) {
                records.push_back({model, item, pert, r, rng.bernoulli(p) ? 1 : 0});
            }
        }
        out.truth.item_accuracy[item] = theta_i;
    }
    out.truth.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(draws);
    out.matrix = ResponseMatrix(std::move(records));
    return out;
}

IrtData generate_irt(const SyntheticSpec& spec) {
    validate_common(spec);
    require(static_cast<int>(spec.items.size()) == spec.n_items, ErrorCode::Validation,
            "items must list one (a,b) pair per item");
    require(static_cast<int>(spec.theta_models.size()) == spec.k_models, ErrorCode::Validation,
            "theta_models must list one ability per model");
    require(spec.repeats_per_perturbation == 1, ErrorCode::Validation,
            "latent-ability generation draws one sample per perturbation");
    for (const auto& item : spec.items) validate(item);

    IrtData out;
    out.counts.m = spec.m_perturbations;
    for (int i = 0; i < spec.n_items; ++i) out.counts.item_ids.push_back(item_name(i));
    for (int k = 0; k < spec.k_models; ++k) out.counts.model_ids.push_back(model_name(k));
    out.counts.counts.assign(
        static_cast<std::size_t>(spec.n_items) * static_cast<std::size_t>(spec.k_models), 0);

    std::vector<ResponseRecord> records;
    records.reserve(static_cast<std::size_t>(spec.n_items) * spec.k_models *
                    spec.m_perturbations);
    long clamped = 0;
    long draws = 0;

    for (int i = 0; i < spec.n_items; ++i) {
        const ItemParams& item = spec.items[static_cast<std::size_t>(i)];
        // Offsets belong to the prompt text, not the model: draw once per
        // (item, perturbation) and reuse across models.
        Rng offset_rng(substream_seed(spec.seed, "irt-offsets", static_cast<std::uint64_t>(i)));
        std::vector<double> offsets(static_cast<std::size_t>(spec.m_perturbations), 0.0);
        if (spec.dependent_mode) {
            const double shared = spec.s_distribution.sample(offset_rng);
            std::fill(offsets.begin(), offsets.end(), shared);
        } else {
            for (auto& o : offsets) o = spec.s_distribution.sample(offset_rng);
        }

        for (int k = 0; k < spec.k_models; ++k) {
            Rng cell_rng(substream_seed(spec.seed, "irt-cell", static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(k)));
            const double theta_k = spec.theta_models[static_cast<std::size_t>(k)];
            const double base = p_bar(theta_k, item);
            int y = 0;
            for (int j = 0; j < spec.m_perturbations; ++j) {
                const double raw = base + offsets[static_cast<std::size_t>(j)];
                if (raw < kProbClamp || raw > 1.0 - kProbClamp) ++clamped;
                ++draws;
                const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
                const int correct = cell_rng.bernoulli(p) ? 1 : 0;
                y += correct;
                char pert[24];
                std::snprintf(pert, sizeof(pert), "pert-%04d", j);
                records.push_back({model_name(k), item_name(i), pert, 0, correct});
            }
            out.counts.counts[static_cast<std::size_t>(i) * spec.k_models + k] = y;
        }
        out.truth.items.push_back(item);
    }
    for (int k = 0; k < spec.k_models; ++k) {
        out.truth.theta[model_name(k)] = spec.theta_models[static_cast<std::size_t>(k)];
    }
    out.truth.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(draws);
    out.matrix = ResponseMatrix(std::move(records));
    return out;
}

double oracle_grid_mle(std::span<const irt::AdministeredItem> items, double lo, double hi,
                       double step) {
    require(!items.empty(), ErrorCode::Domain, "no items for the grid oracle");
    require(step > 0.0 && hi > lo, ErrorCode::Domain, "bad grid");
    const long n_steps = static_cast<long>(std::floor((hi - lo) / step));
    double best_theta = lo;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (long g = 0; g <= n_steps; ++g) {
        const double theta = lo + static_cast<double>(g) * step;
        double ll = 0.0;
        for (const auto& it : items) {
            const double z = it.item.a * (theta - it.item.b);
            const double p = 1.0 / (1.0 + std::exp(-z));
            ll += it.m * (it.phi * std::log(p) + (1.0 - it.phi) * std::log(1.0 - p));
        }
        if (ll > best_ll) {
            best_ll = ll;
            best_theta = theta;
        }
    }
    return best_theta;
}

namespace {

void enumerate_multisets(std::span<const double> means, std::size_t index, int remaining,
                         std::vector<int>& counts,
                         std::vector<std::pair<double, double>>& atoms) {
    const std::size_t n = means.size();
    if (index + 1 == n) {
        counts[index] = remaining;
        // multinomial(n; counts) / n^n
        double log_coeff = std::lgamma(static_cast<double>(n) + 1.0);
        for (int c : counts) log_coeff -= std::lgamma(static_cast<double>(c) + 1.0);
        const double prob =
            std::exp(log_coeff - static_cast<double>(n) * std::log(static_cast<double>(n)));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += counts[i] * means[i];
        atoms.emplace_back(sum / static_cast<double>(n), prob);
        counts[index] = 0;
        return;
    }
    for (int c = 0; c <= remaining; ++c) {
        counts[index] = c;
        enumerate_multisets(means, index + 1, remaining - c, counts, atoms);
    }
    counts[index] = 0;
}

}  // namespace

ExactBootstrapDistribution oracle_exhaustive_bootstrap(std::span<const double> per_item_means,
                                                       double alpha) {
    const std::size_t n = per_item_means.size();
    require(n >= 1, ErrorCode::Domain, "no per-item means");
    require(n <= 6, ErrorCode::Domain, "exhaustive enumeration supports at most 6 items");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::Domain, "alpha must be in (0,1)");

    ExactBootstrapDistribution out;
    std::vector<std::pair<double, double>> atoms;
    if (n == 1) {
        atoms.emplace_back(per_item_means[0], 1.0);
    } else {
        std::vector<int> counts(n, 0);
        enumerate_multisets(per_item_means, 0, static_cast<int>(n), counts, atoms);
    }
    std::sort(atoms.begin(), atoms.end());
    // Resamples that share the same real-valued mean can differ by a few ulps
    // depending on summation order; merge them into one atom.
    constexpr double kMergeTol = 1e-12;
    for (const auto& [value, prob] : atoms) {
        if (!out.values.empty() && value - out.values.back() <= kMergeTol) {
            out.probabilities.back() += prob;
        } else {
            out.values.push_back(value);
            out.probabilities.push_back(prob);
        }
    }

    auto quantile = [&](double q) {
        double cdf = 0.0;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            cdf += out.probabilities[i];
            if (cdf >= q - 1e-15) return out.values[i];
        }
        return out.values.back();
    };
    out.lower = quantile(alpha / 2.0);
    out.upper = quantile(1.0 - alpha / 2.0);
    return out;
}

}  // namespace capinfer::synthetic

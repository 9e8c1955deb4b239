#include "betarce/models.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "betarce/errors.hpp"

namespace betarce {

std::string to_string(ChangeType c) {
    switch (c) {
        case ChangeType::Architecture: return "architecture";
        case ChangeType::Bootstrap: return "bootstrap";
        case ChangeType::Seed: return "seed";
    }
    return "seed";
}

ChangeType change_type_from_string(const std::string& s) {
    if (s == "architecture") return ChangeType::Architecture;
    if (s == "bootstrap") return ChangeType::Bootstrap;
    if (s == "seed") return ChangeType::Seed;
    throw DomainError("unknown model change type '" + s + "' (expected architecture, bootstrap or seed)");
}

void ModelSpaceSpec::validate() const {
    base.validate();
    if (change_type == ChangeType::Architecture) {
        if (layer_range.lo < 1 || layer_range.hi < layer_range.lo)
            throw DomainError("architecture space needs a nonempty layer range with lo >= 1");
        if (neuron_range.lo < 1 || neuron_range.hi < neuron_range.lo)
            throw DomainError("architecture space needs a nonempty neuron range with lo >= 1");
        if (base.model != ModelKind::Mlp) throw DomainError("architecture changes apply to the mlp model only");
    }
}

TrainValSplit split_train_valid(const Dataset& data, std::uint64_t seed, double valid_fraction) {
    std::vector<std::size_t> order(static_cast<std::size_t>(data.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_valid = static_cast<std::size_t>(valid_fraction * static_cast<double>(order.size()));
    std::vector<std::size_t> valid(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
    std::sort(valid.begin(), valid.end());
    std::sort(train.begin(), train.end());
    return {data.subset(train), data.subset(valid)};
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    if (n == 0) return idx;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

TrainingSetting base_setting(const ArchConfig& config, std::uint64_t split_seed) {
    return TrainingSetting{std::nullopt, config, split_seed, std::nullopt};
}

TrainingSetting sample_space(const ModelSpaceSpec& spec, Rng& rng) {
    TrainingSetting s{spec.change_type, spec.base, spec.split_seed, std::nullopt};
    switch (spec.change_type) {
        case ChangeType::Architecture: {
            // Depth and width are drawn jointly.
            std::uniform_int_distribution<int> layers(spec.layer_range.lo, spec.layer_range.hi);
            std::uniform_int_distribution<int> neurons(spec.neuron_range.lo, spec.neuron_range.hi);
            s.config.layers = layers(rng);
            s.config.neurons_per_layer = neurons(rng);
            s.config.seed = rng();
            break;
        }
        case ChangeType::Bootstrap:
            s.bootstrap_seed = rng();
            break;
        case ChangeType::Seed:
            s.config.seed = rng();
            break;
    }
    return s;
}

ClassifierPtr train_from_setting(const Dataset& data, const TrainingSetting& setting) {
    auto split = split_train_valid(data, setting.split_seed);
    if (setting.bootstrap_seed) {
        Rng rng(*setting.bootstrap_seed);
        const auto idx = bootstrap_indices(static_cast<std::size_t>(split.train.rows()), rng);
        split.train = split.train.subset(idx);
    }
    auto model = train_classifier(split.train, split.valid, setting.config);
    std::const_pointer_cast<Classifier>(model)->set_provenance(setting);
    return model;
}

int Ensemble::input_dim() const { return members.empty() ? 0 : members.front()->input_dim(); }

Ensemble Ensemble::prefix(int k) const {
    if (k < 1 || k > size()) throw EnsembleSizeError("prefix size out of range");
    Ensemble out{std::vector<ClassifierPtr>(members.begin(), members.begin() + k), space, seed_stream};
    return out;
}

Ensemble build_ensemble(const Dataset& data, const ModelSpaceSpec& spec, int k, std::uint64_t seed) {
    if (k < 1) throw DomainError("ensemble size k must be at least 1");
    spec.validate();
    Rng rng(seed);
    Ensemble ensemble{{}, spec, seed};
    ensemble.members.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const auto setting = sample_space(spec, rng);
        try {
            ensemble.members.push_back(train_from_setting(data, setting));
        } catch (const Error& e) {
            throw Error(e.code(), "ensemble member " + std::to_string(i) + ": " + e.what());
        }
    }
    return ensemble;
}

std::vector<int> count_agreements(const Ensemble& ensemble, const Matrix& x, int target) {
    std::vector<int> counts(static_cast<std::size_t>(x.rows()), 0);
    for (const auto& member : ensemble.members) {
        const auto labels = member->predict(x);
        for (std::size_t i = 0; i < labels.size(); ++i) counts[i] += labels[i] == target ? 1 : 0;
    }
    return counts;
}

}  // namespace betarce

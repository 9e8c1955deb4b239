#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "betarce/dataset.hpp"
#include "betarce/rng.hpp"

namespace betarce {

enum class ModelKind { Mlp, Logistic };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Hyperparameters of one training run. Defaults are the fixed settings
/// used for the neural classifiers (3 x 128 ReLU, Adam 1e-3, batch 128,
/// patience 5, at most 100 epochs).
struct ArchConfig {
    ModelKind model = ModelKind::Mlp;
    int layers = 3;
    int neurons_per_layer = 128;
    double learning_rate = 1e-3;
    int max_epochs = 100;
    int batch_size = 128;
    int patience = 5;
    double dropout = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

enum class ChangeType { Architecture, Bootstrap, Seed };

std::string to_string(ChangeType c);
ChangeType change_type_from_string(const std::string& s);

struct IntRange {
    int lo = 0;
    int hi = 0;
    bool operator==(const IntRange&) const = default;
};

/// The admissible model space: how a member differs from the base model.
struct ModelSpaceSpec {
    ChangeType change_type = ChangeType::Seed;
    ArchConfig base;
    IntRange layer_range{3, 5};
    IntRange neuron_range{64, 256};
    /// Seed of the 80/20 train/validation split shared by every model of a fold.
    std::uint64_t split_seed = 0;

    void validate() const;
};

/// Everything needed to retrain one classifier bit-for-bit from its dataset.
struct TrainingSetting {
    /// Absent for the base model M.
    std::optional<ChangeType> change;
    ArchConfig config;
    std::uint64_t split_seed = 0;
    /// Present for bootstrap members: seed of the with-replacement resample.
    std::optional<std::uint64_t> bootstrap_seed;

    bool operator==(const TrainingSetting&) const = default;
};

class Classifier {
public:
    virtual ~Classifier() = default;

    virtual int input_dim() const = 0;
    /// P(y = 1 | x) for each row.
    virtual Vector predict_proba(const Matrix& x) const = 0;
    virtual std::vector<double> parameters() const = 0;
    virtual void save(std::ostream& os) const = 0;

    double predict_proba(const Vector& x) const;
    int predict(const Vector& x) const;
    std::vector<int> predict(const Matrix& x) const;

    const TrainingSetting& provenance() const { return provenance_; }
    void set_provenance(TrainingSetting p) { provenance_ = std::move(p); }

    static std::unique_ptr<Classifier> load(std::istream& is);
    void save_file(const std::filesystem::path& path) const;
    static std::unique_ptr<Classifier> load_file(const std::filesystem::path& path);

private:
    TrainingSetting provenance_;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

/// Trains a classifier of config.model kind. Early stopping on validation loss.
ClassifierPtr train_classifier(const Dataset& train, const Dataset& valid, const ArchConfig& config);

struct TrainValSplit {
    Dataset train;
    Dataset valid;
};

/// Seeded 80/20 split of a training fold.
TrainValSplit split_train_valid(const Dataset& data, std::uint64_t seed, double valid_fraction = 0.2);

/// Indices of a same-size with-replacement resample.
std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng);

TrainingSetting base_setting(const ArchConfig& config, std::uint64_t split_seed);

/// Draws one training setting from the space.
TrainingSetting sample_space(const ModelSpaceSpec& spec, Rng& rng);

/// Retrains from a recorded setting: split, optional resample, then train.
ClassifierPtr train_from_setting(const Dataset& data, const TrainingSetting& setting);

/// k members drawn from one admissible model space.
struct Ensemble {
    std::vector<ClassifierPtr> members;
    ModelSpaceSpec space;
    std::uint64_t seed_stream = 0;

    int size() const { return static_cast<int>(members.size()); }
    int input_dim() const;
    /// First k members, sharing the trained models.
    Ensemble prefix(int k) const;
};

Ensemble build_ensemble(const Dataset& data, const ModelSpaceSpec& spec, int k, std::uint64_t seed);

/// Agreement count with `target` per row of `x`, over every member.
std::vector<int> count_agreements(const Ensemble& ensemble, const Matrix& x, int target);

}  // namespace betarce

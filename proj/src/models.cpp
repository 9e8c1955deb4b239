#include "betarce/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "betarce/errors.hpp"

namespace betarce {

namespace {

using Dense = Eigen::MatrixXd;

constexpr char kMagic[4] = {'B', 'R', 'C', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Numerically stable binary cross-entropy of a logit.
double bce_from_logit(double z, int y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Layer {
    Dense weights;  // in x out
    Eigen::VectorXd bias;
};

// Feed-forward network with ReLU hidden layers and a single sigmoid output.
// Zero hidden layers is plain logistic regression.
class FeedForward final : public Classifier {
public:
    FeedForward(ModelKind kind, std::vector<Layer> layers) : kind_(kind), layers_(std::move(layers)) {}

    int input_dim() const override { return static_cast<int>(layers_.front().weights.rows()); }

    Vector predict_proba(const Matrix& x) const override {
        if (x.cols() != input_dim()) throw DimensionError("input has " + std::to_string(x.cols()) +
                                                          " features, model expects " + std::to_string(input_dim()));
        const Eigen::VectorXd z = logits(x);
        Vector p(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = sigmoid(z[i]);
        return p;
    }

    Eigen::VectorXd logits(const Matrix& x) const {
        Dense h = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Dense z = h * layers_[l].weights;
            z.rowwise() += layers_[l].bias.transpose();
            if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
            h = std::move(z);
        }
        return h.col(0);
    }

    std::vector<double> parameters() const override {
        std::vector<double> out;
        for (const auto& layer : layers_) {
            out.insert(out.end(), layer.weights.data(), layer.weights.data() + layer.weights.size());
            out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
        }
        return out;
    }

    void save(std::ostream& os) const override {
        auto put = [&os](const auto& v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
        os.write(kMagic, 4);
        put(kFormatVersion);
        put(static_cast<std::uint8_t>(kind_ == ModelKind::Mlp ? 0 : 1));
        put(static_cast<std::uint32_t>(layers_.size()));
        for (const auto& layer : layers_) {
            put(static_cast<std::uint32_t>(layer.weights.rows()));
            put(static_cast<std::uint32_t>(layer.weights.cols()));
            os.write(reinterpret_cast<const char*>(layer.weights.data()),
                     static_cast<std::streamsize>(sizeof(double) * layer.weights.size()));
            os.write(reinterpret_cast<const char*>(layer.bias.data()),
                     static_cast<std::streamsize>(sizeof(double) * layer.bias.size()));
        }
        if (!os) throw IoError("failed to write model weights");
    }

    std::vector<Layer>& layers() { return layers_; }

private:
    ModelKind kind_;
    std::vector<Layer> layers_;
};

struct AdamState {
    std::vector<Dense> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;
};

class Trainer {
public:
    Trainer(const ArchConfig& config, int input_dim) : config_(config), rng_(config.seed) {
        std::vector<int> widths{input_dim};
        if (config.model == ModelKind::Mlp)
            for (int l = 0; l < config.layers; ++l) widths.push_back(config.neurons_per_layer);
        widths.push_back(1);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const double limit = std::sqrt(6.0 / widths[l]);
            std::uniform_real_distribution<double> init(-limit, limit);
            Layer layer{Dense(widths[l], widths[l + 1]), Eigen::VectorXd::Zero(widths[l + 1])};
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
                for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = init(rng_);
            layers_.push_back(std::move(layer));
            adam_.mw.push_back(Dense::Zero(widths[l], widths[l + 1]));
            adam_.vw.push_back(Dense::Zero(widths[l], widths[l + 1]));
            adam_.mb.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
            adam_.vb.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
        }
    }

    std::vector<Layer> fit(const Dataset& train, const Dataset& valid) {
        const auto n = static_cast<std::size_t>(train.rows());
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const Dataset& monitor = valid.rows() > 0 ? valid : train;

        double best = std::numeric_limits<double>::infinity();
        std::vector<Layer> best_layers = layers_;
        int stale = 0;
        for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng_);
            for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config_.batch_size)) {
                const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config_.batch_size));
                step(train, std::span<const std::size_t>(order.data() + start, stop - start));
            }
            const double loss = mean_loss(monitor);
            if (loss < best) {
                best = loss;
                best_layers = layers_;
                stale = 0;
            } else if (++stale >= config_.patience) {
                break;
            }
        }
        return best_layers;
    }

private:
    double mean_loss(const Dataset& data) const {
        FeedForward view(config_.model, layers_);
        const Eigen::VectorXd z = view.logits(data.features);
        double total = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) total += bce_from_logit(z[i], data.labels[static_cast<std::size_t>(i)]);
        return total / static_cast<double>(z.size());
    }

    void step(const Dataset& train, std::span<const std::size_t> batch) {
        const auto m = static_cast<Eigen::Index>(batch.size());
        Dense x(m, train.dim());
        Eigen::VectorXd y(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            x.row(i) = train.features.row(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(i)]));
            y[i] = train.labels[batch[static_cast<std::size_t>(i)]];
        }

        // Forward, keeping pre-activations and dropout masks.
        std::vector<Dense> inputs{x};
        std::vector<Dense> masks;
        const std::size_t depth = layers_.size();
        std::bernoulli_distribution keep(1.0 - config_.dropout);
        for (std::size_t l = 0; l < depth; ++l) {
            Dense z = inputs.back() * layers_[l].weights;
            z.rowwise() += layers_[l].bias.transpose();
            if (l + 1 < depth) {
                Dense mask = (z.array() > 0.0).cast<double>();
                if (config_.dropout > 0.0) {
                    for (Eigen::Index j = 0; j < mask.cols(); ++j)
                        for (Eigen::Index i = 0; i < mask.rows(); ++i)
                            mask(i, j) *= keep(rng_) ? 1.0 / (1.0 - config_.dropout) : 0.0;
                }
                masks.push_back(mask);
                inputs.push_back(z.cwiseProduct(mask));
            } else {
                inputs.push_back(std::move(z));
            }
        }

        Dense grad(m, 1);
        for (Eigen::Index i = 0; i < m; ++i) grad(i, 0) = (sigmoid(inputs.back()(i, 0)) - y[i]) / static_cast<double>(m);

        ++adam_.step;
        const double lr_t = config_.learning_rate * std::sqrt(1.0 - std::pow(kAdamBeta2, adam_.step)) /
                            (1.0 - std::pow(kAdamBeta1, adam_.step));
        for (std::size_t l = depth; l-- > 0;) {
            const Dense gw = inputs[l].transpose() * grad;
            const Eigen::VectorXd gb = grad.colwise().sum().transpose();
            if (l > 0) grad = (grad * layers_[l].weights.transpose()).cwiseProduct(masks[l - 1]);
            adam_.mw[l] = kAdamBeta1 * adam_.mw[l] + (1.0 - kAdamBeta1) * gw;
            adam_.vw[l] = kAdamBeta2 * adam_.vw[l] + (1.0 - kAdamBeta2) * gw.cwiseProduct(gw);
            adam_.mb[l] = kAdamBeta1 * adam_.mb[l] + (1.0 - kAdamBeta1) * gb;
            adam_.vb[l] = kAdamBeta2 * adam_.vb[l] + (1.0 - kAdamBeta2) * gb.cwiseProduct(gb);
            layers_[l].weights.array() -= lr_t * adam_.mw[l].array() / (adam_.vw[l].array().sqrt() + kAdamEps);
            layers_[l].bias.array() -= lr_t * adam_.mb[l].array() / (adam_.vb[l].array().sqrt() + kAdamEps);
        }
    }

    ArchConfig config_;
    Rng rng_;
    std::vector<Layer> layers_;
    AdamState adam_;
};

}  // namespace

std::string to_string(ModelKind k) { return k == ModelKind::Mlp ? "mlp" : "logistic"; }

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "logistic") return ModelKind::Logistic;
    throw DomainError("unknown model kind '" + s + "' (expected mlp or logistic)");
}

void ArchConfig::validate() const {
    if (model == ModelKind::Mlp && (layers < 1 || neurons_per_layer < 1))
        throw DomainError("an MLP needs layers >= 1 and neurons_per_layer >= 1");
    if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
    if (max_epochs < 1 || batch_size < 1 || patience < 1)
        throw DomainError("max_epochs, batch_size and patience must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("dropout must lie in [0,1)");
}

double Classifier::predict_proba(const Vector& x) const {
    Matrix row(1, x.size());
    row.row(0) = x.transpose();
    return predict_proba(row)[0];
}

int Classifier::predict(const Vector& x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }

std::vector<int> Classifier::predict(const Matrix& x) const {
    const Vector p = predict_proba(x);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p[i] >= 0.5 ? 1 : 0;
    return out;
}

std::unique_ptr<Classifier> Classifier::load(std::istream& is) {
    auto get = [&is](auto& v) {
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!is) throw IoError("truncated model file");
    };
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a model file (bad magic)");
    std::uint32_t version = 0;
    get(version);
    if (version != kFormatVersion) throw IoError("unsupported model file version " + std::to_string(version));
    std::uint8_t kind = 0;
    std::uint32_t depth = 0;
    get(kind);
    get(depth);
    if (depth == 0 || depth > 1024) throw IoError("corrupt model file (layer count)");
    std::vector<Layer> layers;
    for (std::uint32_t l = 0; l < depth; ++l) {
        std::uint32_t rows = 0, cols = 0;
        get(rows);
        get(cols);
        if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) throw IoError("corrupt model file (shape)");
        Layer layer{Dense(rows, cols), Eigen::VectorXd(cols)};
        is.read(reinterpret_cast<char*>(layer.weights.data()), static_cast<std::streamsize>(sizeof(double) * rows * cols));
        is.read(reinterpret_cast<char*>(layer.bias.data()), static_cast<std::streamsize>(sizeof(double) * cols));
        if (!is) throw IoError("truncated model file");
        layers.push_back(std::move(layer));
    }
    return std::make_unique<FeedForward>(kind == 0 ? ModelKind::Mlp : ModelKind::Logistic, std::move(layers));
}

void Classifier::save_file(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    save(os);
}

std::unique_ptr<Classifier> Classifier::load_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return load(is);
}

ClassifierPtr train_classifier(const Dataset& train, const Dataset& valid, const ArchConfig& config) {
    config.validate();
    if (train.rows() == 0) throw DegenerateDataError("training set is empty");
    if (valid.rows() > 0 && valid.dim() != train.dim())
        throw SchemaError("train and validation sets have different feature counts");
    if (!train.has_both_classes()) throw DegenerateDataError("training set contains a single class");
    Trainer trainer(config, static_cast<int>(train.dim()));
    auto layers = trainer.fit(train, valid);
    auto model = std::make_shared<FeedForward>(config.model, std::move(layers));
    model->set_provenance(base_setting(config, 0));
    return model;
}

}  // namespace betarce

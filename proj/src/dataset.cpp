#include "betarce/dataset.hpp"

#include <cstring>
#include <iomanip>
#include <random>
#include <sstream>

#include "betarce/errors.hpp"
#include "betarce/rng.hpp"

namespace betarce {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), dim());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = static_cast<Eigen::Index>(indices[i]);
        if (src >= rows()) throw DomainError("subset index out of range");
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(src);
        out.labels.push_back(labels[indices[i]]);
    }
    out.feature_names = feature_names;
    out.scaling = scaling;
    return out;
}

Vector Dataset::unscale(const Vector& x) const {
    if (x.size() != dim()) throw DimensionError("unscale: vector dimension does not match dataset");
    Vector out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const auto& s = scaling.at(static_cast<std::size_t>(j));
        out[j] = s.min + x[j] * (s.max - s.min);
    }
    return out;
}

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::int64_t shape[2] = {rows(), dim()};
    mix(shape, sizeof(shape));
    for (Eigen::Index i = 0; i < rows(); ++i)
        for (Eigen::Index j = 0; j < dim(); ++j) {
            const double v = features(i, j);
            mix(&v, sizeof v);
        }
    for (int y : labels) {
        const std::int32_t v = y;
        mix(&v, sizeof v);
    }
    return h;
}

bool Dataset::has_both_classes() const {
    bool zero = false, one = false;
    for (int y : labels) (y == 0 ? zero : one) = true;
    return zero && one;
}

std::string fingerprint_hex(std::uint64_t fp) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fp;
    return os.str();
}

Dataset make_two_gaussians(std::size_t n, int dim, double separation, double spread, std::uint64_t seed) {
    if (n < 2 || dim < 1) throw DomainError("make_two_gaussians needs n >= 2 and dim >= 1");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, spread);
    Matrix raw(static_cast<Eigen::Index>(n), dim);
    std::vector<int> labels(n);
    const double offset = separation / (2.0 * std::sqrt(static_cast<double>(dim)));
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i < n / 2 ? 0 : 1;
        labels[i] = y;
        for (int j = 0; j < dim; ++j) raw(static_cast<Eigen::Index>(i), j) = (y ? offset : -offset) + normal(rng);
    }
    Dataset d;
    d.features = raw;
    d.labels = std::move(labels);
    for (int j = 0; j < dim; ++j) {
        d.feature_names.push_back("x" + std::to_string(j));
        const double lo = raw.col(j).minCoeff();
        const double hi = raw.col(j).maxCoeff();
        d.scaling.push_back({lo, hi});
        d.features.col(j) = (raw.col(j).array() - lo) / (hi - lo);
    }
    return d;
}

}  // namespace betarce

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace betarce {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct FeatureScale {
    double min = 0.0;
    double max = 0.0;
};

/// Min-max scaled feature matrix with binary labels.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<FeatureScale> scaling;

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    Vector row(Eigen::Index i) const { return features.row(i).transpose(); }

    /// Rows picked by index, repeats allowed. Keeps names and scaling.
    Dataset subset(std::span<const std::size_t> indices) const;

    /// Raw-unit value of a scaled feature vector.
    Vector unscale(const Vector& x) const;

    /// FNV-1a over the shape, the scaled values and the labels.
    std::uint64_t fingerprint() const;

    bool has_both_classes() const;
};

std::string fingerprint_hex(std::uint64_t fp);

/// Two isotropic Gaussian blobs in d dimensions, one per class, already scaled.
Dataset make_two_gaussians(std::size_t n, int dim, double separation, double spread, std::uint64_t seed);

}  // namespace betarce

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "betarce/models.hpp"

namespace betarce {

/// On-disk ensemble: member_NNN.bin weight files, an optional base.bin
/// holding the explained model, and manifest.json with the space, each
/// member's training setting, the dataset fingerprint and library version.
struct ModelStore {
    Ensemble ensemble;
    ClassifierPtr base;
    std::uint64_t dataset_fingerprint = 0;
};

void save_model_store(const std::filesystem::path& dir, const Ensemble& ensemble, const ClassifierPtr& base,
                      std::uint64_t dataset_fingerprint);

ModelStore load_model_store(const std::filesystem::path& dir);

}  // namespace betarce

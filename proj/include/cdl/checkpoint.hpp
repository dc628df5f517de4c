#pragma once

// Model and factor checkpoints. Values are stored as hexfloat text so a
// save/load round trip is bit-exact while the files stay inspectable.

#include <filesystem>

#include "cdl/trainer.hpp"

namespace cdl {

/// Writes variant, hyperparameters, widths, row-major weights and biases.
void save_network(const Model& model, const std::filesystem::path& path);
/// Loads everything save_network wrote into `model` (factors untouched).
void load_network(const std::filesystem::path& path, Model& model);

/// U and V with a dimensions header.
void save_factors(const LatentFactors& factors,
                  const std::filesystem::path& path);
LatentFactors load_factors(const std::filesystem::path& path);
/// Decimal (%.17g) rendering of the factor checkpoint for inspection.
void export_factors_text(const LatentFactors& factors,
                         const std::filesystem::path& path);

/// Model directory layout: model.ckpt + factors.ckpt.
void save_model(const Model& model, const std::filesystem::path& dir);
Model load_model(const std::filesystem::path& dir);

}  // namespace cdl

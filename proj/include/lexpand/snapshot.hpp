#pragma once

#include "lexpand/predictor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace lexpand {

inline constexpr int kSnapshotVersion = 1;

struct SnapshotMetadata {
  std::string source_lexicon;      // free-form id of the training lexicon
  bool normalized_targets = false; // regressor trained on scores in [-1, 1]
  nlohmann::json extra = nlohmann::json::object();
};

// Self-describing JSON document: format tag, version, model kind, dimensions,
// class order and named parameter blocks ({rows, cols, data}) in row-major
// order. Doubles are written with round-trip precision, so a reloaded model
// is bitwise identical to the saved one.
nlohmann::json model_to_json(const TrainedModel& model, const SnapshotMetadata& metadata = {});

struct LoadedModel {
  TrainedModel model;
  SnapshotMetadata metadata;
  std::string id;
};

LoadedModel model_from_json(const nlohmann::json& doc);

void save_model(const TrainedModel& model, const SnapshotMetadata& metadata, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

// Stable hash of the serialized parameters (metadata excluded).
std::string snapshot_id(const TrainedModel& model);

std::string model_kind_tag(const TrainedModel& model);

}  // namespace lexpand

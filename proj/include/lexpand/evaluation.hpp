#pragma once

#include "lexpand/baselines.hpp"
#include "lexpand/embedding_store.hpp"
#include "lexpand/lexicon.hpp"
#include "lexpand/predictor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lexpand {

enum class ModelKind { nlse, linear, l1, pca };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // throws Error on unknown names

using HyperParams = std::vector<std::pair<std::string, double>>;

double param(const HyperParams& params, std::string_view name);
std::string format_params(const HyperParams& params);  // "a=1;b=0.5"

struct HyperAxis {
  std::string name;
  std::vector<double> values;
};

// Named candidate lists. Cells enumerate the cartesian product with the first
// axis outermost; that order breaks ties during selection.
struct HyperGrid {
  std::vector<HyperAxis> axes;

  std::size_t size() const noexcept;
  std::vector<HyperParams> cells() const;
  // Replaces the values of an existing axis; returns false if the grid has no such axis.
  bool override_axis(std::string_view name, std::vector<double> values);
};

// Default search ranges.
//   nlse:   subspace_size {3,5,10,15,20} x learning_rate {1e-3,1e-2,5e-2,1e-1,5e-1}
//   linear: C {1e-2,1e-1,1,10,50,100,150}, l2 strength lambda = 1/C
//   l1:     lambda {1e-4,1e-3,1e-2,1e-1,1,10}
//   pca:    components {3,5,10,15,20} x C (as linear)
HyperGrid default_grid(ModelKind kind);

// RBF kernel widths of the kernel baselines. No kernel model is built; the
// list is kept so configuration files can carry the full set of ranges.
const std::vector<double>& rbf_kernel_widths();

struct SearchOptions {
  int max_epochs = 200;  // NLSE epoch budget per cell
  int patience = 10;
  LinearConfig linear;
  bool refit_on_train_dev = true;
  std::size_t workers = 1;
};

struct CellResult {
  HyperParams params;
  bool ok = false;
  std::string error;
  double dev_score = 0.0;
  int best_epoch = 0;  // NLSE only
};

struct EvalReport {
  std::string task;
  ModelKind kind = ModelKind::nlse;
  HyperParams chosen;
  std::string metric;  // macro_f1, kendall_tau or accuracy
  double dev_score = 0.0;
  double test_score = 0.0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::size_t train_size = 0;
  std::size_t dev_size = 0;
  std::size_t test_size = 0;
  std::vector<CellResult> cells;
};

struct TrainedCell {
  TrainedModel model;
  int best_epoch = 0;
};

// Trains one grid cell of `kind` on `train`, using `dev` for NLSE early stopping
// (an empty dev runs max_epochs epochs).
TrainedCell train_cell(ModelKind kind, const HyperParams& params, const EmbeddingMatrix& embeddings,
                       const Lexicon& train, const Lexicon& dev, std::uint64_t seed, const SearchOptions& options);

// Trains every cell on train and scores it on dev; picks the best dev score
// (first cell wins ties), refits the chosen cell on train + dev (NLSE runs for
// the chosen cell's best epoch count) unless disabled, and scores test.
// A failing cell is logged and skipped; the search fails only if every cell does.
EvalReport grid_search(const std::string& task, ModelKind kind, const HyperGrid& grid, const DatasetSplit& split,
                       const EmbeddingMatrix& embeddings, std::uint64_t seed, const SearchOptions& options = {});

// Same, also returning the final (refitted) model.
std::pair<EvalReport, TrainedModel> grid_search_with_model(const std::string& task, ModelKind kind,
                                                           const HyperGrid& grid, const DatasetSplit& split,
                                                           const EmbeddingMatrix& embeddings, std::uint64_t seed,
                                                           const SearchOptions& options = {});

struct CurvePoint {
  ModelKind kind = ModelKind::nlse;
  double fraction = 0.0;
  std::size_t train_size = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over trials
  std::vector<double> scores;
};

struct CurveOptions {
  std::vector<double> fractions;  // ascending, in (0, 1]
  std::size_t trials = 1;
  std::uint64_t seed = 1;
};

// For each trial a random order of the training part is drawn; a fraction f
// keeps the first round(f |train|) items of that order (so smaller samples nest
// inside larger ones), restored to their original order. Each subsample is
// grid-searched per kind against the unchanged dev and test parts. Trial 0 uses
// `seed` itself, so fraction 1 with one trial reproduces grid_search exactly.
std::vector<CurvePoint> learning_curve(const std::string& task, std::span<const ModelKind> kinds,
                                       std::span<const HyperGrid> grids, const DatasetSplit& split,
                                       const EmbeddingMatrix& embeddings, const CurveOptions& curve,
                                       const SearchOptions& options = {});

// One summary row per report followed by one row per grid cell.
void write_reports_csv(std::span<const EvalReport> reports, std::ostream& out);
nlohmann::json report_to_json(const EvalReport& report);
void write_curve_csv(std::span<const CurvePoint> points, std::ostream& out);

}  // namespace lexpand

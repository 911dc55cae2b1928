#include "lexpand/evaluation.hpp"

#include "lexpand/error.hpp"
#include "lexpand/logging.hpp"
#include "lexpand/parallel.hpp"
#include "lexpand/random.hpp"
#include "lexpand/subspace_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace lexpand {
namespace {

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string format_compact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Regularizer regularizer_for(ModelKind kind) { return kind == ModelKind::l1 ? Regularizer::l1 : Regularizer::l2; }

double l2_strength_from_cost(double cost) {
  if (!(cost > 0.0)) throw Error("cost C must be positive");
  return 1.0 / cost;
}

void check_search_inputs(const DatasetSplit& split) {
  if (size_of(split.train) == 0) throw Error("empty training part");
  if (size_of(split.dev) == 0) throw Error("grid search needs a non-empty dev part");
  if (size_of(split.test) == 0) throw Error("grid search needs a non-empty test part");
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::nlse: return "nlse";
    case ModelKind::linear: return "linear";
    case ModelKind::l1: return "l1";
    case ModelKind::pca: return "pca";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "nlse") return ModelKind::nlse;
  if (name == "linear") return ModelKind::linear;
  if (name == "l1") return ModelKind::l1;
  if (name == "pca") return ModelKind::pca;
  throw Error("unknown model '" + std::string(name) + "' (expected nlse, linear, l1 or pca)");
}

double param(const HyperParams& params, std::string_view name) {
  for (const auto& [key, value] : params) {
    if (key == name) return value;
  }
  throw Error("missing hyper-parameter '" + std::string(name) + "'");
}

std::string format_params(const HyperParams& params) {
  std::string out;
  for (const auto& [key, value] : params) {
    if (!out.empty()) out += ';';
    out += key + "=" + format_compact(value);
  }
  return out;
}

std::size_t HyperGrid::size() const noexcept {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::vector<HyperParams> HyperGrid::cells() const {
  std::vector<HyperParams> out;
  const std::size_t n = size();
  out.reserve(n);
  for (std::size_t flat = 0; flat < n; ++flat) {
    HyperParams cell(axes.size());
    std::size_t rem = flat;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& axis = axes[a];
      cell[a] = {axis.name, axis.values[rem % axis.values.size()]};
      rem /= axis.values.size();
    }
    out.push_back(std::move(cell));
  }
  return out;
}

bool HyperGrid::override_axis(std::string_view name, std::vector<double> values) {
  for (auto& a : axes) {
    if (a.name == name) {
      if (values.empty()) throw Error("grid axis '" + a.name + "' must not be empty");
      a.values = std::move(values);
      return true;
    }
  }
  return false;
}

HyperGrid default_grid(ModelKind kind) {
  const std::vector<double> costs{1e-2, 1e-1, 1, 10, 50, 100, 150};
  const std::vector<double> sizes{3, 5, 10, 15, 20};
  switch (kind) {
    case ModelKind::nlse:
      return {{{"subspace_size", sizes}, {"learning_rate", {1e-3, 1e-2, 5e-2, 1e-1, 5e-1}}}};
    case ModelKind::linear:
      return {{{"C", costs}}};
    case ModelKind::l1:
      return {{{"lambda", {1e-4, 1e-3, 1e-2, 1e-1, 1, 10}}}};
    case ModelKind::pca:
      return {{{"components", sizes}, {"C", costs}}};
  }
  throw Error("unknown model kind");
}

const std::vector<double>& rbf_kernel_widths() {
  static const std::vector<double> widths{1e-3, 1e-2, 1e-1, 1, 10};
  return widths;
}

TrainedCell train_cell(ModelKind kind, const HyperParams& params, const EmbeddingMatrix& embeddings,
                       const Lexicon& train, const Lexicon& dev, std::uint64_t seed, const SearchOptions& options) {
  switch (kind) {
    case ModelKind::nlse: {
      const double size = param(params, "subspace_size");
      if (size < 1 || size != std::floor(size)) throw Error("subspace_size must be a positive integer");
      TrainConfig config;
      config.subspace_size = static_cast<Eigen::Index>(size);
      config.learning_rate = param(params, "learning_rate");
      config.max_epochs = options.max_epochs;
      config.patience = options.patience;
      config.seed = seed;
      DatasetSplit parts{train, dev, dev, seed};
      auto fit = train_subspace(embeddings, parts, config);
      return {std::visit([](auto&& m) -> TrainedModel { return m; }, std::move(fit.model)), fit.trace.best_epoch};
    }
    case ModelKind::linear:
      return {train_linear(embeddings, train, Regularizer::l2, l2_strength_from_cost(param(params, "C")),
                           options.linear),
              0};
    case ModelKind::l1:
      return {train_linear(embeddings, train, Regularizer::l1, param(params, "lambda"), options.linear), 0};
    case ModelKind::pca: {
      const double k = param(params, "components");
      if (k < 1 || k != std::floor(k)) throw Error("components must be a positive integer");
      return {train_pca_linear(embeddings, train, static_cast<Eigen::Index>(k), regularizer_for(kind),
                               l2_strength_from_cost(param(params, "C")), options.linear),
              0};
    }
  }
  throw Error("unknown model kind");
}

std::pair<EvalReport, TrainedModel> grid_search_with_model(const std::string& task, ModelKind kind,
                                                           const HyperGrid& grid, const DatasetSplit& split,
                                                           const EmbeddingMatrix& embeddings, std::uint64_t seed,
                                                           const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (grid.size() == 0) throw Error("hyper-parameter grid is empty");
  check_search_inputs(split);

  EvalReport report;
  report.task = task;
  report.kind = kind;
  report.metric = metric_name(kind_of(split.train));
  report.seed = seed;
  report.train_size = size_of(split.train);
  report.dev_size = size_of(split.dev);
  report.test_size = size_of(split.test);

  const auto cells = grid.cells();
  report.cells.resize(cells.size());
  std::vector<std::optional<TrainedModel>> models(cells.size());
  parallel_for(cells.size(), options.workers, [&](std::size_t i) {
    CellResult& cell = report.cells[i];
    cell.params = cells[i];
    try {
      auto trained = train_cell(kind, cells[i], embeddings, split.train, split.dev, seed, options);
      cell.dev_score = score_lexicon(trained.model, embeddings, split.dev);
      cell.best_epoch = trained.best_epoch;
      cell.ok = true;
      models[i] = std::move(trained.model);
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = report.cells[i];
    if (!cell.ok) {
      log_error(task + "/" + to_string(kind) + " cell {" + format_params(cell.params) + "} failed: " + cell.error);
      continue;
    }
    if (!best || cell.dev_score > report.cells[*best].dev_score) best = i;
  }
  if (!best) throw Error(task + "/" + to_string(kind) + ": every grid cell failed to train");

  const CellResult& chosen = report.cells[*best];
  report.chosen = chosen.params;
  report.dev_score = chosen.dev_score;

  TrainedModel final_model = std::move(*models[*best]);
  if (options.refit_on_train_dev) {
    const Lexicon full = concatenate(split.train, split.dev);
    SearchOptions refit = options;
    if (kind == ModelKind::nlse) refit.max_epochs = std::max(1, chosen.best_epoch);
    const Lexicon no_dev = take_entries(split.dev, {});
    final_model = train_cell(kind, chosen.params, embeddings, full, no_dev, seed, refit).model;
  }
  report.test_score = score_lexicon(final_model, embeddings, split.test);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(report), std::move(final_model)};
}

EvalReport grid_search(const std::string& task, ModelKind kind, const HyperGrid& grid, const DatasetSplit& split,
                       const EmbeddingMatrix& embeddings, std::uint64_t seed, const SearchOptions& options) {
  return grid_search_with_model(task, kind, grid, split, embeddings, seed, options).first;
}

std::vector<CurvePoint> learning_curve(const std::string& task, std::span<const ModelKind> kinds,
                                       std::span<const HyperGrid> grids, const DatasetSplit& split,
                                       const EmbeddingMatrix& embeddings, const CurveOptions& curve,
                                       const SearchOptions& options) {
  if (kinds.size() != grids.size()) throw Error("learning_curve: one grid per model kind required");
  if (curve.fractions.empty()) throw Error("learning_curve: no fractions given");
  if (curve.trials < 1) throw Error("learning_curve: trials must be positive");
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    const double f = curve.fractions[i];
    if (!(f > 0.0 && f <= 1.0)) throw Error("learning_curve: fractions must lie in (0, 1]");
    if (i > 0 && f < curve.fractions[i - 1]) throw Error("learning_curve: fractions must be sorted ascending");
  }
  const std::size_t n = size_of(split.train);
  std::vector<std::size_t> sizes;
  for (const double f : curve.fractions) {
    const auto m = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    if (m < 2) {
      throw Error("learning_curve: fraction " + format_compact(f) + " leaves fewer than 2 training items");
    }
    sizes.push_back(m);
  }

  std::vector<CurvePoint> points;
  for (const auto kind : kinds) {
    for (std::size_t f = 0; f < curve.fractions.size(); ++f) {
      points.push_back({kind, curve.fractions[f], sizes[f], 0.0, 0.0, {}});
    }
  }

  for (std::size_t trial = 0; trial < curve.trials; ++trial) {
    const std::uint64_t trial_seed = trial == 0 ? curve.seed : derive_seed(curve.seed, trial);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(trial_seed, 0xc0de));
    rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t f = 0; f < sizes.size(); ++f) {
      std::vector<std::size_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes[f]));
      std::sort(keep.begin(), keep.end());
      DatasetSplit sub{take_entries(split.train, keep), split.dev, split.test, split.seed};
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        const auto report = grid_search(task, kinds[k], grids[k], sub, embeddings, trial_seed, options);
        points[k * sizes.size() + f].scores.push_back(report.test_score);
      }
    }
  }

  for (auto& p : points) {
    const double count = static_cast<double>(p.scores.size());
    p.mean = std::accumulate(p.scores.begin(), p.scores.end(), 0.0) / count;
    double ss = 0.0;
    for (double s : p.scores) ss += (s - p.mean) * (s - p.mean);
    p.stddev = std::sqrt(ss / count);
  }
  return points;
}

void write_reports_csv(std::span<const EvalReport> reports, std::ostream& out) {
  out << "task,model,row,params,metric,dev_score,test_score,best_epoch,status,seed\n";
  for (const auto& r : reports) {
    const std::string prefix = csv_field(r.task) + "," + to_string(r.kind) + ",";
    int best_epoch = 0;
    for (const auto& c : r.cells) {
      if (c.params == r.chosen && c.ok) best_epoch = c.best_epoch;
    }
    out << prefix << "summary," << csv_field(format_params(r.chosen)) << ',' << r.metric << ','
        << format_number(r.dev_score) << ',' << format_number(r.test_score) << ',' << best_epoch << ",ok,"
        << r.seed << '\n';
    for (const auto& c : r.cells) {
      out << prefix << "cell," << csv_field(format_params(c.params)) << ',' << r.metric << ','
          << (c.ok ? format_number(c.dev_score) : std::string()) << ",," << c.best_epoch << ','
          << (c.ok ? "ok" : "failed") << ',' << r.seed << '\n';
    }
  }
}

nlohmann::json report_to_json(const EvalReport& report) {
  using nlohmann::json;
  auto params_json = [](const HyperParams& p) {
    json o = json::object();
    for (const auto& [k, v] : p) o[k] = v;
    return o;
  };
  json cells = json::array();
  for (const auto& c : report.cells) {
    json cell{{"params", params_json(c.params)}, {"ok", c.ok}};
    if (c.ok) {
      cell["dev_score"] = c.dev_score;
      cell["best_epoch"] = c.best_epoch;
    } else {
      cell["error"] = c.error;
    }
    cells.push_back(std::move(cell));
  }
  return json{{"task", report.task},
              {"model", to_string(report.kind)},
              {"chosen", params_json(report.chosen)},
              {"metric", report.metric},
              {"dev_score", report.dev_score},
              {"test_score", report.test_score},
              {"seed", report.seed},
              {"seconds", report.seconds},
              {"train_size", report.train_size},
              {"dev_size", report.dev_size},
              {"test_size", report.test_size},
              {"cells", std::move(cells)}};
}

void write_curve_csv(std::span<const CurvePoint> points, std::ostream& out) {
  out << "model,fraction,train_size,trials,mean,std\n";
  for (const auto& p : points) {
    out << to_string(p.kind) << ',' << format_compact(p.fraction) << ',' << p.train_size << ',' << p.scores.size()
        << ',' << format_number(p.mean) << ',' << format_number(p.stddev) << '\n';
  }
}

}  // namespace lexpand

#include "lexpand/error.hpp"
#include "lexpand/evaluation.hpp"
#include "lexpand/expansion.hpp"
#include "lexpand/hash.hpp"
#include "lexpand/logging.hpp"
#include "lexpand/message_sentiment.hpp"
#include "lexpand/snapshot.hpp"
#include "lexpand/subspace_model.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace lexpand::cli {
namespace {

// Invalid flag combinations or values detected after parsing; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string out = ".";
  std::string log_level = "warning";
};

struct DataOptions {
  std::string embeddings;
  std::string embeddings_format = "text";
  std::string lexicon;
  std::string lexicon_kind = "continuous";
  std::string scale;
  bool label_first = false;
  bool normalize = false;
  bool filter_neutral = false;
  double neutral_band = 0.2;
  double test_fraction = 0.2;
  double dev_fraction = 0.2;
};

struct TrainOptions {
  std::string model = "nlse";
  std::vector<std::string> params;
  int max_epochs = 200;
  int patience = 10;
};

struct EvalOptions {
  std::string models = "nlse";
  std::vector<std::string> grid;
  bool no_refit = false;
  int max_epochs = 200;
  int patience = 10;
  std::string learning_curve;
  std::size_t trials = 1;
};

struct ExpandOptions {
  std::string model_file;
  std::string embeddings;
  std::string embeddings_format = "text";
  std::optional<double> min_confidence;
  std::string vocab_file;
  bool clamp = false;
};

struct ClassifyOptions {
  std::string lexicon;
  std::string scale;
  bool label_first = false;
  bool normalize = false;
  bool filter_neutral = false;
  double neutral_band = 0.2;
  std::string input = "-";
  bool labeled = false;
  std::optional<double> threshold;
  std::string calibration;
};

struct ProjectOptions {
  std::string model_file;
  std::string embeddings;
  std::string embeddings_format = "text";
  std::string tokens_file;
  std::vector<std::string> tokens;
};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid number '" + text + "' in " + what);
}

std::string format_fixed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string file_fingerprint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return to_hex(h.digest());
}

LogLevel parse_log_level(const std::string& name) {
  if (name == "info") return LogLevel::info;
  if (name == "warning") return LogLevel::warning;
  return LogLevel::error;
}

EmbeddingFormat parse_embedding_format(const std::string& name) {
  return name == "binary" ? EmbeddingFormat::binary : EmbeddingFormat::text;
}

std::optional<Scale> parse_scale(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto parts = split_list(text, ',');
  if (parts.size() != 2) throw UsageError("--scale expects MIN,MAX");
  return Scale{to_double(parts[0], "--scale"), to_double(parts[1], "--scale")};
}

// Collects the paths of every input and output for the manifest.
class Manifest {
 public:
  Manifest(std::string command, const CommonOptions& common, const CLI::App& app, std::vector<std::string> argv)
      : command_(std::move(command)), common_(common), app_(app), argv_(std::move(argv)) {}

  void input(const std::string& role, const fs::path& path) {
    inputs_[role] = json{{"path", path.string()}, {"fnv1a", file_fingerprint(path)}};
  }
  void output(const fs::path& path) { outputs_.push_back(path.filename().string()); }
  void note(const std::string& key, json value) { notes_[key] = std::move(value); }

  void write(const fs::path& dir) const {
    json doc{{"format", "lexpand-manifest"},
             {"command", command_},
             {"argv", argv_},
             {"config", app_.config_to_str(true, false)},
             {"seed", common_.seed},
             {"workers", common_.workers},
             {"versions",
              {{"lexpand", LEXPAND_VERSION},
               {"snapshot_format", kSnapshotVersion},
               {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION)},
               {"compiler", __VERSION__}}},
             {"inputs", inputs_},
             {"outputs", outputs_},
             {"notes", notes_}};
    write_json(dir / "manifest.json", doc);
  }

  static void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path.string());
  }

 private:
  std::string command_;
  const CommonOptions& common_;
  const CLI::App& app_;
  std::vector<std::string> argv_;
  json inputs_ = json::object();
  json outputs_ = json::array();
  json notes_ = json::object();
};

fs::path prepare_out_dir(const CommonOptions& common) {
  const fs::path dir = common.out;
  fs::create_directories(dir);
  return dir;
}

Lexicon load_lexicon(const std::string& path, LexiconKind kind, const std::string& scale, bool label_first,
                     bool normalize, bool filter, double band) {
  LexiconFormat format{kind, parse_scale(scale), label_first ? ColumnOrder::label_first : ColumnOrder::token_first};
  Lexicon lexicon = parse_lexicon(path, format);
  if (normalize || filter) {
    auto* continuous = std::get_if<ContinuousLexicon>(&lexicon);
    if (!continuous) throw UsageError("--normalize and --filter-neutral apply to continuous lexicons only");
    if (normalize) *continuous = normalize_to_unit_range(*continuous);
    if (filter) *continuous = filter_neutral(*continuous, band);
  }
  return lexicon;
}

struct LoadedData {
  EmbeddingMatrix embeddings;
  DatasetSplit split;
};

LoadedData load_data(const DataOptions& data, const CommonOptions& common, Manifest& manifest) {
  const LexiconKind kind =
      data.lexicon_kind == "categorical" ? LexiconKind::categorical : LexiconKind::continuous;
  Lexicon lexicon = load_lexicon(data.lexicon, kind, data.scale, data.label_first, data.normalize,
                                 data.filter_neutral, data.neutral_band);
  auto embeddings = load_embeddings(data.embeddings, parse_embedding_format(data.embeddings_format));
  manifest.input("embeddings", data.embeddings);
  manifest.input("lexicon", data.lexicon);
  lexicon = restrict_to_vocabulary(lexicon, embeddings);
  auto parts = split_dataset(lexicon, {data.test_fraction, data.dev_fraction, common.seed});
  log_info("split: " + std::to_string(size_of(parts.train)) + " train, " + std::to_string(size_of(parts.dev)) +
           " dev, " + std::to_string(size_of(parts.test)) + " test");
  return {std::move(embeddings), std::move(parts)};
}

HyperParams default_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::nlse: return {{"subspace_size", 10}, {"learning_rate", 0.05}};
    case ModelKind::linear: return {{"C", 1}};
    case ModelKind::l1: return {{"lambda", 1e-3}};
    case ModelKind::pca: return {{"components", 10}, {"C", 1}};
  }
  return {};
}

ModelKind model_kind(const std::string& name) {
  try {
    return parse_model_kind(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

json params_json(const HyperParams& params) {
  json out = json::object();
  for (const auto& [k, v] : params) out[k] = v;
  return out;
}

// ---------------------------------------------------------------- train

int run_train(const CommonOptions& common, const DataOptions& data, const TrainOptions& opts, Manifest& manifest) {
  const ModelKind kind = model_kind(opts.model);
  HyperParams params = default_params(kind);
  for (const auto& assignment : opts.params) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects name=value, got '" + assignment + "'");
    const std::string name = trim(assignment.substr(0, eq));
    auto it = std::find_if(params.begin(), params.end(), [&](const auto& p) { return p.first == name; });
    if (it == params.end()) throw UsageError("model " + opts.model + " has no hyper-parameter '" + name + "'");
    it->second = to_double(trim(assignment.substr(eq + 1)), "--param " + name);
  }

  const auto [embeddings, split] = load_data(data, common, manifest);
  SearchOptions search;
  search.max_epochs = opts.max_epochs;
  search.patience = opts.patience;
  search.workers = common.workers;

  std::optional<TrainedModel> model;
  json training = nullptr;
  if (kind == ModelKind::nlse) {
    TrainConfig config;
    config.subspace_size = static_cast<Eigen::Index>(param(params, "subspace_size"));
    config.learning_rate = param(params, "learning_rate");
    config.max_epochs = opts.max_epochs;
    config.patience = opts.patience;
    config.seed = common.seed;
    auto fit = train_subspace(embeddings, split, config);
    training = trace_to_json(fit.trace);
    model = std::visit([](auto&& m) -> TrainedModel { return m; }, std::move(fit.model));
  } else {
    model = train_cell(kind, params, embeddings, split.train, split.dev, common.seed, search).model;
  }

  const std::string metric = metric_name(kind_of(split.train));
  json trace{{"model", to_string(kind)}, {"params", params_json(params)}, {"metric", metric},
             {"seed", common.seed}, {"training", training}};
  if (size_of(split.dev) > 0) trace["dev_score"] = score_lexicon(*model, embeddings, split.dev);
  if (size_of(split.test) > 0) trace["test_score"] = score_lexicon(*model, embeddings, split.test);

  const fs::path dir = prepare_out_dir(common);
  SnapshotMetadata meta{fs::path(data.lexicon).filename().string(), data.normalize,
                        json{{"model", to_string(kind)}, {"params", params_json(params)}, {"seed", common.seed}}};
  save_model(*model, meta, dir / "model.json");
  Manifest::write_json(dir / "trace.json", trace);
  Manifest::write_json(dir / "split.json", split_to_json(split));
  for (const char* name : {"model.json", "trace.json", "split.json"}) manifest.output(dir / name);
  manifest.note("snapshot_id", snapshot_id(*model));
  manifest.write(dir);

  std::cout << to_string(kind) << " snapshot " << snapshot_id(*model);
  if (trace.contains("test_score")) std::cout << " test " << metric << ' ' << format_fixed(trace["test_score"]);
  std::cout << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

std::vector<double> parse_fractions(std::string arg) {
  if (arg.starts_with("fractions=")) arg = arg.substr(10);
  std::vector<double> out;
  for (const auto& part : split_list(arg, ',')) {
    const double f = to_double(part, "--learning-curve");
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("--learning-curve fractions must lie in (0, 1]");
    if (!out.empty() && f < out.back()) throw UsageError("--learning-curve fractions must be ascending");
    out.push_back(f);
  }
  return out;
}

int run_eval(const CommonOptions& common, const DataOptions& data, const EvalOptions& opts, Manifest& manifest) {
  std::vector<ModelKind> kinds;
  for (const auto& name : split_list(opts.models, ',')) {
    const ModelKind kind = model_kind(name);
    if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end()) throw UsageError("model '" + name + "' listed twice");
    kinds.push_back(kind);
  }
  std::vector<HyperGrid> grids;
  for (const auto kind : kinds) grids.push_back(default_grid(kind));
  for (const auto& arg : opts.grid) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw UsageError("--grid expects name=v1,v2,..., got '" + arg + "'");
    const std::string name = trim(arg.substr(0, eq));
    std::vector<double> values;
    for (const auto& v : split_list(arg.substr(eq + 1), ',')) values.push_back(to_double(v, "--grid " + name));
    bool used = false;
    for (auto& grid : grids) used = grid.override_axis(name, values) || used;
    if (!used) throw UsageError("no selected model has a hyper-parameter named '" + name + "'");
  }
  std::optional<CurveOptions> curve;
  if (!opts.learning_curve.empty()) {
    curve = CurveOptions{parse_fractions(opts.learning_curve), opts.trials, common.seed};
  }

  const auto [embeddings, split] = load_data(data, common, manifest);
  SearchOptions search;
  search.max_epochs = opts.max_epochs;
  search.patience = opts.patience;
  search.refit_on_train_dev = !opts.no_refit;
  search.workers = common.workers;
  const std::string task = fs::path(data.lexicon).stem().string();
  const fs::path dir = prepare_out_dir(common);

  if (curve) {
    const auto points = learning_curve(task, kinds, grids, split, embeddings, *curve, search);
    std::ofstream out(dir / "learning_curve.csv", std::ios::binary);
    write_curve_csv(points, out);
    if (!out) throw Error("write failed: " + (dir / "learning_curve.csv").string());
    manifest.output(dir / "learning_curve.csv");
    for (const auto& p : points) {
      std::cout << to_string(p.kind) << " fraction " << p.fraction << " mean " << format_fixed(p.mean) << '\n';
    }
  } else {
    std::vector<EvalReport> reports;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      reports.push_back(grid_search(task, kinds[k], grids[k], split, embeddings, common.seed, search));
      const auto& r = reports.back();
      std::cout << to_string(r.kind) << ' ' << r.metric << " dev " << format_fixed(r.dev_score) << " test "
                << format_fixed(r.test_score) << " {" << format_params(r.chosen) << "}\n";
    }
    std::ofstream csv(dir / "report.csv", std::ios::binary);
    write_reports_csv(reports, csv);
    if (!csv) throw Error("write failed: " + (dir / "report.csv").string());
    json doc = json::array();
    for (const auto& r : reports) doc.push_back(report_to_json(r));
    Manifest::write_json(dir / "report.json", doc);
    manifest.output(dir / "report.csv");
    manifest.output(dir / "report.json");
  }
  Manifest::write_json(dir / "split.json", split_to_json(split));
  manifest.output(dir / "split.json");
  manifest.write(dir);
  return 0;
}

// ---------------------------------------------------------------- expand

int run_expand(const CommonOptions& common, const ExpandOptions& opts, Manifest& manifest) {
  const auto loaded = load_model(opts.model_file);
  const auto embeddings = load_embeddings(opts.embeddings, parse_embedding_format(opts.embeddings_format));
  manifest.input("model", opts.model_file);
  manifest.input("embeddings", opts.embeddings);

  ExpansionOptions options;
  options.min_confidence = opts.min_confidence;
  options.clamp_to_unit = opts.clamp || loaded.metadata.normalized_targets;
  options.workers = common.workers;
  options.source_id = loaded.metadata.source_lexicon;
  std::unordered_set<std::string> vocab;
  if (!opts.vocab_file.empty()) {
    std::ifstream in(opts.vocab_file);
    if (!in) throw UsageError("cannot open " + opts.vocab_file);
    for (std::string line; std::getline(in, line);) {
      if (auto token = trim(line); !token.empty()) vocab.insert(std::move(token));
    }
    options.vocab_filter = [&vocab](std::string_view token) { return vocab.contains(std::string(token)); };
    manifest.input("vocab", opts.vocab_file);
  }

  const auto lexicon = expand(loaded.model, embeddings, options);
  const fs::path dir = prepare_out_dir(common);
  write_lexicon(lexicon, dir / "lexicon.tsv");
  Manifest::write_json(dir / "provenance.json", provenance_json(lexicon));
  manifest.output(dir / "lexicon.tsv");
  manifest.output(dir / "provenance.json");
  manifest.write(dir);
  std::cout << lexicon.entries.size() << " entries written to " << (dir / "lexicon.tsv").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- classify

std::vector<Message> read_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<Message> corpus;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab != std::string::npos && parse_polarity(std::string_view(line).substr(0, tab))) line = line.substr(tab + 1);
    corpus.push_back(Message::from_text(line));
  }
  return corpus;
}

int run_classify(const CommonOptions& common, const ClassifyOptions& opts, Manifest& manifest) {
  const Lexicon parsed = load_lexicon(opts.lexicon, LexiconKind::continuous, opts.scale, opts.label_first,
                                      opts.normalize, opts.filter_neutral, opts.neutral_band);
  manifest.input("lexicon", opts.lexicon);
  LexiconClassifier clf{make_score_table(std::get<ContinuousLexicon>(parsed)), 0.0};
  if (clf.lexicon.empty()) throw UsageError("the lexicon is empty");

  std::optional<double> threshold = opts.threshold;
  if (!threshold && !opts.calibration.empty()) {
    threshold = estimate_threshold(clf.lexicon, read_calibration(opts.calibration));
    manifest.input("calibration", opts.calibration);
  }

  std::ifstream file;
  if (opts.input != "-") {
    file.open(opts.input);
    if (!file) throw UsageError("cannot open " + opts.input);
    manifest.input("messages", opts.input);
  }
  std::istream& in = opts.input == "-" ? std::cin : file;

  MessageDataset dataset;
  dataset.name = opts.input == "-" ? "stdin" : fs::path(opts.input).stem().string();
  std::vector<Message> pending;
  const auto emit = [&](const Message& m) {
    const Decision d = classify_message(clf, m);
    std::cout << to_string(d.label) << '\t' << (d.score ? format_fixed(*d.score) : "NA") << '\n';
  };

  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::string text = line;
    if (opts.labeled) {
      const auto tab = line.find('\t');
      const auto label = tab == std::string::npos ? std::nullopt : parse_polarity(std::string_view(line).substr(0, tab));
      if (!label) throw ParseError(dataset.name, line_no, "expected positive|negative<TAB>text");
      text = line.substr(tab + 1);
      dataset.messages.push_back({Message::from_text(text), *label});
    }
    Message message = Message::from_text(std::move(text));
    if (threshold) {
      clf.threshold = *threshold;
      emit(message);
    } else {
      pending.push_back(std::move(message));
    }
  }

  if (!threshold) {
    bool scorable = false;
    for (const auto& m : pending) scorable = scorable || score_message(clf.lexicon, m).has_value();
    if (scorable) {
      threshold = estimate_threshold(clf.lexicon, pending);
    } else {
      if (!pending.empty()) log_warning("no message matches the lexicon; every message abstains");
      threshold = 0.0;
    }
    clf.threshold = *threshold;
    for (const auto& m : pending) emit(m);
  }
  std::cout.flush();

  const fs::path dir = prepare_out_dir(common);
  manifest.note("threshold", *threshold);
  if (!dataset.messages.empty()) {
    const auto report = evaluate_lexicon_classifier(clf, dataset);
    std::ofstream csv(dir / "report.csv", std::ios::binary);
    write_sentiment_csv(std::span(&report, 1), csv);
    if (!csv) throw Error("write failed: " + (dir / "report.csv").string());
    Manifest::write_json(dir / "report.json", sentiment_report_json(report));
    manifest.output(dir / "report.csv");
    manifest.output(dir / "report.json");
    std::cerr << "accuracy " << format_fixed(report.accuracy) << " macro_f1 " << format_fixed(report.macro_f1)
              << " abstentions " << report.abstentions << '/' << report.messages << '\n';
  }
  manifest.write(dir);
  return 0;
}

// ---------------------------------------------------------------- project

int run_project(const CommonOptions& common, const ProjectOptions& opts, Manifest& manifest) {
  const auto loaded = load_model(opts.model_file);
  SubspaceModel model;
  if (const auto* c = std::get_if<SubspaceClassifier>(&loaded.model)) {
    model = *c;
  } else if (const auto* r = std::get_if<SubspaceRegressor>(&loaded.model)) {
    model = *r;
  } else {
    throw UsageError("project needs an nlse snapshot; " + opts.model_file + " holds a " +
                     model_kind_tag(loaded.model) + " model");
  }
  const auto embeddings = load_embeddings(opts.embeddings, parse_embedding_format(opts.embeddings_format));
  manifest.input("model", opts.model_file);
  manifest.input("embeddings", opts.embeddings);

  std::vector<std::string> tokens;
  if (!opts.tokens_file.empty()) {
    std::ifstream in(opts.tokens_file);
    if (!in) throw UsageError("cannot open " + opts.tokens_file);
    for (std::string line; std::getline(in, line);) {
      if (auto token = trim(line); !token.empty()) tokens.push_back(std::move(token));
    }
    manifest.input("tokens", opts.tokens_file);
  }
  tokens.insert(tokens.end(), opts.tokens.begin(), opts.tokens.end());
  if (tokens.empty()) throw UsageError("no tokens given (use --tokens FILE or --token WORD)");

  std::size_t written = 0;
  for (const auto& token : tokens) {
    if (!embeddings.contains(token)) {
      log_warning("skipping '" + token + "': not in the embedding vocabulary");
      continue;
    }
    const Eigen::VectorXd h = project_word(model, embeddings, token);
    std::cout << token;
    for (Eigen::Index k = 0; k < h.size(); ++k) std::cout << '\t' << format_fixed(h[k]);
    std::cout << '\n';
    ++written;
  }
  std::cout.flush();
  manifest.note("rows", written);
  manifest.write(prepare_out_dir(common));
  return 0;
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App& cmd, CommonOptions& common) {
  cmd.add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();
  cmd.add_option("--workers", common.workers, "Parallel workers for grid cells and expansion shards")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--out", common.out, "Output directory")->capture_default_str();
  cmd.add_option("--log-level", common.log_level, "info, warning or error")
      ->check(CLI::IsMember({"info", "warning", "error"}))
      ->capture_default_str();
}

void add_embeddings(CLI::App& cmd, std::string& path, std::string& format) {
  cmd.add_option("--embeddings", path, "Embedding file")->required()->check(CLI::ExistingFile);
  cmd.add_option("--embeddings-format", format, "text or binary")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
}

void add_lexicon_transforms(CLI::App& cmd, std::string& scale, bool& label_first, bool& normalize, bool& filter,
                            double& band) {
  cmd.add_option("--scale", scale, "Declared score range MIN,MAX");
  cmd.add_flag("--label-first", label_first, "Lexicon columns are label then token");
  cmd.add_flag("--normalize", normalize, "Map continuous scores linearly onto [-1, 1]");
  cmd.add_flag("--filter-neutral", filter, "Drop entries with |score| below the neutral band");
  cmd.add_option("--neutral-band", band, "Half-width of the neutral band")->capture_default_str();
}

void add_data(CLI::App& cmd, DataOptions& data) {
  add_embeddings(cmd, data.embeddings, data.embeddings_format);
  cmd.add_option("--lexicon", data.lexicon, "Seed lexicon TSV")->required()->check(CLI::ExistingFile);
  cmd.add_option("--lexicon-kind", data.lexicon_kind, "categorical or continuous")
      ->check(CLI::IsMember({"categorical", "continuous"}))
      ->capture_default_str();
  add_lexicon_transforms(cmd, data.scale, data.label_first, data.normalize, data.filter_neutral, data.neutral_band);
  cmd.add_option("--test-fraction", data.test_fraction, "Share of the lexicon held out for testing")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd.add_option("--dev-fraction", data.dev_fraction, "Share of the remaining entries used for model selection")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Expand sentiment lexicons with task-specific word-embedding subspaces"};
  app.set_config("--config", "", "TOML or INI file of option values; command-line flags win");
  app.require_subcommand(1);

  CommonOptions common;
  DataOptions data;
  TrainOptions train;
  EvalOptions eval;
  ExpandOptions expand_opts;
  ClassifyOptions classify;
  ProjectOptions project;

  auto* train_cmd = app.add_subcommand("train", "Train one model and save a snapshot");
  add_common(*train_cmd, common);
  add_data(*train_cmd, data);
  train_cmd->add_option("--model", train.model, "nlse, linear, l1 or pca")->capture_default_str();
  train_cmd->add_option("--param", train.params, "Hyper-parameter override name=value (repeatable)");
  train_cmd->add_option("--max-epochs", train.max_epochs, "Epoch budget")->capture_default_str();
  train_cmd->add_option("--patience", train.patience, "Early-stopping patience in epochs")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Grid-search models and report test scores");
  add_common(*eval_cmd, common);
  add_data(*eval_cmd, data);
  eval_cmd->add_option("--models", eval.models, "Comma-separated model kinds")->capture_default_str();
  eval_cmd->add_option("--grid", eval.grid, "Grid override name=v1,v2,... (repeatable)");
  eval_cmd->add_flag("--no-refit", eval.no_refit, "Score the train-only model instead of refitting on train+dev");
  eval_cmd->add_option("--max-epochs", eval.max_epochs, "NLSE epoch budget per cell")->capture_default_str();
  eval_cmd->add_option("--patience", eval.patience, "Early-stopping patience in epochs")->capture_default_str();
  eval_cmd->add_option("--learning-curve", eval.learning_curve, "Training fractions, e.g. fractions=0.1,0.5,1");
  eval_cmd->add_option("--trials", eval.trials, "Subsampling trials per fraction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* expand_cmd = app.add_subcommand("expand", "Score every embedding word with a trained model");
  add_common(*expand_cmd, common);
  expand_cmd->add_option("--model-file", expand_opts.model_file, "Model snapshot")
      ->required()
      ->check(CLI::ExistingFile);
  add_embeddings(*expand_cmd, expand_opts.embeddings, expand_opts.embeddings_format);
  expand_cmd->add_option("--min-confidence", expand_opts.min_confidence, "Drop categorical entries below this")
      ->check(CLI::Range(0.0, 1.0));
  expand_cmd->add_option("--vocab-file", expand_opts.vocab_file, "Only expand the tokens listed here")
      ->check(CLI::ExistingFile);
  expand_cmd->add_flag("--clamp", expand_opts.clamp, "Clamp continuous scores to [-1, 1]");

  auto* classify_cmd = app.add_subcommand("classify", "Label messages with a lexicon");
  add_common(*classify_cmd, common);
  classify_cmd->add_option("--lexicon", classify.lexicon, "Continuous lexicon TSV")
      ->required()
      ->check(CLI::ExistingFile);
  add_lexicon_transforms(*classify_cmd, classify.scale, classify.label_first, classify.normalize,
                         classify.filter_neutral, classify.neutral_band);
  classify_cmd->add_option("--input", classify.input, "Messages, one per line, or - for standard input")
      ->capture_default_str();
  classify_cmd->add_flag("--labeled", classify.labeled, "Input lines are label<TAB>text");
  classify_cmd->add_option("--threshold", classify.threshold, "Decision threshold (default: mean message score)");
  classify_cmd->add_option("--calibration", classify.calibration, "Corpus for estimating the threshold")
      ->check(CLI::ExistingFile);

  auto* project_cmd = app.add_subcommand("project", "Print subspace coordinates of words");
  add_common(*project_cmd, common);
  project_cmd->add_option("--model-file", project.model_file, "NLSE snapshot")->required()->check(CLI::ExistingFile);
  add_embeddings(*project_cmd, project.embeddings, project.embeddings_format);
  project_cmd->add_option("--tokens", project.tokens_file, "File with one token per line")->check(CLI::ExistingFile);
  project_cmd->add_option("--token", project.tokens, "Token to project (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  set_log_level(parse_log_level(common.log_level));
  CLI::App* cmd = app.get_subcommands().front();
  Manifest manifest(cmd->get_name(), common, app, std::vector<std::string>(argv + 1, argv + argc));
  try {
    if (cmd == train_cmd) return run_train(common, data, train, manifest);
    if (cmd == eval_cmd) return run_eval(common, data, eval, manifest);
    if (cmd == expand_cmd) return run_expand(common, expand_opts, manifest);
    if (cmd == classify_cmd) return run_classify(common, classify, manifest);
    return run_project(common, project, manifest);
  } catch (const UsageError& e) {
    std::cerr << "lexpand " << cmd->get_name() << ": " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "lexpand " << cmd->get_name() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "lexpand " << cmd->get_name() << ": " << e.what() << '\n';
    return 2;
  }
}

}  // namespace
}  // namespace lexpand::cli

int main(int argc, char** argv) { return lexpand::cli::main_impl(argc, argv); }

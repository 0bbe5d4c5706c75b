#include "graphboost/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "graphboost/model_io.hpp"

namespace graphboost {
namespace {

using Json = nlohmann::ordered_json;

struct Prepared {
  LabeledTable raw;
  std::vector<Split> split;
  Dataset dataset;
};

Prepared prepare(const RunConfig& config) {
  if (config.data.empty()) throw ConfigError("no data file given (set 'data' or pass --data)");
  CsvOptions options;
  options.label_column = config.label;
  Prepared p;
  p.raw = load_csv(config.data, options);
  EncodingMeta probe;
  probe.classes = distinct_labels(p.raw.labels);
  if (probe.classes.size() < 2) throw DataError("label column '" + config.label + "' has a single class");
  const std::vector<int> codes = probe.encode_labels(p.raw.labels);
  p.split = split_rows(p.raw.table.rows, config.split, config.boost.seed, codes);
  p.dataset = fit_encoder(p.raw.table, p.raw.labels, p.split);
  p.dataset.encoder.label_name = config.label;
  return p;
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void save_model_file(const std::filesystem::path& path, const Ensemble& ensemble) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_model(path, ensemble);
}

Matrix gather(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

std::optional<EvalReport> evaluate_test(const Ensemble& ensemble, const Dataset& ds) {
  const auto test = ds.rows_in(Split::test);
  if (test.empty()) return std::nullopt;
  const EnsemblePrediction p = predict_ensemble(ensemble, gather(ds.x, test));
  std::vector<int> y;
  for (std::size_t i : test) y.push_back(ds.y[i]);
  return evaluate(p.scores, p.labels, y, ds.encoder.classes);
}

RoundObserver round_printer(std::ostream& log, bool verbose) {
  auto last = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
  return [&log, verbose, last](const RoundLog& r) {
    log << "round " << r.round << ": feature " << r.feature_name << " (#" << r.feature << ")"
        << (r.expert ? " expert" : "") << " gamma=" << r.gamma << " err=" << r.error << " alpha=" << r.alpha
        << " ensemble_err=" << r.ensemble_train_error << (r.kept ? "" : " [discarded]");
    if (verbose) {
      const auto now = std::chrono::steady_clock::now();
      log << " time=" << std::chrono::duration<double>(now - *last).count() << "s";
      *last = now;
    }
    log << '\n';
  };
}

Ensemble fit_logged(const BoostConfig& boost, const Dataset& ds, std::ostream& log, bool verbose,
                    FitSummary& summary) {
  Ensemble e = fit(boost, ds, &summary, round_printer(log, verbose));
  if (verbose)
    for (const auto& w : summary.warnings) log << "warning: " << w << '\n';
  log << "stopped after " << e.rounds.size() << " round(s): " << summary.stop_reason << '\n';
  return e;
}

RawTable subset(const RawTable& table, std::span<const std::size_t> rows) {
  RawTable out;
  out.rows = rows.size();
  for (const auto& col : table.columns) {
    Column c;
    c.name = col.name;
    c.kind = col.kind;
    for (std::size_t i : rows) {
      if (col.kind == ColumnKind::numeric) c.numbers.push_back(col.numbers[i]);
      else c.text.push_back(col.text[i]);
    }
    out.columns.push_back(std::move(c));
  }
  return out;
}

bool same_effective(const RunConfig& a, const RunConfig& b) {
  return a.boost.estimators == b.boost.estimators && a.boost.learning_rate == b.boost.learning_rate &&
         a.boost.weak == b.boost.weak;
}

RunConfig with_settings(RunConfig config, std::span<const Setting> settings) {
  for (const auto& [key, value] : settings) apply_setting(config, key, value, "grid");
  return config;
}

Json settings_json(std::span<const Setting> settings) {
  Json out = Json::object();
  for (const auto& [key, value] : settings) out[key] = value;
  return out;
}

}  // namespace

Dataset prepare_dataset(const RunConfig& config) { return prepare(config).dataset; }

TrainOutcome cmd_train(const RunConfig& config, std::ostream& log, bool verbose) {
  Prepared p = prepare(config);
  TrainOutcome out;
  if (verbose)
    log << "rows: train " << p.dataset.rows_in(Split::train).size() << ", val "
        << p.dataset.rows_in(Split::val).size() << ", test " << p.dataset.rows_in(Split::test).size()
        << "; classes " << p.dataset.num_classes << "; features " << p.dataset.features() << '\n';
  out.ensemble = fit_logged(config.boost, p.dataset, log, verbose, out.summary);
  out.test_report = evaluate_test(out.ensemble, p.dataset);
  save_model_file(config.model_out, out.ensemble);
  if (out.test_report) {
    write_text(config.report_out, report_to_json(*out.test_report));
    log << "test weighted_auroc=" << out.test_report->weighted_auroc
        << " accuracy=" << out.test_report->accuracy << '\n';
  } else {
    log << "no test rows; report not written\n";
  }
  out.dataset = std::move(p.dataset);
  return out;
}

EnsemblePrediction cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                               const std::filesystem::path& out_path) {
  const Ensemble ensemble = load_model(model_path);
  CsvOptions options;
  options.label_column = ensemble.encoder.label_name;
  options.label_optional = true;
  options.allow_empty = true;
  for (const auto& col : ensemble.encoder.columns) options.hints.emplace(col.name, col.kind);
  const LabeledTable data = load_csv(data_path, options);

  EnsemblePrediction p;
  p.scores = Matrix(0, ensemble.num_classes);
  if (data.table.rows > 0) p = predict_ensemble(ensemble, apply_encoder(data.table, ensemble.encoder));

  std::ostringstream out;
  std::vector<std::string> header{"row", "label"};
  for (const auto& c : ensemble.encoder.classes) header.push_back("score_" + c);
  csv::write_row(out, header);
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i), ensemble.encoder.classes[p.labels[i]]};
    for (Eigen::Index c = 0; c < p.scores.cols(); ++c)
      cells.push_back(format_number(p.scores(static_cast<Eigen::Index>(i), c)));
    csv::write_row(out, cells);
  }
  write_text(out_path, out.str());
  return p;
}

EvalReport cmd_evaluate(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                        const std::filesystem::path& report_path) {
  const Ensemble ensemble = load_model(model_path);
  CsvOptions options;
  options.label_column = ensemble.encoder.label_name;
  for (const auto& col : ensemble.encoder.columns) options.hints.emplace(col.name, col.kind);
  const LabeledTable data = load_csv(data_path, options);
  if (distinct_labels(data.labels).size() < 2)
    throw DataError("labels contain a single class; AUROC is undefined");
  const std::vector<int> y = ensemble.encoder.encode_labels(data.labels);
  const EnsemblePrediction p = predict_ensemble(ensemble, apply_encoder(data.table, ensemble.encoder));
  EvalReport report = evaluate(p.scores, p.labels, y, ensemble.encoder.classes);
  if (!report_path.empty()) write_text(report_path, report_to_json(report));
  return report;
}

std::vector<std::vector<Setting>> grid_points(const RunConfig& config) {
  std::size_t product = 1;
  for (const auto& [key, values] : config.grids) {
    product *= values.size();
    if (product > config.sweep_cap) break;
  }
  if (product > config.sweep_cap)
    throw ConfigError("sweep grid exceeds the cap of " + std::to_string(config.sweep_cap) + " points");

  std::vector<std::vector<Setting>> all{{}};
  for (const auto& [key, values] : config.grids) {
    std::vector<std::vector<Setting>> next;
    for (const auto& prefix : all)
      for (const auto& v : values) {
        next.push_back(prefix);
        next.back().emplace_back(key, v);
      }
    all = std::move(next);
  }

  std::vector<std::vector<Setting>> distinct;
  std::vector<RunConfig> seen;
  for (auto& point : all) {
    RunConfig effective = with_settings(config, point);
    const bool dup = std::any_of(seen.begin(), seen.end(),
                                 [&](const RunConfig& s) { return same_effective(s, effective); });
    if (dup) continue;
    seen.push_back(std::move(effective));
    distinct.push_back(std::move(point));
  }
  return distinct;
}

SweepOutcome cmd_sweep(const RunConfig& config, std::ostream& log, bool verbose) {
  const auto points = grid_points(config);
  Prepared p = prepare(config);
  const Dataset& ds = p.dataset;

  // Positions of validation rows among the fitting rows (non-test, in order).
  std::vector<std::size_t> val_pos;
  std::vector<int> val_y;
  for (std::size_t i = 0, r = 0; i < ds.rows(); ++i) {
    if (ds.split[i] == Split::test) continue;
    if (ds.split[i] == Split::val) {
      val_pos.push_back(r);
      val_y.push_back(ds.y[i]);
    }
    ++r;
  }
  if (val_pos.empty()) throw ConfigError("sweep needs validation rows; raise the validation fraction");

  SweepOutcome out;
  for (std::size_t g = 0; g < points.size(); ++g) {
    const RunConfig point = with_settings(config, points[g]);
    log << "grid point " << g + 1 << "/" << points.size() << ":";
    for (const auto& [key, value] : points[g]) log << ' ' << key << '=' << value;
    log << '\n';
    FitSummary summary;
    const Ensemble e = fit_logged(point.boost, ds, log, verbose, summary);
    const EnsemblePrediction ref = predict_reference(e);
    const double auc = weighted_auroc(gather(ref.scores, val_pos), val_y).value;
    log << "validation weighted_auroc=" << auc << '\n';
    out.points.push_back({points[g], auc, e.rounds.size()});
    if (auc > out.points[out.best].val_weighted_auroc) out.best = g;
  }

  // Refit the winner on train and validation rows with a fresh encoder.
  std::vector<Split> merged = p.split;
  for (auto& s : merged)
    if (s == Split::val) s = Split::train;
  Dataset refit = fit_encoder(p.raw.table, p.raw.labels, merged);
  refit.encoder.label_name = config.label;
  const RunConfig best = with_settings(config, out.points[out.best].settings);
  log << "refitting grid point " << out.best + 1 << " on train and validation rows\n";
  FitSummary summary;
  out.final_model = fit_logged(best.boost, refit, log, verbose, summary);
  const auto report = evaluate_test(out.final_model, refit);
  if (!report) throw ConfigError("sweep needs test rows; raise the test fraction");
  out.test_report = *report;
  log << "test weighted_auroc=" << out.test_report.weighted_auroc << " accuracy=" << out.test_report.accuracy
      << '\n';

  Json doc;
  Json grid = Json::array();
  for (const auto& pt : out.points)
    grid.push_back({{"settings", settings_json(pt.settings)},
                    {"val_weighted_auroc", pt.val_weighted_auroc},
                    {"rounds", pt.rounds}});
  doc["grid"] = std::move(grid);
  doc["best"] = out.best;
  doc["best_settings"] = settings_json(out.points[out.best].settings);
  doc["test"] = Json::parse(report_to_json(out.test_report));
  write_text(config.report_out, doc.dump(2) + "\n");
  save_model_file(config.model_out, out.final_model);
  return out;
}

SynthOutcome cmd_synth(const SyntheticSpec& spec, double test_fraction, const std::filesystem::path& out_dir) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must be in [0, 1)");
  const SyntheticCohort cohort = gen_synthetic(spec);
  EncodingMeta probe;
  const auto labels = as_optional(cohort.labels);
  probe.classes = distinct_labels(labels);
  const auto split =
      split_rows(cohort.table.rows, {1.0 - test_fraction, 0.0, test_fraction}, spec.seed, probe.encode_labels(labels));

  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < split.size(); ++i) (split[i] == Split::test ? test : train).push_back(i);
  auto pick = [&](std::span<const std::size_t> rows) {
    std::vector<std::string> out;
    for (std::size_t i : rows) out.push_back(cohort.labels[i]);
    return out;
  };

  std::filesystem::create_directories(out_dir);
  SynthOutcome out{out_dir / "train.csv", out_dir / "test.csv", cohort.table.columns[cohort.planted_column].name};
  write_csv(out.train_csv, subset(cohort.table, train), pick(train), "label");
  write_csv(out.test_csv, subset(cohort.table, test), pick(test), "label");
  return out;
}

}  // namespace graphboost

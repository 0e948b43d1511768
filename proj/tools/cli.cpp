#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "svg.hpp"
#include "tsdm/classify.hpp"
#include "tsdm/config.hpp"
#include "tsdm/csv.hpp"
#include "tsdm/errors.hpp"
#include "tsdm/fb.hpp"
#include "tsdm/serialize.hpp"
#include "tsdm/simplex_transform.hpp"
#include "tsdm/synth.hpp"
#include "tsdm/tsdm_model.hpp"

namespace tsdm::cli {

namespace {

namespace fs = std::filesystem;

inline constexpr const char* kRestColumn = "rest";

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_dir = ".";

  PipelineConfig load() const {
    PipelineConfig c;
    if (!config_path.empty()) c = pipeline_config_from_json(read_text_file(config_path));
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    c.validate();
    return c;
  }

  std::string path(const std::string& name) const {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    return (fs::path(out_dir) / name).string();
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Pipeline configuration JSON");
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
  cmd->add_option("--workers", c.workers, "Worker threads (overrides the config)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out_dir, "Output directory");
}

Table simplex_table(const Table& source, const Matrix& simplex, std::vector<std::string> names) {
  Table t;
  t.ids = source.ids;
  t.labels = source.labels;
  t.labeled = source.labeled;
  names.emplace_back(kRestColumn);
  t.attributes = std::move(names);
  t.values = simplex;
  return t;
}

LabeledDataset labeled_dataset(const Table& t) {
  if (!t.labeled) throw ValidationError("training CSV needs a 'label' column");
  LabeledDataset d{t.values, t.labels};
  d.validate();
  return d;
}

std::string bic_table(const std::vector<std::pair<std::string, const FitReport*>>& reports,
                      const std::map<std::string, std::size_t>& chosen) {
  RawCsv csv;
  csv.header = {"model", "J", "accepted", "log_likelihood", "bic", "selected", "note"};
  for (const auto& [name, rep] : reports) {
    for (const auto& c : rep->candidates) {
      const bool selected = c.accepted && chosen.count(name) && chosen.at(name) == c.components;
      csv.rows.push_back({name, std::to_string(c.components), c.accepted ? "1" : "0",
                          c.accepted ? format_double(c.log_likelihood) : "",
                          c.accepted ? format_double(c.bic) : "", selected ? "1" : "0", c.note});
    }
  }
  return format_csv(csv);
}

std::string signature_csv(const std::vector<std::pair<std::string, const InnerMixture*>>& mixtures,
                          const std::vector<std::string>& coords) {
  RawCsv csv;
  csv.header = {"model", "component", "weight"};
  csv.header.insert(csv.header.end(), coords.begin(), coords.end());
  for (const auto& [name, m] : mixtures) {
    const auto sig = signatures(*m);
    for (std::size_t j = 0; j < sig.size(); ++j) {
      std::vector<std::string> row{name, std::to_string(j + 1), format_double(m->weights()[j])};
      for (double v : sig[j]) row.push_back(format_double(v));
      csv.rows.push_back(std::move(row));
    }
  }
  return format_csv(csv);
}

std::vector<std::string> coordinate_names(const Table& t, std::size_t dim) {
  if (t.attributes.size() == dim) return t.attributes;
  std::vector<std::string> names;
  for (std::size_t d = 0; d < dim; ++d) names.push_back("y" + std::to_string(d + 1));
  return names;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---- subcommands ----

struct TransformArgs {
  Common common;
  std::string input;
  std::string attributes;
  std::string transform;
};

int cmd_transform(const TransformArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.common.load();
  const Table raw = read_table(a.input);
  std::optional<SimplexTransform> tr;
  if (!a.transform.empty()) {
    tr = simplex_transform_from_json(read_text_file(a.transform));
  } else {
    const std::vector<std::string> names =
        a.attributes.empty() ? raw.attributes : split_list(a.attributes);
    const Table sel = raw.select_attributes(names);
    tr = SimplexTransform::fit(sel.values, names, cfg.transform_options());
  }
  const Table sel = raw.select_attributes(tr->attribute_names());
  const Matrix simplex = tr->apply_batch(sel.values);
  write_table(a.common.path("simplex.csv"), simplex_table(raw, simplex, tr->attribute_names()));
  write_text_file(a.common.path("transform.json"), to_json(*tr));
  out << "transformed " << simplex.rows() << " rows onto a " << tr->simplex_dim()
      << "-part simplex\n";
  return kExitOk;
}

struct FitTsdmArgs {
  Common common;
  std::string input;
};

int cmd_fit_tsdm(const FitTsdmArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.common.load();
  const Table t = read_table(a.input);
  const LabeledDataset data = labeled_dataset(t);
  const TsdmModel model = fit_tsdm(data, cfg.tsdm_config());
  write_text_file(a.common.path("tsdm.json"), to_json(model));

  std::vector<std::pair<std::string, const FitReport*>> reports;
  std::vector<std::pair<std::string, const InnerMixture*>> mixtures;
  std::map<std::string, std::size_t> chosen;
  for (std::size_t k = 0; k < model.class_count(); ++k) {
    reports.emplace_back(model.labels()[k], &model.reports()[k]);
    mixtures.emplace_back(model.labels()[k], &model.inner()[k]);
    chosen[model.labels()[k]] = model.inner()[k].size();
  }
  write_text_file(a.common.path("bic_table.csv"), bic_table(reports, chosen));
  write_text_file(a.common.path("signatures.csv"),
                  signature_csv(mixtures, coordinate_names(t, model.dim())));

  out << "class,n,J,rho,bic\n";
  for (std::size_t k = 0; k < model.class_count(); ++k)
    out << model.labels()[k] << ',' << model.reports()[k].n_points << ','
        << model.inner()[k].size() << ',' << format_double(model.rho()[k]) << ','
        << format_double(model.reports()[k].bic) << '\n';
  if (model.rho_mode_fallback()) out << "note: posterior mode undefined, rho is the posterior mean\n";
  return kExitOk;
}

struct FitFbArgs {
  Common common;
  std::string model;
  std::string input;
};

int cmd_fit_fb(const FitFbArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.common.load();
  const TsdmModel bg = tsdm_model_from_json(read_text_file(a.model));
  const Table t = read_table(a.input);
  validate_simplex_data(t.values);
  const auto [model, report] = fit_fb(bg, t.values, cfg.fb_config());
  write_text_file(a.common.path("fb.json"), to_json(model, report));
  std::map<std::string, std::size_t> chosen;
  if (!report.no_novelty) chosen["new"] = model.new_class_size();
  write_text_file(a.common.path("fb_bic_table.csv"), bic_table({{"new", &report.fit}}, chosen));

  out << "background_bic," << format_double(report.background_bic) << '\n';
  if (report.no_novelty) {
    out << "no_novelty,1\nlambda0,1\n";
  } else {
    out << "no_novelty,0\nJ," << model.new_class_size() << "\nlambda0,"
        << format_double(model.lambda0()) << "\nnew_class_mass,"
        << format_double(1.0 - model.lambda0()) << "\nbic," << format_double(report.fit.bic)
        << '\n';
  }
  return kExitOk;
}

struct ClassifyArgs {
  Common common;
  std::string model;
  std::string input;
  bool svg = false;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.common.load();
  const FbModel model = fb_model_from_json(read_text_file(a.model)).first;
  const Table t = read_table(a.input);
  validate_simplex_data(t.values);
  if (t.values.cols() != model.dim())
    throw ValidationError("data has " + std::to_string(t.values.cols()) +
                          " coordinates, model expects " + std::to_string(model.dim()));
  const auto assignments = classify_batch(model, t.values, cfg.workers);

  RawCsv csv;
  csv.header = {"id", "predicted", "is_new", "posterior_background", "best_class"};
  for (const auto& l : model.background().labels()) csv.header.push_back("posterior_" + l);
  std::size_t flagged = 0;
  for (const auto& as : assignments) {
    flagged += as.is_new_class;
    std::vector<std::string> row{t.ids[as.point_index], predicted_label(as, cfg.new_class_label),
                                 as.is_new_class ? "1" : "0",
                                 format_double(as.posterior_background),
                                 model.background().labels()[as.best_class]};
    for (double p : as.class_posteriors) row.push_back(format_double(p));
    csv.rows.push_back(std::move(row));
  }
  write_text_file(a.common.path("assignments.csv"), format_csv(csv));

  if (a.svg) {
    std::vector<SignatureSeries> series;
    for (std::size_t k = 0; k < model.background().class_count(); ++k) {
      const auto sig = signatures(model.background().inner()[k]);
      for (std::size_t j = 0; j < sig.size(); ++j)
        series.push_back({model.background().labels()[k] + " " + std::to_string(j + 1), sig[j]});
    }
    if (const auto nc = model.new_class_mixture()) {
      const auto sig = signatures(*nc);
      for (std::size_t j = 0; j < sig.size(); ++j)
        series.push_back({cfg.new_class_label + " " + std::to_string(j + 1), sig[j]});
    }
    write_text_file(a.common.path("signatures.svg"),
                    signature_svg(series, coordinate_names(t, model.dim())));
  }
  out << "classified " << assignments.size() << " points, " << flagged << " flagged as "
      << cfg.new_class_label << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  Common common;
  std::string assignments;
  std::string truth;
  std::string novel;
  bool svg = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  PipelineConfig cfg = a.common.load();
  for (auto& l : split_list(a.novel)) cfg.novel_truth_labels.push_back(l);

  const RawCsv pred = parse_csv(read_text_file(a.assignments));
  const std::size_t pid = pred.column("id");
  const std::size_t plabel = pred.column("predicted");
  const RawCsv truth = parse_csv(read_text_file(a.truth));
  const std::size_t tid = truth.column("id");
  const std::size_t tlabel = truth.column("label");

  std::map<std::string, std::string> truth_of;
  for (const auto& r : truth.rows)
    if (!truth_of.emplace(r[tid], r[tlabel]).second)
      throw ValidationError("duplicate id '" + r[tid] + "' in truth file");

  std::vector<std::string> p, tr;
  for (const auto& r : pred.rows) {
    const auto it = truth_of.find(r[pid]);
    if (it == truth_of.end()) throw ValidationError("id '" + r[pid] + "' has no truth label");
    p.push_back(r[plabel]);
    tr.push_back(it->second);
  }

  const std::set<std::string> novel(cfg.novel_truth_labels.begin(), cfg.novel_truth_labels.end());
  std::set<std::string> known;
  for (const auto& l : tr)
    if (!novel.count(l) && l != cfg.new_class_label) known.insert(l);
  for (const auto& l : p)
    if (l != cfg.new_class_label) known.insert(l);
  std::vector<std::string> novel_labels(novel.begin(), novel.end());
  novel_labels.push_back(cfg.new_class_label);

  const Evaluation ev = evaluate(p, tr, {known.begin(), known.end()}, cfg.new_class_label,
                                 novel_labels);
  RawCsv cm;
  cm.header = {"truth"};
  cm.header.insert(cm.header.end(), ev.confusion.labels.begin(), ev.confusion.labels.end());
  for (std::size_t i = 0; i < ev.confusion.labels.size(); ++i) {
    std::vector<std::string> row{ev.confusion.labels[i]};
    for (std::size_t c : ev.confusion.counts[i]) row.push_back(std::to_string(c));
    cm.rows.push_back(std::move(row));
  }
  write_text_file(a.common.path("confusion.csv"), format_csv(cm));
  const std::string metrics = to_json(ev.metrics);
  write_text_file(a.common.path("metrics.json"), metrics);
  if (a.svg) write_text_file(a.common.path("confusion.svg"), confusion_svg(ev.confusion));
  out << metrics << '\n';
  return kExitOk;
}

struct SimulateArgs {
  Common common;
  std::string spec;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SynthSpec spec = synth_spec_from_json(read_text_file(a.spec));
  if (a.common.seed) spec.seed = *a.common.seed;
  const SynthResult r = generate(spec);

  Table t;
  t.labeled = true;
  t.labels = r.data.labels;
  t.values = r.data.points;
  for (std::size_t d = 0; d < spec.dim(); ++d) t.attributes.push_back("y" + std::to_string(d + 1));
  for (std::size_t i = 0; i < t.labels.size(); ++i) t.ids.push_back(std::to_string(i + 1));
  write_table(a.common.path("data.csv"), t);

  RawCsv hidden;
  hidden.header = {"id", "source", "novel", "component"};
  for (std::size_t i = 0; i < r.hidden.size(); ++i)
    hidden.rows.push_back({t.ids[i], r.hidden[i].source, r.hidden[i].novel ? "1" : "0",
                           std::to_string(r.hidden[i].component + 1)});
  write_text_file(a.common.path("hidden.csv"), format_csv(hidden));
  write_text_file(a.common.path("spec.json"), to_json(spec));
  out << "generated " << t.ids.size() << " points in " << spec.dim() << " parts\n";
  return kExitOk;
}

struct SplitArgs {
  Common common;
  std::string input;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.common.load();
  const Table t = read_table(a.input);
  const std::size_t n = t.ids.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(cfg.split_fraction * static_cast<double>(n));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  write_table(a.common.path("train.csv"), t.select_rows(train));
  write_table(a.common.path("test.csv"), t.select_rows(test));
  out << "seed," << cfg.seed << "\ntrain," << train.size() << "\ntest," << test.size() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage Dirichlet mixture classification with new-class detection", "tsdm"};
  app.require_subcommand(1);

  TransformArgs ta;
  auto* transform = app.add_subcommand("transform", "Map raw attributes onto the simplex");
  add_common(transform, ta.common);
  transform->add_option("--input", ta.input, "Raw CSV")->required();
  transform->add_option("--attributes", ta.attributes, "Comma-separated attribute columns");
  transform->add_option("--transform", ta.transform, "Apply a saved transform instead of fitting");

  FitTsdmArgs ft;
  auto* fit_tsdm_cmd = app.add_subcommand("fit-tsdm", "Fit the background model");
  add_common(fit_tsdm_cmd, ft.common);
  fit_tsdm_cmd->add_option("--input", ft.input, "Labelled simplex CSV")->required();

  FitFbArgs ff;
  auto* fit_fb_cmd = app.add_subcommand("fit-fb", "Fit the new-class model against a background");
  add_common(fit_fb_cmd, ff.common);
  fit_fb_cmd->add_option("--model", ff.model, "Background model JSON")->required();
  fit_fb_cmd->add_option("--input", ff.input, "Unlabelled simplex CSV")->required();

  ClassifyArgs ca;
  auto* classify_cmd = app.add_subcommand("classify", "Assign points to classes or the new class");
  add_common(classify_cmd, ca.common);
  classify_cmd->add_option("--model", ca.model, "FB model JSON")->required();
  classify_cmd->add_option("--input", ca.input, "Simplex CSV")->required();
  classify_cmd->add_flag("--svg", ca.svg, "Also write signatures.svg");

  EvaluateArgs ea;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Confusion matrix and metrics");
  add_common(evaluate_cmd, ea.common);
  evaluate_cmd->add_option("--assignments", ea.assignments, "assignments.csv")->required();
  evaluate_cmd->add_option("--truth", ea.truth, "CSV with id and label columns")->required();
  evaluate_cmd->add_option("--novel", ea.novel, "Comma-separated truth labels counted as new");
  evaluate_cmd->add_flag("--svg", ea.svg, "Also write confusion.svg");

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Sample a synthetic dataset from a spec");
  add_common(simulate_cmd, sa.common);
  simulate_cmd->add_option("--spec", sa.spec, "Synthetic spec JSON")->required();

  SplitArgs spa;
  auto* split_cmd = app.add_subcommand("split", "Seeded train/test split");
  add_common(split_cmd, spa.common);
  split_cmd->add_option("--input", spa.input, "CSV to split")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (transform->parsed()) return cmd_transform(ta, out);
    if (fit_tsdm_cmd->parsed()) return cmd_fit_tsdm(ft, out);
    if (fit_fb_cmd->parsed()) return cmd_fit_fb(ff, out);
    if (classify_cmd->parsed()) return cmd_classify(ca, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(ea, out);
    if (simulate_cmd->parsed()) return cmd_simulate(sa, out);
    if (split_cmd->parsed()) return cmd_split(spa, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitValidation;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace tsdm::cli

#include "tsdm/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tsdm/errors.hpp"

namespace tsdm {

using Json = nlohmann::ordered_json;

namespace {

Json header(const char* kind) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  return j;
}

void check_header(const Json& j, const char* kind) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion)
    throw ValidationError("unsupported or missing schema_version (expected " +
                          std::to_string(kSchemaVersion) + ")");
  if (j.at("kind").get<std::string>() != kind)
    throw ValidationError("expected a '" + std::string(kind) + "' document, got '" +
                          j.at("kind").get<std::string>() + "'");
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

Json encode_report(const FitReport& r) {
  Json j;
  j["final_log_likelihood"] = r.final_log_likelihood;
  j["bic"] = r.bic;
  j["iterations"] = r.iterations;
  j["n_starts_tried"] = r.n_starts_tried;
  j["n_starts_kept"] = r.n_starts_kept;
  j["min_occupancy"] = r.min_occupancy;
  j["converged"] = r.converged;
  j["n_points"] = r.n_points;
  Json cands = Json::array();
  for (const auto& c : r.candidates) {
    Json cj;
    cj["components"] = c.components;
    cj["accepted"] = c.accepted;
    cj["log_likelihood"] = c.log_likelihood;
    cj["bic"] = c.bic;
    cj["note"] = c.note;
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  j["log_likelihood_trace"] = r.log_likelihood_trace;
  return j;
}

FitReport decode_report(const Json& j) {
  FitReport r;
  r.final_log_likelihood = j.at("final_log_likelihood").get<double>();
  r.bic = j.at("bic").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.n_starts_tried = j.at("n_starts_tried").get<int>();
  r.n_starts_kept = j.at("n_starts_kept").get<int>();
  r.min_occupancy = j.at("min_occupancy").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.n_points = j.at("n_points").get<std::size_t>();
  for (const auto& cj : j.at("candidates")) {
    CandidateFit c;
    c.components = cj.at("components").get<std::size_t>();
    c.accepted = cj.at("accepted").get<bool>();
    c.log_likelihood = cj.at("log_likelihood").get<double>();
    c.bic = cj.at("bic").get<double>();
    c.note = cj.at("note").get<std::string>();
    r.candidates.push_back(std::move(c));
  }
  r.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
  return r;
}

Json encode_alphas(const std::vector<DirichletParams>& comps) {
  Json a = Json::array();
  for (const auto& c : comps) a.push_back(std::vector<double>(c.alpha().begin(), c.alpha().end()));
  return a;
}

std::vector<DirichletParams> decode_alphas(const Json& j) {
  std::vector<DirichletParams> out;
  for (const auto& row : j) out.emplace_back(row.get<std::vector<double>>());
  return out;
}

Json encode_tsdm(const TsdmModel& m) {
  Json j = header("tsdm_model");
  j["dim"] = m.dim();
  j["labels"] = m.labels();
  j["rho"] = std::vector<double>(m.rho().begin(), m.rho().end());
  j["prior_e"] = std::vector<double>(m.prior_e().begin(), m.prior_e().end());
  j["class_counts"] = std::vector<std::size_t>(m.class_counts().begin(), m.class_counts().end());
  j["rho_mode_fallback"] = m.rho_mode_fallback();
  Json classes = Json::array();
  for (std::size_t k = 0; k < m.class_count(); ++k) {
    Json c;
    c["label"] = m.labels()[k];
    c["weights"] = std::vector<double>(m.inner()[k].weights().begin(), m.inner()[k].weights().end());
    c["alphas"] = encode_alphas(m.inner()[k].components());
    if (!m.reports().empty()) c["report"] = encode_report(m.reports()[k]);
    classes.push_back(std::move(c));
  }
  j["classes"] = std::move(classes);
  return j;
}

TsdmModel decode_tsdm(const Json& j) {
  check_header(j, "tsdm_model");
  auto labels = j.at("labels").get<std::vector<std::string>>();
  std::vector<InnerMixture> inner;
  std::vector<FitReport> reports;
  const Json& classes = j.at("classes");
  if (classes.size() != labels.size()) throw ValidationError("class list does not match labels");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const Json& c = classes[k];
    if (c.at("label").get<std::string>() != labels[k])
      throw ValidationError("class order does not match labels");
    inner.emplace_back(c.at("weights").get<std::vector<double>>(), decode_alphas(c.at("alphas")));
    if (c.contains("report")) reports.push_back(decode_report(c.at("report")));
  }
  if (!reports.empty() && reports.size() != labels.size())
    throw ValidationError("fit reports present for only some classes");
  TsdmModel m(std::move(labels), std::move(inner), j.at("rho").get<std::vector<double>>(),
              j.at("prior_e").get<std::vector<double>>(),
              j.at("class_counts").get<std::vector<std::size_t>>(), std::move(reports),
              j.at("rho_mode_fallback").get<bool>());
  if (m.dim() != j.at("dim").get<std::size_t>()) throw ValidationError("dim field is inconsistent");
  return m;
}

Json encode_fb(const FbModel& m, const FbReport& r) {
  Json j = header("fb_model");
  j["background"] = encode_tsdm(m.background());
  j["lambda"] = std::vector<double>(m.lambda().begin(), m.lambda().end());
  j["new_class_alphas"] = encode_alphas(m.new_components());
  const auto mix = m.new_class_mixture();
  j["kappa"] = mix ? std::vector<double>(mix->weights().begin(), mix->weights().end())
                   : std::vector<double>{};
  Json rep;
  rep["no_novelty"] = r.no_novelty;
  rep["background_log_likelihood"] = r.background_log_likelihood;
  rep["background_bic"] = r.background_bic;
  rep["fit"] = encode_report(r.fit);
  j["report"] = std::move(rep);
  return j;
}

Json encode_mixture_spec(const MixtureSpec& m) {
  Json j;
  j["weights"] = m.weights;
  j["alphas"] = m.alphas;
  return j;
}

MixtureSpec decode_mixture_spec(const Json& j) {
  MixtureSpec m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.alphas = j.at("alphas").get<std::vector<std::vector<double>>>();
  return m;
}

double nullable(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json maybe_null(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

}  // namespace

std::string to_json(const TsdmModel& model) { return encode_tsdm(model).dump(2); }

TsdmModel tsdm_model_from_json(std::string_view text) {
  return guarded([&] { return decode_tsdm(Json::parse(text)); });
}

std::string to_json(const FbModel& model, const FbReport& report) {
  return encode_fb(model, report).dump(2);
}

std::pair<FbModel, FbReport> fb_model_from_json(std::string_view text) {
  return guarded([&] {
    const Json j = Json::parse(text);
    check_header(j, "fb_model");
    FbModel m(decode_tsdm(j.at("background")), j.at("lambda").get<std::vector<double>>(),
              decode_alphas(j.at("new_class_alphas")));
    FbReport r;
    const Json& rep = j.at("report");
    r.no_novelty = rep.at("no_novelty").get<bool>();
    r.background_log_likelihood = rep.at("background_log_likelihood").get<double>();
    r.background_bic = rep.at("background_bic").get<double>();
    r.fit = decode_report(rep.at("fit"));
    return std::pair<FbModel, FbReport>(std::move(m), std::move(r));
  });
}

std::string embedded_background_json(std::string_view fb_text) {
  return guarded([&] { return Json::parse(fb_text).at("background").dump(2); });
}

std::string to_json(const SimplexTransform& t) {
  Json j = header("simplex_transform");
  j["dim"] = t.simplex_dim();
  j["attributes"] = t.attribute_names();
  Json maps = Json::array();
  for (const auto& m : t.maps()) {
    Json mj;
    mj["name"] = m.name();
    mj["clamp"] = m.clamp();
    mj["knots"] = m.logit_spline().x;
    mj["logit"] = m.logit_spline().y;
    mj["slopes"] = m.logit_spline().slope;
    maps.push_back(std::move(mj));
  }
  j["maps"] = std::move(maps);
  return j.dump(2);
}

SimplexTransform simplex_transform_from_json(std::string_view text) {
  return guarded([&] {
    const Json j = Json::parse(text);
    check_header(j, "simplex_transform");
    std::vector<AttributeMap> maps;
    for (const auto& mj : j.at("maps")) {
      CubicSpline s;
      s.x = mj.at("knots").get<std::vector<double>>();
      s.y = mj.at("logit").get<std::vector<double>>();
      s.slope = mj.at("slopes").get<std::vector<double>>();
      maps.emplace_back(mj.at("name").get<std::string>(), std::move(s), mj.at("clamp").get<double>());
    }
    SimplexTransform t(std::move(maps));
    if (t.simplex_dim() != j.at("dim").get<std::size_t>())
      throw ValidationError("dim field is inconsistent with the attribute maps");
    if (t.attribute_names() != j.at("attributes").get<std::vector<std::string>>())
      throw ValidationError("attribute list is inconsistent with the attribute maps");
    return t;
  });
}

std::string to_json(const SynthSpec& spec) {
  Json j = header("synth_spec");
  j["seed"] = spec.seed;
  if (spec.n_total) j["n_total"] = *spec.n_total;
  Json classes = Json::array();
  for (const auto& c : spec.classes) {
    Json cj = encode_mixture_spec(c.mixture);
    cj["label"] = c.label;
    cj["size"] = c.size;
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  if (spec.novelty) {
    Json nj = encode_mixture_spec(spec.novelty->mixture);
    nj["label"] = spec.novelty->label;
    nj["rate"] = spec.novelty->rate;
    j["novelty"] = std::move(nj);
  }
  return j.dump(2);
}

SynthSpec synth_spec_from_json(std::string_view text) {
  return guarded([&] {
    const Json j = Json::parse(text);
    check_header(j, "synth_spec");
    SynthSpec spec;
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("n_total")) spec.n_total = j.at("n_total").get<std::size_t>();
    for (const auto& cj : j.at("classes")) {
      ClassSpec c;
      c.label = cj.at("label").get<std::string>();
      c.size = cj.at("size").get<std::size_t>();
      c.mixture = decode_mixture_spec(cj);
      spec.classes.push_back(std::move(c));
    }
    if (j.contains("novelty")) {
      const Json& nj = j.at("novelty");
      NoveltySpec n;
      n.label = nj.value("label", std::string("NEW"));
      n.rate = nj.at("rate").get<double>();
      n.mixture = decode_mixture_spec(nj);
      spec.novelty = std::move(n);
    }
    spec.validate();
    return spec;
  });
}

std::string to_json(const PipelineConfig& c) {
  Json j = header("pipeline_config");
  j["seed"] = c.seed;
  j["n_starts"] = c.n_starts;
  j["epsilon"] = c.epsilon;
  j["max_iter"] = c.max_iter;
  j["n_min"] = c.n_min;
  j["j_range"] = c.j_range;
  j["class_j_ranges"] = c.class_j_ranges;
  j["new_class_j_range"] = c.new_class_j_range;
  j["prior_e"] = c.prior_e;
  j["split_fraction"] = c.split_fraction;
  j["transform_clamp"] = c.transform_clamp;
  j["smoothing"] = c.smoothing;
  j["max_knots"] = c.max_knots;
  j["workers"] = c.workers;
  j["new_class_label"] = c.new_class_label;
  j["novel_truth_labels"] = c.novel_truth_labels;
  j["init_quantile"] = c.init_quantile;
  j["init_lambda0"] = c.init_lambda0;
  j["lambda_floor"] = c.lambda_floor;
  return j.dump(2);
}

PipelineConfig pipeline_config_from_json(std::string_view text) {
  return guarded([&] {
    const Json j = Json::parse(text);
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
      throw ValidationError("unsupported config schema_version");
    PipelineConfig c;
    static const std::set<std::string> known{
        "schema_version", "kind", "seed", "n_starts", "epsilon", "max_iter", "n_min",
        "j_range", "class_j_ranges", "new_class_j_range", "prior_e", "split_fraction",
        "transform_clamp", "smoothing", "max_knots", "workers", "new_class_label",
        "novel_truth_labels", "init_quantile", "init_lambda0", "lambda_floor"};
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
    c.seed = j.value("seed", c.seed);
    c.n_starts = j.value("n_starts", c.n_starts);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.n_min = j.value("n_min", c.n_min);
    c.j_range = j.value("j_range", c.j_range);
    c.class_j_ranges = j.value("class_j_ranges", c.class_j_ranges);
    c.new_class_j_range = j.value("new_class_j_range", c.new_class_j_range);
    c.prior_e = j.value("prior_e", c.prior_e);
    c.split_fraction = j.value("split_fraction", c.split_fraction);
    c.transform_clamp = j.value("transform_clamp", c.transform_clamp);
    c.smoothing = j.value("smoothing", c.smoothing);
    c.max_knots = j.value("max_knots", c.max_knots);
    c.workers = j.value("workers", c.workers);
    c.new_class_label = j.value("new_class_label", c.new_class_label);
    c.novel_truth_labels = j.value("novel_truth_labels", c.novel_truth_labels);
    c.init_quantile = j.value("init_quantile", c.init_quantile);
    c.init_lambda0 = j.value("init_lambda0", c.init_lambda0);
    c.lambda_floor = j.value("lambda_floor", c.lambda_floor);
    c.validate();
    return c;
  });
}

std::string to_json(const Metrics& m) {
  Json j;
  j["overall_accuracy"] = maybe_null(m.overall_accuracy);
  j["new_class_sensitivity"] = maybe_null(m.new_class_sensitivity);
  j["new_class_specificity"] = maybe_null(m.new_class_specificity);
  Json per = Json::object();
  for (const auto& [label, acc] : m.per_class_accuracy) per[label] = acc;
  j["per_class_accuracy"] = std::move(per);
  (void)nullable;
  return j.dump(2);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  out.flush();
  if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace tsdm

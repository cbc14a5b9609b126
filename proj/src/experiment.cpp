#include "fedint/experiment.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <algorithm>
#include <set>
#include <sstream>

#include "fedint/error.hpp"
#include "fedint/io_audit.hpp"
#include "fedint/rng.hpp"

namespace fedint::experiment {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& m) { throw Error(ErrorCode::ConfigError, m); }

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) config_error(where + ": missing key '" + key + "'");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("key '") + key + "': " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::IoError, what + " not found: " + p.string());
}

ColumnType parse_type(const std::string& t, const std::string& where) {
  auto ty = column_type_from_string(t);
  if (!ty) config_error(where + ": unknown type '" + t + "'");
  return *ty;
}

Value json_scalar(const json& j, ColumnType type, const std::string& where) {
  try {
    switch (type) {
      case ColumnType::Int: return Value(j.get<std::int64_t>());
      case ColumnType::Float: return Value(j.get<double>());
      case ColumnType::Str: return Value(j.get<std::string>());
      case ColumnType::Date: {
        auto d = Date::parse(j.get<std::string>());
        if (!d) config_error(where + ": bad date");
        return Value(*d);
      }
    }
  } catch (const json::exception& e) {
    config_error(where + ": " + e.what());
  }
  return Value();
}

fed::ProtocolSpec parse_protocol(const json& j) {
  const std::string type = get_or<std::string>(j, "type", "synchronous");
  if (type == "synchronous") return fed::Synchronous{get_or<std::uint64_t>(j, "local_epochs", 1)};
  if (type == "asynchronous")
    return fed::Asynchronous{get_or<std::uint64_t>(j, "local_epochs", 1), get_or(j, "alpha", 0.5),
                             get_or(j, "staleness_exponent", 0.5)};
  if (type == "semi_synchronous") return fed::SemiSynchronous{get_or(j, "period_t", 1.0)};
  config_error("unknown protocol '" + type + "'");
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

mapping::FunctionSignatures ExperimentConfig::signatures() const {
  auto sigs = mapping::builtin_signatures();
  for (const auto& f : functions) {
    if (f.kind == mapping::FunctionKind::Impute)
      sigs[f.name] = {f.impute.input_names.size(), f.impute.outputs.size(), f.kind};
    else
      sigs[f.name] = {1, 1, f.kind};
  }
  return sigs;
}

std::string ExperimentConfig::canonical_json() const {
  json j = json::parse(raw_json);
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["training"]["mode"] = std::string(exchange::to_string(training.mode));
  j["federation"]["execution"] = std::string(fed::to_string(execution));
  return j.dump();
}

std::vector<RelationSchema> load_schema_file(const fs::path& path) {
  require_file(path, "schema file");
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  if (!j.is_object()) config_error(path.string() + ": expected an object of relations");
  std::vector<RelationSchema> out;
  for (const auto& [name, cols] : j.items()) {
    std::vector<Column> columns;
    if (!cols.is_array()) config_error(path.string() + ": " + name + " must list columns");
    for (const auto& c : cols) {
      const std::string spec = c.get<std::string>();
      const auto colon = spec.find(':');
      if (colon == std::string::npos) config_error(name + ": column '" + spec + "' needs name:type");
      columns.push_back({spec.substr(0, colon), parse_type(spec.substr(colon + 1), name)});
    }
    out.emplace_back(name, std::move(columns));
  }
  return out;
}

ExperimentConfig load_config(const fs::path& path) {
  require_file(path, "config");
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  c.base_dir = fs::absolute(path).parent_path();
  c.raw_json = j.dump();
  const fs::path& base = c.base_dir;

  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.output_dir = resolve(base, get_or<std::string>(j, "output_dir", "out"));
  c.null_token = get_or<std::string>(j, "null_token", "");
  c.global_schema = resolve(base, require(j, "global_schema", "config").get<std::string>());
  c.queries = resolve(base, require(j, "queries", "config").get<std::string>());
  require_file(c.global_schema, "global schema");
  require_file(c.queries, "query file");

  for (const auto& f : get_or(j, "functions", json::array())) {
    FunctionDecl d;
    d.name = require(f, "name", "function").get<std::string>();
    const std::string kind = require(f, "kind", d.name).get<std::string>();
    if (kind == "normalize") {
      d.kind = mapping::FunctionKind::Normalize;
    } else if (kind == "impute") {
      d.kind = mapping::FunctionKind::Impute;
      d.impute.input_names = require(f, "inputs", d.name).get<std::vector<std::string>>();
      for (const auto& o : require(f, "outputs", d.name))
        d.impute.outputs.push_back({require(o, "imputer", d.name).get<std::string>(),
                                    get_or<std::string>(o, "keep_observed", "")});
    } else {
      config_error(d.name + ": unknown function kind '" + kind + "'");
    }
    if (d.name == "minus") config_error("minus is built in");
    c.functions.push_back(std::move(d));
  }

  for (const auto& i : get_or(j, "imputers", json::array())) {
    ImputerDecl d;
    auto& s = d.spec;
    s.name = require(i, "name", "imputer").get<std::string>();
    auto kind = impute::kind_from_string(require(i, "kind", s.name).get<std::string>());
    if (!kind) config_error(s.name + ": unknown imputer kind");
    s.kind = *kind;
    s.target = require(i, "target", s.name).get<std::string>();
    s.target_type = parse_type(get_or<std::string>(i, "target_type", "float"), s.name);
    d.train_query = get_or<std::string>(i, "train_query", "");
    s.relation = d.train_query.empty() ? require(i, "relation", s.name).get<std::string>()
                                       : d.train_query;
    if (s.kind == impute::Kind::Constant)
      s.constant = json_scalar(require(i, "value", s.name), s.target_type, s.name);
    for (const auto& f : get_or(i, "features", json::array())) {
      if (f.is_string())
        s.features.push_back({f.get<std::string>(), false});
      else
        s.features.push_back({require(f, "column", s.name).get<std::string>(),
                              get_or(f, "categorical", false)});
    }
    for (const auto& f : s.features)
      if (f.column == s.target) config_error(s.name + ": target is also a feature");
    s.lambda = get_or(i, "lambda", 0.0);
    if (!(s.lambda >= 0.0)) config_error(s.name + ": lambda must be >= 0");
    s.intercept = get_or(i, "intercept", true);
    c.imputers.push_back(std::move(d));
  }
  c.column_imputers = get_or(j, "column_imputers", std::vector<std::string>{});

  for (const auto& s : require(j, "silos", "config")) {
    SiloConfig sc;
    sc.id = require(s, "id", "silo").get<std::string>();
    sc.dir = resolve(base, get_or<std::string>(s, "dir", sc.id));
    sc.mapping = resolve(sc.dir, require(s, "mapping", sc.id).get<std::string>());
    sc.schema = resolve(sc.dir, require(s, "schema", sc.id).get<std::string>());
    require_file(sc.mapping, sc.id + " mapping");
    require_file(sc.schema, sc.id + " schema");
    for (const auto& [rel, p] : require(s, "sources", sc.id).items()) {
      sc.sources[rel] = resolve(sc.dir, p.get<std::string>());
      require_file(sc.sources[rel], sc.id + " source " + rel);
    }
    const json norm = get_or(s, "normalization", json::object());
    for (const auto& [fn, t] : norm.items()) {
      NormalizationBinding b;
      b.path = resolve(sc.dir, t.is_string() ? t.get<std::string>()
                                             : require(t, "path", fn).get<std::string>());
      b.strict = t.is_object() && get_or(t, "strict", false);
      require_file(b.path, sc.id + " normalization table");
      sc.normalization[fn] = b;
    }
    sc.step_rate = get_or(s, "step_rate", 1.0);
    if (s.contains("contribution")) sc.contribution = s.at("contribution").get<double>();
    c.silos.push_back(std::move(sc));
  }
  {
    std::set<std::string> ids;
    for (const auto& s : c.silos)
      if (!ids.insert(s.id).second) config_error("duplicate silo " + s.id);
    if (ids.empty()) config_error("no silos");
  }

  const json& t = require(j, "training", "config");
  c.training.query = require(t, "query", "training").get<std::string>();
  c.training.features = require(t, "features", "training").get<std::vector<std::string>>();
  c.training.label = require(t, "label", "training").get<std::string>();
  const std::string task = get_or<std::string>(t, "task", "classification");
  if (task != "classification" && task != "regression") config_error("unknown task " + task);
  c.training.classification = task == "classification";
  auto mode = exchange::mode_from_string(get_or<std::string>(t, "mode", "impute"));
  if (!mode) config_error("training.mode must be certain or impute");
  c.training.mode = *mode;

  const json m = get_or(j, "model", json::object());
  c.model.type = get_or<std::string>(m, "type", c.training.classification ? "logistic_regression"
                                                                          : "linear_regression");
  c.model.hidden = get_or<std::size_t>(m, "hidden", 8);

  const json f = get_or(j, "federation", json::object());
  auto& fc = c.federation;
  fc.protocol = parse_protocol(get_or(f, "protocol", json::object()));
  fc.rounds = get_or<std::uint64_t>(f, "rounds", 1);
  fc.participation_fraction = get_or(f, "participation_fraction", 1.0);
  fc.hyper.learning_rate = get_or(f, "learning_rate", 0.1);
  fc.hyper.batch_size = get_or<std::size_t>(f, "batch_size", 32);
  fc.secure_aggregation = get_or(f, "secure_aggregation", false);
  auto exec = fed::execution_mode_from_string(get_or<std::string>(f, "execution", "simulated"));
  if (!exec) config_error("federation.execution must be simulated or threaded");
  c.execution = *exec;
  fc.seed = c.seed;
  return c;
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {}

void Experiment::parse_all() {
  if (parsed_) return;
  const auto sigs = config_.signatures();
  global_ = load_schema_file(config_.global_schema);
  queries_ = mapping::parse_program(read_text_file(config_.queries), sigs);
  if (!queries_.rules.empty()) config_error(config_.queries.string() + " may only define queries");
  silos_.clear();
  for (const auto& sc : config_.silos) {
    SiloState s;
    s.id = sc.id;
    s.source_schemas = load_schema_file(sc.schema);
    for (const auto& schema : s.source_schemas)
      if (!sc.sources.count(schema.name()))
        config_error(sc.id + ": no CSV for source relation " + schema.name());
    for (const auto& [rel, _] : sc.sources)
      if (std::none_of(s.source_schemas.begin(), s.source_schemas.end(),
                       [&](const RelationSchema& r) { return r.name() == rel; }))
        config_error(sc.id + ": CSV for undeclared relation " + rel);
    s.program = mapping::parse_program(read_text_file(sc.mapping), sigs);
    if (!s.program.queries.empty()) config_error(sc.mapping.string() + " may only define rules");
    for (const auto& f : config_.functions)
      if (f.kind == mapping::FunctionKind::Impute) s.registry.add_impute_function(f.name, f.impute);
    for (const auto& i : config_.imputers) s.registry.declare_imputer(i.spec);
    for (const auto& name : config_.column_imputers) {
      if (!s.registry.imputer_spec(name)) config_error("column imputer " + name + " is not declared");
      s.registry.add_column_imputer(name);
    }
    silos_.push_back(std::move(s));
  }
  parsed_ = true;
}

ValidationOutcome Experiment::validate() {
  parse_all();
  ValidationOutcome out;
  std::ostringstream os;
  for (std::size_t k = 0; k < silos_.size(); ++k) {
    auto report = mapping::validate_program(silos_[k].program, silos_[k].source_schemas, global_);
    os << "== silo " << silos_[k].id << " ==\n" << report.to_text();
    out.errors += report.error_count();
  }
  auto report = mapping::validate_program(queries_, {}, global_);
  os << "== queries ==\n" << report.to_text();
  out.errors += report.error_count();

  std::vector<std::string> problems;
  if (!queries_.find_query(config_.training.query))
    problems.push_back("training query " + config_.training.query + " is not defined");
  for (const auto& i : config_.imputers)
    if (!i.train_query.empty() && !queries_.find_query(i.train_query))
      problems.push_back("imputer " + i.spec.name + ": query " + i.train_query + " is not defined");
  for (const auto& f : config_.functions)
    for (const auto& o : f.impute.outputs)
      if (std::none_of(config_.imputers.begin(), config_.imputers.end(),
                       [&](const ImputerDecl& d) { return d.spec.name == o.imputer; }))
        problems.push_back(f.name + ": imputer " + o.imputer + " is not declared");
  if (!problems.empty()) {
    os << "== config ==\n";
    for (const auto& p : problems) os << "  error: " << p << "\n";
  }
  out.errors += problems.size();
  os << (out.errors == 0 ? "OK" : std::to_string(out.errors) + " error(s)") << "\n";
  out.text = os.str();
  return out;
}

void Experiment::load_sources() {
  parse_all();
  for (std::size_t k = 0; k < silos_.size(); ++k) {
    const auto& sc = config_.silos[k];
    auto& s = silos_[k];
    IoAudit::Stage stage("materialize:" + sc.id);
    s.sources.clear();
    for (const auto& schema : s.source_schemas)
      s.sources.emplace(schema.name(),
                        load_csv(sc.sources.at(schema.name()), schema, {config_.null_token, false}));
    for (const auto& [fn, b] : sc.normalization) {
      const auto decl = std::find_if(config_.functions.begin(), config_.functions.end(),
                                      [&](const FunctionDecl& d) { return d.name == fn; });
      if (decl == config_.functions.end() || decl->kind != mapping::FunctionKind::Normalize)
        config_error(sc.id + ": " + fn + " is not a declared normalize function");
      s.registry.add_normalizer(fn, exchange::load_normalization_table(b.path, fn, b.strict));
    }
  }
}

void Experiment::materialize_pass1() {
  for (auto& s : silos_) {
    IoAudit::Stage stage("materialize:" + s.id);
    s.pass1 = exchange::materialize(s.program, s.sources, s.registry, global_,
                                    exchange::QueryMode::CertainAnswers);
  }
}

std::vector<impute::FittedImputer> Experiment::fit_imputers() {
  std::vector<impute::FittedImputer> out;
  for (const auto& decl : config_.imputers) {
    std::vector<impute::SufficientStats> parts;
    for (auto& s : silos_) {
      Relation rows;
      if (!decl.train_query.empty()) {
        const auto* q = queries_.find_query(decl.train_query);
        if (!q) config_error("query " + decl.train_query + " is not defined");
        rows = exchange::evaluate_query(*q, s.pass1, exchange::QueryMode::CertainAnswers, s.registry);
      } else {
        rows = s.pass1.at(decl.spec.relation);
      }
      parts.push_back(impute::local_stats(rows, decl.spec));
    }
    auto fitted = impute::fit(decl.spec, impute::merge_stats(parts));
    for (auto& s : silos_) s.registry.set_fitted(fitted);
    out.push_back(std::move(fitted));
  }
  return out;
}

void Experiment::materialize_pass2(exchange::QueryMode mode) {
  for (auto& s : silos_) {
    IoAudit::Stage stage("materialize:" + s.id);
    s.pass2 = exchange::materialize(s.program, s.sources, s.registry, global_, mode);
  }
}

void Experiment::prepare(exchange::QueryMode mode) {
  const auto v = validate();
  if (v.errors) throw Error(ErrorCode::UnknownFunction, "validation failed\n" + v.text);
  load_sources();
  materialize_pass1();
  if (mode == exchange::QueryMode::Impute) fit_imputers();
  materialize_pass2(mode);
}

std::vector<Relation> Experiment::answer(const std::string& query, exchange::QueryMode mode) const {
  const auto* q = queries_.find_query(query);
  if (!q) throw Error(ErrorCode::UnknownRelation, "no query named " + query);
  std::vector<Relation> out;
  for (const auto& s : silos_) out.push_back(exchange::evaluate_query(*q, s.pass2, mode, s.registry));
  return out;
}

std::vector<model::Encoded> Experiment::training_data(exchange::QueryMode mode) const {
  const auto answers = answer(config_.training.query, mode);
  model::EncodingSpec spec;
  spec.feature_columns = config_.training.features;
  spec.label_column = config_.training.label;
  spec.classification = config_.training.classification;
  // Federation-wide vocabularies: the union of each silo's category sets.
  std::map<std::string, std::set<std::string>> vocab;
  for (const auto& a : answers)
    for (auto& [col, cats] : model::observed_categories(a, spec)) vocab[col].insert(cats.begin(), cats.end());
  for (auto& [col, cats] : vocab) {
    if (spec.classification && col == spec.label_column)
      spec.label_classes.assign(cats.begin(), cats.end());
    else
      spec.vocabularies[col].assign(cats.begin(), cats.end());
  }
  std::vector<model::Encoded> out;
  for (const auto& a : answers) out.push_back(model::encode_training_data(a, spec));
  return out;
}

model::ModelSpec Experiment::model_spec(const model::Encoded& sample) const {
  const std::size_t d = sample.data.d;
  const std::size_t classes = std::max<std::size_t>(sample.label_classes.size(), 1);
  const auto& type = config_.model.type;
  if (d == 0) config_error("training data has no feature columns");
  if (type == "linear_regression") {
    if (config_.training.classification) config_error("linear_regression needs a regression task");
    return model::LinearRegression{d};
  }
  if (!config_.training.classification) config_error(type + " needs a classification task");
  if (type == "logistic_regression") return model::LogisticRegression{d, classes};
  if (type == "mlp") return model::Mlp{d, config_.model.hidden, classes};
  config_error("unknown model type " + type);
}

std::vector<fed::LearnerHandle> Experiment::learners(const std::vector<model::Encoded>& data) const {
  std::vector<fed::LearnerHandle> out;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& sc = config_.silos[k];
    out.push_back({sc.id, data[k].data, sc.contribution, sc.step_rate});
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->code()) {
      case ErrorCode::IoError:
      case ErrorCode::HeaderMismatch:
      case ErrorCode::ParseError:
      case ErrorCode::ConfigError:
        return 2;
      default:
        return 1;
    }
  }
  if (dynamic_cast<const json::exception*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e))
    return 2;
  return 1;
}

namespace {

ExperimentConfig load_with_overrides(const CommandOptions& opts) {
  if (opts.config.empty()) config_error("--config is required");
  auto c = load_config(opts.config);
  if (opts.seed) c.seed = c.federation.seed = *opts.seed;
  if (opts.out) c.output_dir = *opts.out;
  if (opts.mode) c.training.mode = *opts.mode;
  if (opts.execution) c.execution = *opts.execution;
  return c;
}

/// Runs `body`, mapping exceptions to the exit-code contract.
template <typename F>
int guarded(std::ostream& err, const char* command, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace

int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, "validate", [&] {
    Experiment ex(load_with_overrides(opts));
    const auto v = ex.validate();
    out << v.text;
    return v.errors == 0 ? 0 : 1;
  });
}

int cmd_materialize(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, "materialize", [&] {
    Experiment ex(load_with_overrides(opts));
    const auto mode = ex.config().training.mode;
    ex.prepare(mode);
    for (const auto& s : ex.silos()) {
      const fs::path dir = ex.config().output_dir / s.id;
      exchange::write_instance(s.pass2, dir, ex.config().null_token);
      out << s.id << " (" << exchange::to_string(mode) << "):";
      for (const auto& [name, rel] : s.pass2.relations) out << " " << name << "=" << rel.size();
      out << " -> " << dir.string() << "\n";
    }
    return 0;
  });
}

int cmd_query(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, "query", [&] {
    Experiment ex(load_with_overrides(opts));
    const auto mode = ex.config().training.mode;
    const std::string name = opts.query.empty() ? ex.config().training.query : opts.query;
    ex.prepare(mode);
    const auto answers = ex.answer(name, mode);
    for (std::size_t k = 0; k < answers.size(); ++k) {
      const auto& id = ex.silos()[k].id;
      const fs::path dir = ex.config().output_dir / id;
      fs::create_directories(dir);
      write_csv(dir / (name + ".csv"), answers[k], ex.config().null_token);
      out << "## " << id << " " << name << " (" << exchange::to_string(mode) << ", "
          << answers[k].size() << " rows)\n"
          << format_csv(answers[k], ex.config().null_token);
    }
    return 0;
  });
}

int cmd_impute_fit(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, "impute-fit", [&] {
    Experiment ex(load_with_overrides(opts));
    const auto v = ex.validate();
    if (v.errors) {
      out << v.text;
      return 1;
    }
    ex.load_sources();
    ex.materialize_pass1();
    const auto fitted = ex.fit_imputers();
    const fs::path dir = ex.config().output_dir / "imputers";
    fs::create_directories(dir);
    for (const auto& f : fitted) {
      std::ofstream(dir / (f.spec.name + ".json")) << impute::to_json(f) << "\n";
      out << f.spec.name << " (" << impute::to_string(f.spec.kind) << ") -> "
          << (dir / (f.spec.name + ".json")).string() << "\n";
    }
    return 0;
  });
}

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  std::string stage = "config";
  std::optional<ExperimentConfig> cfg;
  std::ofstream runlog;
  std::string started = iso_now();
  fs::path out_dir;

  auto write_catalog = [&](const std::string& status, const fed::RunLog* log) {
    if (!cfg) return;
    json cat;
    cat["config_hash"] = hex64(fnv1a64(cfg->canonical_json()));
    cat["seed"] = cfg->seed;
    cat["started"] = started;
    cat["finished"] = iso_now();
    cat["status"] = status;
    cat["protocol"] = fed::describe(cfg->federation.protocol);
    cat["model"] = cfg->federation.rounds ? model::describe(cfg->federation.model) : "";
    cat["execution"] = std::string(fed::to_string(cfg->execution));
    cat["runlog"] = "runlog.jsonl";
    if (log && !log->rounds.empty()) {
      const auto& last = log->rounds.back();
      cat["rounds"] = log->rounds.size();
      cat["final_metrics"] = json::parse(last.to_json())["federation"];
    } else {
      cat["rounds"] = 0;
      cat["final_metrics"] = nullptr;
    }
    std::ofstream(out_dir / "catalog.json") << cat.dump(2) << "\n";
  };

  try {
    cfg = load_with_overrides(opts);
    out_dir = cfg->output_dir;
    fs::create_directories(out_dir);
    Experiment ex(*cfg);

    stage = "validate";
    const auto v = ex.validate();
    if (v.errors) {
      out << v.text;
      throw Error(ErrorCode::UnknownFunction, std::to_string(v.errors) + " validation error(s)");
    }
    stage = "materialize";
    ex.load_sources();
    ex.materialize_pass1();
    const auto mode = cfg->training.mode;
    if (mode == exchange::QueryMode::Impute) {
      stage = "impute-fit";
      ex.fit_imputers();
    }
    stage = "materialize";
    ex.materialize_pass2(mode);
    stage = "query";
    const auto data = ex.training_data(mode);
    stage = "encode";
    cfg->federation.model = ex.model_spec(data.front());
    const auto learners = ex.learners(data);

    stage = "federation";
    runlog.open(out_dir / "runlog.jsonl", std::ios::trunc);
    if (!runlog) throw Error(ErrorCode::IoError, "cannot write runlog in " + out_dir.string());
    auto sink = [&](const fed::RoundRecord& r) { runlog << r.to_json() << "\n" << std::flush; };
    const auto log = fed::run_federation(cfg->federation, learners, cfg->execution, sink);
    runlog.close();
    write_catalog("completed", &log);

    const auto& fedm = log.rounds.back().federation;
    out << "rounds: " << log.rounds.size() << "\n"
        << "federation " << fedm.metric_name << ": "
        << (fedm.metric_value ? std::to_string(*fedm.metric_value) : "n/a") << "\n"
        << "federation loss: " << (fedm.loss ? std::to_string(*fedm.loss) : "n/a") << "\n"
        << "runlog: " << (out_dir / "runlog.jsonl").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "run [" << stage << "]: " << e.what() << "\n";
    if (runlog.is_open()) runlog.close();
    try {
      if (!out_dir.empty()) write_catalog("failed at " + stage + ": " + e.what(), nullptr);
    } catch (const std::exception&) {
    }
    return exit_code_for(e);
  }
}

int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, "report", [&] {
    fs::path path = opts.runlog;
    if (path.empty()) {
      if (opts.out)
        path = *opts.out / "runlog.jsonl";
      else
        path = load_with_overrides(opts).output_dir / "runlog.jsonl";
    }
    std::istringstream in(read_text_file(path));
    out << std::left << std::setw(7) << "round" << std::setw(12) << "sim_time" << std::setw(14)
        << "participants" << std::setw(14) << "loss" << "metric\n";
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json r;
      try {
        r = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + " line " + std::to_string(n + 1) + ": " + e.what());
      }
      const auto& f = r["federation"];
      auto num = [](const json& v) {
        if (v.is_null()) return std::string("n/a");
        std::ostringstream os;
        os << std::setprecision(6) << v.get<double>();
        return os.str();
      };
      out << std::setw(7) << r["round"].get<std::uint64_t>() << std::setw(12) << num(r["sim_time"])
          << std::setw(14) << r["participants"].size() << std::setw(14) << num(f["loss"])
          << f["metric_name"].get<std::string>() << "=" << num(f["metric_value"]) << "\n";
      ++n;
    }
    out << n << " round(s)\n";
    return 0;
  });
}

}  // namespace fedint::experiment

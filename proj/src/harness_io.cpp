#include "granlab/harness_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "granlab/errors.hpp"

namespace granlab {
namespace {

using nlohmann::json;

json loss_json(const LossKind& k) {
  json j = {{"kind", to_string(k.kind)}};
  if (k.kind == LossKind::Kind::Hybrid) j["beta"] = k.beta;
  return j;
}

LossKind loss_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fine") return LossKind::fine();
  if (kind == "coarse") return LossKind::coarse();
  if (kind == "intra") return LossKind::intra();
  if (kind == "hybrid") return LossKind::hybrid(j.at("beta").get<double>());
  throw ConfigError("unknown loss kind '" + kind + "'");
}

json train_config_json(const TrainConfig& c) {
  return {{"optimizer", to_string(c.optimizer)},
          {"lr_start", c.lr_start},
          {"lr_end", c.lr_end},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"early_stop_patience", c.early_stop_patience},
          {"validation_fraction", c.validation_fraction},
          {"seed", c.seed}};
}

// Missing keys keep their defaults; "optimizer": "adam" switches the defaults
// to the Adam settings before the remaining keys are applied.
TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  if (j.contains("optimizer") && j.at("optimizer").get<std::string>() == "adam") c = TrainConfig::adam_defaults();
  if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.lr_start = j.value("lr_start", c.lr_start);
  c.lr_end = j.value("lr_end", c.optimizer == Optimizer::Adam ? c.lr_start : c.lr_end);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

json source_json(const DataSource& src) {
  if (const auto* c = std::get_if<CircleSpec>(&src)) {
    json j = {{"type", "circles"},
              {"K", c->K},
              {"n_points", c->n_points},
              {"redundancy", c->redundancy},
              {"sector_offset_per_circle", c->sector_offset_per_circle},
              {"seed", c->seed}};
    if (c->radial_jitter) j["radial_jitter"] = *c->radial_jitter;
    return j;
  }
  if (const auto* r = std::get_if<RealSource>(&src)) {
    return {{"type", "real"},
            {"dataset", r->dataset},
            {"grouping", {{"dataset", r->grouping.dataset}, {"c0", r->grouping.c0_names}, {"c1", r->grouping.c1_names}}},
            {"data_dir", r->data_dir}};
  }
  const auto& f = std::get<FileSource>(src);
  return {{"type", "file"}, {"train", f.train_path}, {"test", f.test_path}};
}

DataSource source_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "circles") {
    CircleSpec c;
    c.K = j.value("K", c.K);
    c.n_points = j.value("n_points", c.n_points);
    c.redundancy = j.value("redundancy", c.redundancy);
    c.sector_offset_per_circle = j.value("sector_offset_per_circle", c.sector_offset_per_circle);
    c.seed = j.value("seed", c.seed);
    if (j.contains("radial_jitter")) c.radial_jitter = j.at("radial_jitter").get<double>();
    c.validate();
    return c;
  }
  if (type == "real") {
    RealSource r;
    r.dataset = j.at("dataset").get<std::string>();
    const json& g = j.at("grouping");
    r.grouping = g.is_string() ? resolve_grouping(g.get<std::string>()) : grouping_from_json_text(g.dump());
    if (r.grouping.dataset != r.dataset) {
      throw ConfigError("grouping is for dataset '" + r.grouping.dataset + "', source is '" + r.dataset + "'");
    }
    r.data_dir = j.value("data_dir", "");
    return r;
  }
  if (type == "file") return FileSource{j.at("train").get<std::string>(), j.value("test", "")};
  throw ConfigError("unknown data source type '" + type + "' (expected circles, real or file)");
}

json spec_json(const ExperimentSpec& s) {
  json j = {{"name", s.name},
            {"source", source_json(s.source)},
            {"axis", to_string(s.axis)},
            {"values", s.values},
            {"fine_hidden", s.fine_hidden},
            {"train_size", s.train_size},
            {"test_size", s.test_size},
            {"replicates", s.replicates},
            {"train_config", train_config_json(s.train_config)},
            {"fine_loss", loss_json(s.fine_loss)},
            {"activation", to_string(s.activation)},
            {"stratified", s.stratified},
            {"spread", to_string(s.spread)},
            {"seed", s.seed},
            {"threads", s.threads}};
  if (!s.hidden_values.empty()) j["hidden_values"] = s.hidden_values;
  if (s.coarse_hidden) j["coarse_hidden"] = *s.coarse_hidden;
  if (s.batch_size) j["batch_size"] = *s.batch_size;
  return j;
}

ExperimentSpec spec_from(const json& j) {
  ExperimentSpec s;
  s.name = j.value("name", s.name);
  s.source = source_from(j.at("source"));
  s.axis = sweep_axis_from_string(j.at("axis").get<std::string>());
  s.values = j.at("values").get<std::vector<double>>();
  s.hidden_values = j.value("hidden_values", std::vector<int>{});
  s.fine_hidden = j.value("fine_hidden", s.fine_hidden);
  if (j.contains("coarse_hidden")) s.coarse_hidden = j.at("coarse_hidden").get<int>();
  s.train_size = j.value("train_size", s.train_size);
  s.test_size = j.value("test_size", s.test_size);
  s.replicates = j.value("replicates", s.replicates);
  if (j.contains("train_config")) s.train_config = train_config_from(j.at("train_config"));
  if (j.contains("batch_size")) s.batch_size = j.at("batch_size").get<int>();
  if (j.contains("fine_loss")) s.fine_loss = loss_from(j.at("fine_loss"));
  if (j.contains("activation")) s.activation = activation_from_string(j.at("activation").get<std::string>());
  s.stratified = j.value("stratified", s.stratified);
  if (j.contains("spread")) s.spread = spread_mode_from_string(j.at("spread").get<std::string>());
  s.seed = j.value("seed", s.seed);
  s.threads = j.value("threads", s.threads);
  s.validate();
  return s;
}

json record_json(const RunRecord& r) {
  return {{"axis_value", r.axis_value},
          {"point_index", r.point_index},
          {"replicate", r.replicate},
          {"seed", r.seed},
          {"ok", r.ok},
          {"error", r.error},
          {"acc_fine_test", r.acc_fine_test},
          {"acc_coarse_test", r.acc_coarse_test},
          {"acc_fine_train", r.acc_fine_train},
          {"acc_coarse_train", r.acc_coarse_train},
          {"loss_fine_stop", r.loss_fine_stop},
          {"loss_coarse_stop", r.loss_coarse_stop},
          {"epochs_fine", r.epochs_fine},
          {"epochs_coarse", r.epochs_coarse},
          {"fine_hidden", r.fine_hidden},
          {"coarse_hidden", r.coarse_hidden},
          {"n_fine", r.n_fine},
          {"n_coarse", r.n_coarse},
          {"p", r.p}};
}

RunRecord record_from(const json& j) {
  RunRecord r;
  r.axis_value = j.at("axis_value").get<double>();
  r.point_index = j.at("point_index").get<int>();
  r.replicate = j.at("replicate").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  r.error = j.value("error", "");
  r.acc_fine_test = j.at("acc_fine_test").get<double>();
  r.acc_coarse_test = j.at("acc_coarse_test").get<double>();
  r.acc_fine_train = j.at("acc_fine_train").get<double>();
  r.acc_coarse_train = j.at("acc_coarse_train").get<double>();
  r.loss_fine_stop = j.at("loss_fine_stop").get<double>();
  r.loss_coarse_stop = j.at("loss_coarse_stop").get<double>();
  r.epochs_fine = j.at("epochs_fine").get<int>();
  r.epochs_coarse = j.at("epochs_coarse").get<int>();
  r.fine_hidden = j.at("fine_hidden").get<int>();
  r.coarse_hidden = j.at("coarse_hidden").get<int>();
  r.n_fine = j.at("n_fine").get<std::int64_t>();
  r.n_coarse = j.at("n_coarse").get<std::int64_t>();
  r.p = j.at("p").get<std::int64_t>();
  return r;
}

json point_json(const AggregatedPoint& p) {
  return {{"axis_value", p.axis_value},     {"acc_fine_mean", p.acc_fine_mean},
          {"acc_fine_median", p.acc_fine_median}, {"acc_coarse_mean", p.acc_coarse_mean},
          {"acc_coarse_median", p.acc_coarse_median}, {"delta", p.delta},
          {"spread_low", p.spread_low},     {"spread_high", p.spread_high},
          {"n_over_p", p.n_over_p},         {"replicates", p.replicates},
          {"fine_low", p.fine_low},         {"fine_high", p.fine_high},
          {"coarse_low", p.coarse_low},     {"coarse_high", p.coarse_high},
          {"failed", p.failed}};
}

AggregatedPoint point_from(const json& j) {
  AggregatedPoint p;
  p.axis_value = j.at("axis_value").get<double>();
  p.acc_fine_mean = j.at("acc_fine_mean").get<double>();
  p.acc_fine_median = j.at("acc_fine_median").get<double>();
  p.acc_coarse_mean = j.at("acc_coarse_mean").get<double>();
  p.acc_coarse_median = j.at("acc_coarse_median").get<double>();
  p.delta = j.at("delta").get<double>();
  p.spread_low = j.at("spread_low").get<double>();
  p.spread_high = j.at("spread_high").get<double>();
  p.n_over_p = j.at("n_over_p").get<double>();
  p.replicates = j.at("replicates").get<int>();
  p.fine_low = j.at("fine_low").get<double>();
  p.fine_high = j.at("fine_high").get<double>();
  p.coarse_low = j.at("coarse_low").get<double>();
  p.coarse_high = j.at("coarse_high").get<double>();
  p.failed = j.at("failed").get<int>();
  return p;
}

template <typename F>
auto with_json(const std::string& text, const char* what, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_csv_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string points_to_csv(const std::vector<AggregatedPoint>& points) {
  std::string out = std::string(kCsvVersionLine) + "\n" + kCsvHeader + "\n";
  for (const auto& p : points) {
    const double cols[] = {p.axis_value, p.acc_fine_mean, p.acc_fine_median, p.acc_coarse_mean,
                           p.acc_coarse_median, p.delta, p.spread_low, p.spread_high, p.n_over_p};
    for (double c : cols) out += format_csv_number(c) + ",";
    out += std::to_string(p.replicates);
    for (double c : {p.fine_low, p.fine_high, p.coarse_low, p.coarse_high}) out += "," + format_csv_number(c);
    out += "," + std::to_string(p.failed) + "\n";
  }
  return out;
}

std::vector<AggregatedPoint> points_from_csv(const std::string& text) {
  std::vector<AggregatedPoint> points;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ParseError("line " + std::to_string(line_no) + ": unexpected CSV header", line_offset);
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != 15) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 15 fields, found " + std::to_string(fields.size()),
                       line_offset);
    }
    double v[15];
    for (std::size_t i = 0; i < 15; ++i) {
      const char* b = fields[i].data();
      const char* e = b + fields[i].size();
      const auto res = std::from_chars(b, e, v[i]);
      if (res.ec != std::errc() || res.ptr != e) {
        throw ParseError("line " + std::to_string(line_no) + ": field " + std::to_string(i + 1) + " ('" + fields[i] +
                             "') is not a number",
                         line_offset);
      }
    }
    AggregatedPoint p;
    p.axis_value = v[0];
    p.acc_fine_mean = v[1];
    p.acc_fine_median = v[2];
    p.acc_coarse_mean = v[3];
    p.acc_coarse_median = v[4];
    p.delta = v[5];
    p.spread_low = v[6];
    p.spread_high = v[7];
    p.n_over_p = v[8];
    p.replicates = static_cast<int>(v[9]);
    p.fine_low = v[10];
    p.fine_high = v[11];
    p.coarse_low = v[12];
    p.coarse_high = v[13];
    p.failed = static_cast<int>(v[14]);
    points.push_back(p);
  }
  if (!header_seen) throw ParseError("line " + std::to_string(line_no + 1) + ": missing CSV header", offset);
  return points;
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) { return spec_json(spec).dump(2); }

ExperimentSpec experiment_spec_from_json(const std::string& text) {
  return with_json(text, "experiment spec", [](const json& j) { return spec_from(j); });
}

TrainConfig train_config_from_json(const std::string& text) {
  return with_json(text, "train config", [](const json& j) { return train_config_from(j); });
}

std::string train_config_to_json(const TrainConfig& cfg) { return train_config_json(cfg).dump(2); }

std::string run_record_to_json(const RunRecord& record) { return record_json(record).dump(2); }

RunRecord run_record_from_json(const std::string& text) {
  return with_json(text, "run record", [](const json& j) { return record_from(j); });
}

std::string archive_to_json(const SweepResult& result) {
  json j;
  j["format"] = "granlab-sweep";
  j["version"] = 1;
  j["spec"] = spec_json(result.spec);
  j["records"] = json::array();
  for (const auto& r : result.records) j["records"].push_back(record_json(r));
  j["points"] = json::array();
  for (const auto& p : result.points) j["points"].push_back(point_json(p));
  return j.dump(1);
}

SweepResult archive_from_json(const std::string& text) {
  return with_json(text, "sweep archive", [](const json& j) {
    if (j.value("format", "") != "granlab-sweep") throw ConfigError("not a granlab sweep archive");
    SweepResult r;
    r.spec = spec_from(j.at("spec"));
    for (const auto& rec : j.at("records")) r.records.push_back(record_from(rec));
    for (const auto& p : j.at("points")) r.points.push_back(point_from(p));
    return r;
  });
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void persist(const SweepResult& result, const std::filesystem::path& dir, const std::string& stem) {
  write_text_file(dir / (stem + ".csv"), points_to_csv(result.points));
  write_text_file(dir / (stem + ".json"), archive_to_json(result));
}

SweepResult load_archive(const std::filesystem::path& path) { return archive_from_json(read_text_file(path)); }

}  // namespace granlab

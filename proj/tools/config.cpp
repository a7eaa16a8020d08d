#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace hclcli {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) fail(line, "trailing characters in number '" + v + "'");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& v, int line) {
  const double d = to_double(v, line);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d) fail(line, "expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "expected true/false, got '" + v + "'");
}

std::string to_str(const std::string& v, int line) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  // Bare tokens are accepted so --override values need no shell quoting.
  if (v.find('"') == std::string::npos && v.find('[') == std::string::npos)
    return v;
  fail(line, "expected a string, got '" + v + "'");
}

std::vector<std::string> to_array(const std::string& v, int line) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    fail(line, "expected an array [ ... ], got '" + v + "'");
  std::vector<std::string> out;
  std::string body = v.substr(1, v.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

hcl::Mode to_mode(const std::string& v, int line) {
  if (v == "task_aware") return hcl::Mode::TaskAware;
  if (v == "task_agnostic") return hcl::Mode::TaskAgnostic;
  fail(line, "mode must be task_aware or task_agnostic");
}

std::array<bool, 3> to_stats(const std::string& v, int line) {
  std::array<bool, 3> enabled = {false, false, false};
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "s1") enabled[0] = true;
    else if (item == "s2") enabled[1] = true;
    else if (item == "s3") enabled[2] = true;
    else fail(line, "unknown statistic '" + item + "' (use s1, s2, s3)");
  }
  if (!enabled[0] && !enabled[1] && !enabled[2])
    fail(line, "at least one statistic must be enabled");
  return enabled;
}

// Routes one (section, key, raw value) triple into the config.
void set_key(ExperimentConfig& cfg, const std::string& section,
             const std::string& key, const std::string& v, int line) {
  auto& tr = cfg.trainer;
  if (section.empty()) {
    if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : to_array(v, line))
        cfg.seeds.push_back(static_cast<std::uint64_t>(to_int(s, line)));
      if (cfg.seeds.empty()) fail(line, "seeds must be nonempty");
    } else if (key == "outdir") {
      cfg.outdir = to_str(v, line);
    } else {
      fail(line, "unknown top-level key '" + key + "'");
    }
  } else if (section == "dataset") {
    if (key == "kind") cfg.dataset_kind = to_str(v, line);
    else if (key == "tasks") cfg.tasks = to_int(v, line);
    else if (key == "classes") cfg.classes = to_int(v, line);
    else if (key == "dim") cfg.dim = to_int(v, line);
    else if (key == "class_sep") cfg.class_sep = to_double(v, line);
    else if (key == "task_shift") cfg.task_shift = to_double(v, line);
    else if (key == "n_per_class") cfg.n_per_class = to_int(v, line);
    else if (key == "noise") cfg.noise = to_double(v, line);
    else if (key == "n_per_moon") cfg.n_per_moon = to_int(v, line);
    else if (key == "path") cfg.path = to_str(v, line);
    else if (key == "epochs") cfg.epochs = to_int(v, line);
    else if (key == "order") {
      cfg.order.clear();
      for (const auto& s : to_array(v, line))
        cfg.order.push_back(to_int(s, line));
    } else fail(line, "unknown [dataset] key '" + key + "'");
  } else if (section == "trainer") {
    if (key == "mode") tr.mode = to_mode(to_str(v, line), line);
    else if (key == "method") {
      const std::string name = to_str(v, line);
      try {
        tr.method = hcl::method_from_string(name);
      } catch (const std::exception& e) {
        fail(line, e.what());
      }
    } else if (key == "oracle_detector") tr.oracle_detector = to_bool(v, line);
    else if (key == "alpha") tr.alpha = to_double(v, line);
    else if (key == "batch_size") tr.batch_size = to_int(v, line);
    else if (key == "er_capacity") tr.er_capacity = to_int(v, line);
    else if (key == "lr") tr.adam.lr = to_double(v, line);
    else if (key == "beta1") tr.adam.beta1 = to_double(v, line);
    else if (key == "beta2") tr.adam.beta2 = to_double(v, line);
    else if (key == "eps") tr.adam.eps = to_double(v, line);
    else if (key == "weight_decay") tr.adam.weight_decay = to_double(v, line);
    else fail(line, "unknown [trainer] key '" + key + "'");
  } else if (section == "detector") {
    auto& d = tr.detector;
    if (key == "lambda") d.lambda = to_double(v, line);
    else if (key == "window") d.window = to_int(v, line);
    else if (key == "warmup") d.warmup = to_int(v, line);
    else if (key == "cooldown") d.cooldown = to_int(v, line);
    else if (key == "stats") d.enabled = to_stats(to_str(v, line), line);
    else fail(line, "unknown [detector] key '" + key + "'");
  } else if (section == "flow") {
    auto& f = tr.flow;
    if (key == "layers") f.num_layers = to_int(v, line);
    else if (key == "clamp") f.scale_clamp = to_double(v, line);
    else if (key == "hidden") {
      f.hidden.clear();
      for (const auto& s : to_array(v, line)) f.hidden.push_back(to_int(s, line));
      if (f.hidden.empty()) fail(line, "hidden must be nonempty");
    } else fail(line, "unknown [flow] key '" + key + "'");
  } else if (section == "registry") {
    auto& r = tr.registry;
    if (key == "mean_scale") r.mean_scale = to_double(v, line);
    else if (key == "min_separation") r.min_separation = to_double(v, line);
    else if (key == "retry_budget") r.retry_budget = to_int(v, line);
    else fail(line, "unknown [registry] key '" + key + "'");
  } else {
    fail(line, "unknown section [" + section + "]");
  }
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ConfigError("cannot open config file: " + file_path);
  ExperimentConfig cfg;
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line, "empty section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (value.empty()) fail(line, "empty value for '" + key + "'");
    set_key(cfg, section, key, value, line);
  }
  validate(cfg);
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must be key=value: " + spec);
  std::string key = trim(spec.substr(0, eq));
  const std::string value = trim(spec.substr(eq + 1));
  std::string section;
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
  }
  set_key(cfg, section, key, value, 0);
}

void validate(ExperimentConfig& cfg) {
  if (cfg.dataset_kind != "gaussian" && cfg.dataset_kind != "moons" &&
      cfg.dataset_kind != "embedding")
    throw ConfigError("dataset kind must be gaussian, moons or embedding");
  if (cfg.dataset_kind == "embedding" && cfg.path.empty())
    throw ConfigError("embedding dataset requires dataset.path");
  if (cfg.tasks < 1 || cfg.classes < 1 || cfg.dim < 2)
    throw ConfigError("dataset shape invalid (tasks/classes >= 1, dim >= 2)");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  const int limit = cfg.dataset_kind == "moons" ? 2 : cfg.tasks;
  for (int t : cfg.order)
    if (t < 1 || t > limit)
      throw ConfigError("order entry " + std::to_string(t) +
                        " outside 1.." + std::to_string(limit));
  if (cfg.trainer.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.trainer.flow.num_layers < 1) throw ConfigError("flow.layers must be >= 1");

  const int dim = cfg.dataset_kind == "moons" ? 2 : cfg.dim;
  cfg.trainer.flow.dim = dim;
  cfg.trainer.registry.dim = dim;
  cfg.trainer.registry.classes_per_task =
      cfg.dataset_kind == "moons" ? 1 : cfg.classes;
  cfg.trainer.epochs_per_task = cfg.epochs;
}

}  // namespace hclcli

#include "qmisdr/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qmisdr::cli {

namespace {

const std::string kSigmas = "0.1, 0.25, 0.5, 1, 1.5, 2";
const std::string kLambdas = "0.001, 0.01, 0.1, 1";

std::map<std::string, std::string> optimizer_keys() {
  return {{"restarts", "10"},     {"max_iters", "100"},  {"tol", "1e-6"},       {"orthonormalize_every", "5"},
          {"cv_refresh_every", "10"}, {"folds", "5"},    {"basis_count", "0"},  {"sigmas", kSigmas},
          {"lambdas", kLambdas},  {"seed", "0"},         {"trials", "10"}};
}

std::map<std::string, std::map<std::string, std::string>> make_schema() {
  std::map<std::string, std::map<std::string, std::string>> s;
  s["illustrate"] = {{"n", "3000"},
                     {"trials", "20"},
                     {"seed", "0"},
                     {"theta_points", "33"},
                     {"theta_min", "-1.5707963267948966"},
                     {"theta_max", "1.5707963267948966"},
                     {"cv_at_zero", "true"},
                     {"lsqmi", "true"},
                     {"basis_count", "0"},
                     {"folds", "5"},
                     {"sigmas", kSigmas},
                     {"lambdas", kLambdas},
                     {"fd_step", "1e-4"},
                     {"output", "illustrate.csv"}};
  auto sdr = optimizer_keys();
  sdr.insert({{"dataset", "A"},
              {"csv", ""},
              {"n", "200"},
              {"dz", "0"},
              {"method", "lsqmid-fp"},
              {"record_timing", "false"},
              {"output_json", "sdr_trials.json"},
              {"output_summary", "sdr_summary.csv"}});
  s["sdr"] = sdr;
  auto bench = optimizer_keys();
  bench.insert({{"csv", ""},
                {"n_train", "100"},
                {"dz", "1"},
                {"methods", "lsqmid-fp, none"},
                {"noise_features", "true"},
                {"output_rmse", "bench_rmse.csv"},
                {"output_summary", "bench_summary.csv"}});
  s["bench"] = bench;
  return s;
}

const std::map<std::string, std::map<std::string, std::string>>& schema() {
  static const auto s = make_schema();
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ConfigError(where + ": cannot parse '" + text + "'");
  return v;
}

}  // namespace

Section::Section(std::string name, std::map<std::string, std::string> values, std::filesystem::path base_dir)
    : name_(std::move(name)), values_(std::move(values)), base_dir_(std::move(base_dir)) {}

void Section::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
  values_[key] = value;
}

const std::string& Section::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
  return it->second;
}

std::string Section::get_string(const std::string& key) const { return raw(key); }

long long Section::get_int(const std::string& key, long long min_value) const {
  const auto v = parse_number<long long>(raw(key), name_ + "." + key);
  if (v < min_value) throw ConfigError(name_ + "." + key + " must be >= " + std::to_string(min_value));
  return v;
}

std::uint64_t Section::get_seed(const std::string& key) const {
  return parse_number<std::uint64_t>(raw(key), name_ + "." + key);
}

double Section::get_double(const std::string& key) const {
  const double v = parse_number<double>(raw(key), name_ + "." + key);
  if (!std::isfinite(v)) throw ConfigError(name_ + "." + key + " must be finite");
  return v;
}

bool Section::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(name_ + "." + key + ": expected true or false, got '" + v + "'");
}

std::vector<double> Section::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(raw(key))) {
    const double v = parse_number<double>(item, name_ + "." + key);
    if (!std::isfinite(v)) throw ConfigError(name_ + "." + key + " entries must be finite");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(name_ + "." + key + " must not be empty");
  return out;
}

std::vector<long long> Section::get_ints(const std::string& key, long long min_value) const {
  std::vector<long long> out;
  for (const auto& item : split_list(raw(key))) {
    const auto v = parse_number<long long>(item, name_ + "." + key);
    if (v < min_value) throw ConfigError(name_ + "." + key + " entries must be >= " + std::to_string(min_value));
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(name_ + "." + key + " must not be empty");
  return out;
}

std::vector<std::string> Section::get_strings(const std::string& key) const {
  auto out = split_list(raw(key));
  if (out.empty()) throw ConfigError(name_ + "." + key + " must not be empty");
  return out;
}

std::optional<std::filesystem::path> Section::get_path(const std::string& key) const {
  const std::string& v = raw(key);
  if (v.empty()) return std::nullopt;
  std::filesystem::path p(v);
  if (p.is_relative()) p = base_dir_ / p;
  return p;
}

std::string Section::canonical() const {
  std::string out = "[" + name_ + "]\n";
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

const std::map<std::string, std::string>& section_defaults(const std::string& command) {
  const auto it = schema().find(command);
  if (it == schema().end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

Section parse_section(const std::string& text, const std::string& command, const std::filesystem::path& base_dir) {
  const auto& defaults = section_defaults(command);
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  Section section(command, defaults, base_dir);
  for (const auto& [name, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + name + "' is outside any section");
    const auto known = schema().find(name);
    if (known == schema().end()) throw ConfigError("unknown section [" + name + "]");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
      if (name == command) section.set(key, trim(value.data()));
    }
  }
  return section;
}

Section load_section(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_section(ss.str(), command, path.parent_path());
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qmisdr::cli

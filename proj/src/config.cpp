#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "feedtype/error.hpp"
#include "feedtype/experiments.hpp"

namespace feedtype::experiments {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 8> kKindNames{{
    {Kind::Lemma1Scan, "lemma1-scan"},
    {Kind::OptimalAudit, "optimal-audit"},
    {Kind::SurgeryAudit, "surgery-audit"},
    {Kind::MartingaleAudit, "martingale-audit"},
    {Kind::McDeviation, "mc-deviation"},
    {Kind::IsacFrontier, "isac-frontier"},
    {Kind::IsacSimulate, "isac-simulate"},
    {Kind::ConverseDemo, "converse-demo"},
}};

const std::map<std::string, std::set<std::string>, std::less<>> kAllowedKeys{
    {"experiment", {"kind", "seed"}},
    {"channel", {"file", "state_pmf", "distortion"}},
    {"grid", {"n", "mu", "a", "b", "trials", "resolution", "strategy", "exhaustive_max_n", "random_trees"}},
    {"isac", {"code", "D", "eta", "eps", "delta"}},
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ConfigParse, line == 0 ? msg : fmt::format("line {}: {}", line, msg));
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(line, fmt::format("'{}' is not a number", s));
  }
}

std::uint64_t to_u64(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    fail(line, fmt::format("'{}' is not a nonnegative integer", s));
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    fail(line, fmt::format("'{}' out of range", s));
  }
}

struct Entry {
  std::string value;
  std::size_t line;
};

}  // namespace

std::string_view to_string(Kind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<Kind> parse_kind(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

const std::vector<Kind>& all_kinds() {
  static const std::vector<Kind> kinds = [] {
    std::vector<Kind> v;
    for (const auto& entry : kKindNames) v.push_back(entry.first);
    return v;
  }();
  return kinds;
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::ostringstream raw;
  raw << in.rdbuf();
  ExperimentConfig cfg;
  cfg.source_text = raw.str();
  cfg.base_dir = base_dir;

  std::map<std::string, Entry> entries;  // "section.key"
  std::istringstream lines(cfg.source_text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string text = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') fail(line_no, "unterminated section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (!kAllowedKeys.count(section)) fail(line_no, fmt::format("unknown section [{}]", section));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    if (section.empty()) fail(line_no, "key outside any section");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (!kAllowedKeys.at(section).count(key)) fail(line_no, fmt::format("unknown key '{}' in [{}]", key, section));
    const std::string full = section + "." + key;
    if (entries.count(full)) fail(line_no, fmt::format("duplicate key '{}'", full));
    entries[full] = {value, line_no};
  }

  auto get = [&](const std::string& k) -> const Entry* {
    auto it = entries.find(k);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };

  const Entry* kind = get("experiment.kind");
  if (!kind) fail(0, "missing [experiment] kind");
  const auto parsed_kind = parse_kind(kind->value);
  if (!parsed_kind) fail(kind->line, fmt::format("unknown experiment kind '{}'", kind->value));
  cfg.kind = *parsed_kind;

  if (const Entry* e = get("experiment.seed")) cfg.seed = to_u64(e->value, e->line);
  if (const Entry* e = get("channel.file")) {
    for (const auto& item : split_list(e->value)) cfg.channels.push_back(path_of(item));
  }
  if (const Entry* e = get("channel.state_pmf")) {
    for (const auto& item : split_list(e->value)) cfg.state_pmf.push_back(to_double(item, e->line));
  }
  if (const Entry* e = get("channel.distortion")) cfg.distortion = path_of(e->value);
  if (const Entry* e = get("grid.n")) {
    for (const auto& item : split_list(e->value)) {
      const auto v = to_u64(item, e->line);
      if (v == 0) fail(e->line, "blocklength must be >= 1");
      cfg.n.push_back(static_cast<std::size_t>(v));
    }
  }
  if (const Entry* e = get("grid.mu")) {
    for (const auto& item : split_list(e->value)) {
      if (item == "n^-1/4") cfg.mu_schedule = true;
      else cfg.mu.push_back(to_double(item, e->line));
    }
    if (cfg.mu.empty() && !cfg.mu_schedule) fail(e->line, "empty mu list");
  }
  if (const Entry* e = get("grid.a")) {
    for (const auto& item : split_list(e->value)) cfg.a.push_back(static_cast<std::uint32_t>(to_u64(item, e->line)));
  }
  if (const Entry* e = get("grid.b")) {
    for (const auto& item : split_list(e->value)) cfg.b.push_back(static_cast<std::uint32_t>(to_u64(item, e->line)));
  }
  if (const Entry* e = get("grid.trials")) cfg.trials = to_u64(e->value, e->line);
  if (const Entry* e = get("grid.resolution")) cfg.resolution = static_cast<std::size_t>(to_u64(e->value, e->line));
  if (const Entry* e = get("grid.strategy")) {
    if (e->value != "optimal" && e->value != "constant") fail(e->line, "strategy must be optimal or constant");
    cfg.strategy = e->value;
  }
  if (const Entry* e = get("grid.exhaustive_max_n")) cfg.exhaustive_max_n = to_u64(e->value, e->line);
  if (const Entry* e = get("grid.random_trees")) cfg.random_trees = to_u64(e->value, e->line);
  if (const Entry* e = get("isac.code")) cfg.code = path_of(e->value);
  if (const Entry* e = get("isac.D")) cfg.max_distortion = to_double(e->value, e->line);
  if (const Entry* e = get("isac.eta")) {
    cfg.eta.clear();
    for (const auto& item : split_list(e->value)) cfg.eta.push_back(to_double(item, e->line));
  }
  if (const Entry* e = get("isac.eps")) cfg.eps = to_double(e->value, e->line);
  if (const Entry* e = get("isac.delta")) cfg.delta = to_double(e->value, e->line);

  // per-kind requirements
  if (cfg.channels.empty()) fail(0, "[channel] file is required");
  for (const auto& p : cfg.channels) {
    if (!std::filesystem::exists(p)) fail(0, fmt::format("channel file {} does not exist", p.string()));
  }
  const bool is_isac =
      cfg.kind == Kind::IsacFrontier || cfg.kind == Kind::IsacSimulate || cfg.kind == Kind::ConverseDemo;
  if (is_isac) {
    if (cfg.state_pmf.empty()) fail(0, "[channel] state_pmf is required for ISAC experiments");
    if (cfg.distortion && !std::filesystem::exists(*cfg.distortion)) {
      fail(0, fmt::format("distortion file {} does not exist", cfg.distortion->string()));
    }
    if (cfg.kind != Kind::IsacFrontier) {
      if (!cfg.code) fail(0, "[isac] code is required");
      if (!std::filesystem::exists(*cfg.code)) fail(0, fmt::format("code file {} does not exist", cfg.code->string()));
    }
    if (cfg.kind == Kind::ConverseDemo && cfg.eta.empty()) fail(0, "[isac] eta list is empty");
  } else {
    if (cfg.n.empty()) fail(0, "[grid] n is required");
    if (cfg.kind != Kind::MartingaleAudit && cfg.mu.empty() && !cfg.mu_schedule) fail(0, "[grid] mu is required");
  }
  if (cfg.trials == 0) fail(0, "trials must be >= 1");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace feedtype::experiments

#include "cvkit/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cvkit/csv.hpp"

namespace cvkit::pipeline {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::filter: return "filter";
    case Category::generative: return "generative";
    case Category::utility: return "utility";
  }
  return "utility";
}

std::string_view to_string(DataKind k) {
  switch (k) {
    case DataKind::pose2d: return "pose2d";
    case DataKind::pose3d: return "pose3d";
    case DataKind::frames: return "frames";
    case DataKind::table: return "table";
    case DataKind::none: return "none";
  }
  return "none";
}

std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::integer: return "int";
    case ParamType::real: return "real";
    case ParamType::string: return "string";
    case ParamType::path: return "path";
    case ParamType::boolean: return "bool";
    case ParamType::enumeration: return "enum";
  }
  return "string";
}

std::optional<Category> parse_category(std::string_view s) {
  for (auto c : {Category::filter, Category::generative, Category::utility}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<DataKind> parse_kind(std::string_view s) {
  for (auto k : {DataKind::pose2d, DataKind::pose3d, DataKind::frames, DataKind::table, DataKind::none}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<ParamType> parse_param_type(std::string_view s) {
  for (auto t : {ParamType::integer, ParamType::real, ParamType::string, ParamType::path,
                 ParamType::boolean, ParamType::enumeration}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string ParamSpec::check(std::string_view value) const {
  switch (type) {
    case ParamType::integer:
      if (!csv::parse_int(value)) return "expected an integer, got '" + std::string(value) + "'";
      break;
    case ParamType::real: {
      auto v = csv::parse_double(value);
      if (!v || !std::isfinite(*v)) return "expected a real number, got '" + std::string(value) + "'";
      break;
    }
    case ParamType::boolean:
      if (value != "true" && value != "false") return "expected true or false, got '" + std::string(value) + "'";
      break;
    case ParamType::enumeration:
      if (std::find(variants.begin(), variants.end(), value) == variants.end()) {
        return "'" + std::string(value) + "' is not one of the declared variants";
      }
      break;
    case ParamType::path:
      if (value.empty()) return "empty path";
      break;
    case ParamType::string:
      break;
  }
  return {};
}

const ParamSpec* ProcessorManifest::param(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const std::string* KeyValueBlock::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

[[noreturn]] void syntax(ErrorCode code, std::string_view origin, std::size_t line,
                         const std::string& what) {
  fail(code, std::string(origin) + ":" + std::to_string(line) + ": " + what);
}

std::string unquote(std::string_view raw, ErrorCode code, std::string_view origin, std::size_t line) {
  std::string v = csv::trim(raw);
  if (v.empty() || v.front() != '"') {
    const auto hash = v.find('#');
    if (hash != std::string::npos) v = csv::trim(v.substr(0, hash));
    return v;
  }
  std::string out;
  std::size_t i = 1;
  for (; i < v.size(); ++i) {
    const char c = v[i];
    if (c == '\\' && i + 1 < v.size()) {
      const char n = v[++i];
      out.push_back(n == 'n' ? '\n' : n);
    } else if (c == '"') {
      break;
    } else {
      out.push_back(c);
    }
  }
  if (i >= v.size()) syntax(code, origin, line, "unterminated string");
  const std::string rest = csv::trim(v.substr(i + 1));
  if (!rest.empty() && rest.front() != '#') syntax(code, origin, line, "text after closing quote");
  return out;
}

}  // namespace

std::vector<KeyValueBlock> parse_key_value(std::string_view text, std::string_view origin,
                                           ErrorCode error_code) {
  std::vector<KeyValueBlock> blocks(1);
  std::size_t line_no = 0;
  for (const auto& raw : csv::split(text, '\n')) {
    ++line_no;
    const std::string line = csv::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') syntax(error_code, origin, line_no, "unterminated block header");
      KeyValueBlock b;
      b.name = csv::trim(line.substr(1, line.size() - 2));
      b.line = line_no;
      blocks.push_back(std::move(b));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) syntax(error_code, origin, line_no, "expected key = value");
    std::string key = csv::trim(line.substr(0, eq));
    if (key.empty()) syntax(error_code, origin, line_no, "empty key");
    blocks.back().entries.emplace_back(std::move(key),
                                       unquote(line.substr(eq + 1), error_code, origin, line_no));
  }
  return blocks;
}

std::string quote_value(std::string_view value) {
  std::string out = "\"";
  for (char c : value) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> template_slots(std::string_view command) {
  std::vector<std::string> slots;
  std::size_t pos = 0;
  while ((pos = command.find('{', pos)) != std::string_view::npos) {
    const auto end = command.find('}', pos);
    if (end == std::string_view::npos) break;
    slots.emplace_back(command.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return slots;
}

ProcessorManifest parse_manifest(std::string_view text, std::string_view origin) {
  const auto code = ErrorCode::MalformedManifest;
  const auto blocks = parse_key_value(text, origin, code);
  auto missing = [&](std::string_view field) -> std::string {
    fail(code, std::string(origin) + ": missing or invalid field '" + std::string(field) + "'");
  };
  const auto& top = blocks.front();
  ProcessorManifest m;
  m.origin = std::string(origin);
  const std::string* id = top.get("id");
  if (!id || id->empty()) missing("id");
  m.id = *id;

  const std::string* cat = top.get("category");
  auto category = cat ? parse_category(*cat) : std::nullopt;
  if (!category) missing("category");
  m.category = *category;

  const std::string* in = top.get("input_kind");
  const std::string* out = top.get("output_kind");
  auto ik = in ? parse_kind(*in) : std::nullopt;
  auto ok = out ? parse_kind(*out) : std::nullopt;
  if (!ik) missing("input_kind");
  if (!ok) missing("output_kind");
  m.input_kind = *ik;
  m.output_kind = *ok;

  const std::string* exec = top.get("exec");
  if (!exec) missing("exec");
  if (exec->rfind("builtin:", 0) == 0) {
    m.exec = {ExecSpec::Mode::builtin, exec->substr(8)};
  } else if (exec->rfind("external:", 0) == 0) {
    m.exec = {ExecSpec::Mode::external, exec->substr(9)};
  } else {
    missing("exec");
  }
  if (m.exec.target.empty()) missing("exec");

  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    if (block.name != "param") {
      fail(code, std::string(origin) + ":" + std::to_string(block.line) + ": unknown block [" +
                     block.name + "]");
    }
    ParamSpec p;
    const std::string* name = block.get("name");
    if (!name || name->empty()) missing("param.name");
    p.name = *name;
    const std::string* type = block.get("type");
    if (!type) missing("param.type");
    std::string type_name = *type;
    if (type_name.rfind("enum:", 0) == 0) {
      p.variants = csv::split(type_name.substr(5), '|');
      type_name = "enum";
    }
    auto t = parse_param_type(type_name);
    if (!t) missing("param.type");
    p.type = *t;
    if (const std::string* variants = block.get("variants")) p.variants = csv::split(*variants, '|');
    if (p.type == ParamType::enumeration && p.variants.empty()) missing("param.variants");
    if (const std::string* req = block.get("required")) {
      if (*req != "true" && *req != "false") missing("param.required");
      p.required = *req == "true";
    }
    if (const std::string* def = block.get("default")) p.default_value = *def;
    if (const std::string* label = block.get("label")) p.label = *label;
    if (p.label.empty()) p.label = p.name;
    if (p.required && p.default_value) {
      fail(code, std::string(origin) + ": required param '" + p.name + "' must not have a default");
    }
    if (p.default_value) {
      const auto why = p.check(*p.default_value);
      if (!why.empty()) fail(code, std::string(origin) + ": default of '" + p.name + "': " + why);
    }
    if (m.param(p.name)) fail(code, std::string(origin) + ": duplicate param '" + p.name + "'");
    m.params.push_back(std::move(p));
  }

  if (m.exec.mode == ExecSpec::Mode::external) {
    for (const auto& slot : template_slots(m.exec.target)) {
      if (slot == "input" || slot == "output") continue;
      if (!m.param(slot)) {
        fail(code, std::string(origin) + ": command template references undeclared '{" + slot + "}'");
      }
    }
  }
  return m;
}

ProcessorManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(csv::read_file(path), path.string());
}

std::string format_manifest(const ProcessorManifest& m) {
  std::string out;
  out += "id = " + quote_value(m.id) + "\n";
  out += "category = " + quote_value(to_string(m.category)) + "\n";
  out += "input_kind = " + quote_value(to_string(m.input_kind)) + "\n";
  out += "output_kind = " + quote_value(to_string(m.output_kind)) + "\n";
  out += "exec = " +
         quote_value((m.exec.mode == ExecSpec::Mode::builtin ? "builtin:" : "external:") + m.exec.target) +
         "\n";
  for (const auto& p : m.params) {
    out += "\n[param]\n";
    out += "name = " + quote_value(p.name) + "\n";
    out += "type = " + quote_value(to_string(p.type)) + "\n";
    if (!p.variants.empty()) out += "variants = " + quote_value(csv::join(p.variants, '|')) + "\n";
    out += std::string("required = ") + (p.required ? "true" : "false") + "\n";
    if (p.default_value) out += "default = " + quote_value(*p.default_value) + "\n";
    out += "label = " + quote_value(p.label) + "\n";
  }
  return out;
}

}  // namespace cvkit::pipeline

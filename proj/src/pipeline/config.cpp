#include <algorithm>
#include <sstream>

#include "calyx/error.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/text_io.hpp"

namespace calyx {

Config Config::load(const fs::path& path) {
  auto in = text::open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path(), path.string());
}

Config Config::parse(std::string_view text_in, fs::path base_dir, std::string source) {
  Config c;
  c.base_dir_ = std::move(base_dir);
  c.source_ = std::move(source);
  std::size_t lineno = 0;
  for (std::string_view rest = text_in; !rest.empty();) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = c.source_ + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParseError, where + ": expected 'key = value'");
    }
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::kParseError, where + ": empty key");
    if (!c.values_.emplace(key, value).second) {
      throw Error(ErrorCode::kParseError, where + ": duplicate key '" + key + "'");
    }
  }
  return c;
}

std::string Config::get(std::string_view key) const {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) {
    throw Error(ErrorCode::kInvalidArgument, source_ + ": missing key '" + std::string(key) + "'");
  }
  return it->second;
}

std::string Config::get_or(std::string_view key, std::string_view fallback) const {
  return has(key) ? get(key) : std::string(fallback);
}

double Config::number(std::string_view key) const {
  return text::parse_number<double>(get(key), key);
}

double Config::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t Config::integer_or(std::string_view key, std::int64_t fallback) const {
  return has(key) ? text::parse_number<std::int64_t>(get(key), key) : fallback;
}

fs::path Config::path(std::string_view key) const {
  fs::path p(get(key));
  return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

std::optional<fs::path> Config::optional_path(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return path(key);
}

void Config::check_keys(std::span<const std::string_view> allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kInvalidArgument, source_ + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace calyx

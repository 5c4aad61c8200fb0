// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

// Small helpers for strict JSON decoding shared by the loaders.

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "llmconf/error.hpp"

namespace llmconf::detail {

using nlohmann::json;

inline void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where) + ": expected a JSON object");
}

inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ParseError(std::string(where) + ": unknown field '" + key + "'");
  }
}

inline const json& require_field(const json& j, const char* key, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string(where) + ": missing field '" + key + "'");
  }
  return *it;
}

template <typename T>
T get_as(const json& j, const char* key, std::string_view where) {
  const json& v = require_field(j, key, where);
  try {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ParseError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ParseError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ParseError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ParseError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ParseError(std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j, key, where);
}

json read_json_file(const std::filesystem::path& path);

// Parses YAML (a JSON superset for our purposes) into a JSON value. Scalars
// that look like integers, floats or booleans are typed accordingly.
json yaml_to_json(const std::string& text, std::string_view where);

// Reads `path` as JSON when the extension is .json, YAML otherwise.
json read_document(const std::filesystem::path& path);

}  // namespace llmconf::detail

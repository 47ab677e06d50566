#pragma once

#include "handpose/errors.hpp"
#include "handpose/geometry.hpp"

#include <json.hpp>

#include <set>
#include <string>

namespace handpose {

// Strict view over a JSON object: every key must be consumed, unknown keys
// are an error so typos in config files surface immediately.
class JsonObject {
 public:
  JsonObject(const nlohmann::json& j, std::string context)
      : json_(j), context_(std::move(context)) {
    if (!j.is_object()) throw ParseError(context_ + ": expected an object");
  }

  const nlohmann::json& at(const std::string& key) {
    auto it = json_.find(key);
    if (it == json_.end()) throw ParseError(context_ + ": missing key '" + key + "'");
    seen_.insert(key);
    return *it;
  }

  const nlohmann::json* maybe(const std::string& key) {
    auto it = json_.find(key);
    if (it == json_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  bool has(const std::string& key) const { return json_.contains(key); }

  void done() const {
    for (auto it = json_.begin(); it != json_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ParseError(context_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

  const std::string& context() const { return context_; }

 private:
  const nlohmann::json& json_;
  std::string context_;
  std::set<std::string> seen_;
};

inline double json_double(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_number()) throw ParseError(ctx + ": expected a number");
  return j.get<double>();
}

inline int json_int(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_number_integer()) throw ParseError(ctx + ": expected an integer");
  return j.get<int>();
}

inline std::uint64_t json_u64(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) {
    throw ParseError(ctx + ": expected an unsigned integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string json_string(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_string()) throw ParseError(ctx + ": expected a string");
  return j.get<std::string>();
}

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw ParseError(ctx + ": expected an array of 3 numbers");
  return Vec3(json_double(j[0], ctx), json_double(j[1], ctx), json_double(j[2], ctx));
}

nlohmann::json load_json_file(const std::string& path);

}  // namespace handpose
